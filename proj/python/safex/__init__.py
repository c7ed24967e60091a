"""Python access to the safex core: GP regression, sample-complexity bounds,
geometry, the simulated world and the exploration loop."""

import json

from ._core import (
    ConfigError,
    GPModel,
    KernelFamily,
    KernelSpec,
    NumericError,
    Obstacle,
    PlanningError,
    StopCheck,
    WorldModel,
    Workspace,
    beta,
    clearance,
    covering_number,
    kernel_eval,
    lambert_w,
    make_kernel,
    rrt_star,
    schema_names,
    stopping_check,
)
from . import _core


def complexity(**params):
    """Sample-complexity report for the given parameters (see `safex complexity`)."""
    return json.loads(_core.complexity_report(json.dumps(params)))


def scenario(seed, **options):
    """Scenario dict for a seed; keyword arguments override the experiment options."""
    return json.loads(_core.scenario_json(seed, json.dumps(options)))


def world(scenario_dict):
    return WorldModel(json.dumps(scenario_dict))


def schema(name):
    return json.loads(_core.schema(name))


def validate(schema_name, document):
    """List of violations of a built-in schema; empty when the document is valid."""
    return _core.validate(schema_name, json.dumps(document))


def explore(config=None, seed=0, method="proposed", max_time=0.0):
    """Runs one exploration and returns its metrics dict. Trains the controller first."""
    return json.loads(_core.explore(json.dumps(config or {}), seed, method, max_time))


__all__ = [name for name in dir() if not name.startswith("_")]
