#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <random>

#include "safex/complexity.hpp"
#include "safex/error.hpp"
#include "safex/explorer.hpp"
#include "safex/gp.hpp"
#include "safex/io.hpp"
#include "safex/json_schema.hpp"
#include "safex/planner.hpp"
#include "safex/world.hpp"

namespace py = pybind11;
using namespace safex;

namespace {

// Rows of `points` / `values` are observations.
GPModel fit_gp(const Mat& points, const Mat& values, double noise_std, const KernelSpec& kernel) {
  if (points.rows() != values.rows()) throw ConfigError("points and values need the same row count");
  ObservationSet obs(static_cast<int>(points.cols()), static_cast<int>(values.cols()), noise_std);
  for (Eigen::Index i = 0; i < points.rows(); ++i) obs.add(points.row(i).transpose(), values.row(i).transpose());
  return GPModel::fit(std::move(obs), std::vector<KernelSpec>(static_cast<std::size_t>(values.cols()), kernel));
}

std::string complexity_report(const std::string& params_json) {
  Json raw = Json::parse(params_json);
  require_valid("complexity_params", raw);
  ComplexityParams p = complexity_params_from_json(raw);
  validate(p);
  return Json{{"params", to_json(p)}, {"report", to_json(required_samples(p))}}.dump();
}

std::string scenario_json(std::uint64_t seed, const std::string& options_json) {
  ScenarioOptions o = scenario_options_from_json(Json::parse(options_json), experiment_scenario_options());
  return to_json(generate_scenario(seed, o)).dump();
}

std::vector<std::string> validate_document(const std::string& schema, const std::string& document) {
  return validate_json(builtin_schema(schema), Json::parse(document));
}

// One exploration run; returns the metrics JSON.
std::string explore(const std::string& config_json, std::uint64_t seed, const std::string& method, double max_time) {
  Json raw = Json::parse(config_json);
  require_valid("run_config", raw);
  RunConfig rc = run_config_from_json(raw);
  ExplorerConfig ec = rc.explorer;
  ec.seed = seed;
  if (max_time > 0.0) ec.max_time = max_time;
  Scenario sc = generate_scenario(seed, rc.scenario);
  if (rc.noise_std) sc.noise_std = *rc.noise_std;
  WorldModel world(sc);
  ExplorationLog log;
  {
    py::gil_scoped_release release;
    auto initial = std::make_shared<const TrainResult>(train_initial(ec, DubinsCar(), 1));
    log = method_from_string(method) == Method::Proposed ? run(world, ec, initial)
                                                         : run_baseline(world, ec, rc.tracking_bound, initial);
  }
  return to_json(compute_metrics(log)).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "safex core bindings";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<PlanningError>(m, "PlanningError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::enum_<KernelFamily>(m, "KernelFamily")
      .value("SquaredExponential", KernelFamily::SquaredExponential)
      .value("Matern", KernelFamily::Matern);

  py::class_<KernelSpec>(m, "KernelSpec")
      .def_readonly("family", &KernelSpec::family)
      .def_readonly("lengthscale", &KernelSpec::lengthscale)
      .def_readonly("signal_variance", &KernelSpec::signal_variance)
      .def_readonly("matern_nu_x2", &KernelSpec::matern_nu_x2)
      .def_readonly("c_k", &KernelSpec::c_k)
      .def_readonly("omega", &KernelSpec::omega)
      .def("__repr__", [](const KernelSpec& k) { return "KernelSpec(" + to_json(k).dump() + ")"; });

  m.def("make_kernel", &make_kernel, py::arg("family"), py::arg("lengthscale"), py::arg("signal_variance"),
        py::arg("matern_nu_x2") = 5, py::arg("a1") = 1.0, py::arg("a2") = 1.0);
  m.def("kernel_eval", &kernel_eval, py::arg("kernel"), py::arg("r"));

  py::class_<GPModel>(m, "GPModel")
      .def(py::init(&fit_gp), py::arg("points"), py::arg("values"), py::arg("noise_std"), py::arg("kernel"))
      .def("extended", &GPModel::extended, py::arg("points"), py::arg("values"))
      .def("mean", &GPModel::mean, py::arg("x"))
      .def("variance", &GPModel::variance, py::arg("x"))
      .def("variance_batch", &GPModel::variance_batch, py::arg("queries"),
           "Queries are columns; result is output_dim x queries.")
      .def("mean_jacobian", &GPModel::mean_jacobian, py::arg("x"))
      .def_property_readonly("size", &GPModel::size)
      .def_property_readonly("input_dim", &GPModel::input_dim)
      .def_property_readonly("output_dim", &GPModel::output_dim);

  py::class_<StopCheck>(m, "StopCheck")
      .def_readonly("stop", &StopCheck::stop)
      .def_readonly("error_bound", &StopCheck::error_bound)
      .def_readonly("beta", &StopCheck::beta)
      .def_readonly("m_h", &StopCheck::m_h)
      .def_readonly("sigma_tilde", &StopCheck::sigma_tilde);

  m.def(
      "stopping_check",
      [](const GPModel& model, const Vec& center, double rho, double delta, double psi_th) {
        return stopping_check(model, center, rho, delta, psi_th, static_cast<double>(model.size()));
      },
      py::arg("model"), py::arg("center"), py::arg("rho"), py::arg("delta"), py::arg("psi_th"));
  m.def("lambert_w", &lambert_w_principal, py::arg("z"));
  m.def("beta", &beta, py::arg("n_obs"), py::arg("m_h"), py::arg("delta"));
  m.def("covering_number", &covering_number, py::arg("rho"), py::arg("r"), py::arg("n"));
  m.def("complexity_report", &complexity_report, py::arg("params_json"));

  py::class_<Obstacle>(m, "Obstacle")
      .def_static("circle", &Obstacle::circle, py::arg("center"), py::arg("radius"))
      .def_static("rect", &Obstacle::rect, py::arg("lo"), py::arg("hi"))
      .def("distance", &Obstacle::distance, py::arg("p"))
      .def("bloated", &Obstacle::bloated, py::arg("e"));

  py::class_<Workspace>(m, "Workspace")
      .def(py::init([](const Vec2& lo, const Vec2& hi) { return Workspace{lo, hi}; }), py::arg("lo") = Vec2(0, 0),
           py::arg("hi") = Vec2(10, 10))
      .def_readwrite("lo", &Workspace::lo)
      .def_readwrite("hi", &Workspace::hi);

  m.def("clearance", &clearance, py::arg("p"), py::arg("obstacles"));
  m.def(
      "rrt_star",
      [](const Vec2& start, const Vec2& goal, const Workspace& ws, const ObstacleSet& obstacles, std::uint64_t seed)
          -> std::optional<std::vector<Vec2>> {
        RrtParams p;
        p.seed = seed;
        auto path = rrt_star(start, goal, ws, obstacles, p);
        if (!path) return std::nullopt;
        return path->waypoints;
      },
      py::arg("start"), py::arg("goal"), py::arg("workspace"), py::arg("obstacles"), py::arg("seed") = 0);

  py::class_<WorldModel>(m, "WorldModel")
      .def(py::init([](const std::string& scenario_json) {
             return std::make_unique<WorldModel>(scenario_from_json(Json::parse(scenario_json)));
           }),
           py::arg("scenario_json"))
      .def("step", [](const WorldModel& w, const Vec& x, const Vec& u) { return w.step(x, u); }, py::arg("x"),
           py::arg("u"))
      .def("disturbance", [](const WorldModel& w, const Vec& x) { return w.field().value(x); }, py::arg("x"))
      .def("safe", &WorldModel::safety_check, py::arg("x"))
      .def_property_readonly("dt", &WorldModel::dt);

  m.def("scenario_json", &scenario_json, py::arg("seed"), py::arg("options_json") = "{}");
  m.def("schema_names", &builtin_schema_names);
  m.def("schema", [](const std::string& name) { return builtin_schema(name).dump(); }, py::arg("name"));
  m.def("validate", &validate_document, py::arg("schema"), py::arg("document"));
  m.def("explore", &explore, py::arg("config_json") = "{}", py::arg("seed") = 0, py::arg("method") = "proposed",
        py::arg("max_time") = 0.0);
}
