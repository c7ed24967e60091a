#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "safex/dynamics.hpp"
#include "safex/geometry.hpp"

namespace safex {

struct PiecewisePath {
  std::vector<Vec2> waypoints;
  double length() const;
};

struct RrtParams {
  double step = 0.5;
  double neighbor_radius = 1.0;
  int max_iters = 5000;
  double goal_tol = 0.2;
  double goal_bias = 0.05;
  std::uint64_t seed = 0;
};

/// RRT* in the position plane. Returns the cheapest path found after max_iters iterations that
/// ends within goal_tol of the goal (exactly at the goal when that last segment is free).
/// Throws PlanningError when the start is not free; nullopt when no connection is found.
std::optional<PiecewisePath> rrt_star(const Vec2& start, const Vec2& goal, const Workspace& workspace,
                                      const ObstacleSet& obstacles, const RrtParams& params);

/// Pure-pursuit pre-roll gains for the Dubins car.
struct ReferenceGains {
  double lookahead = 0.4;
  double speed = 1.0;
  double min_speed = 0.75;  // floor of the turn slowdown
  double k_speed = 2.0;
  double k_heading = 2.5;
  double k_rate = 4.0;
  double max_rate = 0.9;
  Vec2 input_lower = Vec2(-3.0, -3.0);
  Vec2 input_upper = Vec2(3.0, 3.0);
  double goal_tol = 0.2;
  double horizon_factor = 3.0;
  double horizon_extra = 5.0;
};

/// Simulates f + d_hat under pure pursuit along the path, compensating d_hat (crab angle on the
/// velocity, feed-forward on heading rate, force and torque). nullopt when the horizon runs out.
std::optional<ReferenceTrajectory> reference_from_path(const PiecewisePath& path, const DubinsCar& car,
                                                       const DisturbanceModel& d_hat, const Vec& x0, double dt,
                                                       const ReferenceGains& gains);

struct PlanParams {
  RrtParams rrt;
  ReferenceGains gains;
  double dt = 0.01;
  double rebloat = 1.1;
  int max_retries = 3;
};

struct PlanResult {
  std::optional<ReferenceTrajectory> reference;
  PiecewisePath path;
  double bloat_used = 0.0;
  int attempts = 0;
  std::string failure;
};

/// Required clearance of a reference from obstacle i: min(E, distance of the start to i).
/// Equals E whenever the start is outside the bloated set.
std::vector<double> required_clearances(const Vec2& start, const ObstacleSet& raw, double e);

/// True iff every reference position keeps the required clearance from each raw obstacle and from
/// the workspace boundary.
bool audit_clearance(const ReferenceTrajectory& reference, const Workspace& workspace, const ObstacleSet& raw,
                     double e);

/// Bloat, plan, pre-roll, audit; on audit failure the bloat grows by `rebloat` and planning repeats.
PlanResult plan_safe(const Vec& x, const Vec2& goal, const Workspace& workspace, const ObstacleSet& raw, double e,
                     const DubinsCar& car, const DisturbanceModel& d_hat, const PlanParams& params);

}  // namespace safex
