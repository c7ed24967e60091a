#include "safex/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "safex/error.hpp"

namespace safex {

double PiecewisePath::length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) len += (waypoints[i] - waypoints[i - 1]).norm();
  return len;
}

namespace {

struct Node {
  Vec2 p;
  int parent;
  double cost;
  std::vector<int> children;
};

bool free_point(const Vec2& p, const Workspace& ws, const ObstacleSet& obs) {
  return ws.contains(p) && point_free(p, obs);
}

std::optional<Vec2> free_goal(const Vec2& goal, const Workspace& ws, const ObstacleSet& obs, double tol) {
  if (free_point(goal, ws, obs)) return goal;
  constexpr int rings = 8, spokes = 32;
  for (int k = 1; k <= rings; ++k) {
    const double r = tol * k / rings;
    for (int j = 0; j < spokes; ++j) {
      const double a = 2.0 * M_PI * j / spokes;
      const Vec2 c = goal + r * Vec2(std::cos(a), std::sin(a));
      if (free_point(c, ws, obs)) return c;
    }
  }
  return std::nullopt;
}

void reparent(std::vector<Node>& nodes, int child, int new_parent, double new_cost) {
  Node& c = nodes[static_cast<std::size_t>(child)];
  auto& siblings = nodes[static_cast<std::size_t>(c.parent)].children;
  siblings.erase(std::find(siblings.begin(), siblings.end(), child));
  c.parent = new_parent;
  nodes[static_cast<std::size_t>(new_parent)].children.push_back(child);
  const double delta = new_cost - c.cost;
  std::vector<int> stack{child};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    nodes[static_cast<std::size_t>(i)].cost += delta;
    for (int ch : nodes[static_cast<std::size_t>(i)].children) stack.push_back(ch);
  }
}

}  // namespace

std::optional<PiecewisePath> rrt_star(const Vec2& start, const Vec2& goal, const Workspace& workspace,
                                      const ObstacleSet& obstacles, const RrtParams& params) {
  workspace.validate();
  if (!(params.step > 0.0) || !(params.neighbor_radius > 0.0) || params.max_iters < 0 || !(params.goal_tol > 0.0) ||
      params.goal_bias < 0.0 || params.goal_bias > 1.0) {
    throw ConfigError("invalid RRT* parameters");
  }
  if (!free_point(start, workspace, obstacles)) throw PlanningError("RRT*: start is not in free space");
  const auto target = free_goal(goal, workspace, obstacles, params.goal_tol);
  if (!target) return std::nullopt;

  if ((start - goal).norm() <= params.goal_tol) {
    PiecewisePath path{{start}};
    if ((*target - start).norm() > 0.0 && segment_free(start, *target, obstacles)) path.waypoints.push_back(*target);
    return path;
  }

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> ux(workspace.lo.x(), workspace.hi.x());
  std::uniform_real_distribution<double> uy(workspace.lo.y(), workspace.hi.y());
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(params.max_iters) + 1);
  nodes.push_back(Node{start, -1, 0.0, {}});
  std::vector<int> near;

  for (int it = 0; it < params.max_iters; ++it) {
    const Vec2 sample = coin(rng) < params.goal_bias ? *target : Vec2(ux(rng), uy(rng));
    int nearest = 0;
    double best_d = HUGE_VAL;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double d = (nodes[i].p - sample).squaredNorm();
      if (d < best_d) {
        best_d = d;
        nearest = static_cast<int>(i);
      }
    }
    const Vec2 from = nodes[static_cast<std::size_t>(nearest)].p;
    Vec2 to = sample;
    const double dist = std::sqrt(best_d);
    if (dist <= 1e-12) continue;
    if (dist > params.step) to = from + (sample - from) * (params.step / dist);
    if (!segment_free(from, to, obstacles)) continue;

    near.clear();
    const double r2 = params.neighbor_radius * params.neighbor_radius;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if ((nodes[i].p - to).squaredNorm() <= r2) near.push_back(static_cast<int>(i));
    }
    int parent = nearest;
    double cost = nodes[static_cast<std::size_t>(nearest)].cost + (to - from).norm();
    for (int i : near) {
      const Node& q = nodes[static_cast<std::size_t>(i)];
      const double c = q.cost + (to - q.p).norm();
      if (c < cost && i != nearest && segment_free(q.p, to, obstacles)) {
        cost = c;
        parent = i;
      }
    }
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(Node{to, parent, cost, {}});
    nodes[static_cast<std::size_t>(parent)].children.push_back(id);
    for (int i : near) {
      if (i == parent) continue;
      const Node& q = nodes[static_cast<std::size_t>(i)];
      const double c = cost + (q.p - to).norm();
      if (c < q.cost - 1e-12 && segment_free(to, q.p, obstacles)) reparent(nodes, i, id, c);
    }
  }

  int best = -1;
  double best_cost = HUGE_VAL;
  bool best_appends = false;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if ((nodes[i].p - goal).norm() > params.goal_tol) continue;
    const double link = (*target - nodes[i].p).norm();
    const bool append = link > 0.0 && segment_free(nodes[i].p, *target, obstacles);
    const double c = nodes[i].cost + (append ? link : 0.0);
    if (c < best_cost) {
      best_cost = c;
      best = static_cast<int>(i);
      best_appends = append;
    }
  }
  if (best < 0) return std::nullopt;
  PiecewisePath path;
  for (int i = best; i >= 0; i = nodes[static_cast<std::size_t>(i)].parent) {
    path.waypoints.push_back(nodes[static_cast<std::size_t>(i)].p);
  }
  std::reverse(path.waypoints.begin(), path.waypoints.end());
  if (best_appends) path.waypoints.push_back(*target);
  return path;
}

// ------------------------------------------------------------------ reference

namespace {

struct PathCursor {
  const std::vector<Vec2>& pts;
  std::vector<double> cum;
  std::size_t seg = 0;

  explicit PathCursor(const std::vector<Vec2>& w) : pts(w) {
    cum.push_back(0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) cum.push_back(cum.back() + (pts[i] - pts[i - 1]).norm());
  }
  double total() const { return cum.back(); }

  // Arc length of the projection of p, searching forward from the current segment.
  double project(const Vec2& p) {
    double best_s = cum[seg], best_d = HUGE_VAL;
    std::size_t best_seg = seg;
    for (std::size_t i = seg; i + 1 < pts.size() && i < seg + 4; ++i) {
      const Vec2 d = pts[i + 1] - pts[i];
      const double len2 = d.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp((p - pts[i]).dot(d) / len2, 0.0, 1.0) : 0.0;
      const double dist = (p - (pts[i] + t * d)).norm();
      if (dist < best_d - 1e-12) {
        best_d = dist;
        best_s = cum[i] + t * std::sqrt(len2);
        best_seg = i;
      }
    }
    seg = best_seg;
    return best_s;
  }

  Vec2 at(double s) const {
    if (s >= total()) return pts.back();
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    const std::size_t i = static_cast<std::size_t>(std::max<long>(0, (it - cum.begin()) - 1));
    const double len = cum[i + 1] - cum[i];
    const double t = len > 0.0 ? (s - cum[i]) / len : 0.0;
    return pts[i] + t * (pts[i + 1] - pts[i]);
  }
};

Vec pursuit_input(const Vec& x, const Vec& d, const Vec2& aim, const DubinsCar& car, const ReferenceGains& g) {
  const Vec2 p = x.head<2>();
  double theta_des = x[2];
  const Vec2 to = aim - p;
  if (to.norm() > 1e-9) {
    const Vec2 dir = to.normalized();
    const double v = std::max(x[3], 0.3);
    const Vec2 dp(d[0], d[1]);
    const Vec2 perp = dp - dp.dot(dir) * dir;
    Vec2 h = dir;
    const double ratio = perp.norm() / v;
    if (ratio < 0.9) h = -perp / v + std::sqrt(1.0 - ratio * ratio) * dir;
    theta_des = std::atan2(h.y(), h.x());
  }
  const double err = wrap_angle(theta_des - x[2]);
  const double rate = std::clamp(g.k_heading * err - d[2], -g.max_rate, g.max_rate);
  // slow down while turning so the turning circle fits tighter spaces
  const double v_des = g.min_speed + (g.speed - g.min_speed) * std::max(0.0, std::cos(err));
  Vec u(2);
  u[0] = car.damping() * x[3] - d[3] + g.k_speed * (v_des - x[3]);
  u[1] = car.damping() * x[4] - d[4] + g.k_rate * (rate - x[4]);
  u[0] = std::clamp(u[0], g.input_lower.x(), g.input_upper.x());
  u[1] = std::clamp(u[1], g.input_lower.y(), g.input_upper.y());
  return u;
}

}  // namespace

std::optional<ReferenceTrajectory> reference_from_path(const PiecewisePath& path, const DubinsCar& car,
                                                       const DisturbanceModel& d_hat, const Vec& x0, double dt,
                                                       const ReferenceGains& gains) {
  if (x0.size() != 5) throw ConfigError("reference_from_path: Dubins state expected");
  if (!(dt > 0.0) || !(gains.lookahead > 0.0) || !(gains.speed > 0.0) || !(gains.min_speed > 0.0) ||
      gains.min_speed > gains.speed) {
    throw ConfigError("reference_from_path: invalid gains");
  }
  ReferenceTrajectory ref;
  ref.dt = dt;
  if (path.waypoints.empty() || path.length() <= 0.0) {
    ref.states.push_back(x0);
    ref.inputs.push_back(pursuit_input(x0, d_hat.value(x0), x0.head<2>(), car, gains));
    return ref;
  }
  PathCursor cursor(path.waypoints);
  const Vec2 end = path.waypoints.back();
  const auto max_steps = static_cast<long>(std::ceil(
      (cursor.total() / gains.speed * gains.horizon_factor + gains.horizon_extra) / dt));
  Vec x = x0;
  for (long k = 0; k <= max_steps; ++k) {
    const Vec d = d_hat.value(x);
    const double s = cursor.project(x.head<2>());
    const Vec u = pursuit_input(x, d, cursor.at(s + gains.lookahead), car, gains);
    ref.states.push_back(x);
    ref.inputs.push_back(u);
    if ((x.head<2>() - end).norm() <= gains.goal_tol) return ref;
    x = rk4_step([&](const Vec& y) { return Vec(car.eval(y, u) + d_hat.value(y)); }, x, dt);
    if (!x.allFinite()) throw NumericError("reference_from_path: state diverged");
  }
  return std::nullopt;
}

// ------------------------------------------------------------------ plan_safe

namespace {

// Distances from p to the four walls: left, right, bottom, top.
std::array<double, 4> wall_distances(const Vec2& p, const Workspace& ws) {
  return {p.x() - ws.lo.x(), ws.hi.x() - p.x(), p.y() - ws.lo.y(), ws.hi.y() - p.y()};
}

}  // namespace

std::vector<double> required_clearances(const Vec2& start, const ObstacleSet& raw, double e) {
  std::vector<double> req;
  req.reserve(raw.size());
  for (const auto& o : raw) req.push_back(std::min(e, o.distance(start)));
  return req;
}

bool audit_clearance(const ReferenceTrajectory& reference, const Workspace& workspace, const ObstacleSet& raw,
                     double e) {
  if (reference.states.empty()) return true;
  const Vec2 start = reference.states.front().head<2>();
  const auto req = required_clearances(start, raw, e);
  const auto wall0 = wall_distances(start, workspace);
  std::array<double, 4> wall_req{};
  for (int i = 0; i < 4; ++i) wall_req[static_cast<std::size_t>(i)] = std::min(e, wall0[static_cast<std::size_t>(i)]);
  for (const auto& x : reference.states) {
    const Vec2 p = x.head<2>();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i].distance(p) < req[i]) return false;
    }
    const auto w = wall_distances(p, workspace);
    for (std::size_t i = 0; i < 4; ++i) {
      if (w[i] < wall_req[i]) return false;
    }
  }
  return true;
}

PlanResult plan_safe(const Vec& x, const Vec2& goal, const Workspace& workspace, const ObstacleSet& raw, double e,
                     const DubinsCar& car, const DisturbanceModel& d_hat, const PlanParams& params) {
  if (e < 0.0 || !std::isfinite(e)) throw ConfigError("plan_safe: bloat must be finite and >= 0");
  if (params.rebloat < 1.0 || params.max_retries < 0) throw ConfigError("plan_safe: invalid retry policy");
  PlanResult result;
  const Vec2 start = x.head<2>();
  if (!workspace.contains(start) || !point_free(start, raw)) {
    result.failure = "start is not free";
    return result;
  }
  constexpr double kEdge = 1e-6;
  const auto walls = wall_distances(start, workspace);
  double b = e;
  for (int attempt = 0; attempt <= params.max_retries; ++attempt, b *= params.rebloat) {
    result.attempts = attempt + 1;
    result.bloat_used = b;
    ObstacleSet grown;
    grown.reserve(raw.size());
    for (const auto& o : raw) grown.push_back(o.bloated(std::min(b, std::max(0.0, o.distance(start) - kEdge))));
    Workspace shrunk = workspace;
    shrunk.lo.x() += std::min(b, std::max(0.0, walls[0] - kEdge));
    shrunk.hi.x() -= std::min(b, std::max(0.0, walls[1] - kEdge));
    shrunk.lo.y() += std::min(b, std::max(0.0, walls[2] - kEdge));
    shrunk.hi.y() -= std::min(b, std::max(0.0, walls[3] - kEdge));
    if (!(shrunk.lo.x() < shrunk.hi.x() && shrunk.lo.y() < shrunk.hi.y())) {
      result.failure = "bloated workspace is empty";
      return result;
    }

    RrtParams rp = params.rrt;
    rp.seed = params.rrt.seed + static_cast<std::uint64_t>(attempt);
    std::optional<PiecewisePath> path;
    try {
      path = rrt_star(start, goal, shrunk, grown, rp);
    } catch (const PlanningError&) {
      path.reset();
    }
    if (!path) {
      result.failure = "no path";
      continue;
    }
    result.path = *path;
    auto ref = reference_from_path(*path, car, d_hat, x, params.dt, params.gains);
    if (!ref) {
      result.failure = "reference horizon exceeded";
      continue;
    }
    ref->bloat = e;
    if (!audit_clearance(*ref, workspace, raw, e)) {
      result.failure = "clearance audit failed";
      continue;
    }
    result.reference = std::move(ref);
    result.failure.clear();
    return result;
  }
  return result;
}

}  // namespace safex
