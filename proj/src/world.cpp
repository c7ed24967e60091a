#include "safex/world.hpp"

#include <cmath>
#include <deque>

#include "safex/error.hpp"

namespace safex {

bool free_space_connected(const Workspace& ws, const ObstacleSet& obstacles, const Vec2& start, double clearance_min,
                          double cell) {
  const int nx = static_cast<int>(std::ceil((ws.hi.x() - ws.lo.x()) / cell));
  const int ny = static_cast<int>(std::ceil((ws.hi.y() - ws.lo.y()) / cell));
  std::vector<char> free(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0);
  std::vector<char> seen(free.size(), 0);
  const auto index = [nx](int i, int j) { return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i); };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec2 c(ws.lo.x() + (i + 0.5) * cell, ws.lo.y() + (j + 0.5) * cell);
      free[index(i, j)] = clearance(c, obstacles) > clearance_min ? 1 : 0;
    }
  }
  const int si = std::clamp(static_cast<int>((start.x() - ws.lo.x()) / cell), 0, nx - 1);
  const int sj = std::clamp(static_cast<int>((start.y() - ws.lo.y()) / cell), 0, ny - 1);
  if (!free[index(si, sj)]) return false;
  std::deque<std::pair<int, int>> queue{{si, sj}};
  seen[index(si, sj)] = 1;
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    const int di[] = {1, -1, 0, 0};
    const int dj[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int a = i + di[k], b = j + dj[k];
      if (a < 0 || b < 0 || a >= nx || b >= ny) continue;
      const auto id = index(a, b);
      if (free[id] && !seen[id]) {
        seen[id] = 1;
        queue.emplace_back(a, b);
      }
    }
  }
  for (std::size_t k = 0; k < free.size(); ++k) {
    if (free[k] && !seen[k]) return false;
  }
  return true;
}

Scenario generate_scenario(std::uint64_t seed, const ScenarioOptions& o) {
  if (o.obstacle_count < 0 || !(o.min_size > 0.0) || o.noise_std < 0.0 || o.max_size < o.min_size) {
    throw ConfigError("invalid scenario options");
  }
  Scenario sc;
  sc.seed = seed;
  sc.terrain_seed = seed * 0x9e3779b97f4a7c15ULL + 1;
  sc.terrain_size = o.terrain_size;
  sc.terrain_regions = o.terrain_regions;
  sc.terrain_blend = o.terrain_blend;
  sc.noise_std = o.noise_std;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 3; ++c) sc.projection(r, c) = uniform(-o.projection_scale, o.projection_scale);
  }
  const Vec2 start(uniform(1.0, 9.0), uniform(1.0, 9.0));
  sc.initial_state = Vec(5);
  sc.initial_state << start.x(), start.y(), uniform(-M_PI, M_PI), 1.0, 0.0;

  const Workspace& ws = sc.workspace;
  int attempts = 0;
  while (static_cast<int>(sc.obstacles.size()) < o.obstacle_count) {
    if (++attempts > 20000) throw ConfigError("could not place obstacles with the requested constraints");
    Obstacle ob;
    if (unit(rng) < o.circle_share) {
      const double r = uniform(o.min_size, o.max_size);
      ob = Obstacle::circle(Vec2(uniform(ws.lo.x() + r, ws.hi.x() - r), uniform(ws.lo.y() + r, ws.hi.y() - r)), r);
    } else {
      const double hx = uniform(o.min_size, o.max_size);
      const double hy = uniform(o.min_size, o.max_size);
      const Vec2 c(uniform(ws.lo.x() + hx, ws.hi.x() - hx), uniform(ws.lo.y() + hy, ws.hi.y() - hy));
      ob = Obstacle::rect(c - Vec2(hx, hy), c + Vec2(hx, hy));
    }
    if (ob.distance(start) < o.start_clearance) continue;
    ObstacleSet trial = sc.obstacles;
    trial.push_back(ob);
    if (!free_space_connected(ws, trial, start, o.corridor_clearance)) continue;
    sc.obstacles = std::move(trial);
  }
  return sc;
}

WorldModel::WorldModel(const Scenario& scenario) : scenario_(scenario), car_(0.4), disturbance_(&field_) {
  scenario_.workspace.validate();
  for (const auto& ob : scenario_.obstacles) ob.validate();
  if (scenario_.projection.rows() != 5 || scenario_.projection.cols() != 3) throw ConfigError("P must be 5 x 3");
  if (!(scenario_.dt > 0.0) || scenario_.thr < 0.0 || scenario_.noise_std < 0.0) {
    throw ConfigError("scenario dt, thr or noise invalid");
  }
  if (scenario_.initial_state.size() != 5 || !scenario_.initial_state.allFinite()) {
    throw ConfigError("initial state must be a finite 5-vector");
  }
  field_.image = scenario_.terrain_path.empty()
                     ? generate_terrain(scenario_.terrain_size, scenario_.terrain_seed, scenario_.terrain_regions,
                                        scenario_.terrain_blend)
                     : load_terrain(scenario_.terrain_path);
  field_.image.validate();
  field_.projection = scenario_.projection;
  field_.extent = scenario_.workspace;
}

Vec WorldModel::true_dynamics(const Vec& x, const Vec& u) const { return car_.eval(x, u) + field_.value(x); }

Vec WorldModel::step(const Vec& x, const Vec& u, double dt) const {
  return rk4_step([&](const Vec& y) { return true_dynamics(y, u); }, x, dt);
}

Vec WorldModel::observe(const Vec& x, double noise_std, std::mt19937_64& rng) const {
  return safex::observe(field_, x, noise_std, rng);
}

bool WorldModel::safety_check(const Vec& x) const {
  return safex::safety_check(x, scenario_.workspace, scenario_.obstacles, scenario_.thr);
}

Vec nominal_dynamics(const Vec& x, const Vec& u) { return DubinsCar(0.4).eval(x, u); }

Vec step(const Vec& x, const Vec& u, const DisturbanceField& field, double dt) {
  const DubinsCar car(0.4);
  return rk4_step([&](const Vec& y) { return Vec(car.eval(y, u) + field.value(y)); }, x, dt);
}

Vec observe(const DisturbanceField& field, const Vec& x, double noise_std, std::mt19937_64& rng) {
  Vec y = field.value(x);
  if (noise_std > 0.0) {
    std::normal_distribution<double> z(0.0, 1.0);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise_std * z(rng);
  }
  return y;
}

Vec2 sample_in_ball(const Vec2& o, double rho, const Workspace& ws, std::mt19937_64& rng) {
  if (!(rho > 0.0)) throw ConfigError("sample_in_ball: rho must be positive");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int it = 0; it < 100000; ++it) {
    const Vec2 p = o + rho * Vec2(u(rng), u(rng));
    if ((p - o).norm() <= rho && ws.contains(p)) return p;
  }
  throw ConfigError("sample_in_ball: ball does not meet the workspace");
}

double uniform_density_lower_bound(double rho, int dim) {
  if (!(rho > 0.0) || dim < 1) throw ConfigError("invalid ball");
  const double vol = std::pow(M_PI, dim / 2.0) / std::tgamma(dim / 2.0 + 1.0) * std::pow(rho, dim);
  return 1.0 / vol;
}

bool safety_check(const Vec& x, const Workspace& ws, const ObstacleSet& obstacles, double thr) {
  const Vec2 p = x.head<2>();
  return ws.contains(p) && clearance(p, obstacles) >= thr;
}

}  // namespace safex
