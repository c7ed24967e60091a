#include "safex/explorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "safex/error.hpp"

namespace safex {

namespace {

constexpr int kStateDim = 5;
constexpr int kInputDim = 2;

CcmRegion dubins_region(double error_box) {
  CcmRegion r;
  r.ref_lower = Vec(kStateDim);
  r.ref_upper = Vec(kStateDim);
  r.ref_lower << 0.0, 0.0, -M_PI, 0.7, -1.0;
  r.ref_upper << 10.0, 10.0, M_PI, 1.3, 1.0;
  r.input_lower = Vec::Constant(kInputDim, -3.0);
  r.input_upper = Vec::Constant(kInputDim, 3.0);
  r.error_upper = Vec::Constant(kStateDim, error_box);
  r.error_lower = -r.error_upper;
  return r;
}

PointFilter free_filter(const Workspace& ws, const ObstacleSet& obstacles) {
  return [&ws, &obstacles](const Vec& p) {
    Vec2 q(p[0], p[1]);
    return ws.contains(q) && clearance(q, obstacles) > 0.0;
  };
}

double global_bound_estimate(const GPModel& model, const std::vector<Vec2>& grid, const ExplorerConfig& cfg,
                             double n_obs) {
  if (grid.empty()) return 0.0;
  Mat q(2, static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) q.col(static_cast<Eigen::Index>(i)) = grid[i];
  Mat var = model.variance_batch(q);
  double worst = var.colwise().sum().maxCoeff();
  const KernelSpec& k = model.kernels().front();
  int n = model.input_dim();
  double nn = std::max(1.0, n_obs);
  double l = derivative_bound_L(k.a1, k.a2, n, cfg.delta);
  double r1 = 1.0 / (nn * l * std::sqrt(static_cast<double>(n)));
  double mh = covering_number(cfg.rho0, r1, n);
  return beta(nn, mh, cfg.delta) * std::sqrt(std::max(0.0, worst));
}

}  // namespace

void ExplorerConfig::validate() const {
  if (!(rho0 > rho_floor && rho_floor > 0.0)) throw ConfigError("need rho0 > rho_floor > 0");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("shrink factor must lie in (0, 1)");
  if (!(psi_th > 0.0)) throw ConfigError("psi_th must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
  if (!(grid_res > 0.0)) throw ConfigError("grid resolution must be positive");
  if (max_episodes < 1) throw ConfigError("max_episodes must be at least 1");
  if (!(max_time > 0.0)) throw ConfigError("max_time must be positive");
  if (observe_every < 1) throw ConfigError("observe_every must be at least 1");
  if (min_spacing < 0.0) throw ConfigError("min_spacing must be nonnegative");
  if (dwell_samples < 1 || !(dwell_rate > 0.0) || max_dwell_rounds < 0) throw ConfigError("bad dwell settings");
  if (!(lambda > 0.0) || margin < 0.0) throw ConfigError("lambda must be positive, margin nonnegative");
  if (!(tube_cap > 0.0)) throw ConfigError("tube_cap must be positive");
  if (fixed_tube < 0.0) throw ConfigError("fixed tube must be nonnegative");
  if (warm_steps < 1) throw ConfigError("warm_steps must be at least 1");
  safex::validate(kernel);
  region.validate();
}

ExplorerConfig default_explorer_config() {
  ExplorerConfig c;
  c.region = dubins_region(c.tube_cap);
  c.train.samples = 600;
  c.train.max_evaluations = 1500;
  c.train.cond_weight = 0.003;
  c.retrain = c.train;
  c.retrain.samples = 200;
  c.retrain.max_evaluations = 120;
  c.retrain.certify_samples = 1000;
  c.retrain.bound_samples = 1000;
  c.plan.rrt.max_iters = 1500;
  return c;
}

std::vector<Vec2> free_grid(const Workspace& ws, const ObstacleSet& obstacles, double tube, double grid_res) {
  if (!(grid_res > 0.0)) throw ConfigError("grid resolution must be positive");
  Vec2 span = ws.hi - ws.lo;
  int nx = std::max(1, static_cast<int>(std::floor(span.x() / grid_res + 1e-9)));
  int ny = std::max(1, static_cast<int>(std::floor(span.y() / grid_res + 1e-9)));
  std::vector<Vec2> out;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      Vec2 p(ws.lo.x() + (i + 0.5) * span.x() / nx, ws.lo.y() + (j + 0.5) * span.y() / ny);
      double wall = std::min({p.x() - ws.lo.x(), ws.hi.x() - p.x(), p.y() - ws.lo.y(), ws.hi.y() - p.y()});
      if (wall > tube && clearance(p, obstacles) > tube) out.push_back(p);
    }
  }
  return out;
}

Vec2 next_goal(const GPModel& model, const Workspace& ws, const ObstacleSet& obstacles, double tube,
               double grid_res, const std::vector<Vec2>& excluded, double exclusion_radius) {
  std::vector<Vec2> grid = free_grid(ws, obstacles, tube, grid_res);
  std::erase_if(grid, [&](const Vec2& p) {
    return std::any_of(excluded.begin(), excluded.end(),
                       [&](const Vec2& e) { return (p - e).norm() < exclusion_radius; });
  });
  if (grid.empty()) throw PlanningError("no free acquisition cell");
  Mat q(model.input_dim(), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) q.col(static_cast<Eigen::Index>(i)) = grid[i];
  Eigen::RowVectorXd score = model.variance_batch(q).colwise().sum();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < score.size(); ++i) {
    if (score[i] > score[best]) best = i;
  }
  return grid[static_cast<std::size_t>(best)];
}

RunMetrics compute_metrics(const ExplorationLog& log) {
  RunMetrics m;
  std::size_t unsafe = 0, tracked = 0;
  double err = 0.0;
  for (const StepRecord& s : log.steps) {
    if (s.unsafe) ++unsafe;
    if (s.xs.size() >= 2) {
      err += (s.x.head<2>() - s.xs.head<2>()).norm();
      ++tracked;
    }
    if (s.observation.size() > 0) ++m.observations;
  }
  if (!log.steps.empty()) m.unsafe_pct = 100.0 * static_cast<double>(unsafe) / static_cast<double>(log.steps.size());
  m.travel_time = static_cast<double>(log.steps.size()) * log.dt;
  m.mean_tracking_error = tracked > 0 ? err / static_cast<double>(tracked) : 0.0;
  m.episodes = static_cast<int>(log.episodes.size());
  m.retrain_count = log.retrain_count;
  for (const EpisodeRecord& e : log.episodes) {
    if (e.blocked) ++m.blocked_episodes;
    if (e.planned) m.max_episode_tube = std::max(m.max_episode_tube, e.tube);
  }
  m.terminated = log.terminated;
  return m;
}

std::vector<Vec2> covering_centers(const Workspace& ws, double rho0) {
  Vec2 span = ws.hi - ws.lo;
  int nx = std::max(1, static_cast<int>(std::ceil(span.x() / rho0 - 1e-9)));
  int ny = std::max(1, static_cast<int>(std::ceil(span.y() / rho0 - 1e-9)));
  std::vector<Vec2> out;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      out.emplace_back(ws.lo.x() + (i + 0.5) * span.x() / nx, ws.lo.y() + (j + 0.5) * span.y() / ny);
    }
  }
  return out;
}

bool termination_check(const GPModel& model, const Workspace& ws, const ObstacleSet& obstacles,
                       const ExplorerConfig& config, double n_obs) {
  PointFilter admissible = free_filter(ws, obstacles);
  for (const Vec2& c : covering_centers(ws, config.rho0)) {
    StopCheck sc = stopping_check(model, c, config.rho0, config.delta, config.psi_th, n_obs,
                                  config.termination_search, admissible);
    if (!sc.stop) return false;
  }
  return true;
}

TrainResult train_initial(const ExplorerConfig& cfg, const ControlAffineSystem& sys, std::uint64_t seed) {
  MetricModel metric = MetricModel::heading_rotated(kStateDim, 2);
  ControllerModel controller = ControllerModel::body_frame(Mat(), 2);
  TrainResult res;
  for (int s = 1; s <= cfg.warm_steps; ++s) {
    double f = static_cast<double>(s) / cfg.warm_steps;
    res = train(sys, cfg.region, cfg.lambda * f, cfg.margin * f, metric, controller, cfg.train, seed);
    metric = res.metric;
    controller = res.controller;
  }
  return res;
}

Explorer::Explorer(const WorldModel& world, ExplorerConfig config, std::shared_ptr<const TrainResult> initial)
    : world_(world), cfg_(std::move(config)), rng_(cfg_.seed * 0x9E3779B97F4A7C15ULL + 17) {
  cfg_.validate();
  x_ = world_.scenario().initial_state;
  ObservationSet obs(2, kStateDim, world_.scenario().noise_std);
  model_ = std::make_shared<const GPModel>(GPModel::fit(obs, std::vector<KernelSpec>(kStateDim, cfg_.kernel)));
  trained_model_ = model_;
  if (!initial) initial = std::make_shared<const TrainResult>(train_initial(cfg_, world_.car(), 1));
  metric_ = initial->metric;
  controller_ = initial->controller;
  certified_ = initial->certificate.pass;
  log_.dt = world_.dt();
  log_.obs_points = Mat(0, 2);
  log_.obs_values = Mat(0, kStateDim);
  audit_grid_ = free_grid(world_.workspace(), world_.obstacles(), 0.0, cfg_.grid_res);
  last_tube_ = cfg_.method == Method::Baseline ? cfg_.fixed_tube : 0.0;
}

bool Explorer::budget_left() const {
  return static_cast<int>(log_.episodes.size()) < cfg_.max_episodes && t_ < cfg_.max_time;
}

void Explorer::log_step(const Vec& xs, const Vec& u, const Vec& obs_point, const Vec& y, bool dwell,
                        int episode) {
  StepRecord r;
  r.t = t_;
  r.x = x_;
  r.xs = xs;
  r.u = u;
  r.obs_point = obs_point;
  r.observation = y;
  r.unsafe = !world_.safety_check(x_);
  r.dwell = dwell;
  r.episode = episode;
  log_.steps.push_back(std::move(r));
  t_ += world_.dt();
}

void Explorer::refit(const std::vector<Vec2>& points, const std::vector<Vec>& values) {
  if (points.empty()) return;
  Mat p(static_cast<Eigen::Index>(points.size()), 2);
  Mat v(static_cast<Eigen::Index>(points.size()), kStateDim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    p.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
    v.row(static_cast<Eigen::Index>(i)) = values[i].transpose();
  }
  model_ = std::make_shared<const GPModel>(model_->extended(p, v));
  Eigen::Index n0 = log_.obs_points.rows();
  log_.obs_points.conservativeResize(n0 + p.rows(), 2);
  log_.obs_values.conservativeResize(n0 + v.rows(), kStateDim);
  log_.obs_points.bottomRows(p.rows()) = p;
  log_.obs_values.bottomRows(v.rows()) = v;
}

void Explorer::dwell(int episode, std::vector<Vec2>& points, std::vector<Vec>& values) {
  const Workspace& ws = world_.workspace();
  const ObstacleSet& obstacles = world_.obstacles();
  Vec2 pos = x_.head<2>();
  int steps = std::max(cfg_.dwell_samples,
                       static_cast<int>(std::ceil(cfg_.dwell_samples / (cfg_.dwell_rate * world_.dt()) - 1e-9)));
  int every = steps / cfg_.dwell_samples;
  int taken = 0;
  for (int k = 0; k < steps; ++k) {
    Vec p, y;
    if (k % every == 0 && taken < cfg_.dwell_samples) {
      Vec2 q = pos;
      for (int tries = 0; tries < 100; ++tries) {
        q = sample_in_ball(pos, cfg_.rho_floor, ws, rng_);
        if (clearance(q, obstacles) > 0.0) break;
      }
      Vec state = x_;
      state.head<2>() = q;
      y = world_.observe(state, world_.scenario().noise_std, rng_);
      p = q;
      points.push_back(q);
      values.push_back(y);
      ++taken;
    }
    log_step(Vec(), Vec::Zero(kInputDim), p, y, true, episode);
  }
}

void Explorer::retrain_if_needed(EpisodeRecord& ep) {
  if (cfg_.method == Method::Baseline || model_ == trained_model_) return;
  GpMeanDisturbance d_new(model_, {0, 1}, kStateDim);
  GpMeanDisturbance d_old(trained_model_, {0, 1}, kStateDim);
  std::uint64_t seed = cfg_.seed * 1315423911ULL + static_cast<std::uint64_t>(ep.id);
  std::vector<Vec> states;
  for (const CcmSample& s : sample_region(cfg_.region, cfg_.retrain_check_samples, seed)) states.push_back(s.x);
  RetrainCheck rc = retraining_needed(metric_, d_new, d_old, states, cfg_.margin);
  ep.retrain_norm = rc.max_norm;
  if (!rc.needed) return;
  auto base = std::make_shared<const DubinsCar>(world_.car().damping());
  auto dhat = std::make_shared<const GpMeanDisturbance>(model_, std::vector<int>{0, 1}, kStateDim);
  DisturbedSystem sys(base, dhat);
  TrainResult res = train(sys, cfg_.region, cfg_.lambda, cfg_.margin, metric_, controller_, cfg_.retrain, seed);
  if (!res.certificate.pass) {
    TrainOptions full = cfg_.train;
    full.certify_samples = cfg_.retrain.certify_samples;
    res = train(sys, cfg_.region, cfg_.lambda, cfg_.margin, res.metric, res.controller, full, seed + 1);
  }
  metric_ = res.metric;
  controller_ = res.controller;
  certified_ = res.certificate.pass;
  trained_model_ = model_;
  ep.retrained = true;
  ++log_.retrain_count;
}

ExplorationLog Explorer::run() {
  while (budget_left()) {
    if (check_termination()) break;
    if (!episode()) break;
  }
  return log_;
}

bool Explorer::check_termination() {
  const double n = static_cast<double>(model_->size());
  log_.terminated = global_bound_estimate(*model_, audit_grid_, cfg_, n) <= cfg_.psi_th &&
                    termination_check(*model_, world_.workspace(), world_.obstacles(), cfg_, n);
  return log_.terminated;
}

void Explorer::add_observations(const Mat& points, const Mat& values) {
  if (points.rows() != values.rows() || points.cols() != 2 || values.cols() != kStateDim) {
    throw ConfigError("add_observations: expected N x 2 points and N x 5 values");
  }
  std::vector<Vec2> p;
  std::vector<Vec> v;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    p.emplace_back(points.row(i).transpose());
    v.emplace_back(values.row(i).transpose());
  }
  refit(p, v);
}

std::optional<EpisodeRecord> Explorer::episode() {
  const Workspace& ws = world_.workspace();
  const ObstacleSet& obstacles = world_.obstacles();
  const bool baseline = cfg_.method == Method::Baseline;
  PointFilter admissible = free_filter(ws, obstacles);
  ZeroDisturbance zero(kStateDim);
  EpisodeRecord ep;
  ep.id = static_cast<int>(log_.episodes.size());
  try {
    ep.goal = next_goal(*model_, ws, obstacles, last_tube_ + cfg_.plan.gains.goal_tol, cfg_.grid_res, blocked_goals_);
  } catch (const PlanningError&) {
    return std::nullopt;
  }
  if (!audit_grid_.empty()) {
    Mat q(2, static_cast<Eigen::Index>(audit_grid_.size()));
    for (std::size_t i = 0; i < audit_grid_.size(); ++i) q.col(static_cast<Eigen::Index>(i)) = audit_grid_[i];
    ep.max_variance = model_->variance_batch(q).colwise().sum().maxCoeff();
  }
  std::vector<Vec2> new_points;
  std::vector<Vec> new_values;
  GpMeanDisturbance dhat(model_, {0, 1}, kStateDim);
  const DisturbanceModel& planning_d = baseline ? static_cast<const DisturbanceModel&>(zero) : dhat;
  Vec2 start = x_.head<2>();
  PlanResult plan;
  int attempt = 0;
  bool stalled = true;  // no radius gave a tube inside the certified region
  for (int round = 0; round <= cfg_.max_dwell_rounds; ++round) {
    if (round > 0) {
      dwell(ep.id, new_points, new_values);
      refit(new_points, new_values);
      new_points.clear();
      new_values.clear();
      ep.dwell_rounds = round;
      if (!budget_left()) break;
    }
    GpMeanDisturbance dhat_now(model_, {0, 1}, kStateDim);
    const DisturbanceModel& d_plan = baseline ? planning_d : dhat_now;
    stalled = true;
    double failed_tube = std::numeric_limits<double>::infinity();
    for (double rho = cfg_.rho0; rho >= cfg_.rho_floor - 1e-12; rho *= cfg_.shrink) {
      double psi = 0.0, tube = cfg_.fixed_tube;
      if (!baseline) {
        StopCheck sc = stopping_check(*model_, Vec(start), rho, cfg_.delta, cfg_.psi_th,
                                      static_cast<double>(model_->size()), cfg_.local_search, admissible);
        psi = sc.error_bound;
        tube = tube_radius(metric_.m_lower, metric_.m_upper, psi, metric_.lambda);
      }
      ep.rho = rho;
      ep.psi = psi;
      ep.tube = tube;
      if (!baseline && tube > cfg_.tube_cap) {
        ep.failure = "tube exceeds certified error region";
        continue;
      }
      stalled = false;
      // replanning only pays off once the tube has shrunk noticeably
      if (tube > 0.9 * failed_tube) continue;
      PlanParams pp = cfg_.plan;
      pp.dt = world_.dt();
      pp.rrt.seed = cfg_.seed * 7919ULL + static_cast<std::uint64_t>(ep.id) * 131ULL + attempt++;
      plan = plan_safe(x_, ep.goal, ws, obstacles, tube, world_.car(), d_plan, pp);
      if (plan.reference || baseline) break;
      failed_tube = tube;
      ep.failure = plan.failure;
    }
    // dwelling only shrinks the tube; it cannot repair a plan that failed inside the cap
    if (plan.reference || baseline || !stalled) break;
  }
  if (baseline && !plan.reference) ep.failure = plan.failure;
  ep.m_lower = metric_.m_lower;
  ep.m_upper = metric_.m_upper;
  ep.lambda = metric_.lambda;
  ep.certified = certified_;
  if (!plan.reference) {
    // A stall on the tube cap says nothing about the goal, so only planning failures exclude it.
    ep.blocked = true;
    if (!stalled || baseline) blocked_goals_.push_back(ep.goal);
    log_.episodes.push_back(ep);
    return ep;
  }
  ep.planned = true;
  ep.failure.clear();
  ep.bloat_used = plan.bloat_used;
  last_tube_ = ep.tube;
  const ReferenceTrajectory& ref = *plan.reference;
  ep.min_reference_clearance = std::numeric_limits<double>::infinity();
  for (const Vec& s : ref.states) {
    ep.min_reference_clearance = std::min(ep.min_reference_clearance, clearance(Vec2(s.head<2>()), obstacles));
  }
  std::size_t len = std::min(ref.states.size(), ref.inputs.size());
  if (len <= 1) {
    // already at the goal: sample around it instead of a one-step track
    dwell(ep.id, new_points, new_values);
    ++ep.dwell_rounds;
    len = 0;
  }
  Vec2 last_obs(std::numeric_limits<double>::infinity(), 0.0);
  for (std::size_t k = 0; k < len && t_ < cfg_.max_time; ++k) {
    const Vec& xs = ref.states[k];
    Vec u = controller_.input(x_, xs, ref.inputs[k]);
    Vec p, y;
    if (static_cast<int>(k) % cfg_.observe_every == 0 && (x_.head<2>() - last_obs).norm() >= cfg_.min_spacing &&
        ws.contains(Vec2(x_.head<2>()))) {
      y = world_.observe(x_, world_.scenario().noise_std, rng_);
      p = x_.head<2>();
      last_obs = x_.head<2>();
      new_points.push_back(last_obs);
      new_values.push_back(y);
    }
    log_step(xs, u, p, y, false, ep.id);
    ep.reference.push_back(xs);
    ++ep.steps;
    x_ = world_.step(x_, u);
    if ((x_.head<2>() - start).norm() >= ep.rho) break;
  }
  refit(new_points, new_values);
  retrain_if_needed(ep);
  // the car has moved, so goals that failed from the old pose get another chance
  blocked_goals_.clear();
  log_.episodes.push_back(ep);
  return ep;
}

ExplorationLog run(const WorldModel& world, const ExplorerConfig& config,
                   std::shared_ptr<const TrainResult> initial) {
  Explorer e(world, config, std::move(initial));
  return e.run();
}

ExplorationLog run_baseline(const WorldModel& world, ExplorerConfig config, double fixed_tube,
                            std::shared_ptr<const TrainResult> initial) {
  config.method = Method::Baseline;
  config.fixed_tube = fixed_tube;
  Explorer e(world, std::move(config), std::move(initial));
  return e.run();
}

}  // namespace safex
