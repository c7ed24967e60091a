#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "safex/complexity.hpp"
#include "safex/contraction.hpp"
#include "safex/gp.hpp"
#include "safex/planner.hpp"
#include "safex/world.hpp"

namespace safex {

enum class Method { Proposed, Baseline };

struct ExplorerConfig {
  Method method = Method::Proposed;
  double fixed_tube = 0.0;  // baseline only

  double rho0 = 1.0;
  double psi_th = 0.1;
  double delta = 0.05;
  double shrink = 0.7;
  double rho_floor = 0.2;
  double grid_res = 0.5;
  int max_episodes = 400;
  double max_time = 600.0;  // simulated seconds
  std::uint64_t seed = 0;

  KernelSpec kernel = make_kernel(KernelFamily::SquaredExponential, 3.0, 0.01);
  int observe_every = 10;
  double min_spacing = 0.05;
  int dwell_samples = 12;
  double dwell_rate = 20.0;  // samples per second while dwelling
  int max_dwell_rounds = 6;
  MaxStdOptions local_search{12, 4, 40};
  MaxStdOptions termination_search{16, 4, 60};

  double lambda = 0.15;
  int warm_steps = 3;  // lambda continuation for the initial training
  double margin = 0.05;
  double tube_cap = 0.2;
  CcmRegion region;
  TrainOptions train;
  TrainOptions retrain;
  int retrain_check_samples = 200;

  PlanParams plan;

  void validate() const;
};

/// Dubins-car defaults: certified region, trainer budgets, planner gains.
ExplorerConfig default_explorer_config();

struct StepRecord {
  double t = 0.0;
  Vec x;
  Vec xs;  // empty when no reference is active
  Vec u;
  Vec obs_point;    // where the observation was taken; empty when none
  Vec observation;
  bool unsafe = false;
  bool dwell = false;
  int episode = 0;
};

struct EpisodeRecord {
  int id = 0;
  Vec2 goal = Vec2::Zero();
  double rho = 0.0;
  double psi = 0.0;
  double tube = 0.0;
  double m_lower = 1.0;
  double m_upper = 1.0;
  double lambda = 0.0;
  bool planned = false;
  bool blocked = false;
  int dwell_rounds = 0;
  int steps = 0;
  bool retrained = false;
  double retrain_norm = 0.0;
  bool certified = false;
  double bloat_used = 0.0;
  double min_reference_clearance = 0.0;
  double max_variance = 0.0;  // summed posterior variance, worst free-grid cell, at episode start
  std::string failure;
  std::vector<Vec> reference;  // planned x*(t), as tracked
};

struct RunMetrics {
  double unsafe_pct = 0.0;
  double travel_time = 0.0;
  double mean_tracking_error = 0.0;
  int episodes = 0;
  int retrain_count = 0;
  int blocked_episodes = 0;
  int observations = 0;
  double max_episode_tube = 0.0;
  bool terminated = false;
};

struct ExplorationLog {
  double dt = 0.01;
  std::vector<StepRecord> steps;
  std::vector<EpisodeRecord> episodes;
  Mat obs_points;
  Mat obs_values;
  bool terminated = false;
  int retrain_count = 0;
};

/// argmax over the free grid (farther than `tube` from obstacles and walls) of sum_i sigma_i^2.
/// Cells within `exclusion_radius` of an excluded point are skipped. Ties go to the lowest index.
Vec2 next_goal(const GPModel& model, const Workspace& ws, const ObstacleSet& obstacles, double tube, double grid_res,
               const std::vector<Vec2>& excluded = {}, double exclusion_radius = 0.5);

/// Cell centers of the acquisition grid, row-major from the lower-left corner.
std::vector<Vec2> free_grid(const Workspace& ws, const ObstacleSet& obstacles, double tube, double grid_res);

RunMetrics compute_metrics(const ExplorationLog& log);

/// Ball centers with spacing rho0 covering the workspace.
std::vector<Vec2> covering_centers(const Workspace& ws, double rho0);

/// stopping_check on every covering ball (centers spaced rho0) that meets free space.
bool termination_check(const GPModel& model, const Workspace& ws, const ObstacleSet& obstacles,
                       const ExplorerConfig& config, double n_obs);

class Explorer {
 public:
  /// `initial` is the controller trained on the nominal model; trained here when null.
  Explorer(const WorldModel& world, ExplorerConfig config, std::shared_ptr<const TrainResult> initial = nullptr);

  /// Runs the exploration loop (or the fixed-tube baseline) to termination or budget exhaustion.
  ExplorationLog run();

  /// Full stopping test over the covering balls; sets log().terminated when it passes.
  bool check_termination();
  /// One goal selection, plan and tracking pass. nullopt when no goal cell is left.
  std::optional<EpisodeRecord> episode();
  /// Prior data, e.g. from an earlier survey.
  void add_observations(const Mat& points, const Mat& values);

  const GPModel& model() const { return *model_; }
  const MetricModel& metric() const { return metric_; }
  const ExplorationLog& log() const { return log_; }
  const Vec& state() const { return x_; }

 private:
  void refit(const std::vector<Vec2>& points, const std::vector<Vec>& values);
  void retrain_if_needed(EpisodeRecord& ep);
  void dwell(int episode, std::vector<Vec2>& points, std::vector<Vec>& values);
  void log_step(const Vec& xs, const Vec& u, const Vec& obs_point, const Vec& y, bool dwell, int episode);
  bool budget_left() const;

  const WorldModel& world_;
  ExplorerConfig cfg_;
  std::shared_ptr<const GPModel> model_;
  std::shared_ptr<const GPModel> trained_model_;
  MetricModel metric_;
  ControllerModel controller_;
  bool certified_ = false;
  Vec x_;
  double t_ = 0.0;
  std::mt19937_64 rng_;
  ExplorationLog log_;
  std::vector<Vec2> blocked_goals_;
  std::vector<Vec2> audit_grid_;
  double last_tube_ = 0.0;
};

/// Nominal-model training with lambda continuation over config.warm_steps stages.
TrainResult train_initial(const ExplorerConfig& config, const ControlAffineSystem& sys, std::uint64_t seed);

ExplorationLog run(const WorldModel& world, const ExplorerConfig& config,
                   std::shared_ptr<const TrainResult> initial = nullptr);
/// Same loop with the tube frozen at `fixed_tube`, planning on the nominal model, no retraining.
ExplorationLog run_baseline(const WorldModel& world, ExplorerConfig config, double fixed_tube,
                            std::shared_ptr<const TrainResult> initial = nullptr);

}  // namespace safex
