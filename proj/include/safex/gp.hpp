#pragma once

#include <functional>
#include <vector>

#include "safex/kernel.hpp"
#include "safex/linalg.hpp"

namespace safex {

/// Training data for the per-coordinate regressions: rows of `points` are inputs,
/// rows of `values` the matching noisy readings of every output coordinate.
struct ObservationSet {
  Mat points;
  Mat values;
  double noise_std = 0.0;

  ObservationSet() = default;
  ObservationSet(int input_dim, int output_dim, double noise_std);

  Eigen::Index size() const { return points.rows(); }
  int input_dim() const { return static_cast<int>(points.cols()); }
  int output_dim() const { return static_cast<int>(values.cols()); }

  void add(const Vec& x, const Vec& y);
  void validate() const;
};

struct PosteriorEstimate {
  Vec mean;
  Vec stddev;
};

/// Independent exact GP regression per output coordinate. Coordinates that share
/// a kernel share one Cholesky factor. Immutable once built.
class GPModel {
 public:
  GPModel() = default;

  static GPModel fit(ObservationSet observations, std::vector<KernelSpec> kernels);

  /// Same model with extra observations appended; grows the Cholesky factor by a
  /// block instead of refactorizing.
  GPModel extended(const Mat& new_points, const Mat& new_values) const;

  PosteriorEstimate posterior(const Vec& x) const;
  Vec mean(const Vec& x) const;
  /// Rows are output coordinates, columns input dimensions.
  Mat mean_jacobian(const Vec& x) const;
  Vec variance(const Vec& x) const;
  /// Posterior variances at the columns of `queries`; result is output_dim x queries.cols().
  Mat variance_batch(const Mat& queries) const;

  Eigen::Index size() const { return obs_.size(); }
  int input_dim() const { return obs_.input_dim(); }
  int output_dim() const { return static_cast<int>(kernels_.size()); }
  const ObservationSet& observations() const { return obs_; }
  const std::vector<KernelSpec>& kernels() const { return kernels_; }
  double prior_variance(int coord) const { return kernels_[coord].signal_variance; }

  /// Distinct kernels; coordinates in the same group have identical variances.
  int group_count() const { return static_cast<int>(groups_.size()); }
  int group_of(int coord) const { return group_of_coord_[coord]; }
  /// Variance of one kernel group at x.
  double group_variance(int group, const Vec& x) const;

 private:
  struct Group {
    KernelSpec kernel;
    Mat chol;  // lower-triangular factor of K + (s^2 + jitter) I
    double jitter = 0.0;
  };

  Vec kernel_column(const KernelSpec& kernel, const Vec& x) const;
  void factorize_group(Group& group) const;
  void solve_weights();

  ObservationSet obs_;
  std::vector<KernelSpec> kernels_;
  std::vector<Group> groups_;
  std::vector<int> group_of_coord_;
  Mat alpha_;  // N x output_dim, (K_i + s^2 I)^{-1} y_i
};

PosteriorEstimate posterior(const GPModel& model, const Vec& x);

/// d_hat(x): the stacked posterior means.
Vec estimate_d(const GPModel& model, const Vec& x);

struct MaxStdOptions {
  int grid_per_axis = 50;
  int starts = 16;
  int evals_per_start = 200;
};

/// Restricts the search to admissible points (e.g. free space); empty means all of the ball.
using PointFilter = std::function<bool(const Vec&)>;

/// Per-coordinate upper estimate of sup over B(center, radius) of the posterior std:
/// dense seed grid, then multi-start coordinate ascent from the best seeds. Never below
/// the maximum over the seed grid. Returns zeros when no admissible point exists.
Vec max_posterior_std_in_ball(const GPModel& model, const Vec& center, double radius,
                              const MaxStdOptions& options = {},
                              const PointFilter& admissible = {});

}  // namespace safex
