#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "safex/dynamics.hpp"
#include "safex/linalg.hpp"

namespace safex {

/// M(x) = scale * T(x)^T (W(x) W(x)^T + eps I) T(x).
/// W(x) = sum_k phi_k(x) W_k with phi the monomials of degree <= `degree` in `feature_vars`.
/// With heading_index >= 0, T rotates coordinates (0, 1) into the frame of x[heading_index];
/// otherwise T = I.
struct MetricModel {
  int n = 0;
  int degree = 0;
  std::vector<int> feature_vars;
  int heading_index = -1;
  double eps = 1e-3;
  double scale = 1.0;
  std::vector<Mat> coeffs;

  double m_lower = 1.0;
  double m_upper = 1.0;
  double lambda = 0.0;
  double margin = 0.0;

  static MetricModel constant(const Mat& m);
  static MetricModel polynomial(int n, int degree, std::vector<int> feature_vars, double eps = 1e-3);
  /// Constant body-frame metric for planar vehicles; W is constant.
  static MetricModel heading_rotated(int n, int heading_index, double eps = 1e-3);

  int feature_count() const;
  Vec features(const Vec& x) const;
  /// Row k holds d phi_k / dx.
  Mat feature_jacobian(const Vec& x) const;

  Mat eval(const Vec& x) const;
  /// sum_i v_i dM/dx_i
  Mat lie_derivative(const Vec& x, const Vec& v) const;

  int parameter_count() const { return feature_count() * n * n; }
  Vec parameters() const;
  void set_parameters(const Vec& p);
  void validate() const;
};

enum class ControllerKind { LinearError, BodyFrameError };

/// u = u* + G z(x, x*). LinearError: z = x - x*. BodyFrameError: planar error rotated into the
/// vehicle frame, heading error wrapped to [-pi, pi).
struct ControllerModel {
  ControllerKind kind = ControllerKind::LinearError;
  int n = 0;
  int m = 0;
  int heading_index = -1;
  Mat gain;

  /// An empty gain leaves the controller to be filled in by train().
  static ControllerModel linear(const Mat& gain);
  static ControllerModel body_frame(const Mat& gain, int heading_index);

  Vec error(const Vec& x, const Vec& xs) const;
  Mat error_jacobian(const Vec& x, const Vec& xs) const;
  Vec input(const Vec& x, const Vec& xs, const Vec& us) const;
  /// K = du/dx
  Mat jacobian(const Vec& x, const Vec& xs) const;
  void validate() const;
};

/// Sampling box for (x*, u*, x - x*) tuples.
struct CcmRegion {
  Vec ref_lower, ref_upper;
  Vec input_lower, input_upper;
  Vec error_lower, error_upper;

  void validate() const;
};

struct CcmSample {
  Vec x, xs, us;
};

std::vector<CcmSample> sample_region(const CcmRegion& region, int count, std::uint64_t seed);

/// M_dot + sym(M (A + B K)) + 2 lambda M at (x, x*, u*), lambda taken from the metric.
Mat ccm_lhs(const MetricModel& metric, const ControllerModel& controller, const ControlAffineSystem& sys,
            const Vec& x, const Vec& xs, const Vec& us);

struct CcmCertificate {
  int samples = 0;
  double max_value = 0.0;  // max over samples of lambda_max(LHS + margin I)
  double margin = 0.0;
  double lipschitz_slack = 0.0;
  bool pass = false;
};

CcmCertificate certify(const MetricModel& metric, const ControllerModel& controller,
                       const ControlAffineSystem& sys, const std::vector<CcmSample>& samples,
                       double margin, double lipschitz_slack);
CcmCertificate certify(const MetricModel& metric, const ControllerModel& controller,
                       const ControlAffineSystem& sys, const CcmRegion& region, double margin,
                       int n_samples, double lipschitz_slack, std::uint64_t seed);

/// L_hat * h: largest observed slope of lambda_max(LHS + margin I) under small tuple perturbations,
/// times the sample dispersion in region-normalized coordinates.
double empirical_lipschitz_slack(const MetricModel& metric, const ControllerModel& controller,
                                 const ControlAffineSystem& sys, const CcmRegion& region, double margin,
                                 int n_samples, std::uint64_t seed);

/// (m_lower, m_upper) over sampled states, shrunk/inflated by `safety`.
std::pair<double, double> metric_bounds(const MetricModel& metric, const CcmRegion& region, int n_samples,
                                        std::uint64_t seed, double safety = 0.1);

double tracking_error_bound(double m_lower, double m_upper, double psi, double lambda, double r0, double t);
/// t -> infinity limit: sqrt(m_upper / m_lower) psi / lambda.
double tube_radius(double m_lower, double m_upper, double psi, double lambda);

struct TrainOptions {
  int samples = 600;
  /// Share of training tuples placed on random vertices of the sampling box, where conditions
  /// that are affine in the tuple attain their worst case.
  double vertex_fraction = 0.5;
  int max_evaluations = 6000;
  double hinge_slack = 0.05;
  double cond_weight = 0.1;
  int cond_points = 16;
  double gain_weight = 1e-3;
  int certify_samples = 10000;
  double certify_slack = 0.0;
  int bound_samples = 2000;
  double bound_safety = 0.1;
  bool lqr_warm_start = true;
};

struct TrainResult {
  MetricModel metric;
  ControllerModel controller;
  CcmCertificate certificate;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int evaluations = 0;
};

/// Fits metric and controller parameters against the hinge loss on sampled tuples.
/// `metric` and `controller` fix the parameterization; nonempty coefficients are used as the
/// starting point, otherwise an LQR design at the region center seeds the search.
TrainResult train(const ControlAffineSystem& sys, const CcmRegion& region, double lambda, double margin,
                  MetricModel metric, ControllerModel controller, const TrainOptions& options,
                  std::uint64_t seed);

/// LQR for (A + lambda I, B): returns (P, K) with u = K x, or false when the Riccati iteration fails.
bool lqr_design(const Mat& a, const Mat& b, const Mat& q, const Mat& r, double lambda, Mat& p, Mat& k);

struct RetrainCheck {
  bool needed = false;
  double max_norm = 0.0;
};

/// max over sample states of ||d_R M + sym(M dR/dx)||_2 with R = d1 - d2, compared to the margin.
RetrainCheck retraining_needed(const MetricModel& metric, const DisturbanceModel& d1,
                               const DisturbanceModel& d2, const std::vector<Vec>& states, double margin);

/// (|lambda_max(A) - lambda_max(B)|, ||A - B||_2)
std::pair<double, double> eig_max_diff_bound_check(const Mat& a, const Mat& b);

struct TrackResult {
  std::vector<Vec> states;
  std::vector<Vec> inputs;
  std::vector<double> distance;           // ||x - x*||_2
  std::vector<double> position_distance;  // over coordinates (0, 1)
};

/// Closed-loop RK4 simulation of `sys` under u(x, x*(t), u*(t)); input frozen over each step.
TrackResult track(const ControllerModel& controller, const ControlAffineSystem& sys,
                  const ReferenceTrajectory& reference, const Vec& x0);

}  // namespace safex
