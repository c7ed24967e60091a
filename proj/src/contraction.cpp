#include "safex/contraction.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>
#include <algorithm>
#include <cmath>
#include <random>

#include "safex/error.hpp"

namespace safex {

namespace {

Mat rotation_t(int n, double theta) {
  Mat t = Mat::Identity(n, n);
  const double c = std::cos(theta), s = std::sin(theta);
  t(0, 0) = c;
  t(0, 1) = s;
  t(1, 0) = -s;
  t(1, 1) = c;
  return t;
}

Mat rotation_t_prime(int n, double theta) {
  Mat t = Mat::Zero(n, n);
  const double c = std::cos(theta), s = std::sin(theta);
  t(0, 0) = -s;
  t(0, 1) = c;
  t(1, 0) = -c;
  t(1, 1) = -s;
  return t;
}

void check_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw NumericError(what);
}

}  // namespace

// ---------------------------------------------------------------- MetricModel

MetricModel MetricModel::constant(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ConfigError("constant metric must be square");
  const double lo = lambda_min(m);
  if (!(lo > 0.0)) throw ConfigError("constant metric must be positive definite");
  MetricModel out;
  out.n = static_cast<int>(m.rows());
  out.eps = 1e-3 * lo;
  Mat shifted = m - out.eps * Mat::Identity(out.n, out.n);
  out.coeffs = {Mat(shifted.llt().matrixL())};
  return out;
}

MetricModel MetricModel::polynomial(int n, int degree, std::vector<int> feature_vars, double eps) {
  MetricModel out;
  out.n = n;
  out.degree = degree;
  out.feature_vars = std::move(feature_vars);
  out.eps = eps;
  out.validate();
  return out;
}

MetricModel MetricModel::heading_rotated(int n, int heading_index, double eps) {
  MetricModel out;
  out.n = n;
  out.heading_index = heading_index;
  out.eps = eps;
  out.validate();
  return out;
}

void MetricModel::validate() const {
  if (n < 1) throw ConfigError("metric dimension must be positive");
  if (degree < 0 || degree > 2) throw ConfigError("metric degree must be 0, 1 or 2");
  if (!(eps > 0.0) || !(scale > 0.0)) throw ConfigError("metric eps and scale must be positive");
  for (int v : feature_vars) {
    if (v < 0 || v >= n) throw ConfigError("metric feature variable out of range");
  }
  if (heading_index >= n || (heading_index >= 0 && n < 3)) throw ConfigError("metric heading index invalid");
  if (!coeffs.empty()) {
    if (static_cast<int>(coeffs.size()) != feature_count()) throw ConfigError("metric coefficient count");
    for (const auto& c : coeffs) {
      if (c.rows() != n || c.cols() != n) throw ConfigError("metric coefficient shape");
    }
  }
}

int MetricModel::feature_count() const {
  const int k = degree == 0 ? 0 : static_cast<int>(feature_vars.size());
  int count = 1 + k;
  if (degree >= 2) count += k * (k + 1) / 2;
  return count;
}

Vec MetricModel::features(const Vec& x) const {
  Vec phi(feature_count());
  phi[0] = 1.0;
  if (degree == 0) return phi;
  const int k = static_cast<int>(feature_vars.size());
  int idx = 1;
  for (int i = 0; i < k; ++i) phi[idx++] = x[feature_vars[i]];
  if (degree >= 2) {
    for (int i = 0; i < k; ++i) {
      for (int j = i; j < k; ++j) phi[idx++] = x[feature_vars[i]] * x[feature_vars[j]];
    }
  }
  return phi;
}

Mat MetricModel::feature_jacobian(const Vec& x) const {
  Mat d = Mat::Zero(feature_count(), n);
  if (degree == 0) return d;
  const int k = static_cast<int>(feature_vars.size());
  int idx = 1;
  for (int i = 0; i < k; ++i) d(idx++, feature_vars[i]) = 1.0;
  if (degree >= 2) {
    for (int i = 0; i < k; ++i) {
      for (int j = i; j < k; ++j) {
        d(idx, feature_vars[i]) += x[feature_vars[j]];
        d(idx, feature_vars[j]) += x[feature_vars[i]];
        ++idx;
      }
    }
  }
  return d;
}

Mat MetricModel::eval(const Vec& x) const {
  if (coeffs.empty()) throw ConfigError("metric has no coefficients");
  const Vec phi = features(x);
  Mat w = Mat::Zero(n, n);
  for (int k = 0; k < phi.size(); ++k) w += phi[k] * coeffs[k];
  Mat inner = scale * (w * w.transpose() + eps * Mat::Identity(n, n));
  if (heading_index < 0) return inner;
  const Mat t = rotation_t(n, x[heading_index]);
  return t.transpose() * inner * t;
}

Mat MetricModel::lie_derivative(const Vec& x, const Vec& v) const {
  if (coeffs.empty()) throw ConfigError("metric has no coefficients");
  const Vec phi = features(x);
  const Vec dphi = feature_jacobian(x) * v;
  Mat w = Mat::Zero(n, n), dw = Mat::Zero(n, n);
  for (int k = 0; k < phi.size(); ++k) {
    w += phi[k] * coeffs[k];
    dw += dphi[k] * coeffs[k];
  }
  const Mat d_inner = scale * (dw * w.transpose() + w * dw.transpose());
  if (heading_index < 0) return d_inner;
  const Mat inner = scale * (w * w.transpose() + eps * Mat::Identity(n, n));
  const double th = x[heading_index];
  const Mat t = rotation_t(n, th);
  const Mat tp = rotation_t_prime(n, th);
  const Mat rot = tp.transpose() * inner * t;
  return t.transpose() * d_inner * t + v[heading_index] * (rot + rot.transpose());
}

Vec MetricModel::parameters() const {
  Vec p(parameter_count());
  int idx = 0;
  for (const auto& c : coeffs) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) p[idx++] = c(i, j);
    }
  }
  return p;
}

void MetricModel::set_parameters(const Vec& p) {
  if (p.size() != parameter_count()) throw ConfigError("metric parameter vector has wrong size");
  coeffs.assign(static_cast<std::size_t>(feature_count()), Mat(n, n));
  int idx = 0;
  for (auto& c : coeffs) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) c(i, j) = p[idx++];
    }
  }
}

// ------------------------------------------------------------ ControllerModel

ControllerModel ControllerModel::linear(const Mat& gain) {
  ControllerModel c;
  c.kind = ControllerKind::LinearError;
  c.gain = gain;
  c.m = static_cast<int>(gain.rows());
  c.n = static_cast<int>(gain.cols());
  if (gain.size() > 0) c.validate();
  return c;
}

ControllerModel ControllerModel::body_frame(const Mat& gain, int heading_index) {
  ControllerModel c;
  c.kind = ControllerKind::BodyFrameError;
  c.gain = gain;
  c.m = static_cast<int>(gain.rows());
  c.n = static_cast<int>(gain.cols());
  c.heading_index = heading_index;
  if (gain.size() > 0) c.validate();
  return c;
}

void ControllerModel::validate() const {
  if (n < 1 || m < 1) throw ConfigError("controller dimensions must be positive");
  if (gain.rows() != m || gain.cols() != n) throw ConfigError("controller gain shape");
  if (!gain.allFinite()) throw ConfigError("controller gain is not finite");
  if (kind == ControllerKind::BodyFrameError && (n < 3 || heading_index < 2 || heading_index >= n)) {
    throw ConfigError("body-frame controller needs a heading index >= 2");
  }
}

Vec ControllerModel::error(const Vec& x, const Vec& xs) const {
  Vec z = x - xs;
  if (kind == ControllerKind::BodyFrameError) {
    const double th = x[heading_index];
    const double c = std::cos(th), s = std::sin(th);
    const double ex = z[0], ey = z[1];
    z[0] = c * ex + s * ey;
    z[1] = -s * ex + c * ey;
    z[heading_index] = wrap_angle(z[heading_index]);
  }
  return z;
}

Mat ControllerModel::error_jacobian(const Vec& x, const Vec& xs) const {
  Mat j = Mat::Identity(n, n);
  if (kind == ControllerKind::BodyFrameError) {
    const double th = x[heading_index];
    const double c = std::cos(th), s = std::sin(th);
    const double ex = x[0] - xs[0], ey = x[1] - xs[1];
    j(0, 0) = c;
    j(0, 1) = s;
    j(1, 0) = -s;
    j(1, 1) = c;
    j(0, heading_index) = -s * ex + c * ey;
    j(1, heading_index) = -c * ex - s * ey;
  }
  return j;
}

Vec ControllerModel::input(const Vec& x, const Vec& xs, const Vec& us) const {
  return us + gain * error(x, xs);
}

Mat ControllerModel::jacobian(const Vec& x, const Vec& xs) const { return gain * error_jacobian(x, xs); }

// ------------------------------------------------------------------- sampling

void CcmRegion::validate() const {
  const auto check = [](const Vec& lo, const Vec& hi, const char* what) {
    if (lo.size() != hi.size() || !lo.allFinite() || !hi.allFinite() || (hi - lo).minCoeff() < 0.0) {
      throw ConfigError(what);
    }
  };
  check(ref_lower, ref_upper, "region reference box invalid");
  check(input_lower, input_upper, "region input box invalid");
  check(error_lower, error_upper, "region error box invalid");
  if (error_lower.size() != ref_lower.size()) throw ConfigError("region error box dimension");
}

namespace {

Vec uniform_box(const Vec& lo, const Vec& hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec v(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
  return v;
}

Vec vertex_box(const Vec& lo, const Vec& hi, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  Vec v(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = coin(rng) ? hi[i] : lo[i];
  return v;
}

}  // namespace

std::vector<CcmSample> sample_region(const CcmRegion& region, int count, std::uint64_t seed) {
  region.validate();
  std::mt19937_64 rng(seed);
  std::vector<CcmSample> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    CcmSample s;
    s.xs = uniform_box(region.ref_lower, region.ref_upper, rng);
    s.us = uniform_box(region.input_lower, region.input_upper, rng);
    s.x = s.xs + uniform_box(region.error_lower, region.error_upper, rng);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- conditions

Mat ccm_lhs(const MetricModel& metric, const ControllerModel& controller, const ControlAffineSystem& sys,
            const Vec& x, const Vec& xs, const Vec& us) {
  const Vec u = controller.input(x, xs, us);
  const Mat b = sys.input_matrix(x);
  const Vec v = sys.drift(x) + b * u;
  const Mat a = sys.state_jacobian(x, u);
  const Mat k = controller.jacobian(x, xs);
  check_finite(a, "ccm_lhs: non-finite state Jacobian");
  check_finite(v, "ccm_lhs: non-finite vector field");
  const Mat m = metric.eval(x);
  const Mat mdot = metric.lie_derivative(x, v);
  Mat lhs = mdot + sym(m * (a + b * k)) + 2.0 * metric.lambda * m;
  return 0.5 * (lhs + lhs.transpose());
}

CcmCertificate certify(const MetricModel& metric, const ControllerModel& controller,
                       const ControlAffineSystem& sys, const std::vector<CcmSample>& samples,
                       double margin, double lipschitz_slack) {
  CcmCertificate cert;
  cert.samples = static_cast<int>(samples.size());
  cert.margin = margin;
  cert.lipschitz_slack = lipschitz_slack;
  cert.max_value = -HUGE_VAL;
  const int n = metric.n;
  for (const auto& s : samples) {
    const Mat lhs = ccm_lhs(metric, controller, sys, s.x, s.xs, s.us) + margin * Mat::Identity(n, n);
    cert.max_value = std::max(cert.max_value, lambda_max(lhs));
  }
  cert.pass = !samples.empty() && cert.max_value <= -lipschitz_slack;
  return cert;
}

CcmCertificate certify(const MetricModel& metric, const ControllerModel& controller,
                       const ControlAffineSystem& sys, const CcmRegion& region, double margin,
                       int n_samples, double lipschitz_slack, std::uint64_t seed) {
  return certify(metric, controller, sys, sample_region(region, n_samples, seed), margin, lipschitz_slack);
}

double empirical_lipschitz_slack(const MetricModel& metric, const ControllerModel& controller,
                                 const ControlAffineSystem& sys, const CcmRegion& region, double margin,
                                 int n_samples, std::uint64_t seed) {
  region.validate();
  if (n_samples < 1) throw ConfigError("n_samples must be positive");
  const Vec wx = region.ref_upper - region.ref_lower;
  const Vec wu = region.input_upper - region.input_lower;
  const Vec we = region.error_upper - region.error_lower;
  int dims = 0;
  for (const Vec* w : {&wx, &wu, &we}) dims += static_cast<int>((w->array() > 0.0).count());
  if (dims == 0) return 0.0;

  const int n = metric.n;
  const auto g = [&](const Vec& x, const Vec& xs, const Vec& us) {
    return lambda_max(ccm_lhs(metric, controller, sys, x, xs, us) + margin * Mat::Identity(n, n));
  };
  const auto samples = sample_region(region, n_samples, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr double h = 1e-4;
  double slope = 0.0;
  for (const auto& s : samples) {
    Vec dx(wx.size()), du(wu.size()), de(we.size());
    double norm2 = 0.0;
    for (auto* pair : {&dx, &du, &de}) {
      for (Eigen::Index i = 0; i < pair->size(); ++i) {
        (*pair)[i] = normal(rng);
        norm2 += (*pair)[i] * (*pair)[i];
      }
    }
    const double scale = h / std::sqrt(std::max(norm2, 1e-300));
    const Vec pxs = s.xs + scale * dx.cwiseProduct(wx);
    const Vec pus = s.us + scale * du.cwiseProduct(wu);
    const Vec px = pxs + (s.x - s.xs) + scale * de.cwiseProduct(we);
    slope = std::max(slope, std::abs(g(px, pxs, pus) - g(s.x, s.xs, s.us)) / h);
  }
  const double dispersion = 0.5 * std::sqrt(static_cast<double>(dims)) *
                            std::pow(static_cast<double>(n_samples), -1.0 / dims);
  return slope * dispersion;
}

std::pair<double, double> metric_bounds(const MetricModel& metric, const CcmRegion& region, int n_samples,
                                        std::uint64_t seed, double safety) {
  if (n_samples < 1) throw ConfigError("n_samples must be positive");
  if (!(safety >= 0.0 && safety < 1.0)) throw ConfigError("safety factor must be in [0,1)");
  double lo = HUGE_VAL, hi = 0.0;
  for (const auto& s : sample_region(region, n_samples, seed)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(metric.eval(s.x), Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues()[0]);
    hi = std::max(hi, es.eigenvalues()[es.eigenvalues().size() - 1]);
  }
  return {lo * (1.0 - safety), hi * (1.0 + safety)};
}

double tracking_error_bound(double m_lower, double m_upper, double psi, double lambda, double r0, double t) {
  if (!(m_lower > 0.0) || m_upper < m_lower || !(lambda > 0.0) || t < 0.0 || psi < 0.0 || r0 < 0.0) {
    throw ConfigError("tracking_error_bound: invalid arguments");
  }
  const double decay = std::isinf(t) ? 0.0 : std::exp(-lambda * t);
  return r0 / std::sqrt(m_lower) * decay + std::sqrt(m_upper / m_lower) * psi / lambda * (1.0 - decay);
}

double tube_radius(double m_lower, double m_upper, double psi, double lambda) {
  return tracking_error_bound(m_lower, m_upper, psi, lambda, 0.0, HUGE_VAL);
}

// ------------------------------------------------------------------- training

bool lqr_design(const Mat& a, const Mat& b, const Mat& q, const Mat& r, double lambda, Mat& p, Mat& k) {
  const int n = static_cast<int>(a.rows());
  constexpr double h = 0.02;
  const Mat ad = Mat::Identity(n, n) + h * (a + lambda * Mat::Identity(n, n));
  const Mat bd = h * b;
  const Mat qd = h * q;
  const Mat rd = h * r;
  p = q;
  for (int it = 0; it < 200000; ++it) {
    const Mat bp = bd.transpose() * p;
    const Mat next = qd + ad.transpose() * p * ad - (bp * ad).transpose() * (rd + bp * bd).ldlt().solve(bp * ad);
    const double diff = (next - p).norm();
    p = 0.5 * (next + next.transpose());
    if (!p.allFinite() || p.norm() > 1e12) return false;
    if (diff <= 1e-11 * std::max(1.0, p.norm())) {
      k = -r.ldlt().solve(b.transpose() * p);
      return lambda_min(p) > 0.0;
    }
  }
  return false;
}

namespace {

struct TupleCache {
  Vec x, xs, us;
  Vec f;
  Mat fx;
  Mat b;
  std::vector<Mat> bj;
};

struct HingeProblem {
  const std::vector<TupleCache>* tuples;
  MetricModel metric;
  ControllerModel controller;
  double lambda, margin, slack, cond_weight, gain_weight;
  int cond_points;
  mutable int evaluations = 0;

  int metric_params() const { return metric.parameter_count(); }
  int residual_count() const {
    return static_cast<int>(tuples->size()) + std::min<int>(cond_points, static_cast<int>(tuples->size())) +
           static_cast<int>(controller.gain.size());
  }

  void unpack(const Vec& p, MetricModel& m, ControllerModel& c) const {
    m = metric;
    c = controller;
    m.set_parameters(p.head(metric_params()));
    Eigen::Map<const Mat> g(p.data() + metric_params(), controller.m, controller.n);
    c.gain = g;
  }

  void residuals(const Vec& p, Vec& out) const {
    ++evaluations;
    MetricModel m;
    ControllerModel c;
    unpack(p, m, c);
    const int n = m.n;
    out.resize(residual_count());
    int idx = 0;
    const int t_count = static_cast<int>(tuples->size());
    std::vector<double> conds(static_cast<std::size_t>(t_count));
    for (int t = 0; t < t_count; ++t) {
      const TupleCache& tc = (*tuples)[t];
      const Vec u = c.input(tc.x, tc.xs, tc.us);
      Mat a = tc.fx;
      for (std::size_t j = 0; j < tc.bj.size(); ++j) a += u[static_cast<Eigen::Index>(j)] * tc.bj[j];
      const Vec v = tc.f + tc.b * u;
      const Mat mx = m.eval(tc.x);
      Eigen::SelfAdjointEigenSolver<Mat> me(mx, Eigen::EigenvaluesOnly);
      const double lo = std::max(me.eigenvalues()[0], 1e-12);
      conds[static_cast<std::size_t>(t)] = me.eigenvalues()[n - 1] / lo;
      Mat lhs = m.lie_derivative(tc.x, v) + sym(mx * (a + tc.b * c.jacobian(tc.x, tc.xs))) + 2.0 * lambda * mx;
      lhs = 0.5 * (lhs + lhs.transpose()) / lo;
      lhs.diagonal().array() += margin;
      const double val = lambda_max(lhs) + slack;
      out[idx++] = std::isfinite(val) ? std::max(0.0, val) : 1e6;
    }
    const double cw = std::sqrt(cond_weight);
    for (int t = 0; t < std::min(cond_points, t_count); ++t) {
      out[idx++] = cw * std::log(std::max(conds[static_cast<std::size_t>(t)], 1.0));
    }
    const double gw = std::sqrt(gain_weight);
    for (Eigen::Index i = 0; i < c.gain.size(); ++i) out[idx++] = gw * c.gain.data()[i];
  }
};

struct LmFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const HingeProblem* problem = nullptr;
  int n_inputs = 0;

  int inputs() const { return n_inputs; }
  int values() const { return problem->residual_count(); }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    problem->residuals(x, f);
    return 0;
  }
};

Vec midpoint(const Vec& lo, const Vec& hi) { return 0.5 * (lo + hi); }

}  // namespace

TrainResult train(const ControlAffineSystem& sys, const CcmRegion& region, double lambda, double margin,
                  MetricModel metric, ControllerModel controller, const TrainOptions& options,
                  std::uint64_t seed) {
  region.validate();
  if (!(lambda > 0.0) || margin < 0.0) throw ConfigError("train: lambda must be > 0 and margin >= 0");
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  if (metric.n != n || region.ref_lower.size() != n || region.input_lower.size() != m) {
    throw ConfigError("train: dimension mismatch");
  }
  metric.validate();
  metric.lambda = lambda;
  metric.margin = margin;
  controller.n = n;
  controller.m = m;

  const bool need_metric = metric.coeffs.empty();
  const bool need_gain = controller.gain.size() == 0;
  if (need_metric || need_gain) {
    const Vec xs = midpoint(region.ref_lower, region.ref_upper);
    const Vec us = midpoint(region.input_lower, region.input_upper);
    Mat p = Mat::Identity(n, n), k = Mat::Zero(m, n);
    bool ok = false;
    if (options.lqr_warm_start) {
      ok = lqr_design(sys.state_jacobian(xs, us), sys.input_matrix(xs), Mat::Identity(n, n),
                      Mat::Identity(m, m), lambda + 0.5 * margin, p, k);
    }
    if (!ok) {
      p = Mat::Identity(n, n);
      k = Mat::Zero(m, n);
    }
    if (need_gain) {
      controller.gain = k;
    }
    if (need_metric) {
      p /= lambda_min(p);
      const Mat l = (p - metric.eps * Mat::Identity(n, n) + 1e-9 * Mat::Identity(n, n)).llt().matrixL();
      metric.coeffs.assign(static_cast<std::size_t>(metric.feature_count()), Mat::Zero(n, n));
      metric.coeffs[0] = l;
      metric.scale = 1.0;
    }
  }
  controller.validate();

  auto samples = sample_region(region, options.samples, seed);
  {
    std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
    const auto vertices = static_cast<std::size_t>(std::clamp(options.vertex_fraction, 0.0, 1.0) * samples.size());
    for (std::size_t i = 0; i < vertices; ++i) {
      CcmSample& s = samples[samples.size() - 1 - i];
      s.xs = vertex_box(region.ref_lower, region.ref_upper, rng);
      s.us = vertex_box(region.input_lower, region.input_upper, rng);
      s.x = s.xs + vertex_box(region.error_lower, region.error_upper, rng);
    }
  }
  std::vector<TupleCache> cache;
  cache.reserve(samples.size());
  for (const auto& s : samples) {
    TupleCache tc;
    tc.x = s.x;
    tc.xs = s.xs;
    tc.us = s.us;
    tc.f = sys.drift(s.x);
    tc.fx = sys.drift_jacobian(s.x);
    tc.b = sys.input_matrix(s.x);
    for (int j = 0; j < m; ++j) {
      const Mat bj = sys.input_jacobian(s.x, Vec::Unit(m, j));
      if (bj.norm() > 0.0) {
        tc.bj.resize(static_cast<std::size_t>(m), Mat::Zero(n, n));
        tc.bj[static_cast<std::size_t>(j)] = bj;
      }
    }
    cache.push_back(std::move(tc));
  }

  HingeProblem problem{&cache, metric, controller, lambda, margin, options.hinge_slack,
                       options.cond_weight, options.gain_weight, options.cond_points};
  Vec params(metric.parameter_count() + controller.gain.size());
  params.head(metric.parameter_count()) = metric.parameters();
  params.tail(controller.gain.size()) = Eigen::Map<const Vec>(controller.gain.data(), controller.gain.size());

  TrainResult result;
  Vec r;
  problem.residuals(params, r);
  result.initial_cost = 0.5 * r.squaredNorm();

  LmFunctor functor;
  functor.problem = &problem;
  functor.n_inputs = static_cast<int>(params.size());
  Eigen::NumericalDiff<LmFunctor> numdiff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LmFunctor>, double> lm(numdiff);
  lm.parameters.maxfev = 100000;
  lm.parameters.xtol = 1e-10;
  lm.parameters.ftol = 1e-12;
  if (options.max_evaluations > 0 && result.initial_cost > 0.0) {
    auto status = lm.minimizeInit(params);
    if (status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
      do {
        status = lm.minimizeOneStep(params);
      } while (status == Eigen::LevenbergMarquardtSpace::Running && problem.evaluations < options.max_evaluations);
    }
  }
  problem.residuals(params, r);
  result.final_cost = 0.5 * r.squaredNorm();
  result.evaluations = problem.evaluations;
  problem.unpack(params, metric, controller);

  // Normalize so the smallest sampled eigenvalue is one, then certify.
  const auto raw = metric_bounds(metric, region, options.bound_samples, seed + 1, 0.0);
  metric.scale /= raw.first;
  const auto bounds = metric_bounds(metric, region, options.bound_samples, seed + 1, options.bound_safety);
  metric.m_lower = bounds.first;
  metric.m_upper = bounds.second;
  result.certificate = certify(metric, controller, sys, region, margin, options.certify_samples,
                               options.certify_slack, seed + 2);
  result.metric = std::move(metric);
  result.controller = std::move(controller);
  return result;
}

// ---------------------------------------------------------------- retraining

RetrainCheck retraining_needed(const MetricModel& metric, const DisturbanceModel& d1,
                               const DisturbanceModel& d2, const std::vector<Vec>& states, double margin) {
  RetrainCheck out;
  for (const auto& x : states) {
    const Vec r = d1.value(x) - d2.value(x);
    const Mat jr = d1.jacobian(x) - d2.jacobian(x);
    const Mat diff = metric.lie_derivative(x, r) + sym(metric.eval(x) * jr);
    out.max_norm = std::max(out.max_norm, spectral_norm_sym(0.5 * (diff + diff.transpose())));
  }
  out.needed = out.max_norm > margin;
  return out;
}

std::pair<double, double> eig_max_diff_bound_check(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
    throw ConfigError("eig_max_diff_bound_check: shape mismatch");
  }
  const Mat d = a - b;
  return {std::abs(lambda_max(a) - lambda_max(b)), spectral_norm_sym(0.5 * (d + d.transpose()))};
}

// ------------------------------------------------------------------- tracking

TrackResult track(const ControllerModel& controller, const ControlAffineSystem& sys,
                  const ReferenceTrajectory& reference, const Vec& x0) {
  if (reference.states.size() != reference.inputs.size()) throw ConfigError("reference states/inputs differ");
  TrackResult out;
  Vec x = x0;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    const Vec& xs = reference.states[k];
    const Vec u = controller.input(x, xs, reference.inputs[k]);
    out.states.push_back(x);
    out.inputs.push_back(u);
    out.distance.push_back((x - xs).norm());
    out.position_distance.push_back(x.size() >= 2 ? (x.head(2) - xs.head(2)).norm() : std::abs(x[0] - xs[0]));
    if (k + 1 < reference.size()) {
      x = rk4_step([&](const Vec& y) { return sys.eval(y, u); }, x, reference.dt);
      if (!x.allFinite()) throw NumericError("track: state diverged");
    }
  }
  return out;
}

}  // namespace safex
