#include "safex/dynamics.hpp"

#include <cmath>

#include "safex/error.hpp"

namespace safex {

Mat numeric_jacobian(const VectorField& g, const Vec& x, double h) {
  const Vec g0 = g(x);
  Mat j(g0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    const double step = h * std::max(1.0, std::abs(x[i]));
    xp[i] += step;
    xm[i] -= step;
    j.col(i) = (g(xp) - g(xm)) / (2.0 * step);
  }
  return j;
}

Mat ControlAffineSystem::drift_jacobian(const Vec& x) const {
  return numeric_jacobian([this](const Vec& y) { return drift(y); }, x);
}

Mat ControlAffineSystem::input_jacobian(const Vec& x, const Vec& u) const {
  return numeric_jacobian([this, &u](const Vec& y) { return Vec(input_matrix(y) * u); }, x);
}

LinearSystem::LinearSystem(Mat a, Mat b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != a_.cols() || b_.rows() != a_.rows()) throw ConfigError("LinearSystem: bad shapes");
}

Vec DubinsCar::drift(const Vec& x) const {
  Vec f(5);
  f << x[3] * std::cos(x[2]), x[3] * std::sin(x[2]), x[4], -damping_ * x[3], -damping_ * x[4];
  return f;
}

Mat DubinsCar::input_matrix(const Vec&) const {
  Mat b = Mat::Zero(5, 2);
  b(3, 0) = 1.0;
  b(4, 1) = 1.0;
  return b;
}

Mat DubinsCar::drift_jacobian(const Vec& x) const {
  Mat a = Mat::Zero(5, 5);
  const double c = std::cos(x[2]), s = std::sin(x[2]);
  a(0, 2) = -x[3] * s;
  a(0, 3) = c;
  a(1, 2) = x[3] * c;
  a(1, 3) = s;
  a(2, 4) = 1.0;
  a(3, 3) = -damping_;
  a(4, 4) = -damping_;
  return a;
}

Mat DisturbanceModel::jacobian(const Vec& x) const {
  return numeric_jacobian([this](const Vec& y) { return value(y); }, x);
}

Mat FunctionDisturbance::jacobian(const Vec& x) const {
  return jacobian_ ? jacobian_(x) : DisturbanceModel::jacobian(x);
}

GpMeanDisturbance::GpMeanDisturbance(std::shared_ptr<const GPModel> model, std::vector<int> coords,
                                     int state_dim)
    : model_(std::move(model)), coords_(std::move(coords)), n_(state_dim) {
  if (!model_) throw ConfigError("GpMeanDisturbance: null model");
  if (static_cast<int>(coords_.size()) != model_->input_dim()) {
    throw ConfigError("GpMeanDisturbance: input coordinate count differs from GP input dimension");
  }
  if (model_->output_dim() != n_) throw ConfigError("GpMeanDisturbance: GP output must match state dimension");
  for (int c : coords_) {
    if (c < 0 || c >= n_) throw ConfigError("GpMeanDisturbance: coordinate out of range");
  }
}

Vec GpMeanDisturbance::project(const Vec& x) const {
  Vec p(coords_.size());
  for (std::size_t i = 0; i < coords_.size(); ++i) p[static_cast<Eigen::Index>(i)] = x[coords_[i]];
  return p;
}

Vec GpMeanDisturbance::value(const Vec& x) const { return model_->mean(project(x)); }

Mat GpMeanDisturbance::jacobian(const Vec& x) const {
  const Mat jp = model_->mean_jacobian(project(x));
  Mat j = Mat::Zero(n_, n_);
  for (std::size_t i = 0; i < coords_.size(); ++i) j.col(coords_[i]) += jp.col(static_cast<Eigen::Index>(i));
  return j;
}

DisturbedSystem::DisturbedSystem(std::shared_ptr<const ControlAffineSystem> base,
                                 std::shared_ptr<const DisturbanceModel> disturbance)
    : base_(std::move(base)), d_(std::move(disturbance)) {
  if (!base_ || !d_) throw ConfigError("DisturbedSystem: null component");
}

Vec rk4_step(const VectorField& f, const Vec& x, double dt) {
  const Vec k1 = f(x);
  const Vec k2 = f(x + 0.5 * dt * k1);
  const Vec k3 = f(x + 0.5 * dt * k2);
  const Vec k4 = f(x + dt * k3);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace safex
