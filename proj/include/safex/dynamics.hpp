#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "safex/gp.hpp"
#include "safex/linalg.hpp"

namespace safex {

/// x' = f(x) + B(x) u. Jacobians default to central differences.
class ControlAffineSystem {
 public:
  virtual ~ControlAffineSystem() = default;

  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual Vec drift(const Vec& x) const = 0;
  virtual Mat input_matrix(const Vec& x) const = 0;

  virtual Mat drift_jacobian(const Vec& x) const;
  /// d/dx (B(x) u) for fixed u.
  virtual Mat input_jacobian(const Vec& x, const Vec& u) const;

  Vec eval(const Vec& x, const Vec& u) const { return drift(x) + input_matrix(x) * u; }
  /// A = df/dx + sum_j u_j db_j/dx.
  Mat state_jacobian(const Vec& x, const Vec& u) const { return drift_jacobian(x) + input_jacobian(x, u); }
};

class LinearSystem final : public ControlAffineSystem {
 public:
  LinearSystem(Mat a, Mat b);
  int state_dim() const override { return static_cast<int>(a_.rows()); }
  int input_dim() const override { return static_cast<int>(b_.cols()); }
  Vec drift(const Vec& x) const override { return a_ * x; }
  Mat input_matrix(const Vec&) const override { return b_; }
  Mat drift_jacobian(const Vec&) const override { return a_; }
  Mat input_jacobian(const Vec& x, const Vec&) const override { return Mat::Zero(x.size(), x.size()); }

 private:
  Mat a_, b_;
};

/// Dubins car with first-order velocity damping; state (px, py, theta, v, w), input (force, torque).
class DubinsCar final : public ControlAffineSystem {
 public:
  explicit DubinsCar(double damping = 0.4) : damping_(damping) {}
  int state_dim() const override { return 5; }
  int input_dim() const override { return 2; }
  Vec drift(const Vec& x) const override;
  Mat input_matrix(const Vec& x) const override;
  Mat drift_jacobian(const Vec& x) const override;
  Mat input_jacobian(const Vec& x, const Vec&) const override { return Mat::Zero(x.size(), x.size()); }
  double damping() const { return damping_; }

 private:
  double damping_;
};

/// State-dependent additive term d(x) in R^n.
class DisturbanceModel {
 public:
  virtual ~DisturbanceModel() = default;
  virtual Vec value(const Vec& x) const = 0;
  /// Default: central differences.
  virtual Mat jacobian(const Vec& x) const;
};

class ZeroDisturbance final : public DisturbanceModel {
 public:
  explicit ZeroDisturbance(int n) : n_(n) {}
  Vec value(const Vec&) const override { return Vec::Zero(n_); }
  Mat jacobian(const Vec&) const override { return Mat::Zero(n_, n_); }

 private:
  int n_;
};

class FunctionDisturbance final : public DisturbanceModel {
 public:
  using ValueFn = std::function<Vec(const Vec&)>;
  using JacobianFn = std::function<Mat(const Vec&)>;
  explicit FunctionDisturbance(ValueFn value, JacobianFn jacobian = {})
      : value_(std::move(value)), jacobian_(std::move(jacobian)) {}
  Vec value(const Vec& x) const override { return value_(x); }
  Mat jacobian(const Vec& x) const override;

 private:
  ValueFn value_;
  JacobianFn jacobian_;
};

/// d_hat(x) = GP posterior mean evaluated at the selected state coordinates.
class GpMeanDisturbance final : public DisturbanceModel {
 public:
  GpMeanDisturbance(std::shared_ptr<const GPModel> model, std::vector<int> input_coords, int state_dim);
  Vec value(const Vec& x) const override;
  Mat jacobian(const Vec& x) const override;
  const GPModel& model() const { return *model_; }

 private:
  Vec project(const Vec& x) const;
  std::shared_ptr<const GPModel> model_;
  std::vector<int> coords_;
  int n_;
};

/// f_hat = f + d.
class DisturbedSystem final : public ControlAffineSystem {
 public:
  DisturbedSystem(std::shared_ptr<const ControlAffineSystem> base,
                  std::shared_ptr<const DisturbanceModel> disturbance);
  int state_dim() const override { return base_->state_dim(); }
  int input_dim() const override { return base_->input_dim(); }
  Vec drift(const Vec& x) const override { return base_->drift(x) + d_->value(x); }
  Mat input_matrix(const Vec& x) const override { return base_->input_matrix(x); }
  Mat drift_jacobian(const Vec& x) const override { return base_->drift_jacobian(x) + d_->jacobian(x); }
  Mat input_jacobian(const Vec& x, const Vec& u) const override { return base_->input_jacobian(x, u); }
  const ControlAffineSystem& base() const { return *base_; }
  const DisturbanceModel& disturbance() const { return *d_; }

 private:
  std::shared_ptr<const ControlAffineSystem> base_;
  std::shared_ptr<const DisturbanceModel> d_;
};

using VectorField = std::function<Vec(const Vec&)>;

/// One classical Runge-Kutta 4 step.
Vec rk4_step(const VectorField& f, const Vec& x, double dt);

/// Central-difference Jacobian of g at x.
Mat numeric_jacobian(const VectorField& g, const Vec& x, double h = 1e-6);

/// Nominal state/input samples at a fixed step.
struct ReferenceTrajectory {
  std::vector<Vec> states;
  std::vector<Vec> inputs;
  double dt = 0.01;
  double bloat = 0.0;

  std::size_t size() const { return states.size(); }
};

}  // namespace safex
