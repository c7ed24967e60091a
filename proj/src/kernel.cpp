#include "safex/kernel.hpp"

#include <cmath>

#include "safex/error.hpp"

namespace safex {

KernelSpec make_kernel(KernelFamily family, double lengthscale, double signal_variance,
                       int matern_nu_x2, double a1, double a2) {
  KernelSpec spec;
  spec.family = family;
  spec.matern_nu_x2 = matern_nu_x2;
  spec.lengthscale = lengthscale;
  spec.signal_variance = signal_variance;
  spec.a1 = a1;
  spec.a2 = a2;
  validate(spec);
  auto [c_k, omega] = smoothness_constants(spec);
  spec.c_k = c_k;
  spec.omega = omega;
  return spec;
}

void validate(const KernelSpec& spec) {
  if (!(spec.lengthscale > 0.0)) throw ConfigError("kernel lengthscale must be positive");
  if (!(spec.signal_variance > 0.0)) throw ConfigError("kernel signal variance must be positive");
  if (spec.family == KernelFamily::Matern && spec.matern_nu_x2 != 1 && spec.matern_nu_x2 != 3 &&
      spec.matern_nu_x2 != 5) {
    throw ConfigError("unsupported Matérn order nu = " + std::to_string(spec.matern_nu_x2) +
                      "/2; supported: 1/2, 3/2, 5/2");
  }
}

double kernel_eval(const KernelSpec& spec, double r) {
  if (!(spec.lengthscale > 0.0)) throw ConfigError("kernel lengthscale must be positive");
  const double s2 = spec.signal_variance;
  const double l = spec.lengthscale;
  if (spec.family == KernelFamily::SquaredExponential) {
    return s2 * std::exp(-0.5 * r * r / (l * l));
  }
  switch (spec.matern_nu_x2) {
    case 1:
      return s2 * std::exp(-r / l);
    case 3: {
      const double x = std::sqrt(3.0) * r / l;
      return s2 * (1.0 + x) * std::exp(-x);
    }
    case 5: {
      const double x = std::sqrt(5.0) * r / l;
      return s2 * (1.0 + x + x * x / 3.0) * std::exp(-x);
    }
    default:
      validate(spec);
      return 0.0;
  }
}

double kernel_grad_factor(const KernelSpec& spec, double r) {
  const double s2 = spec.signal_variance;
  const double l = spec.lengthscale;
  if (spec.family == KernelFamily::SquaredExponential) {
    return -s2 * std::exp(-0.5 * r * r / (l * l)) / (l * l);
  }
  switch (spec.matern_nu_x2) {
    case 1:
      if (r == 0.0) return 0.0;
      return -s2 * std::exp(-r / l) / (l * r);
    case 3: {
      const double x = std::sqrt(3.0) * r / l;
      return -s2 * 3.0 * std::exp(-x) / (l * l);
    }
    case 5: {
      const double x = std::sqrt(5.0) * r / l;
      return -s2 * 5.0 * (1.0 + x) * std::exp(-x) / (3.0 * l * l);
    }
    default:
      validate(spec);
      return 0.0;
  }
}

std::pair<double, double> smoothness_constants(const KernelSpec& spec) {
  validate(spec);
  const double sigma = std::sqrt(spec.signal_variance);
  const double l = spec.lengthscale;
  if (spec.family == KernelFamily::SquaredExponential) {
    // 1 - exp(-u) <= u with u = r^2 / (2 l^2)
    return {sigma / l, 1.0};
  }
  switch (spec.matern_nu_x2) {
    case 1:
      // 1 - exp(-u) <= u with u = r / l
      return {sigma * std::sqrt(2.0 / l), 0.5};
    case 3:
      // 1 - (1 + x) e^{-x} <= x^2 / 2
      return {sigma * std::sqrt(3.0) / l, 1.0};
    default:
      // 1 - (1 + x + x^2/3) e^{-x} <= x^2 / 6
      return {sigma * std::sqrt(5.0 / 3.0) / l, 1.0};
  }
}

std::string to_string(KernelFamily family) {
  return family == KernelFamily::SquaredExponential ? "squared_exponential" : "matern";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "squared_exponential" || name == "se") return KernelFamily::SquaredExponential;
  if (name == "matern") return KernelFamily::Matern;
  throw ConfigError("unknown kernel family '" + name + "'");
}

}  // namespace safex
