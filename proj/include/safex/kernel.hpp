#pragma once

#include <string>
#include <utility>

namespace safex {

enum class KernelFamily { SquaredExponential, Matern };

/// Isotropic covariance function together with the constants the confidence
/// bounds need: C_K and omega with sqrt(2(k(0) - k(r))) <= C_K r^omega, and the
/// derivative tail constants a1, a2.
struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExponential;
  /// Matérn smoothness as 2*nu; only 1, 3 and 5 have closed forms here.
  int matern_nu_x2 = 5;
  double lengthscale = 1.0;
  double signal_variance = 1.0;
  double c_k = 1.0;
  double omega = 1.0;
  double a1 = 1.0;
  double a2 = 1.0;

  bool operator==(const KernelSpec&) const = default;
};

/// Builds a spec and fills C_K, omega from smoothness_constants().
KernelSpec make_kernel(KernelFamily family, double lengthscale, double signal_variance,
                       int matern_nu_x2 = 5, double a1 = 1.0, double a2 = 1.0);

/// Throws ConfigError for non-positive lengthscale/variance or an unsupported Matérn order.
void validate(const KernelSpec& spec);

/// k(r) for r >= 0.
double kernel_eval(const KernelSpec& spec, double r);

/// k'(r) / r, the factor that turns the radial derivative into a gradient:
/// grad_x k(|x - y|) = (k'(r)/r) (x - y). Finite at r = 0 except for Matérn-1/2,
/// where 0 is returned (the kernel has a cusp there).
double kernel_grad_factor(const KernelSpec& spec, double r);

/// (C_K, omega) with sqrt(2(k(0) - k(r))) <= C_K r^omega for all r > 0.
std::pair<double, double> smoothness_constants(const KernelSpec& spec);

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

}  // namespace safex
