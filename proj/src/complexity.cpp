#include "safex/complexity.hpp"

#include <algorithm>
#include <cmath>

#include "safex/error.hpp"

namespace safex {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

bool in_unit(double delta) { return delta > 0.0 && delta < 1.0; }

// log of covering_number without the ceiling, to keep beta finite when the count overflows.
double log_covering(double rho, double r, int n) {
  if (r > rho) return 0.0;
  return n * std::log1p(2.0 * rho / r);
}

}  // namespace

void validate(const ComplexityParams& p) {
  require(p.n >= 1, "n must be >= 1");
  require(p.rho > 0.0, "rho must be positive");
  require(in_unit(p.delta), "delta must be in (0,1)");
  require(p.psi > 0.0, "psi must be positive");
  require(p.s > 0.0, "s must be positive");
  require(p.c_lower > 0.0, "c_lower must be positive");
  require(p.c_k > 0.0, "C_K must be positive");
  require(p.omega > 0.0 && p.omega <= 1.0, "omega must be in (0,1]");
  require(p.a1 > 0.0 && p.a2 > 0.0, "a1, a2 must be positive");
}

double derivative_bound_L(double a1, double a2, int n, double delta) {
  require(a1 > 0.0 && a2 > 0.0 && n >= 1, "a1, a2, n must be positive");
  require(delta > 0.0 && delta <= 1.0, "delta must be in (0,1]");
  const double arg = 3.0 * a1 * n / delta;
  require(arg >= 1.0, "3 a1 n / delta < 1: derivative bound is vacuous");
  return a2 * std::sqrt(std::log(arg));
}

double covering_number(double rho, double r, int n) {
  require(rho > 0.0 && r > 0.0 && n >= 1, "covering_number needs rho, r > 0 and n >= 1");
  if (r > rho) return 1.0;
  return std::ceil(std::pow(1.0 + 2.0 * rho / r, n));
}

double beta(double n_obs, double m_h, double delta) {
  require(in_unit(delta), "delta must be in (0,1)");
  require(n_obs >= 0.0 && m_h >= 1.0, "N >= 0 and m_H >= 1 required");
  const double log_arg = std::log(3.0) + std::log(std::max(n_obs, 1.0)) + std::log(m_h) - std::log(delta);
  require(log_arg > 0.0, "beta: log argument <= 1");
  return std::sqrt(2.0 * log_arg);
}

double hoeffding_deviation(double n_obs, double m, double delta) {
  require(in_unit(delta), "delta must be in (0,1)");
  require(n_obs >= 1.0 && m >= 1.0, "N, m >= 1 required");
  return std::sqrt(2.0 * n_obs * std::log(3.0 * m / delta));
}

double lambert_w_principal(double z) {
  constexpr double inv_e = 0.36787944117144233;
  if (!(z >= -inv_e)) throw ConfigError("lambert_w: z < -1/e");
  if (z == 0.0) return 0.0;
  if (z == -inv_e) return -1.0;

  double w;
  if (z < -0.25) {
    const double p = std::sqrt(2.0 * (std::exp(1.0) * z + 1.0));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (z < 3.0) {
    w = std::log1p(z);
  } else {
    const double l = std::log(z);
    w = l - std::log(l);
  }

  const double tol = 1e-13 * std::abs(z);
  for (int it = 0; it < 200; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - z;
    if (std::abs(f) <= 0.25 * tol) break;
    double step = f / (ew * (w + 1.0));
    double next = w - step;
    while (next <= -1.0) {
      step *= 0.5;
      next = w - step;
    }
    if (next == w) break;
    w = next;
  }
  if (std::abs(w * std::exp(w) - z) > tol) throw NumericError("lambert_w did not converge");
  return w;
}

double lambert_a_star(int n, double omega) {
  const double z1 = -1.0 / (8.0 * n / omega + 8.0);
  const double z2 = -omega / (4.0 * omega + 2.0 * n);
  return std::max(std::exp(-lambert_w_principal(z1)), std::exp(-lambert_w_principal(z2)));
}

double constant_a(const ComplexityParams& p) {
  validate(p);
  const double n = p.n;
  const double ratio = std::log(p.c_k) - std::log(p.psi);
  const double log1 = std::log(8.0) + 2.0 * std::log(p.s) + 2.0 * n * std::log(2.0 * p.rho) -
                      std::log(p.delta) - 2.0 * std::log(p.c_k) +
                      (2.0 * p.omega + n) / p.omega * ratio;
  const double log2 = std::log(2.0) + 4.0 * n * std::log(2.0 * p.rho) - std::log(p.delta) +
                      4.0 * n / p.omega * ratio;
  return 2.0 * std::max({log1, log2, lambert_a_star(p.n, p.omega)});
}

double covering_constant(double rho, double r0, int n) {
  const double r = 0.5 * r0;
  return covering_number(rho, r, n) * std::pow(r / rho, n);
}

ComplexityReport required_samples(const ComplexityParams& p) {
  ComplexityReport rep;
  const double n = p.n;
  const double w = p.omega;
  rep.a = constant_a(p);
  rep.r0 = std::pow(p.psi / (2.0 * rep.a * p.c_k), 1.0 / w);
  rep.c_n = covering_constant(p.rho, rep.r0, p.n);
  rep.m_e = covering_number(p.rho, 0.5 * rep.r0, p.n);

  rep.n_cond1 = std::pow(rep.a, 2.0 + 2.0 * n / w) * std::pow(2.0 * p.c_k / p.psi, 2.0 * n / w) *
                std::pow(2.0, 2.0 * n - 2.0) / (p.c_lower * p.c_lower * rep.c_n * rep.c_n);
  rep.n_cond2 = 2.0 * p.s * p.s / (p.c_k * p.c_k * rep.c_n * p.c_lower) *
                std::pow(2.0 * p.c_k * rep.a / p.psi, (2.0 * w + n) / w);
  rep.n_min = std::ceil(std::max({2.0 * std::sqrt(n) / p.psi, rep.n_cond1, rep.n_cond2}));

  rep.L = derivative_bound_L(p.a1, p.a2, p.n, p.delta);
  rep.r1 = rep.L > 0.0 ? 1.0 / (rep.n_min * rep.L * std::sqrt(n)) : HUGE_VAL;
  rep.m_h = std::isinf(rep.r1) ? 1.0 : covering_number(p.rho, rep.r1, p.n);
  rep.beta = beta(rep.n_min, rep.m_h, p.delta);
  return rep;
}

StopCheck stopping_check(const GPModel& model, const Vec& center, double rho, double delta,
                         double psi_th, double n_obs, const MaxStdOptions& options,
                         const PointFilter& admissible) {
  require(rho > 0.0, "rho must be positive");
  require(in_unit(delta), "delta must be in (0,1)");
  require(psi_th > 0.0, "psi_th must be positive");
  require(model.output_dim() > 0, "model has no output coordinates");
  const int n = model.input_dim();
  const KernelSpec& k = model.kernels().front();
  const double L = derivative_bound_L(k.a1, k.a2, n, delta);
  const double nn = std::max(n_obs, 1.0);

  StopCheck out;
  double log_mh = 0.0;
  if (L > 0.0) {
    const double r1 = 1.0 / (nn * L * std::sqrt(static_cast<double>(n)));
    out.m_h = covering_number(rho, r1, n);
    log_mh = std::isfinite(out.m_h) ? std::log(out.m_h) : log_covering(rho, r1, n);
  } else {
    out.m_h = 1.0;
  }
  out.beta = std::sqrt(2.0 * (std::log(3.0) + std::log(nn) + log_mh - std::log(delta)));
  out.sigma_tilde = max_posterior_std_in_ball(model, center, rho, options, admissible);
  out.error_bound = out.beta * out.sigma_tilde.norm();
  out.stop = out.error_bound <= psi_th;
  return out;
}

}  // namespace safex
