#pragma once

#include "safex/gp.hpp"

namespace safex {

struct ComplexityParams {
  int n = 1;             // state (GP input) dimension
  double rho = 1.0;      // ball radius
  double delta = 0.05;   // confidence
  double psi = 0.1;      // target uniform error
  double s = 0.1;        // observation noise std
  double c_lower = 0.5;  // lower bound on the sampling density
  double c_k = 1.0;
  double omega = 1.0;
  double a1 = 1.0;
  double a2 = 1.0;
};

struct ComplexityReport {
  double L = 0.0;
  double r0 = 0.0;
  double r1 = 0.0;
  double c_n = 0.0;
  double m_e = 0.0;
  double m_h = 0.0;
  double beta = 0.0;
  double a = 0.0;
  double n_cond1 = 0.0;
  double n_cond2 = 0.0;
  double n_min = 0.0;
};

void validate(const ComplexityParams& p);

/// L = a2 sqrt(log(3 a1 n / delta)).
double derivative_bound_L(double a1, double a2, int n, double delta);

/// ceil((1 + 2 rho / r)^n), the r-covering bound for a radius-rho ball; 1 when r > rho.
/// Integer valued, returned as double because it overflows integers quickly.
double covering_number(double rho, double r, int n);

/// sqrt(2 log(3 N m_H / delta)); N = 0 is treated as N = 1.
double beta(double n_obs, double m_h, double delta);

/// sqrt(2 N log(3 m / delta)).
double hoeffding_deviation(double n_obs, double m, double delta);

/// Principal branch W0 with W e^W = z.
double lambert_w_principal(double z);

/// max{exp(-W(-1/(8n/w+8))), exp(-W(-w/(4w+2n)))}.
double lambert_a_star(int n, double omega);

double constant_a(const ComplexityParams& p);

/// C_n such that covering_number(rho, r, n) = C_n (rho / r)^n at r = r0 / 2.
double covering_constant(double rho, double r0, int n);

ComplexityReport required_samples(const ComplexityParams& p);

struct StopCheck {
  bool stop = false;
  double error_bound = 0.0;
  double beta = 0.0;
  double m_h = 0.0;
  Vec sigma_tilde;
};

/// Runtime termination test on B(center, rho): beta_N * ||sigma_tilde||_2 <= psi_th.
/// m_H uses r1 = 1/(N L sqrt(n)) with L from the first kernel's a1, a2.
StopCheck stopping_check(const GPModel& model, const Vec& center, double rho, double delta,
                         double psi_th, double n_obs, const MaxStdOptions& options = {},
                         const PointFilter& admissible = {});

}  // namespace safex
