#include "gp_selftest.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <Eigen/LU>

#include "safex/gp.hpp"

namespace safex::tools {

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

SelftestReport gp_selftest(int cases, std::uint64_t seed, std::ostream& log) {
  SelftestReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int c = 0; c < cases; ++c) {
    int n = 1 + static_cast<int>(u(rng) * 50);
    int m = 1 + static_cast<int>(u(rng) * 3);
    KernelFamily fam = u(rng) < 0.5 ? KernelFamily::SquaredExponential : KernelFamily::Matern;
    int nu = 1 + 2 * static_cast<int>(u(rng) * 3);
    KernelSpec k = make_kernel(fam, 0.3 + 2.0 * u(rng), 0.1 + 2.0 * u(rng), nu);
    double s = 0.05 + 0.3 * u(rng);
    ObservationSet obs(2, m, s);
    for (int i = 0; i < n; ++i) {
      Vec x(2), y(m);
      x << 10.0 * u(rng), 10.0 * u(rng);
      for (int j = 0; j < m; ++j) y[j] = z(rng);
      obs.add(x, y);
    }
    GPModel model = GPModel::fit(obs, std::vector<KernelSpec>(m, k));
    Mat kxx(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) kxx(i, j) = kernel_eval(k, (obs.points.row(i) - obs.points.row(j)).norm());
    }
    Eigen::FullPivLU<Mat> lu(kxx + s * s * Mat::Identity(n, n));
    for (int q = 0; q < 5; ++q) {
      Vec x(2);
      x << 10.0 * u(rng), 10.0 * u(rng);
      Vec kx(n);
      for (int i = 0; i < n; ++i) kx[i] = kernel_eval(k, (obs.points.row(i).transpose() - x).norm());
      Vec w = lu.solve(kx);
      double var = kernel_eval(k, 0.0) - kx.dot(w);
      PosteriorEstimate p = model.posterior(x);
      for (int j = 0; j < m; ++j) {
        double mean = w.dot(obs.values.col(j));
        rep.max_rel_mean = std::max(rep.max_rel_mean, rel(p.mean[j], mean));
        rep.max_rel_var = std::max(rep.max_rel_var, rel(p.stddev[j] * p.stddev[j], var));
        double v = p.stddev[j] * p.stddev[j];
        if (v < 0.0 || v > k.signal_variance * (1.0 + 1e-12)) ++rep.invariant_failures;
      }
    }
    for (double r = 1e-3; r < 20.0; r *= 1.1) {
      if (std::sqrt(2.0 * (kernel_eval(k, 0.0) - kernel_eval(k, r))) > k.c_k * std::pow(r, k.omega) * (1.0 + 1e-9)) {
        ++rep.invariant_failures;
      }
    }
    ++rep.cases;
  }
  rep.pass = rep.max_rel_mean <= 1e-8 && rep.max_rel_var <= 1e-8 && rep.invariant_failures == 0;
  log << "gp-selftest cases=" << rep.cases << " max_rel_mean=" << rep.max_rel_mean
      << " max_rel_var=" << rep.max_rel_var << " invariant_failures=" << rep.invariant_failures << " "
      << (rep.pass ? "PASS" : "FAIL") << "\n";
  return rep;
}

}  // namespace safex::tools
