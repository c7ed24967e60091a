#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "safex/error.hpp"
#include "safex/gp.hpp"
#include "safex/kernel.hpp"

using namespace safex;

namespace {

GPModel random_model(std::mt19937_64& rng, int n_obs, double s, int out = 2,
                     KernelSpec k = make_kernel(KernelFamily::SquaredExponential, 0.7, 1.3)) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ObservationSet obs(2, out, s);
  for (int i = 0; i < n_obs; ++i) {
    Vec x(2), y(out);
    x << u(rng), u(rng);
    for (int j = 0; j < out; ++j) y[j] = std::sin(2.0 * x[0] + j) + 0.5 * x[1] * x[1] + s * u(rng);
    obs.add(x, y);
  }
  return GPModel::fit(obs, std::vector<KernelSpec>(out, k));
}

}  // namespace

TEST_SUITE("kernel") {
  TEST_CASE("squared exponential values") {
    KernelSpec se = make_kernel(KernelFamily::SquaredExponential, 1.0, 1.0);
    CHECK(kernel_eval(se, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(kernel_eval(se, 10.0) < 1e-21);
    se.signal_variance = 2.5;
    CHECK(kernel_eval(se, 0.0) == doctest::Approx(2.5));
  }

  TEST_CASE("matern 3/2 against 25-digit reference") {
    KernelSpec m = make_kernel(KernelFamily::Matern, 1.0, 1.0, 3);
    const double ref = 0.4833577245965076505950751;  // (1 + sqrt 3) exp(-sqrt 3), mpmath
    CHECK(std::abs(kernel_eval(m, 1.0) - ref) < 1e-15);
  }

  TEST_CASE("invalid hyperparameters") {
    KernelSpec k;
    k.lengthscale = 0.0;
    CHECK_THROWS_AS(kernel_eval(k, 1.0), ConfigError);
    CHECK_THROWS_AS(make_kernel(KernelFamily::Matern, 1.0, 1.0, 7), ConfigError);
    CHECK_THROWS_AS(make_kernel(KernelFamily::SquaredExponential, 1.0, -1.0), ConfigError);
  }

  TEST_CASE("smoothness constants") {
    auto [c1, w1] = smoothness_constants(make_kernel(KernelFamily::SquaredExponential, 1.0, 1.0));
    CHECK(c1 == doctest::Approx(1.0));
    CHECK(w1 == doctest::Approx(1.0));
    auto [c2, w2] = smoothness_constants(make_kernel(KernelFamily::SquaredExponential, 2.0, 1.0));
    CHECK(c2 == doctest::Approx(0.5));
    CHECK(w2 == doctest::Approx(1.0));
    auto [c3, w3] = smoothness_constants(make_kernel(KernelFamily::Matern, 1.0, 1.0, 1));
    CHECK(c3 == doctest::Approx(std::sqrt(2.0)));
    CHECK(w3 == doctest::Approx(0.5));
  }

  TEST_CASE("smoothness inequality holds on a grid for every family") {
    std::vector<KernelSpec> ks = {make_kernel(KernelFamily::SquaredExponential, 0.5, 2.0),
                                  make_kernel(KernelFamily::SquaredExponential, 3.0, 0.01),
                                  make_kernel(KernelFamily::Matern, 0.8, 1.5, 1),
                                  make_kernel(KernelFamily::Matern, 1.2, 0.7, 3),
                                  make_kernel(KernelFamily::Matern, 2.0, 1.0, 5)};
    for (const auto& k : ks) {
      for (int i = 1; i <= 4000; ++i) {
        const double r = 1e-4 * std::pow(1.004, i);
        const double lhs = std::sqrt(std::max(0.0, 2.0 * (kernel_eval(k, 0.0) - kernel_eval(k, r))));
        // k(0) - k(r) cancels for small r, hence the relative slack
        CHECK(lhs <= k.c_k * std::pow(r, k.omega) * (1.0 + 1e-6));
      }
    }
  }

  TEST_CASE("gradient factor matches finite differences") {
    for (int nu : {3, 5}) {
      KernelSpec k = make_kernel(KernelFamily::Matern, 0.9, 1.1, nu);
      for (double r : {0.1, 0.5, 1.3, 2.7}) {
        const double h = 1e-6;
        const double fd = (kernel_eval(k, r + h) - kernel_eval(k, r - h)) / (2.0 * h);
        CHECK(kernel_grad_factor(k, r) * r == doctest::Approx(fd).epsilon(1e-6));
      }
    }
    KernelSpec se = make_kernel(KernelFamily::SquaredExponential, 0.9, 1.1);
    CHECK(std::isfinite(kernel_grad_factor(se, 0.0)));
  }
}

TEST_SUITE("gp") {
  TEST_CASE("empty model answers prior queries") {
    ObservationSet obs(2, 3, 0.1);
    std::vector<KernelSpec> ks = {make_kernel(KernelFamily::SquaredExponential, 1.0, 1.0),
                                  make_kernel(KernelFamily::SquaredExponential, 1.0, 2.0),
                                  make_kernel(KernelFamily::Matern, 1.0, 0.5, 3)};
    GPModel m = GPModel::fit(obs, ks);
    Vec q(2);
    q << 0.3, -2.0;
    PosteriorEstimate p = m.posterior(q);
    CHECK(p.mean.norm() == 0.0);
    CHECK(p.stddev[0] * p.stddev[0] == doctest::Approx(1.0));
    CHECK(p.stddev[1] * p.stddev[1] == doctest::Approx(2.0));
    CHECK(p.stddev[2] * p.stddev[2] == doctest::Approx(0.5));
    CHECK(estimate_d(m, q).norm() == 0.0);
  }

  TEST_CASE("noise-free single observation is interpolated") {
    ObservationSet obs(2, 2, 0.0);
    Vec x(2), y(2);
    x << 0.2, 0.4;
    y << 1.5, -0.25;
    obs.add(x, y);
    GPModel m = GPModel::fit(obs, std::vector<KernelSpec>(2, make_kernel(KernelFamily::SquaredExponential, 1.0, 1.0)));
    PosteriorEstimate p = m.posterior(x);
    CHECK(p.mean[0] == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(p.mean[1] == doctest::Approx(-0.25).epsilon(1e-9));
    CHECK(m.variance(x).maxCoeff() <= 1e-8);
    CHECK((estimate_d(m, x) - y).norm() < 1e-8);
  }

  TEST_CASE("small noisy fit against dense oracle") {
    std::mt19937_64 rng(3);
    GPModel m = random_model(rng, 3, 0.1);
    const Mat& x = m.observations().points;
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int t = 0; t < 50; ++t) {
      Vec q(2);
      q << u(rng), u(rng);
      PosteriorEstimate p = m.posterior(q);
      for (int j = 0; j < 2; ++j) {
        auto o = oracle::dense_gp(m.kernels()[j], x, m.observations().values.col(j), 0.1, q);
        CHECK(oracle::rel_err(p.mean[j], o.mean) < 1e-8);
        CHECK(oracle::rel_err(p.stddev[j] * p.stddev[j], o.var) < 1e-8);
      }
    }
  }

  TEST_CASE("far query reverts to the prior") {
    std::mt19937_64 rng(5);
    GPModel m = random_model(rng, 20, 0.05);
    Vec q(2);
    q << 40.0, -35.0;
    PosteriorEstimate p = m.posterior(q);
    CHECK(p.mean.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(p.stddev[0] * p.stddev[0] == doctest::Approx(1.3).epsilon(1e-12));
  }

  TEST_CASE("mismatched shapes are rejected") {
    ObservationSet obs(2, 2, 0.1);
    obs.points = Mat::Zero(3, 2);
    obs.values = Mat::Zero(2, 2);
    CHECK_THROWS(GPModel::fit(obs, std::vector<KernelSpec>(2, KernelSpec{})));
    ObservationSet ok(2, 2, 0.1);
    CHECK_THROWS(GPModel::fit(ok, std::vector<KernelSpec>(3, KernelSpec{})));
  }

  TEST_CASE("duplicate noise-free points survive through jitter") {
    ObservationSet obs(1, 1, 0.0);
    Vec x(1), y(1);
    x << 0.5;
    y << 2.0;
    obs.add(x, y);
    obs.add(x, y);
    GPModel m = GPModel::fit(obs, {make_kernel(KernelFamily::SquaredExponential, 1.0, 1.0)});
    CHECK(m.mean(x)[0] == doctest::Approx(2.0).epsilon(1e-6));
  }

  TEST_CASE("block extension equals a fresh fit") {
    std::mt19937_64 rng(11);
    GPModel full = random_model(rng, 30, 0.05, 3);
    const Mat& p = full.observations().points;
    const Mat& v = full.observations().values;
    ObservationSet head(2, 3, 0.05);
    head.points = p.topRows(12);
    head.values = v.topRows(12);
    GPModel part = GPModel::fit(head, full.kernels());
    GPModel grown = part.extended(p.bottomRows(18), v.bottomRows(18));
    CHECK(grown.size() == 30);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 40; ++t) {
      Vec q(2);
      q << u(rng), u(rng);
      CHECK((grown.mean(q) - full.mean(q)).norm() < 1e-9);
      CHECK((grown.variance(q) - full.variance(q)).norm() < 1e-10);
    }
  }

  TEST_CASE("variance never grows when data is added") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
      GPModel m = random_model(rng, 1 + trial, 0.02 * (trial % 4));
      Mat np(1, 2), nv(1, 2);
      np << u(rng), u(rng);
      nv << u(rng), u(rng);
      GPModel m2 = m.extended(np, nv);
      for (int t = 0; t < 20; ++t) {
        Vec q(2);
        q << u(rng), u(rng);
        CHECK((m2.variance(q) - m.variance(q)).maxCoeff() <= 1e-10);
      }
    }
  }

  TEST_CASE("posterior is invariant under permutation of the data") {
    std::mt19937_64 rng(23);
    GPModel m = random_model(rng, 25, 0.1);
    ObservationSet shuffled(2, 2, 0.1);
    std::vector<int> idx(25);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int i : idx) shuffled.add(m.observations().points.row(i).transpose(), m.observations().values.row(i).transpose());
    GPModel m2 = GPModel::fit(shuffled, m.kernels());
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 20; ++t) {
      Vec q(2);
      q << u(rng), u(rng);
      CHECK((m.mean(q) - m2.mean(q)).norm() < 1e-10);
      CHECK((m.variance(q) - m2.variance(q)).norm() < 1e-10);
    }
  }

  TEST_CASE("mean jacobian matches finite differences") {
    std::mt19937_64 rng(29);
    for (auto k : {make_kernel(KernelFamily::SquaredExponential, 0.6, 1.0), make_kernel(KernelFamily::Matern, 0.8, 1.0, 5)}) {
      GPModel m = random_model(rng, 15, 0.05, 2, k);
      Vec q(2);
      q << 0.13, -0.27;
      Mat j = m.mean_jacobian(q);
      for (int d = 0; d < 2; ++d) {
        Vec h = Vec::Zero(2);
        h[d] = 1e-6;
        Vec fd = (m.mean(q + h) - m.mean(q - h)) / 2e-6;
        CHECK((j.col(d) - fd).norm() < 1e-6);
      }
    }
  }

  TEST_CASE("batched variance agrees with pointwise queries") {
    std::mt19937_64 rng(31);
    GPModel m = random_model(rng, 20, 0.1, 3);
    Mat q = Mat::Random(2, 30);
    Mat v = m.variance_batch(q);
    for (int c = 0; c < 30; ++c) CHECK((v.col(c) - m.variance(q.col(c))).norm() < 1e-12);
  }

  TEST_CASE("max std in ball") {
    ObservationSet empty(2, 2, 0.0);
    GPModel prior = GPModel::fit(empty, {make_kernel(KernelFamily::SquaredExponential, 1.0, 1.0),
                                         make_kernel(KernelFamily::SquaredExponential, 1.0, 4.0)});
    Vec o = Vec::Zero(2);
    Vec s0 = max_posterior_std_in_ball(prior, o, 1.0);
    CHECK(s0[0] == doctest::Approx(1.0));
    CHECK(s0[1] == doctest::Approx(2.0));

    // dense coverage at spacing 0.1, lengthscale 1
    ObservationSet dense(2, 1, 0.01);
    for (double x = -1.2; x <= 1.2 + 1e-9; x += 0.1)
      for (double y = -1.2; y <= 1.2 + 1e-9; y += 0.1) {
        Vec p(2), v(1);
        p << x, y;
        v << std::cos(x + y);
        dense.add(p, v);
      }
    GPModel covered = GPModel::fit(dense, {make_kernel(KernelFamily::SquaredExponential, 1.0, 1.0)});
    CHECK(max_posterior_std_in_ball(covered, o, 1.0)[0] < 0.1);

    std::mt19937_64 rng(37);
    for (int t = 0; t < 5; ++t) {
      GPModel m = random_model(rng, 8 + 4 * t, 0.05);
      Vec c(2);
      c << 0.1 * t, -0.1 * t;
      const double rho = 0.8;
      Vec best = max_posterior_std_in_ball(m, c, rho);
      Vec grid_max = Vec::Zero(2);
      for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 50; ++j) {
          Vec q = c;
          q[0] += rho * (-1.0 + 2.0 * (i + 0.5) / 50.0);
          q[1] += rho * (-1.0 + 2.0 * (j + 0.5) / 50.0);
          if ((q - c).norm() > rho) continue;
          grid_max = grid_max.cwiseMax(m.variance(q).cwiseSqrt());
        }
      CHECK((best - grid_max).minCoeff() >= -1e-12);
    }
  }
}
