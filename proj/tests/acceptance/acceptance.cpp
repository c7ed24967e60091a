// Acceptance runner: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is 0 when the set of failing criteria equals the --expect-fail set.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "safex/complexity.hpp"
#include "safex/contraction.hpp"
#include "safex/explorer.hpp"
#include "safex/gp.hpp"
#include "safex/planner.hpp"
#include "safex/world.hpp"

using namespace safex;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- tolerances
constexpr double kGpRelTol = 1e-8;
constexpr double kGpTimeLimit = 10.0;
constexpr double kMonotoneTol = 1e-10;
constexpr double kInterpVarTol = 1e-8;
constexpr double kInterpMeanTol = 1e-6;  // relative to the observation scale
constexpr double kEigTol = 1e-10;
constexpr double kContractionTol = 1e-12;
constexpr double kTubeSlack = 1.2;
constexpr double kDupTol = 1e-9;
constexpr double kLambertTol = 1e-12;
constexpr double kCoverageDelta = 0.05;
constexpr double kGeomTol = 1e-9;
constexpr double kTrackSlack = 1.2;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

KernelSpec random_kernel(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double ell = 0.3 + 1.7 * u(rng), var = 0.5 + 1.5 * u(rng);
  const int pick = static_cast<int>(rng() % 4);
  if (pick == 0) return make_kernel(KernelFamily::SquaredExponential, ell, var);
  return make_kernel(KernelFamily::Matern, ell, var, 2 * pick - 1);
}

Mat random_points(int n, int dim, double half, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-half, half);
  Mat p(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) p(i, j) = u(rng);
  return p;
}

GPModel fit_model(const Mat& x, const Mat& y, double s, const KernelSpec& k) {
  ObservationSet obs(static_cast<int>(x.cols()), static_cast<int>(y.cols()), s);
  for (Eigen::Index i = 0; i < x.rows(); ++i) obs.add(x.row(i).transpose(), y.row(i).transpose());
  return GPModel::fit(obs, std::vector<KernelSpec>(static_cast<std::size_t>(y.cols()), k));
}

// ---------------------------------------------------------------- 1
Outcome gp_oracle() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 1 + static_cast<int>(rng() % 50);
    const KernelSpec k = random_kernel(rng);
    const double s = 0.01 + 0.5 * u(rng);
    Mat x = random_points(n, 2, 2.0, rng);
    Mat y(n, 2);
    for (int i = 0; i < n; ++i) y.row(i) << std::sin(x(i, 0)) + 0.1 * z(rng), x(i, 1) * x(i, 0) + 0.1 * z(rng);
    GPModel m = fit_model(x, y, s, k);
    Mat q = random_points(10, 2, 2.5, rng);
    for (int j = 0; j < q.rows(); ++j) {
      const Vec xq = q.row(j).transpose();
      const PosteriorEstimate est = m.posterior(xq);
      for (int c = 0; c < 2; ++c) {
        const oracle::DensePosterior ref = oracle::dense_gp(k, x, y.col(c), s, xq);
        worst = std::max(worst, oracle::rel_err(est.mean[c], ref.mean));
        worst = std::max(worst, oracle::rel_err(est.stddev[c] * est.stddev[c], ref.var));
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst <= kGpRelTol && t < kGpTimeLimit,
          fmt("200 instances, max rel err %.2e (tol %.0e), %.2f s (limit %.0f s)", worst, kGpRelTol, t, kGpTimeLimit)};
}

// ---------------------------------------------------------------- 2
Outcome gp_properties() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_growth = 0.0, worst_mean = 0.0, worst_var = 0.0;
  int cases = 0;
  for (; cases < 500; ++cases) {
    const KernelSpec k = random_kernel(rng);
    const int n = 2 + static_cast<int>(rng() % 20);
    Mat x = random_points(n, 2, 3.0, rng);
    Mat y = Mat::Random(n, 1);
    // monotonicity: posterior variance at fixed queries along a growing data set
    const double s = 0.01 + 0.3 * u(rng);
    Mat q = random_points(8, 2, 3.0, rng);
    Vec prev = Vec::Constant(q.rows(), k.signal_variance);
    for (int m = 1; m <= n; ++m) {
      GPModel g = fit_model(x.topRows(m), y.topRows(m), s, k);
      for (int j = 0; j < q.rows(); ++j) {
        const double v = g.variance(q.row(j).transpose())[0];
        worst_growth = std::max(worst_growth, v - prev[j]);
        prev[j] = v;
      }
    }
    // interpolation with s = 0 on well-separated points
    Mat sep(0, 2);
    for (int tries = 0; sep.rows() < std::min(n, 8) && tries < 500; ++tries) {
      Mat c = random_points(1, 2, 3.0, rng);
      bool ok = true;
      for (Eigen::Index i = 0; i < sep.rows(); ++i) ok = ok && (sep.row(i) - c).norm() >= 0.5 * k.lengthscale;
      if (!ok) continue;
      sep.conservativeResize(sep.rows() + 1, 2);
      sep.row(sep.rows() - 1) = c;
    }
    Mat ys = Mat::Random(sep.rows(), 1);
    GPModel g = fit_model(sep, ys, 0.0, k);
    for (Eigen::Index i = 0; i < sep.rows(); ++i) {
      const PosteriorEstimate e = g.posterior(sep.row(i).transpose());
      worst_mean = std::max(worst_mean, std::abs(e.mean[0] - ys(i, 0)));
      worst_var = std::max(worst_var, e.stddev[0] * e.stddev[0]);
    }
  }
  const bool pass = worst_growth <= kMonotoneTol && worst_mean <= kInterpMeanTol && worst_var <= kInterpVarTol;
  return {pass, fmt("%d cases, max variance growth %.2e (tol %.0e), interpolation |mean-y| %.2e (tol %.0e), var %.2e (tol %.0e)",
                    cases, worst_growth, kMonotoneTol, worst_mean, kInterpMeanTol, worst_var, kInterpVarTol)};
}

// ---------------------------------------------------------------- 3
Outcome eigen_perturbation() {
  std::mt19937_64 rng(303);
  int bad = 0;
  double worst_gap = -HUGE_VAL, worst_agree = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + t % 7;
    const double scale = std::pow(10.0, static_cast<double>(t % 5) - 2.0);
    Mat a = oracle::random_symmetric(n, rng, scale);
    Mat b = (t % 3 == 0) ? Mat(a + oracle::random_symmetric(n, rng, 1e-6 * scale)) : oracle::random_symmetric(n, rng, scale);
    auto [lhs, rhs] = eig_max_diff_bound_check(a, b);
    const double ref_lhs = std::abs(oracle::lambda_max(a) - oracle::lambda_max(b));
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(a - b), Eigen::EigenvaluesOnly);
    const double ref_rhs = es.eigenvalues().cwiseAbs().maxCoeff();
    worst_agree = std::max({worst_agree, std::abs(lhs - ref_lhs), std::abs(rhs - ref_rhs)});
    worst_gap = std::max(worst_gap, lhs - rhs);
    if (lhs > rhs + kEigTol || ref_lhs > ref_rhs + kEigTol) ++bad;
  }
  return {bad == 0 && worst_agree <= kEigTol,
          fmt("1000 pairs (dims 2-8), violations %d, max(lhs-rhs) %.2e, agreement with oracle %.2e (tol %.0e)", bad,
              worst_gap, worst_agree, kEigTol)};
}

// ---------------------------------------------------------------- 4
Outcome retraining_property() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  int premises = 0, violations = 0;
  double worst = -HUGE_VAL;
  for (int t = 0; t < 10000; ++t) {
    const int n = 2 + t % 3;
    auto base = std::make_shared<LinearSystem>(Mat(0.5 * Mat::Random(n, n)), Mat(Mat::Identity(n, n)));
    std::vector<int> vars(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) vars[static_cast<std::size_t>(i)] = i;
    MetricModel m = MetricModel::polynomial(n, 1, vars);
    Vec p(m.parameter_count());
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = 0.3 * z(rng);
    m.set_parameters(p);
    m.lambda = 0.1 + 0.4 * u(rng);
    ControllerModel k = ControllerModel::linear(Mat(-(1.0 + 7.0 * u(rng)) * Mat::Identity(n, n)));
    const double margin = 0.05 + 0.5 * u(rng);
    Mat j1 = 0.3 * Mat::Random(n, n);
    Mat j2 = j1 + 0.3 * u(rng) * Mat(Mat::Random(n, n));
    auto d1 = std::make_shared<FunctionDisturbance>([j1](const Vec& x) { return Vec(j1 * x); }, [j1](const Vec&) { return j1; });
    auto d2 = std::make_shared<FunctionDisturbance>([j2](const Vec& x) { return Vec(j2 * x); }, [j2](const Vec&) { return j2; });
    DisturbedSystem s1(base, d1), s2(base, d2);
    const Vec x = 0.5 * Vec::Random(n), xs = 0.5 * Vec::Random(n), us = Vec::Random(n);
    const double robust = oracle::lambda_max(ccm_lhs(m, k, s1, x, xs, us) + margin * Mat::Identity(n, n));
    const RetrainCheck rc = retraining_needed(m, *d1, *d2, {x}, margin);
    if (robust > 0.0 || rc.max_norm > margin) continue;
    ++premises;
    const double plain = oracle::lambda_max(ccm_lhs(m, k, s2, x, xs, us));
    worst = std::max(worst, plain);
    if (plain > kContractionTol) ++violations;
  }
  return {violations == 0 && premises >= 1000,
          fmt("10000 constructions, %d with both premises (need >= 1000), violations %d, max lambda_max %.3e", premises,
              violations, worst)};
}

// ---------------------------------------------------------------- 5
double worst_tube_ratio(const ControllerModel& ctl, const MetricModel& metric,
                        std::shared_ptr<const ControlAffineSystem> base, const ReferenceTrajectory& ref,
                        const Vec& x0, double psi, const std::function<Vec(const Vec&)>& direction) {
  auto e = std::make_shared<FunctionDisturbance>([psi, direction](const Vec& x) {
    Vec d = direction(x);
    return Vec(psi * d / d.norm());
  });
  DisturbedSystem sys(std::move(base), e);
  const TrackResult tr = track(ctl, sys, ref, x0);
  double worst = 0.0;
  for (std::size_t i = 1; i < tr.distance.size(); ++i) {
    const double bound = tracking_error_bound(metric.m_lower, metric.m_upper, psi, metric.lambda, 0.0,
                                              static_cast<double>(i) * ref.dt);
    worst = std::max(worst, tr.distance[i] / bound);
  }
  return worst;
}

Outcome tube_bound(const TrainResult& car_ctl) {
  double worst_toy = 0.0, worst_car = 0.0;
  // scalar toy: x' = u + e, u = u* - k (x - x*), M = 1, rate k
  {
    const double k = 1.5;
    auto base = std::make_shared<LinearSystem>(Mat::Zero(1, 1), Mat::Identity(1, 1));
    ControllerModel ctl = ControllerModel::linear(Mat(-k * Mat::Identity(1, 1)));
    MetricModel m = MetricModel::constant(Mat::Identity(1, 1));
    m.lambda = k;
    ReferenceTrajectory ref;
    ref.dt = 0.01;
    for (int i = 0; i < 800; ++i) {
      ref.states.push_back(Vec::Constant(1, 0.5 * i * ref.dt));
      ref.inputs.push_back(Vec::Constant(1, 0.5));
    }
    for (double psi : {0.05, 0.1, 0.2}) {
      worst_toy = std::max(worst_toy, worst_tube_ratio(ctl, m, base, ref, Vec::Zero(1), psi,
                                                       [](const Vec& x) { return Vec::Constant(1, 1.0 + 0.0 * x[0]); }));
      worst_toy = std::max(worst_toy, worst_tube_ratio(ctl, m, base, ref, Vec::Zero(1), psi,
                                                       [](const Vec& x) { return Vec::Constant(1, std::sin(7.0 * x[0]) + 1e-3); }));
    }
  }
  // certified car controller along a turning reference
  auto car = std::make_shared<DubinsCar>();
  ZeroDisturbance zero(5);
  Vec x0(5);
  x0 << 1.0, 1.0, 0.0, 1.0, 0.0;
  PiecewisePath path{{Vec2(1, 1), Vec2(5, 1), Vec2(7, 4), Vec2(4, 8)}};
  auto ref = reference_from_path(path, *car, zero, x0, 0.01, ReferenceGains{});
  if (!ref) return {false, "reference generation failed"};
  for (double psi : {0.05, 0.1, 0.2}) {
    worst_car = std::max(worst_car, worst_tube_ratio(car_ctl.controller, car_ctl.metric, car, *ref, x0, psi, [](const Vec& x) {
      Vec d(5);
      d << std::cos(2.0 * x[1]), std::sin(1.5 * x[0]), 0.5, -0.3 + std::sin(x[0] + x[1]), 0.4 * std::cos(x[0]);
      return d;
    }));
    worst_car = std::max(worst_car, worst_tube_ratio(car_ctl.controller, car_ctl.metric, car, *ref, x0, psi, [](const Vec& x) {
      Vec d(5);
      d << -std::sin(x[2]), std::cos(x[2]), 1.0, 0.0, 0.0;  // lateral push plus a constant heading drift
      return d;
    }));
  }
  const bool pass = car_ctl.certificate.pass && worst_toy <= kTubeSlack && worst_car <= kTubeSlack;
  return {pass, fmt("psi in {0.05,0.1,0.2}: max error/bound toy %.3f, car %.3f (limit %.1f), car certificate %s (max %.3f)",
                    worst_toy, worst_car, kTubeSlack, car_ctl.certificate.pass ? "pass" : "FAIL",
                    car_ctl.certificate.max_value)};
}

// ---------------------------------------------------------------- 6
ComplexityParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto log_uniform = [&](double a, double b) { return a * std::pow(b / a, u(rng)); };
  ComplexityParams p;
  p.n = 1 + static_cast<int>(rng() % 3);
  p.rho = log_uniform(0.25, 2.0);
  p.delta = log_uniform(0.01, 0.2);
  p.psi = log_uniform(0.02, 0.5);
  p.s = log_uniform(0.001, 1.0);
  p.c_lower = log_uniform(0.05, 1.0);
  p.c_k = log_uniform(0.5, 3.0);
  p.omega = 0.25 + 0.75 * u(rng);
  p.a1 = log_uniform(0.5, 2.0);
  p.a2 = log_uniform(0.5, 2.0);
  return p;
}

Outcome complexity_sweep() {
  std::mt19937_64 rng(606);
  const std::map<std::string, std::function<void(ComplexityParams&)>> moves = {
      {"psi down", [](ComplexityParams& p) { p.psi *= 0.5; }},
      {"delta down", [](ComplexityParams& p) { p.delta *= 0.5; }},
      {"c_lower down", [](ComplexityParams& p) { p.c_lower *= 0.5; }},
      {"s up", [](ComplexityParams& p) { p.s *= 2.0; }}};
  std::map<std::string, int> strict, weak;
  double worst_dup = 0.0;
  for (int t = 0; t < 100; ++t) {
    const ComplexityParams p = random_params(rng);
    const ComplexityReport r = required_samples(p);
    const oracle::Dup d = oracle::duplicate(p);
    for (auto [mine, ref] : {std::pair{r.a, d.a}, {r.r0, d.r0}, {r.c_n, d.cn}, {r.n_cond1, d.n1}, {r.n_cond2, d.n2},
                             {r.n_min, d.nmin}}) {
      worst_dup = std::max(worst_dup, std::abs(mine - ref) / std::abs(ref));
    }
    for (const auto& [name, move] : moves) {
      ComplexityParams q = p;
      move(q);
      const double n2 = required_samples(q).n_min;
      strict[name] += n2 > r.n_min ? 1 : 0;
      weak[name] += n2 >= r.n_min ? 1 : 0;
    }
  }
  double worst_w = 0.0;
  const double zlo = -std::exp(-1.0) + 1e-6;
  for (int i = 0; i <= 20000; ++i) {
    // dense near the branch point, log-spaced above
    const double z = i <= 10000 ? zlo + (1.0 - zlo) * i / 10000.0 : std::pow(10.0, 6.0 * (i - 10000) / 10000.0);
    if (z == 0.0) continue;
    const double w = lambert_w_principal(z);
    worst_w = std::max(worst_w, std::abs(w * std::exp(w) - z) / std::abs(z));
  }
  bool pass = worst_dup <= kDupTol && worst_w <= kLambertTol;
  std::string counts;
  for (const auto& [name, c] : strict) {
    pass = pass && c == 100;
    counts += fmt("%s %d/100 strict (%d nondecreasing), ", name.c_str(), c, weak[name]);
  }
  return {pass, counts + fmt("duplicate oracle %.2e (tol %.0e), Lambert residual %.2e (tol %.0e)", worst_dup, kDupTol,
                             worst_w, kLambertTol)};
}

// ---------------------------------------------------------------- 7
Outcome stopping_coverage() {
  const int worlds = 200;
  const double rho = 0.5, s = 0.05, psi_th = 0.6;
  const KernelSpec k = make_kernel(KernelFamily::SquaredExponential, 0.5, 1.0);
  MaxStdOptions search;
  search.grid_per_axis = 20;
  search.starts = 4;
  search.evals_per_start = 40;
  std::vector<Vec2> grid;
  for (double x = -rho; x <= rho + 1e-12; x += 0.05)
    for (double y = -rho; y <= rho + 1e-12; y += 0.05)
      if (std::hypot(x, y) <= rho) grid.emplace_back(x, y);
  const int pool = 200;
  const Vec center = Vec::Zero(2);
  std::mt19937_64 rng(707);
  std::normal_distribution<double> z(0.0, 1.0);
  int stopped = 0, misses = 0;
  double mean_n = 0.0;
  for (int w = 0; w < worlds; ++w) {
    std::vector<Vec2> pts = grid;
    for (int i = 0; i < pool; ++i) pts.push_back(sample_in_ball(Vec2::Zero(), rho, Workspace{Vec2(-1, -1), Vec2(1, 1)}, rng));
    const auto m = static_cast<Eigen::Index>(pts.size());
    Mat cov(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j <= i; ++j)
        cov(i, j) = cov(j, i) = kernel_eval(k, (pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)]).norm());
    cov.diagonal().array() += 1e-8;
    Eigen::LLT<Mat> llt(cov);
    Mat f(m, 2);
    for (Eigen::Index i = 0; i < m; ++i) f.row(i) << z(rng), z(rng);
    f = llt.matrixL() * f;

    ObservationSet obs(2, 2, s);
    GPModel model = GPModel::fit(obs, {k, k});
    const auto first = static_cast<Eigen::Index>(grid.size());
    StopCheck sc;
    int n = 0;
    while (n < pool) {
      Mat px(10, 2), py(10, 2);
      for (int i = 0; i < 10; ++i, ++n) {
        px.row(i) = pts[static_cast<std::size_t>(first + n)].transpose();
        py.row(i) << f(first + n, 0) + s * z(rng), f(first + n, 1) + s * z(rng);
      }
      model = model.extended(px, py);
      sc = stopping_check(model, center, rho, kCoverageDelta, psi_th, static_cast<double>(n), search);
      if (sc.stop) break;
    }
    if (!sc.stop) continue;
    ++stopped;
    mean_n += n;
    double true_max = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec mu = model.mean(Vec(grid[i]));
      true_max = std::max(true_max, std::hypot(f(static_cast<Eigen::Index>(i), 0) - mu[0], f(static_cast<Eigen::Index>(i), 1) - mu[1]));
    }
    if (true_max > sc.error_bound) ++misses;
  }
  const double frac = stopped > 0 ? static_cast<double>(misses) / stopped : 1.0;
  return {stopped >= worlds / 2 && frac <= 2.0 * kCoverageDelta,
          fmt("%d worlds, %d stopped (mean N %.0f), bound exceeded in %d, fraction %.3f (limit %.2f)", worlds, stopped,
              stopped ? mean_n / stopped : 0.0, misses, frac, 2.0 * kCoverageDelta)};
}

// ---------------------------------------------------------------- 8
// Independent distance to a raw obstacle.
double raw_distance(const Obstacle& o, const Vec2& p) {
  if (o.shape == Obstacle::Shape::Circle) return std::max(0.0, (p - o.center).norm() - o.radius);
  const double dx = std::max({o.lo.x() - p.x(), 0.0, p.x() - o.hi.x()});
  const double dy = std::max({o.lo.y() - p.y(), 0.0, p.y() - o.hi.y()});
  return std::hypot(dx, dy);
}

double raw_clearance(const ObstacleSet& obs, const Workspace& ws, const Vec2& p) {
  double c = std::min({p.x() - ws.lo.x(), ws.hi.x() - p.x(), p.y() - ws.lo.y(), ws.hi.y() - p.y()});
  for (const Obstacle& o : obs) c = std::min(c, raw_distance(o, p));
  return c;
}

Outcome planner_safety() {
  int attempts = 0, planned = 0, unsafe = 0;
  double worst_margin = HUGE_VAL;
  const double tubes[] = {0.05, 0.1, 0.2, 0.3};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scenario sc = generate_scenario(seed, experiment_scenario_options());
    const double e = tubes[seed % 4];
    std::mt19937_64 rng(seed + 1000);
    std::uniform_real_distribution<double> u(0.5, 9.5);
    for (int g = 0; g < 3; ++g) {
      Vec2 goal;
      do goal = Vec2(u(rng), u(rng));
      while (raw_clearance(sc.obstacles, sc.workspace, goal) < e + 0.3);
      Vec x = sc.initial_state;
      const Vec2 to = goal - Vec2(x.head<2>());
      x[2] = std::atan2(to.y(), to.x());
      PlanParams pp;
      pp.rrt.seed = seed * 10 + static_cast<std::uint64_t>(g);
      const PlanResult r = plan_safe(x, goal, sc.workspace, sc.obstacles, e, DubinsCar(), ZeroDisturbance(5), pp);
      ++attempts;
      if (!r.reference) continue;
      ++planned;
      for (const Vec& s : r.reference->states) {
        const double c = raw_clearance(sc.obstacles, sc.workspace, Vec2(s.head<2>()));
        worst_margin = std::min(worst_margin, c - e);
        if (c < e - kGeomTol) {
          ++unsafe;
          break;
        }
      }
    }
  }
  // corridors narrower than 2E must fail
  int corridor_cases = 0, corridor_plans = 0;
  for (double e : {0.1, 0.2, 0.3}) {
    for (double frac : {0.5, 0.9, 0.99}) {
      const double gap = 2.0 * e * frac;
      const ObstacleSet walls = {Obstacle::rect(Vec2(4.5, 0.0), Vec2(5.5, 5.0 - gap / 2)),
                                 Obstacle::rect(Vec2(4.5, 5.0 + gap / 2), Vec2(5.5, 10.0))};
      Vec x(5);
      x << 2.0, 5.0, 0.0, 1.0, 0.0;
      PlanParams pp;
      pp.rrt.seed = 5;
      const PlanResult r =
          plan_safe(x, Vec2(8.0, 5.0), Workspace{}, walls, e, DubinsCar(), ZeroDisturbance(5), pp);
      ++corridor_cases;
      if (r.reference) ++corridor_plans;
    }
  }
  const bool pass = unsafe == 0 && planned >= attempts / 2 && corridor_plans == 0;
  return {pass, fmt("%d plans from %d requests over 50 scenarios, unsafe references %d, min clearance-E %.3f; narrow "
                    "corridors %d, planned through %d",
                    planned, attempts, unsafe, worst_margin, corridor_cases, corridor_plans)};
}

// ---------------------------------------------------------------- 9
Outcome end_to_end(std::shared_ptr<const TrainResult> initial, double max_time) {
  double unsafe_p = 0.0, unsafe_b = 0.0;
  bool bound_ok = true;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Scenario sc = generate_scenario(seed, experiment_scenario_options());
    const WorldModel world(sc);
    ExplorerConfig c = default_explorer_config();
    c.seed = seed;
    c.max_time = max_time;
    const RunMetrics p = compute_metrics(run(world, c, initial));
    const RunMetrics b = compute_metrics(run_baseline(world, c, 0.0, initial));
    unsafe_p += p.unsafe_pct / 5.0;
    unsafe_b += b.unsafe_pct / 5.0;
    const bool ok = p.max_episode_tube > 0.0 && p.mean_tracking_error <= kTrackSlack * p.max_episode_tube;
    bound_ok = bound_ok && ok;
    per_seed += fmt(" [seed %d err %.2e tube %.3f]", static_cast<int>(seed), p.mean_tracking_error, p.max_episode_tube);
  }
  return {unsafe_p < unsafe_b && bound_ok,
          fmt("5 seeds, %.0f s budget: unsafe %% proposed %.2f vs baseline %.2f;", max_time, unsafe_p, unsafe_b) + per_seed};
}

// ---------------------------------------------------------------- 10
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const std::string& cli) {
  if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not given (--cli)"};
  const fs::path root = fs::temp_directory_path() / ("safex_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "config.json") << R"({"seeds": [0, 1], "explorer": {"max_time": 2.0,
      "train": {"samples": 200, "max_evaluations": 100, "certify_samples": 300, "bound_samples": 300},
      "retrain": {"samples": 100, "max_evaluations": 20, "certify_samples": 200, "bound_samples": 200}}})";
  const auto run_cli = [&](const std::string& args, const fs::path& out) {
    const std::string cmd = "\"" + cli + "\" " + args + " > \"" + out.string() + "\" 2>/dev/null";
    return std::system(cmd.c_str());
  };
  std::vector<std::string> diffs;
  int bad_exit = 0;
  for (const char* dir : {"a", "b"}) {
    const int rc = run_cli("explore --config \"" + (root / "config.json").string() + "\" --out \"" + (root / "run").string() + "\"",
                           root / (std::string(dir) + ".stdout"));
    // same --out for both runs so the echoed config matches too
    if (fs::exists(root / "run")) fs::rename(root / "run", root / dir);
    // 0 = terminated, 2 = budget ran out first; both are normal here
    if (!(WIFEXITED(rc) && (WEXITSTATUS(rc) == 0 || WEXITSTATUS(rc) == 2))) ++bad_exit;
    run_cli("scenario --seed 7", root / (std::string(dir) + ".scenario"));
    run_cli("complexity --psi 0.1 --format json", root / (std::string(dir) + ".complexity"));
  }
  int files = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    if (slurp(entry.path()) != slurp(root / "b" / entry.path().filename())) diffs.push_back(entry.path().filename().string());
  }
  for (const char* ext : {".stdout", ".scenario", ".complexity"}) {
    ++files;
    if (slurp(root / (std::string("a") + ext)) != slurp(root / (std::string("b") + ext))) diffs.push_back(ext);
  }
  const bool pass = bad_exit == 0 && diffs.empty() && files > 3 && !slurp(root / "a.scenario").empty();
  std::string detail = fmt("%d outputs compared byte for byte, %d differ, %d bad exits", files,
                           static_cast<int>(diffs.size()), bad_exit);
  for (const auto& d : diffs) detail += " " + d;
  fs::remove_all(root);
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string cli;
  std::vector<int> expect_fail, only;
  double e2e_time = 20.0;
  app.add_option("--cli", cli, "path of the safex binary");
  app.add_option("--expect-fail", expect_fail, "criteria known to fail")->delimiter(',');
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  app.add_option("--e2e-time", e2e_time, "simulated seconds per end-to-end run");
  CLI11_PARSE(app, argc, argv);

  const std::set<int> selected(only.begin(), only.end());
  const auto wanted = [&](int c) { return selected.empty() || selected.count(c) > 0; };

  std::shared_ptr<const TrainResult> car;
  const auto car_controller = [&] {
    if (!car) car = std::make_shared<const TrainResult>(train_initial(default_explorer_config(), DubinsCar(), 1));
    return car;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"GP oracle equivalence", gp_oracle},
      {"GP variance monotonicity and interpolation", gp_properties},
      {"largest-eigenvalue perturbation bound", eigen_perturbation},
      {"no-retraining implies contraction", retraining_property},
      {"tracking tube bound", [&] { return tube_bound(*car_controller()); }},
      {"sample-complexity monotonicity and oracle", complexity_sweep},
      {"stopping-rule coverage", stopping_coverage},
      {"planner safety", planner_safety},
      {"end-to-end proposed vs baseline", [&] { return end_to_end(car_controller(), e2e_time); }},
      {"CLI determinism", [&] { return determinism(cli); }}};

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << ". " << criteria[i].first << ": " << o.detail
              << fmt(" (%.1f s)", seconds_since(t0)) << std::endl;
  }
  std::set<int> expected;
  for (int c : expect_fail)
    if (wanted(c)) expected.insert(c);
  std::cout << failed.size() << " of " << (selected.empty() ? criteria.size() : selected.size()) << " criteria failed";
  if (!expected.empty()) std::cout << (failed == expected ? " (exactly the expected set)" : " (differs from the expected set)");
  std::cout << std::endl;
  return failed == expected ? 0 : 1;
}
