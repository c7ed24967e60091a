#include "safex/gp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "safex/error.hpp"

namespace safex {

ObservationSet::ObservationSet(int input_dim, int output_dim, double noise)
    : points(0, input_dim), values(0, output_dim), noise_std(noise) {}

void ObservationSet::add(const Vec& x, const Vec& y) {
  if (x.size() != points.cols() || y.size() != values.cols()) {
    throw ConfigError("observation has wrong dimension");
  }
  const Eigen::Index n = points.rows();
  points.conservativeResize(n + 1, Eigen::NoChange);
  values.conservativeResize(n + 1, Eigen::NoChange);
  points.row(n) = x.transpose();
  values.row(n) = y.transpose();
}

void ObservationSet::validate() const {
  if (points.rows() != values.rows()) throw ConfigError("points/values row mismatch");
  if (points.cols() < 1) throw ConfigError("input dimension must be positive");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ConfigError("noise_std must be >= 0");
  if (!points.allFinite() || !values.allFinite()) throw ConfigError("non-finite observation");
}

Vec GPModel::kernel_column(const KernelSpec& kernel, const Vec& x) const {
  const Eigen::Index n = obs_.size();
  Vec k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k[i] = kernel_eval(kernel, (obs_.points.row(i).transpose() - x).norm());
  }
  return k;
}

namespace {

Mat gram(const KernelSpec& kernel, const Mat& a, const Mat& b) {
  Mat k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      k(i, j) = kernel_eval(kernel, (a.row(i) - b.row(j)).norm());
    }
  }
  return k;
}

bool try_cholesky(const Mat& a, Mat& lower) {
  if (a.rows() == 0) {
    lower.resize(0, 0);
    return true;
  }
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  return lower.diagonal().allFinite() && lower.diagonal().minCoeff() > 0.0;
}

}  // namespace

void GPModel::factorize_group(Group& group) const {
  const double s2 = obs_.noise_std * obs_.noise_std;
  Mat k = gram(group.kernel, obs_.points, obs_.points);
  k.diagonal().array() += s2;
  group.jitter = 0.0;
  if (try_cholesky(k, group.chol)) return;
  group.jitter = 1e-10 * group.kernel.signal_variance;
  k.diagonal().array() += group.jitter;
  if (!try_cholesky(k, group.chol)) {
    throw NumericError("GP covariance is not positive definite even after jitter");
  }
}

void GPModel::solve_weights() {
  alpha_.resize(obs_.size(), output_dim());
  for (int c = 0; c < output_dim(); ++c) {
    const Mat& l = groups_[group_of_coord_[c]].chol;
    Vec y = obs_.values.col(c);
    l.triangularView<Eigen::Lower>().solveInPlace(y);
    l.transpose().triangularView<Eigen::Upper>().solveInPlace(y);
    alpha_.col(c) = y;
  }
}

GPModel GPModel::fit(ObservationSet observations, std::vector<KernelSpec> kernels) {
  observations.validate();
  if (kernels.empty()) throw ConfigError("at least one kernel is required");
  if (static_cast<int>(kernels.size()) != observations.output_dim()) {
    throw ConfigError("one kernel per output coordinate is required");
  }
  for (const auto& k : kernels) validate(k);

  GPModel model;
  model.obs_ = std::move(observations);
  model.kernels_ = std::move(kernels);
  for (const auto& k : model.kernels_) {
    auto it = std::find_if(model.groups_.begin(), model.groups_.end(),
                           [&](const Group& g) { return g.kernel == k; });
    if (it == model.groups_.end()) {
      model.groups_.push_back(Group{k, Mat(), 0.0});
      model.group_of_coord_.push_back(static_cast<int>(model.groups_.size()) - 1);
    } else {
      model.group_of_coord_.push_back(static_cast<int>(it - model.groups_.begin()));
    }
  }
  for (auto& g : model.groups_) model.factorize_group(g);
  model.solve_weights();
  return model;
}

GPModel GPModel::extended(const Mat& new_points, const Mat& new_values) const {
  if (new_points.rows() != new_values.rows() || new_points.cols() != obs_.points.cols() ||
      new_values.cols() != obs_.values.cols()) {
    throw ConfigError("extension data has wrong shape");
  }
  if (!new_points.allFinite() || !new_values.allFinite()) throw ConfigError("non-finite observation");
  GPModel out = *this;
  const Eigen::Index n = obs_.size();
  const Eigen::Index k = new_points.rows();
  if (k == 0) return out;
  out.obs_.points.conservativeResize(n + k, Eigen::NoChange);
  out.obs_.values.conservativeResize(n + k, Eigen::NoChange);
  out.obs_.points.bottomRows(k) = new_points;
  out.obs_.values.bottomRows(k) = new_values;

  const double s2 = obs_.noise_std * obs_.noise_std;
  for (auto& g : out.groups_) {
    Mat k12 = gram(g.kernel, obs_.points, new_points);
    Mat k22 = gram(g.kernel, new_points, new_points);
    k22.diagonal().array() += s2 + g.jitter;
    Mat l21t = k12;
    if (n > 0) g.chol.triangularView<Eigen::Lower>().solveInPlace(l21t);
    Mat schur = k22 - l21t.transpose() * l21t;
    Mat l22;
    if (!try_cholesky(schur, l22)) {
      out.factorize_group(g);
      continue;
    }
    Mat grown = Mat::Zero(n + k, n + k);
    grown.topLeftCorner(n, n) = g.chol;
    grown.bottomLeftCorner(k, n) = l21t.transpose();
    grown.bottomRightCorner(k, k) = l22;
    g.chol = std::move(grown);
  }
  out.solve_weights();
  return out;
}

double GPModel::group_variance(int group, const Vec& x) const {
  const Group& g = groups_[group];
  const double prior = kernel_eval(g.kernel, 0.0);
  if (obs_.size() == 0) return prior;
  Vec v = kernel_column(g.kernel, x);
  g.chol.triangularView<Eigen::Lower>().solveInPlace(v);
  return std::clamp(prior - v.squaredNorm(), 0.0, prior);
}

Vec GPModel::mean(const Vec& x) const {
  if (x.size() != input_dim()) throw ConfigError("query has wrong dimension");
  Vec m = Vec::Zero(output_dim());
  if (obs_.size() == 0) return m;
  for (int gi = 0; gi < group_count(); ++gi) {
    Vec k = kernel_column(groups_[gi].kernel, x);
    for (int c = 0; c < output_dim(); ++c) {
      if (group_of_coord_[c] == gi) m[c] = k.dot(alpha_.col(c));
    }
  }
  return m;
}

Vec GPModel::variance(const Vec& x) const {
  if (x.size() != input_dim()) throw ConfigError("query has wrong dimension");
  Vec var(output_dim());
  for (int gi = 0; gi < group_count(); ++gi) {
    const double v = group_variance(gi, x);
    for (int c = 0; c < output_dim(); ++c) {
      if (group_of_coord_[c] == gi) var[c] = v;
    }
  }
  return var;
}

Mat GPModel::variance_batch(const Mat& queries) const {
  if (queries.rows() != input_dim()) throw ConfigError("queries have wrong dimension");
  const Eigen::Index q = queries.cols();
  Mat out(output_dim(), q);
  for (int gi = 0; gi < group_count(); ++gi) {
    const Group& g = groups_[gi];
    const double prior = kernel_eval(g.kernel, 0.0);
    Vec gv = Vec::Constant(q, prior);
    if (obs_.size() > 0) {
      Mat ks(obs_.size(), q);
      for (Eigen::Index j = 0; j < q; ++j) ks.col(j) = kernel_column(g.kernel, queries.col(j));
      g.chol.triangularView<Eigen::Lower>().solveInPlace(ks);
      gv = (prior - ks.colwise().squaredNorm().array()).max(0.0).min(prior).matrix().transpose();
    }
    for (int c = 0; c < output_dim(); ++c) {
      if (group_of_coord_[c] == gi) out.row(c) = gv.transpose();
    }
  }
  return out;
}

PosteriorEstimate GPModel::posterior(const Vec& x) const {
  return PosteriorEstimate{mean(x), variance(x).cwiseSqrt()};
}

Mat GPModel::mean_jacobian(const Vec& x) const {
  if (x.size() != input_dim()) throw ConfigError("query has wrong dimension");
  Mat jac = Mat::Zero(output_dim(), input_dim());
  for (Eigen::Index i = 0; i < obs_.size(); ++i) {
    const Vec diff = x - obs_.points.row(i).transpose();
    const double r = diff.norm();
    for (int c = 0; c < output_dim(); ++c) {
      const double f = kernel_grad_factor(kernels_[c], r);
      jac.row(c) += (alpha_(i, c) * f) * diff.transpose();
    }
  }
  return jac;
}

PosteriorEstimate posterior(const GPModel& model, const Vec& x) { return model.posterior(x); }

Vec estimate_d(const GPModel& model, const Vec& x) { return model.mean(x); }

namespace {

double radical_inverse(int index, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * (index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

}  // namespace

Vec max_posterior_std_in_ball(const GPModel& model, const Vec& center, double radius,
                              const MaxStdOptions& options, const PointFilter& admissible) {
  const int d = model.input_dim();
  if (center.size() != d) throw ConfigError("ball center has wrong dimension");
  if (!(radius > 0.0)) throw ConfigError("ball radius must be positive");
  if (options.grid_per_axis < 2 || options.starts < 1 || options.evals_per_start < 0) {
    throw ConfigError("invalid search options");
  }

  auto in_ball = [&](const Vec& p) { return (p - center).norm() <= radius * (1.0 + 1e-12); };
  auto ok = [&](const Vec& p) { return in_ball(p) && (!admissible || admissible(p)); };

  std::vector<Vec> seeds;
  if (ok(center)) seeds.push_back(center);
  const int g = options.grid_per_axis;
  long total = 1;
  for (int i = 0; i < d; ++i) total *= g;
  std::vector<int> idx(d, 0);
  for (long t = 0; t < total; ++t) {
    long rem = t;
    Vec p(d);
    for (int i = 0; i < d; ++i) {
      p[i] = center[i] - radius + 2.0 * radius * static_cast<double>(rem % g) / (g - 1);
      rem /= g;
    }
    if (ok(p)) seeds.push_back(p);
  }
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
  const int halton = 8 * options.starts;
  for (int h = 1; h <= halton && d <= 10; ++h) {
    Vec p(d);
    for (int i = 0; i < d; ++i) p[i] = center[i] + radius * (2.0 * radical_inverse(h, primes[i]) - 1.0);
    if (ok(p)) seeds.push_back(p);
  }

  Vec out = Vec::Zero(model.output_dim());
  if (seeds.empty()) return out;

  Mat q(d, static_cast<Eigen::Index>(seeds.size()));
  for (std::size_t j = 0; j < seeds.size(); ++j) q.col(static_cast<Eigen::Index>(j)) = seeds[j];
  const Mat var = model.variance_batch(q);

  for (int gi = 0; gi < model.group_count(); ++gi) {
    int coord = 0;
    while (model.group_of(coord) != gi) ++coord;
    const Vec row = var.row(coord).transpose();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(row.size()));
    std::iota(order.begin(), order.end(), 0);
    const auto k = std::min<std::size_t>(order.size(), static_cast<std::size_t>(options.starts));
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                      [&](Eigen::Index a, Eigen::Index b) { return row[a] > row[b]; });
    double best = row[order[0]];

    for (std::size_t s = 0; s < k; ++s) {
      Vec x = q.col(order[s]);
      double fx = row[order[s]];
      double step = 2.0 * radius / (g - 1);
      int evals = 0;
      while (evals < options.evals_per_start && step > 1e-6 * radius) {
        bool moved = false;
        for (int i = 0; i < d && evals < options.evals_per_start; ++i) {
          for (double sign : {1.0, -1.0}) {
            Vec y = x;
            y[i] += sign * step;
            const Vec off = y - center;
            const double r = off.norm();
            if (r > radius) y = center + off * (radius / r);
            if (admissible && !admissible(y)) continue;
            const double fy = model.group_variance(gi, y);
            ++evals;
            if (fy > fx) {
              x = y;
              fx = fy;
              moved = true;
              break;
            }
          }
        }
        if (!moved) step *= 0.5;
      }
      best = std::max(best, fx);
    }
    for (int c = 0; c < model.output_dim(); ++c) {
      if (model.group_of(c) == gi) out[c] = std::sqrt(best);
    }
  }
  return out;
}

}  // namespace safex
