#include "safex/linalg.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace safex {

namespace {

Vec eigenvalues(const Mat& a) {
  if (a.rows() == 1) return a.diagonal();
  Eigen::SelfAdjointEigenSolver<Mat> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace

double lambda_max(const Mat& symmetric) { return eigenvalues(symmetric).maxCoeff(); }

double lambda_min(const Mat& symmetric) { return eigenvalues(symmetric).minCoeff(); }

double spectral_norm_sym(const Mat& symmetric) {
  return eigenvalues(symmetric).cwiseAbs().maxCoeff();
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w < 0) w += two_pi;
  return w - std::numbers::pi;
}

}  // namespace safex
