#pragma once

#include <Eigen/Dense>

namespace safex {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// A + Aᵀ.
inline Mat sym(const Mat& a) { return a + a.transpose(); }

/// Largest eigenvalue of a symmetric matrix (only the lower triangle is read).
double lambda_max(const Mat& symmetric);

/// Smallest eigenvalue of a symmetric matrix.
double lambda_min(const Mat& symmetric);

/// Spectral norm of a symmetric matrix, max |eigenvalue|.
double spectral_norm_sym(const Mat& symmetric);

/// Wraps an angle to [-pi, pi).
double wrap_angle(double a);

}  // namespace safex
