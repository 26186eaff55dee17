#pragma once

#include <Eigen/Dense>

namespace chanlearn {

using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;

/// Minimum eigenvalue of sigma + i*Omega may dip this far below zero before a
/// covariance matrix is declared unphysical (eigensolver noise allowance).
inline constexpr double kPhysicalityTol = -1e-9;

/// Two-mode symplectic form: block-diagonal [[0,1],[-1,0]] pairs.
Mat4 symplectic_form();

/// Covariance of the two-mode squeezed vacuum with squeezing r >= 0
/// (vacuum variance 1 convention, so r = 0 gives the identity).
Mat4 tmsv_covariance(double r);

/// Action of the pure lossy channel on a single mode:
/// sigma -> X sigma X^T + Y with X = sqrt(eta) I, Y = (1 - eta) I.
struct ChannelMatrices {
  Mat2 x;
  Mat2 y;
};
ChannelMatrices lossy_channel_matrices(double eta);

/// Pure lossy channel applied to the first mode of a two-mode covariance:
/// (X (+) I) sigma (X (+) I)^T + (Y (+) 0). Rejects unphysical input.
Mat4 apply_lossy_first_mode(const Mat4& sigma, double eta);

/// Closed-form covariance of the Choi state after one channel use with
/// transmissivity eta on a TMSV resource of squeezing r.
Mat4 choi_covariance(double eta, double r);

/// The (1,1) entry of choi_covariance: eta*cosh(2r) + (1 - eta).
/// This scalar is the per-use feature consumed by all learning tasks.
double feature_sigma11(double eta, double r);

/// Inverse of the affine feature map: eta = (f - 1) / (cosh(2r) - 1).
/// Requires r > 0 and f within [1, cosh(2r)].
double invert_feature(double f, double r);

/// Minimum eigenvalue of the Hermitian matrix sigma + i*Omega, computed via
/// the real-symmetric embedding [[sigma, -Omega], [Omega, sigma]].
double uncertainty_min_eigenvalue(const Mat4& sigma);

/// Uncertainty relation sigma + i*Omega >= 0, up to kPhysicalityTol.
bool check_physical(const Mat4& sigma);

}  // namespace chanlearn
