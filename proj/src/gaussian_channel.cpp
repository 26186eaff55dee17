#include "chanlearn/gaussian_channel.hpp"

#include <cmath>
#include <stdexcept>

namespace chanlearn {

namespace {

void require_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("transmissivity must lie in [0, 1]");
  }
}

void require_squeeze(double r) {
  if (!(r >= 0.0)) {
    throw std::invalid_argument("squeezing parameter must be >= 0");
  }
}

}  // namespace

Mat4 symplectic_form() {
  Mat4 omega = Mat4::Zero();
  omega(0, 1) = 1.0;
  omega(1, 0) = -1.0;
  omega(2, 3) = 1.0;
  omega(3, 2) = -1.0;
  return omega;
}

Mat4 tmsv_covariance(double r) {
  require_squeeze(r);
  const double ch = std::cosh(2.0 * r);
  const double sh = std::sinh(2.0 * r);
  Mat4 sigma = Mat4::Zero();
  sigma(0, 0) = sigma(1, 1) = sigma(2, 2) = sigma(3, 3) = ch;
  sigma(0, 2) = sigma(2, 0) = sh;
  sigma(1, 3) = sigma(3, 1) = -sh;
  return sigma;
}

ChannelMatrices lossy_channel_matrices(double eta) {
  require_eta(eta);
  return {std::sqrt(eta) * Mat2::Identity(), (1.0 - eta) * Mat2::Identity()};
}

Mat4 apply_lossy_first_mode(const Mat4& sigma, double eta) {
  require_eta(eta);
  if (!check_physical(sigma)) {
    throw std::invalid_argument("input covariance violates the uncertainty relation");
  }
  const auto [x, y] = lossy_channel_matrices(eta);
  Mat4 big_x = Mat4::Identity();
  big_x.topLeftCorner<2, 2>() = x;
  Mat4 big_y = Mat4::Zero();
  big_y.topLeftCorner<2, 2>() = y;
  return big_x * sigma * big_x.transpose() + big_y;
}

Mat4 choi_covariance(double eta, double r) {
  require_eta(eta);
  require_squeeze(r);
  const double ch = std::cosh(2.0 * r);
  const double sh = std::sinh(2.0 * r);
  const double off = std::sqrt(eta) * sh;
  Mat4 sigma = Mat4::Zero();
  sigma(0, 0) = sigma(1, 1) = eta * ch + (1.0 - eta);
  sigma(2, 2) = sigma(3, 3) = ch;
  sigma(0, 2) = sigma(2, 0) = off;
  sigma(1, 3) = sigma(3, 1) = -off;
  return sigma;
}

double feature_sigma11(double eta, double r) {
  require_eta(eta);
  require_squeeze(r);
  return eta * std::cosh(2.0 * r) + (1.0 - eta);
}

double invert_feature(double f, double r) {
  require_squeeze(r);
  if (r == 0.0) {
    throw std::invalid_argument("invert_feature: map is degenerate at r = 0");
  }
  const double top = std::cosh(2.0 * r);
  if (!(f >= 1.0 && f <= top)) {
    throw std::invalid_argument("invert_feature: feature outside [1, cosh(2r)]");
  }
  return (f - 1.0) / (top - 1.0);
}

double uncertainty_min_eigenvalue(const Mat4& sigma) {
  // For Hermitian H = A + iB, [[A, -B], [B, A]] is real symmetric with the
  // same spectrum (doubled). Here A = sigma, B = Omega.
  const Mat4 omega = symplectic_form();
  Eigen::Matrix<double, 8, 8> embed;
  embed.topLeftCorner<4, 4>() = sigma;
  embed.topRightCorner<4, 4>() = -omega;
  embed.bottomLeftCorner<4, 4>() = omega;
  embed.bottomRightCorner<4, 4>() = sigma;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> solver(
      embed, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool check_physical(const Mat4& sigma) {
  return uncertainty_min_eigenvalue(sigma) >= kPhysicalityTol;
}

}  // namespace chanlearn
