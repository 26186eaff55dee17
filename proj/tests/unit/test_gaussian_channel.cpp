#include <doctest.h>

#include <cmath>

#include "chanlearn/gaussian_channel.hpp"
#include "chanlearn/rng.hpp"

using namespace chanlearn;

namespace {
// Independent evaluations, frozen (mpmath, 30 digits).
constexpr double kCosh2 = 3.7621956910836314;
constexpr double kSinh2 = 3.6268604078470188;
constexpr double kChoi11Half = 2.3810978455418157;   // 0.5*cosh2 + 0.5
constexpr double kChoi13Half = 2.5645775888056344;   // sqrt(0.5)*sinh2
}  // namespace

TEST_CASE("tmsv covariance closed form") {
  CHECK(tmsv_covariance(0.0).isApprox(Mat4::Identity(), 1e-15));

  const Mat4 s = tmsv_covariance(1.0);
  for (int i = 0; i < 4; ++i) CHECK(s(i, i) == doctest::Approx(kCosh2).epsilon(1e-12));
  CHECK(s(0, 2) == doctest::Approx(kSinh2).epsilon(1e-12));
  CHECK(s(1, 3) == doctest::Approx(-kSinh2).epsilon(1e-12));
  CHECK(s(0, 1) == 0.0);

  for (double r : {0.1, 0.7, 2.3}) {
    const Mat4 m = tmsv_covariance(r);
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS(tmsv_covariance(-0.1));
}

TEST_CASE("lossy channel matrices") {
  auto [x1, y1] = lossy_channel_matrices(1.0);
  CHECK(x1.isApprox(Mat2::Identity(), 1e-15));
  CHECK(y1.cwiseAbs().maxCoeff() == 0.0);

  auto [x0, y0] = lossy_channel_matrices(0.0);
  CHECK(x0.cwiseAbs().maxCoeff() == 0.0);
  CHECK(y0.isApprox(Mat2::Identity(), 1e-15));

  auto [xq, yq] = lossy_channel_matrices(0.25);
  CHECK(xq.isApprox(0.5 * Mat2::Identity(), 1e-15));
  CHECK(yq.isApprox(0.75 * Mat2::Identity(), 1e-15));

  CHECK_THROWS(lossy_channel_matrices(-0.01));
  CHECK_THROWS(lossy_channel_matrices(1.01));
}

TEST_CASE("choi covariance entries and trivial limits") {
  CHECK(choi_covariance(1.0, 0.7).isApprox(tmsv_covariance(0.7), 1e-14));

  const Mat4 erased = choi_covariance(0.0, 1.0);
  CHECK(erased(0, 0) == doctest::Approx(1.0));
  CHECK(erased(2, 2) == doctest::Approx(kCosh2).epsilon(1e-12));
  CHECK(erased(0, 2) == 0.0);

  const Mat4 half = choi_covariance(0.5, 1.0);
  CHECK(half(0, 0) == doctest::Approx(kChoi11Half).epsilon(1e-13));
  CHECK(half(1, 1) == doctest::Approx(kChoi11Half).epsilon(1e-13));
  CHECK(half(0, 2) == doctest::Approx(kChoi13Half).epsilon(1e-13));
  CHECK(half(1, 3) == doctest::Approx(-kChoi13Half).epsilon(1e-13));
  CHECK(half(2, 2) == doctest::Approx(kCosh2).epsilon(1e-13));
  CHECK(half(0, 1) == 0.0);
  CHECK(half(0, 3) == 0.0);

  CHECK_THROWS(choi_covariance(1.5, 1.0));
  CHECK_THROWS(choi_covariance(0.5, -1.0));
}

TEST_CASE("channel action matches the closed form on random draws") {
  RandomStream rng(101);
  for (int i = 0; i < 1000; ++i) {
    const double eta = rng.uniform();
    const double r = rng.uniform(0.0, 3.0);
    const Mat4 via_action = apply_lossy_first_mode(tmsv_covariance(r), eta);
    const Mat4 closed = choi_covariance(eta, r);
    CHECK((via_action - closed).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("vacuum is a fixed point; identity channel is identity") {
  CHECK(apply_lossy_first_mode(Mat4::Identity(), 0.3).isApprox(Mat4::Identity(), 1e-14));
  const Mat4 s = tmsv_covariance(0.9);
  CHECK(apply_lossy_first_mode(s, 1.0).isApprox(s, 1e-14));
}

TEST_CASE("loss composition is multiplicative in eta") {
  RandomStream rng(103);
  for (int i = 0; i < 200; ++i) {
    const double e1 = rng.uniform();
    const double e2 = rng.uniform();
    const double r = rng.uniform(0.0, 2.0);
    const Mat4 twice = apply_lossy_first_mode(apply_lossy_first_mode(tmsv_covariance(r), e1), e2);
    const Mat4 once = apply_lossy_first_mode(tmsv_covariance(r), e1 * e2);
    CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("unphysical input is rejected") {
  const Mat4 squeezed_too_far = 0.5 * Mat4::Identity();
  CHECK_THROWS(apply_lossy_first_mode(squeezed_too_far, 0.5));
}

TEST_CASE("physicality check") {
  CHECK(check_physical(Mat4::Identity()));
  CHECK(check_physical(tmsv_covariance(1.0)));
  CHECK_FALSE(check_physical(0.5 * Mat4::Identity()));
  CHECK(uncertainty_min_eigenvalue(0.5 * Mat4::Identity()) == doctest::Approx(-0.5).epsilon(1e-12));

  RandomStream rng(107);
  for (int i = 0; i < 300; ++i) {
    CHECK(check_physical(choi_covariance(rng.uniform(), rng.uniform(0.0, 3.0))));
  }
}

TEST_CASE("feature map and its inverse") {
  CHECK(feature_sigma11(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(feature_sigma11(1.0, 1.0) == doctest::Approx(kCosh2).epsilon(1e-13));
  CHECK(feature_sigma11(0.5, 1.0) == doctest::Approx(kChoi11Half).epsilon(1e-13));

  // Strictly increasing in eta for fixed r > 0.
  double prev = feature_sigma11(0.0, 0.8);
  for (int i = 1; i <= 100; ++i) {
    const double f = feature_sigma11(i / 100.0, 0.8);
    CHECK(f > prev);
    prev = f;
  }

  CHECK(invert_feature(1.0, 0.5) == doctest::Approx(0.0));
  CHECK(invert_feature(std::cosh(2.0 * 0.5), 0.5) == doctest::Approx(1.0));
  CHECK(invert_feature(kChoi11Half, 1.0) == doctest::Approx(0.5).epsilon(1e-12));

  for (double r : {0.1, 0.5, 1.0, 2.0}) {
    for (int i = 0; i <= 20; ++i) {
      const double eta = i / 20.0;
      CHECK(invert_feature(feature_sigma11(eta, r), r) == doctest::Approx(eta).epsilon(1e-12));
    }
  }

  CHECK_THROWS(invert_feature(1.5, 0.0));     // degenerate map
  CHECK_THROWS(invert_feature(0.99, 1.0));    // below range
  CHECK_THROWS(invert_feature(kCosh2 + 0.1, 1.0));
}
