// Copyright 2026 The gmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gmpc/chance.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace gmpc {
namespace {

// Independent oracle: bisection on std::erf.
double erfinv_bisect(double y) {
  double lo = -10, hi = 10;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::erf(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(Covariance, Examples) {
  const Mat sw = 0.1 * Mat::Identity(2, 2);
  CovarianceSchedule one = propagate_covariance(Mat::Identity(2, 2), Mat::Identity(2, 2), sw, Mat::Zero(2, 2), 1);
  ASSERT_EQ(one.size(), 2);
  EXPECT_TRUE(one.at(1).isApprox(sw));

  CovarianceSchedule memoryless = propagate_covariance(Mat::Zero(2, 2), Mat::Identity(2, 2), sw, Mat::Zero(2, 2), 5);
  for (int k = 1; k <= 5; ++k) EXPECT_TRUE(memoryless.at(k).isApprox(sw));

  Mat phi = Mat::Zero(2, 2);
  phi(0, 0) = 0.536;
  phi(1, 1) = 0.172;
  CovarianceSchedule s = propagate_covariance(phi, Mat::Identity(2, 2), sw, Mat::Zero(2, 2), 2);
  EXPECT_NEAR(s.at(2)(0, 0), 0.1 * 0.536 * 0.536 + 0.1, 1e-15);
  EXPECT_NEAR(s.at(2)(1, 1), 0.1 * 0.172 * 0.172 + 0.1, 1e-15);
  EXPECT_NEAR(s.at(2)(0, 0), 0.12873, 1e-5);
  EXPECT_NEAR(s.at(2)(1, 1), 0.10296, 1e-5);
  EXPECT_THROW(s.at(3), std::invalid_argument);
}

TEST(Covariance, RecursionIdentityAndSymmetry) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Mat phi(3, 3), g(3, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) phi(i, j) = u(rng);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) g(i, j) = u(rng);
  Mat sw(2, 2);
  sw << 0.2, 0.05, 0.05, 0.1;
  CovarianceSchedule s = propagate_covariance(phi, g, sw, Mat::Zero(3, 3), 10);
  for (int k = 0; k < 10; ++k) {
    const Mat diff = s.at(k + 1) - phi * s.at(k) * phi.transpose();
    EXPECT_LE((diff - g * sw * g.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(s.at(k + 1), s.at(k + 1).transpose());
  }
}

TEST(Covariance, RejectsNonPsd) {
  Mat bad(2, 2);
  bad << 1, 0, 0, -0.5;
  EXPECT_THROW(propagate_covariance(Mat::Identity(2, 2), Mat::Identity(2, 2), bad, Mat::Zero(2, 2), 1),
               std::invalid_argument);
}

TEST(Erfinv, Examples) {
  EXPECT_EQ(erfinv(0.0), 0.0);
  EXPECT_NEAR(erfinv(0.6), 0.595116, 1e-6);
  EXPECT_NEAR(erfinv(0.6), erfinv_bisect(0.6), 1e-12);
  EXPECT_NEAR(std::erf(erfinv(0.9)), 0.9, 1e-9);
  EXPECT_THROW(erfinv(1.0), std::domain_error);
  EXPECT_THROW(erfinv(-1.5), std::domain_error);
}

TEST(Erfinv, AgreesWithBisectionOnGrid) {
  for (int i = -999; i <= 999; ++i) {
    const double y = i / 1000.0;
    EXPECT_NEAR(erfinv(y), erfinv_bisect(y), 1e-10) << y;
    EXPECT_NEAR(std::erf(erfinv(y)), y, 1e-12);
  }
}

TEST(Gamma, Examples) {
  const Vec grad = (Vec(2) << 1, -2).finished();
  EXPECT_EQ(gamma(grad, Mat::Identity(2, 2), 0.5), 0.0);
  EXPECT_EQ(gamma(grad, Mat::Zero(2, 2), 0.8), 0.0);
  // grad' Sigma grad = 0.2
  const Vec e1 = (Vec(2) << 1, 0).finished();
  Mat sigma = Mat::Zero(2, 2);
  sigma(0, 0) = 0.2;
  EXPECT_NEAR(gamma(e1, sigma, 0.8), std::sqrt(0.4) * erfinv_bisect(0.6), 1e-12);
  EXPECT_NEAR(gamma(e1, sigma, 0.8), 0.37641, 5e-5);
  EXPECT_THROW(gamma(e1, sigma, 1.0), std::invalid_argument);
  EXPECT_THROW(gamma(e1, sigma, 0.4), std::invalid_argument);
}

TEST(Gamma, MonotoneAndScales) {
  const Vec grad = (Vec(2) << 0.3, 1.1).finished();
  Mat sigma(2, 2);
  sigma << 0.2, 0.03, 0.03, 0.1;
  double prev = 0.0;
  for (double p = 0.5; p < 0.999; p += 0.01) {
    const double g = gamma(grad, sigma, p);
    EXPECT_GE(g, prev);
    prev = g;
  }
  EXPECT_NEAR(gamma(grad, 9.0 * sigma, 0.8), 3.0 * gamma(grad, sigma, 0.8), 1e-12);
}

TEST(Gamma, QuantileBySampling) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(-1, 1);
  const double ps[] = {0.6, 0.7, 0.8, 0.9, 0.95};
  for (double p : ps) {
    Mat L(2, 2);
    L << 1 + std::abs(u(rng)), 0, u(rng), 0.5 + std::abs(u(rng));
    const Mat sigma = 0.1 * L * L.transpose();
    const Vec grad = (Vec(2) << u(rng), u(rng)).finished();
    const double g = gamma(grad, sigma, p);
    const Mat C = sigma.llt().matrixL();
    int hits = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const Vec e = C * (Vec(2) << nd(rng), nd(rng)).finished();
      if (-grad.dot(e) <= g) ++hits;
    }
    EXPECT_NEAR(static_cast<double>(hits) / n, p, 0.005);
  }
}

TEST(ChanceConstraint, Residuals) {
  ChanceConstraint lane = ChanceConstraint::half_plane((Vec(2) << 0, 1).finished(), 2.5, 0.8);
  EXPECT_DOUBLE_EQ(deterministic_residual(lane, Vec::Zero(2), Mat::Zero(2, 2)), 2.5);

  ChanceConstraint ell = ChanceConstraint::ellipse(2, 0, 1, Vec::Zero(2), 1.0, 1.0, 0.8);
  const Vec z = (Vec(2) << 2, 0).finished();
  EXPECT_DOUBLE_EQ(ell.value(z), 3.0);
  EXPECT_DOUBLE_EQ(deterministic_residual(ell, z, Mat::Zero(2, 2)), 3.0);
  EXPECT_TRUE(ell.gradient(z).isApprox((Vec(2) << 4, 0).finished()));
  const double r = deterministic_residual(ell, z, 0.1 * Mat::Identity(2, 2));
  EXPECT_NEAR(r, 3.0 - std::sqrt(3.2) * erfinv_bisect(0.6), 1e-12);
  EXPECT_NEAR(r, 1.9355, 1e-4);
}

TEST(ChanceConstraint, EllipseGradientFiniteDifference) {
  ChanceConstraint ell = ChanceConstraint::ellipse(4, 0, 2, (Vec(2) << 6, 0.5).finished(), 1.3, 0.7, 0.8);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5, 10);
  for (int t = 0; t < 20; ++t) {
    Vec x(4);
    for (int i = 0; i < 4; ++i) x(i) = u(rng);
    const Vec g = ell.gradient(x);
    for (int i = 0; i < 4; ++i) {
      const double h = 1e-5;
      Vec xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (ell.value(xp) - ell.value(xm)) / (2 * h);
      EXPECT_NEAR(fd, g(i), 1e-6 * std::max(1.0, std::abs(g(i))));
    }
  }
}

TEST(ChanceConstraint, EncodesAdmissibleSet) {
  ChanceConstraint ell = ChanceConstraint::ellipse(2, 0, 1, Vec::Zero(2), 2.0, 1.0, 0.8);
  EXPECT_GT(ell.value((Vec(2) << 2.1, 0).finished()), 0.0);
  EXPECT_LT(ell.value((Vec(2) << 1.9, 0).finished()), 0.0);
  EXPECT_NEAR(ell.value((Vec(2) << 0, 1).finished()), 0.0, 1e-15);
  EXPECT_THROW(ChanceConstraint::ellipse(2, 0, 0, Vec::Zero(2), 1, 1, 0.8), std::invalid_argument);
}

}  // namespace
}  // namespace gmpc
