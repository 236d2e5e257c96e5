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

#include "gmpc/sysmodel.hpp"

#include <random>

#include <gtest/gtest.h>

namespace gmpc {
namespace {

LinearModel detailed_model(double dt = 0.2) {
  Mat A = Mat::Identity(4, 4);
  A(0, 1) = dt;
  A(2, 3) = dt;
  Mat B = Mat::Zero(4, 2);
  B(0, 0) = 0.5 * dt * dt;
  B(1, 0) = dt;
  B(2, 1) = 0.5 * dt * dt;
  B(3, 1) = dt;
  return LinearModel(A, B, Mat::Identity(4, 4), dt,
                     BoundedDisturbance{Zonotope::box(Vec::Constant(4, -0.1), Vec::Constant(4, 0.1))});
}

LinearModel coarse_model(double dt = 0.2) {
  return LinearModel(Mat::Identity(2, 2), dt * Mat::Identity(2, 2), Mat::Identity(2, 2), dt,
                     GaussianDisturbance{0.1 * Mat::Identity(2, 2)});
}

ProjectionMap scenario_projection() {
  Mat m = Mat::Zero(4, 6);
  m(0, 0) = 1;
  m(1, 2) = 1;
  m(2, 1) = 1;
  m(3, 3) = 1;
  return ProjectionMap(m, 4, 2, 2);
}

TEST(Step, Examples) {
  LinearModel d = detailed_model();
  EXPECT_TRUE(step(d, Vec::Zero(4), Vec::Zero(2), Vec::Zero(4)).isZero());
  Vec x(4);
  x << 0, 1, 0, 0;
  Vec expected(4);
  expected << 0.2, 1, 0, 0;
  EXPECT_TRUE(step(d, x, Vec::Zero(2), Vec::Zero(4)).isApprox(expected, 1e-15));

  LinearModel c = coarse_model();
  Vec xi(2), v(2), out(2);
  xi << 1, 1;
  v << 2, 0;
  out << 1.4, 1;
  EXPECT_TRUE(step(c, xi, v, Vec::Zero(2)).isApprox(out, 1e-15));
  EXPECT_THROW(step(c, Vec::Zero(3), v, Vec::Zero(2)), std::invalid_argument);
}

TEST(LinearModel, Validation) {
  EXPECT_THROW(LinearModel(Mat::Identity(2, 2), Mat::Identity(3, 1), Mat::Identity(2, 2), 0.2,
                           GaussianDisturbance{Mat::Identity(2, 2)}),
               std::invalid_argument);
  EXPECT_THROW(LinearModel(Mat::Identity(2, 2), Mat::Identity(2, 1), Mat::Identity(2, 2), 0.0,
                           GaussianDisturbance{Mat::Identity(2, 2)}),
               std::invalid_argument);
  Mat not_psd(2, 2);
  not_psd << 1, 0, 0, -1;
  EXPECT_THROW(LinearModel(Mat::Identity(2, 2), Mat::Identity(2, 1), Mat::Identity(2, 2), 0.2,
                           GaussianDisturbance{not_psd}),
               std::invalid_argument);
  Vec lo(2), hi(2);
  lo << 0.5, -1;
  hi << 1, 1;
  EXPECT_THROW(LinearModel(Mat::Identity(2, 2), Mat::Identity(2, 1), Mat::Identity(2, 2), 0.2,
                           BoundedDisturbance{Zonotope::box(lo, hi)}),
               std::invalid_argument);
}

TEST(Project, Examples) {
  ProjectionMap pm = scenario_projection();
  Vec x(4), u(2);
  x << 1, 2, 3, 4;
  u << 5, 6;
  Projected p = project(pm, x, u);
  EXPECT_TRUE(p.xi.isApprox((Vec(2) << 1, 3).finished()));
  EXPECT_TRUE(p.v.isApprox((Vec(2) << 2, 4).finished()));
  Projected zero = project(pm, Vec::Zero(4), Vec::Zero(2));
  EXPECT_TRUE(zero.xi.isZero() && zero.v.isZero());
  x << 7, 0, 0, 0;
  p = project(pm, x, Vec::Zero(2));
  EXPECT_TRUE(p.xi.isApprox((Vec(2) << 7, 0).finished()));
  EXPECT_TRUE(p.v.isZero());
}

TEST(Project, RejectsRankDeficientMap) {
  Mat m = Mat::Zero(2, 6);
  m(0, 0) = 1;
  m(1, 0) = 2;
  EXPECT_THROW(ProjectionMap(m, 4, 2, 1), std::invalid_argument);
}

// Position of the coarse prediction matches the detailed one up to the
// acceleration term, which vanishes for u = 0.
TEST(Project, ConsistentWithCoarseStepAtZeroInput) {
  LinearModel d = detailed_model();
  LinearModel c = coarse_model();
  ProjectionMap pm = scenario_projection();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 100; ++i) {
    Vec x(4);
    for (int j = 0; j < 4; ++j) x(j) = u(rng);
    const Vec zero_u = Vec::Zero(2);
    Projected now = project(pm, x, zero_u);
    Projected next = project(pm, step(d, x, zero_u, Vec::Zero(4)), zero_u);
    EXPECT_TRUE(next.xi.isApprox(step(c, now.xi, now.v, Vec::Zero(2)), 1e-12));
  }
}

TEST(Dlqr, CoarseGain) {
  LqrResult r = dlqr(Mat::Identity(2, 2), 0.2 * Mat::Identity(2, 2), Mat::Identity(2, 2), 0.1 * Mat::Identity(2, 2));
  // Scalar oracle: p = 1 + p - 0.04 p^2 / (0.1 + 0.04 p)  =>  0.04 p^2 - 0.04 p - 0.1 = 0.
  const double p = (0.04 + std::sqrt(0.04 * 0.04 + 4 * 0.04 * 0.1)) / (2 * 0.04);
  const double k = 0.2 * p / (0.1 + 0.04 * p);
  EXPECT_NEAR(-r.K(0, 0), k, 1e-8);
  EXPECT_NEAR(-r.K(0, 0), 2.3166, 1e-4);
  EXPECT_NEAR(r.K(0, 1), 0.0, 1e-12);
}

TEST(Dlqr, DareResidual) {
  LinearModel d = detailed_model();
  Mat Q = Vec((Vec(4) << 1, 0.1, 1, 0.1).finished()).asDiagonal();
  Mat R = 0.1 * Mat::Identity(2, 2);
  LqrResult r = dlqr(d.A(), d.B(), Q, R);
  const Mat& P = r.P;
  const Mat& A = d.A();
  const Mat& B = d.B();
  Mat rhs = A.transpose() * P * A -
            A.transpose() * P * B * (R + B.transpose() * P * B).inverse() * B.transpose() * P * A + Q;
  EXPECT_LE((P - rhs).norm(), 1e-8);
  EXPECT_LT(spectral_radius(A + B * r.K), 1.0);
}

TEST(Dlqr, DeadbeatLimitAndZeroQ) {
  Mat A(2, 2);
  A << 1, 0.5, 0, 0.9;
  Mat B(2, 2);
  B << 1, 0.2, 0, 1;
  LqrResult r = dlqr(A, B, Mat::Identity(2, 2), 1e-8 * Mat::Identity(2, 2));
  EXPECT_TRUE((-r.K).isApprox(B.inverse() * A, 1e-5));
  LqrResult z = dlqr(0.5 * Mat::Identity(2, 2), B, Mat::Zero(2, 2), Mat::Identity(2, 2));
  EXPECT_LE(z.K.norm(), 1e-12);
}

TEST(ClosedLoop, ScenarioBlockEigenvalues) {
  LinearModel d = detailed_model();
  Mat K = Mat::Zero(2, 4);
  K(0, 0) = -3.77;
  K(0, 1) = -4.67;
  K(1, 2) = -3.77;
  K(1, 3) = -4.67;
  Mat phi = closed_loop(d, K);
  // Characteristic polynomial of the 2x2 block: l^2 - tr l + det.
  const Mat blk = phi.block(0, 0, 2, 2);
  const double tr = blk.trace(), det = blk.determinant();
  const double disc = std::sqrt(tr * tr - 4 * det);
  EXPECT_NEAR((tr + disc) / 2, 0.818, 1e-3);
  EXPECT_NEAR((tr - disc) / 2, 0.173, 1e-3);
  EXPECT_THROW(closed_loop(d, -K), std::invalid_argument);
  EXPECT_THROW(closed_loop(coarse_model(), Mat::Zero(2, 2)), std::invalid_argument);
}

TEST(ClosedLoop, CoarseGains) {
  LinearModel c = coarse_model();
  Mat Kc = Mat::Zero(2, 2);
  Kc(0, 0) = -2.32;
  Kc(1, 1) = -4.14;
  Mat phi = closed_loop(c, Kc);
  EXPECT_NEAR(phi(0, 0), 0.536, 1e-12);
  EXPECT_NEAR(phi(1, 1), 0.172, 1e-12);
  Mat K = Mat::Zero(2, 4);
  K(0, 0) = -3.77;
  K(0, 1) = -4.67;
  K(1, 2) = -3.77;
  K(1, 3) = -4.67;
  GainPair pair(detailed_model(), K, c, Kc);
  EXPECT_NEAR(pair.Phi_c()(1, 1), 0.172, 1e-12);
}

TEST(ClosedLoop, StableAWithZeroGain) {
  LinearModel m(0.5 * Mat::Identity(2, 2), Mat::Identity(2, 1), Mat::Identity(2, 2), 0.1,
                GaussianDisturbance{Mat::Identity(2, 2)});
  EXPECT_TRUE(closed_loop(m, Mat::Zero(1, 2)).isApprox(m.A()));
}

}  // namespace
}  // namespace gmpc
