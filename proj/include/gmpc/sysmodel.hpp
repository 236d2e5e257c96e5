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

#ifndef GMPC_SYSMODEL_HPP_
#define GMPC_SYSMODEL_HPP_

#include <variant>

#include "gmpc/linalg.hpp"
#include "gmpc/setops.hpp"

namespace gmpc {

struct BoundedDisturbance {
  Zonotope set;
};

struct GaussianDisturbance {
  Mat covariance;
};

using Disturbance = std::variant<BoundedDisturbance, GaussianDisturbance>;

// x+ = A x + B u + G d, with d either set-bounded or zero-mean Gaussian.
class LinearModel {
 public:
  LinearModel(Mat A, Mat B, Mat G, double dt, Disturbance disturbance);

  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }
  const Mat& G() const { return G_; }
  double dt() const { return dt_; }
  const Disturbance& disturbance() const { return disturbance_; }

  int nx() const { return static_cast<int>(A_.rows()); }
  int nu() const { return static_cast<int>(B_.cols()); }
  int nw() const { return static_cast<int>(G_.cols()); }

  bool is_bounded() const { return std::holds_alternative<BoundedDisturbance>(disturbance_); }
  const Zonotope& disturbance_set() const;
  const Mat& disturbance_covariance() const;

 private:
  Mat A_, B_, G_;
  double dt_;
  Disturbance disturbance_;
};

Vec step(const LinearModel& model, const Vec& x, const Vec& u, const Vec& d);

// Linear map stacking (x, u) -> (xi, v). Must have full row rank.
class ProjectionMap {
 public:
  // The first nxi output rows form the coarse state, the rest the input.
  ProjectionMap(Mat matrix, int nx, int nu, int nxi);

  const Mat& matrix() const { return matrix_; }
  int nx() const { return nx_; }
  int nu() const { return nu_; }
  int nxi() const { return nxi_; }
  int nv() const { return static_cast<int>(matrix_.rows()) - nxi_; }

 private:
  Mat matrix_;
  int nx_, nu_, nxi_;
};

struct Projected {
  Vec xi;
  Vec v;
};

Projected project(const ProjectionMap& pm, const Vec& x, const Vec& u);

struct LqrResult {
  Mat K;  // u = K x stabilizes, i.e. A + B K is Schur
  Mat P;
  int iterations;
};

// Fixed-point iteration of the discrete algebraic Riccati equation.
// The returned gain follows the u = K x convention (closed loop A + B K).
LqrResult dlqr(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, double tol = 1e-10,
               int max_iterations = 100000);

// A + B K; throws if the spectral radius is not below one.
Mat closed_loop(const LinearModel& model, const Mat& K);

// Feedback gains of both granularities with validated closed loops.
class GainPair {
 public:
  GainPair(const LinearModel& detailed, Mat K, const LinearModel& coarse, Mat Kc);

  const Mat& K() const { return K_; }
  const Mat& Kc() const { return Kc_; }
  const Mat& Phi() const { return Phi_; }
  const Mat& Phi_c() const { return Phi_c_; }

 private:
  Mat K_, Kc_, Phi_, Phi_c_;
};

}  // namespace gmpc

#endif  // GMPC_SYSMODEL_HPP_
