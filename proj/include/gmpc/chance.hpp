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

// Gaussian chance constraints for the long-term prediction stage.
//
// The stochastic error e of the stabilized coarse model is zero-mean
// Gaussian with a covariance that follows the Lyapunov recursion. A state
// constraint g(xi) >= 0, linearized around the deterministic prediction z,
// holds with probability p when
//
//   g(z) >= gamma = sqrt(2 grad' Sigma grad) * erfinv(2p - 1).

#ifndef GMPC_CHANCE_HPP_
#define GMPC_CHANCE_HPP_

#include <vector>

#include "gmpc/linalg.hpp"

namespace gmpc {

class CovarianceSchedule {
 public:
  CovarianceSchedule(std::vector<Mat> sigmas, Mat phi, Mat gc_sigma_gcT);

  // Covariance after k steps of the recursion.
  const Mat& at(int k) const;
  int size() const { return static_cast<int>(sigmas_.size()); }
  const std::vector<Mat>& sigmas() const { return sigmas_; }
  const Mat& phi() const { return phi_; }
  const Mat& gc_sigma_gcT() const { return gc_sigma_gcT_; }

 private:
  std::vector<Mat> sigmas_;
  Mat phi_;
  Mat gc_sigma_gcT_;
};

// Sigma_{k+1} = Phi Sigma_k Phi' + G Sigma_w G', symmetrized every step.
// Returns n_steps + 1 matrices starting at sigma0.
CovarianceSchedule propagate_covariance(const Mat& phi, const Mat& g, const Mat& sigma_w, const Mat& sigma0,
                                        int n_steps);

// Inverse error function on (-1, 1), accurate to 1e-10 or better.
double erfinv(double y);

// Deterministic tightening margin for risk level p in [0.5, 1).
double gamma(const Vec& grad, const Mat& sigma, double p);

// g(x) >= 0 encodes the admissible set. Ellipse constraints act on two
// selected coordinates (positions) of the state they are evaluated on.
class ChanceConstraint {
 public:
  enum class Kind { kEllipse, kHalfPlane };

  // Exterior of the ellipse ((x_i - c_x)/a)^2 + ((x_j - c_y)/b)^2 >= 1.
  static ChanceConstraint ellipse(int state_dim, int ix, int iy, const Vec& center, double a, double b,
                                  double p);
  // normal' x <= offset.
  static ChanceConstraint half_plane(const Vec& normal, double offset, double p);

  Kind kind() const { return kind_; }
  double p() const { return p_; }
  int state_dim() const { return state_dim_; }
  const Vec& normal() const { return normal_; }
  double offset() const { return offset_; }
  const Vec& center() const { return center_; }
  double a() const { return a_; }
  double b() const { return b_; }
  int ix() const { return ix_; }
  int iy() const { return iy_; }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;

 private:
  ChanceConstraint() = default;

  Kind kind_ = Kind::kHalfPlane;
  double p_ = 0.5;
  int state_dim_ = 0;
  Vec normal_;
  double offset_ = 0.0;
  Vec center_;
  double a_ = 1.0, b_ = 1.0;
  int ix_ = 0, iy_ = 1;
};

// g(z) - gamma(grad g(z), sigma, p). Nonnegative iff the reformulated
// chance constraint holds at z.
double deterministic_residual(const ChanceConstraint& c, const Vec& z, const Mat& sigma);

}  // namespace gmpc

#endif  // GMPC_CHANCE_HPP_
