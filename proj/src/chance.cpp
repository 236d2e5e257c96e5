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
#include <numbers>

#include <Eigen/Eigenvalues>

namespace gmpc {
namespace {

void require_psd(const Mat& m, const char* what) {
  require(m.rows() == m.cols(), std::string(what) + " must be square");
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + m.cwiseAbs().maxCoeff()),
          std::string(what) + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-12 * (1.0 + m.cwiseAbs().maxCoeff()),
          std::string(what) + " must be positive semidefinite");
}

}  // namespace

CovarianceSchedule::CovarianceSchedule(std::vector<Mat> sigmas, Mat phi, Mat gc_sigma_gcT)
    : sigmas_(std::move(sigmas)), phi_(std::move(phi)), gc_sigma_gcT_(std::move(gc_sigma_gcT)) {
  require(!sigmas_.empty(), "CovarianceSchedule: at least one covariance is required");
}

const Mat& CovarianceSchedule::at(int k) const {
  require(k >= 0 && k < size(), "CovarianceSchedule: step index out of range");
  return sigmas_[static_cast<size_t>(k)];
}

CovarianceSchedule propagate_covariance(const Mat& phi, const Mat& g, const Mat& sigma_w, const Mat& sigma0,
                                        int n_steps) {
  require(n_steps >= 0, "propagate_covariance: n_steps must be nonnegative");
  require(phi.rows() == phi.cols(), "propagate_covariance: phi must be square");
  require(g.rows() == phi.rows() && g.cols() == sigma_w.rows(), "propagate_covariance: G dimension mismatch");
  require(sigma0.rows() == phi.rows(), "propagate_covariance: sigma0 dimension mismatch");
  require_psd(sigma_w, "propagate_covariance: sigma_w");
  require_psd(sigma0, "propagate_covariance: sigma0");

  Mat process = g * sigma_w * g.transpose();
  process = 0.5 * (process + process.transpose());
  std::vector<Mat> sigmas;
  sigmas.reserve(static_cast<size_t>(n_steps) + 1);
  sigmas.push_back(sigma0);
  for (int k = 0; k < n_steps; ++k) {
    Mat next = phi * sigmas.back() * phi.transpose() + process;
    sigmas.push_back(0.5 * (next + next.transpose()));
  }
  return CovarianceSchedule(std::move(sigmas), phi, process);
}

double erfinv(double y) {
  if (!(std::abs(y) < 1.0)) throw std::domain_error("erfinv: argument must lie in (-1, 1)");
  if (y == 0.0) return 0.0;

  // Initial guess: Giles' single-precision rational approximation.
  const double w = -std::log((1.0 - y) * (1.0 + y));
  double x;
  if (w < 5.0) {
    const double t = w - 2.5;
    double q = 2.81022636e-08;
    q = 3.43273939e-07 + q * t;
    q = -3.5233877e-06 + q * t;
    q = -4.39150654e-06 + q * t;
    q = 0.00021858087 + q * t;
    q = -0.00125372503 + q * t;
    q = -0.00417768164 + q * t;
    q = 0.246640727 + q * t;
    q = 1.50140941 + q * t;
    x = q * y;
  } else {
    const double t = std::sqrt(w) - 3.0;
    double q = -0.000200214257;
    q = 0.000100950558 + q * t;
    q = 0.00134934322 + q * t;
    q = -0.00367342844 + q * t;
    q = 0.00573950773 + q * t;
    q = -0.0076224613 + q * t;
    q = 0.00943887047 + q * t;
    q = 1.00167406 + q * t;
    q = 2.83297682 + q * t;
    x = q * y;
  }

  // Newton refinement on erf.
  const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
  for (int it = 0; it < 6; ++it) {
    const double err = std::erf(x) - y;
    const double step = err / (two_over_sqrt_pi * std::exp(-x * x));
    x -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(x))) break;
  }
  return x;
}

double gamma(const Vec& grad, const Mat& sigma, double p) {
  if (!(p >= 0.5 && p < 1.0)) throw std::invalid_argument("gamma: risk parameter p must lie in [0.5, 1)");
  require(sigma.rows() == grad.size() && sigma.cols() == grad.size(), "gamma: dimension mismatch");
  const double variance = std::max(0.0, grad.dot(sigma * grad));
  return std::sqrt(2.0 * variance) * erfinv(2.0 * p - 1.0);
}

ChanceConstraint ChanceConstraint::ellipse(int state_dim, int ix, int iy, const Vec& center, double a, double b,
                                           double p) {
  require(state_dim >= 2 && ix >= 0 && iy >= 0 && ix < state_dim && iy < state_dim && ix != iy,
          "ChanceConstraint::ellipse: invalid coordinate selection");
  require(center.size() == 2, "ChanceConstraint::ellipse: center must be 2-D");
  require(a > 0.0 && b > 0.0, "ChanceConstraint::ellipse: semi-axes must be positive");
  require(p >= 0.5 && p < 1.0, "ChanceConstraint: p must lie in [0.5, 1)");
  ChanceConstraint c;
  c.kind_ = Kind::kEllipse;
  c.state_dim_ = state_dim;
  c.ix_ = ix;
  c.iy_ = iy;
  c.center_ = center;
  c.a_ = a;
  c.b_ = b;
  c.p_ = p;
  return c;
}

ChanceConstraint ChanceConstraint::half_plane(const Vec& normal, double offset, double p) {
  require(normal.size() > 0 && normal.norm() > 0.0, "ChanceConstraint::half_plane: normal must be nonzero");
  require(p >= 0.5 && p < 1.0, "ChanceConstraint: p must lie in [0.5, 1)");
  ChanceConstraint c;
  c.kind_ = Kind::kHalfPlane;
  c.state_dim_ = static_cast<int>(normal.size());
  c.normal_ = normal;
  c.offset_ = offset;
  c.p_ = p;
  return c;
}

double ChanceConstraint::value(const Vec& x) const {
  require(x.size() == state_dim_, "ChanceConstraint: state dimension mismatch");
  if (kind_ == Kind::kHalfPlane) return offset_ - normal_.dot(x);
  const double dx = (x(ix_) - center_(0)) / a_;
  const double dy = (x(iy_) - center_(1)) / b_;
  return dx * dx + dy * dy - 1.0;
}

Vec ChanceConstraint::gradient(const Vec& x) const {
  require(x.size() == state_dim_, "ChanceConstraint: state dimension mismatch");
  if (kind_ == Kind::kHalfPlane) return -normal_;
  Vec grad = Vec::Zero(state_dim_);
  grad(ix_) = 2.0 * (x(ix_) - center_(0)) / (a_ * a_);
  grad(iy_) = 2.0 * (x(iy_) - center_(1)) / (b_ * b_);
  return grad;
}

double deterministic_residual(const ChanceConstraint& c, const Vec& z, const Mat& sigma) {
  return c.value(z) - gamma(c.gradient(z), sigma, c.p());
}

}  // namespace gmpc
