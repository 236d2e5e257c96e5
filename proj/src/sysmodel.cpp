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

#include <sstream>

#include <Eigen/Eigenvalues>

namespace gmpc {

LinearModel::LinearModel(Mat A, Mat B, Mat G, double dt, Disturbance disturbance)
    : A_(std::move(A)), B_(std::move(B)), G_(std::move(G)), dt_(dt), disturbance_(std::move(disturbance)) {
  require(A_.rows() == A_.cols(), "LinearModel: A must be square");
  require(B_.rows() == A_.rows(), "LinearModel: B must have as many rows as A");
  require(G_.rows() == A_.rows(), "LinearModel: G must have as many rows as A");
  require(dt_ > 0.0, "LinearModel: dt must be positive");
  require(A_.allFinite() && B_.allFinite() && G_.allFinite(), "LinearModel: matrices must be finite");
  if (const auto* bounded = std::get_if<BoundedDisturbance>(&disturbance_)) {
    require(bounded->set.dim() == G_.cols(), "LinearModel: disturbance set dimension must match G");
    // Zonotope membership of the origin: solved as a small LP via its H-rep
    // when full-dimensional, otherwise the center has to vanish.
    const Zonotope& set = bounded->set;
    if (set.is_full_dimensional()) {
      require(to_hpolytope(set).contains(Vec::Zero(set.dim()), 1e-12),
              "LinearModel: bounded disturbance set must contain the origin");
    } else {
      require(set.center().norm() == 0.0, "LinearModel: bounded disturbance set must contain the origin");
    }
  } else {
    const Mat& cov = std::get<GaussianDisturbance>(disturbance_).covariance;
    require(cov.rows() == G_.cols() && cov.cols() == G_.cols(),
            "LinearModel: covariance dimension must match G");
    require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + cov.cwiseAbs().maxCoeff()),
            "LinearModel: covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    require(es.eigenvalues().minCoeff() >= -1e-12, "LinearModel: covariance must be positive semidefinite");
  }
}

const Zonotope& LinearModel::disturbance_set() const {
  const auto* bounded = std::get_if<BoundedDisturbance>(&disturbance_);
  require(bounded != nullptr, "LinearModel: model has no bounded disturbance");
  return bounded->set;
}

const Mat& LinearModel::disturbance_covariance() const {
  const auto* gaussian = std::get_if<GaussianDisturbance>(&disturbance_);
  require(gaussian != nullptr, "LinearModel: model has no Gaussian disturbance");
  return gaussian->covariance;
}

Vec step(const LinearModel& model, const Vec& x, const Vec& u, const Vec& d) {
  require(x.size() == model.nx(), "step: state dimension mismatch");
  require(u.size() == model.nu(), "step: input dimension mismatch");
  require(d.size() == model.nw(), "step: disturbance dimension mismatch");
  return model.A() * x + model.B() * u + model.G() * d;
}

ProjectionMap::ProjectionMap(Mat matrix, int nx, int nu, int nxi)
    : matrix_(std::move(matrix)), nx_(nx), nu_(nu), nxi_(nxi) {
  require(matrix_.cols() == nx + nu, "ProjectionMap: columns must equal nx + nu");
  Eigen::FullPivLU<Mat> lu(matrix_);
  require(lu.rank() == matrix_.rows(), "ProjectionMap: map must be surjective (full row rank)");
  require(nxi_ >= 0 && nxi_ <= matrix_.rows(), "ProjectionMap: invalid coarse state size");
}

Projected project(const ProjectionMap& pm, const Vec& x, const Vec& u) {
  require(x.size() == pm.nx(), "project: state dimension mismatch");
  require(u.size() == pm.nu(), "project: input dimension mismatch");
  Vec stacked(pm.nx() + pm.nu());
  stacked << x, u;
  const Vec out = pm.matrix() * stacked;
  return {out.head(pm.nxi()), out.tail(pm.nv())};
}

LqrResult dlqr(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, double tol, int max_iterations) {
  require(A.rows() == A.cols(), "dlqr: A must be square");
  require(B.rows() == A.rows(), "dlqr: B rows must match A");
  require(Q.rows() == A.rows() && Q.cols() == A.cols(), "dlqr: Q must match A");
  require(R.rows() == B.cols() && R.cols() == B.cols(), "dlqr: R must match the input dimension");
  Eigen::SelfAdjointEigenSolver<Mat> r_eig(R);
  require(r_eig.eigenvalues().minCoeff() > 0.0, "dlqr: R must be positive definite");

  Mat P = Q;
  for (int it = 1; it <= max_iterations; ++it) {
    const Mat BtP = B.transpose() * P;
    const Mat gain = (R + BtP * B).ldlt().solve(BtP * A);
    Mat next = A.transpose() * P * A - A.transpose() * P * B * gain + Q;
    next = 0.5 * (next + next.transpose());
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (diff <= tol * (1.0 + P.cwiseAbs().maxCoeff())) {
      const Mat BtPf = B.transpose() * P;
      Mat K = -(R + BtPf * B).ldlt().solve(BtPf * A);
      return {K, P, it};
    }
  }
  throw std::runtime_error("dlqr: Riccati iteration did not converge");
}

Mat closed_loop(const LinearModel& model, const Mat& K) {
  require(K.rows() == model.nu() && K.cols() == model.nx(), "closed_loop: gain dimension mismatch");
  Mat Phi = model.A() + model.B() * K;
  const double rho = spectral_radius(Phi);
  if (!(rho < 1.0)) {
    std::ostringstream msg;
    msg << "closed_loop: A + B K is not stable (spectral radius " << rho << ")";
    throw std::invalid_argument(msg.str());
  }
  return Phi;
}

GainPair::GainPair(const LinearModel& detailed, Mat K, const LinearModel& coarse, Mat Kc)
    : K_(std::move(K)), Kc_(std::move(Kc)) {
  Phi_ = closed_loop(detailed, K_);
  Phi_c_ = closed_loop(coarse, Kc_);
}

}  // namespace gmpc
