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

#include "gmpc/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace gmpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Working data of the dual method. Constraints are stored as n'x >= b.
// J = L^{-T} Q and R is the upper triangular factor of the active normals.
struct Workspace {
  int n = 0;
  int q = 0;  // active set size
  Mat J;
  Mat R;
  std::vector<int> active;  // constraint ids, equalities first
  Vec u;                    // multipliers of active constraints
};

// Applies Givens reflections so that d(q+1..) vanishes, then appends d(0..q)
// as the new column of R. Returns false for a linearly dependent normal.
bool add_constraint(Workspace& w, Vec& d, double r_norm) {
  const int n = w.n;
  for (int j = n - 1; j > w.q; --j) {
    double cc = d(j - 1);
    double ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    d(j) = 0.0;
    cc /= h;
    ss /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    for (int k = 0; k < n; ++k) {
      const double t1 = w.J(k, j - 1);
      const double t2 = w.J(k, j);
      w.J(k, j - 1) = cc * t1 + ss * t2;
      w.J(k, j) = ss * t1 - cc * t2;
    }
  }
  w.q += 1;
  w.R.col(w.q - 1).head(w.q) = d.head(w.q);
  return std::abs(d(w.q - 1)) > std::numeric_limits<double>::epsilon() * r_norm;
}

void delete_constraint(Workspace& w, int position) {
  const int n = w.n;
  for (int i = position; i < w.q - 1; ++i) {
    w.active[static_cast<size_t>(i)] = w.active[static_cast<size_t>(i) + 1];
    w.u(i) = w.u(i + 1);
    w.R.col(i) = w.R.col(i + 1);
  }
  w.active.pop_back();
  w.u.conservativeResize(w.q - 1);
  w.R.col(w.q - 1).setZero();
  w.q -= 1;
  for (int j = position; j < w.q; ++j) {
    double cc = w.R(j, j);
    double ss = w.R(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    cc /= h;
    ss /= h;
    w.R(j + 1, j) = 0.0;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      w.R(j, j) = -h;
    } else {
      w.R(j, j) = h;
    }
    for (int k = j + 1; k < w.q; ++k) {
      const double t1 = w.R(j, k);
      const double t2 = w.R(j + 1, k);
      w.R(j, k) = cc * t1 + ss * t2;
      w.R(j + 1, k) = ss * t1 - cc * t2;
    }
    for (int k = 0; k < n; ++k) {
      const double t1 = w.J(k, j);
      const double t2 = w.J(k, j + 1);
      w.J(k, j) = cc * t1 + ss * t2;
      w.J(k, j + 1) = ss * t1 - cc * t2;
    }
  }
}

// z = J2 d2 (primal step direction), r = R^{-1} d1 (dual step direction).
void step_directions(const Workspace& w, const Vec& d, Vec& z, Vec& r) {
  z = w.J.rightCols(w.n - w.q) * d.tail(w.n - w.q);
  r = w.R.topLeftCorner(w.q, w.q).triangularView<Eigen::Upper>().solve(d.head(w.q));
}

}  // namespace

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal:
      return "optimal";
    case QpStatus::kInfeasible:
      return "infeasible";
    case QpStatus::kMaxIterations:
      return "max-iterations";
  }
  return "unknown";
}

QpResult qp_solve(const Mat& H, const Vec& f, const Mat& A_in, const Vec& b_in, const Mat& A_eq, const Vec& b_eq,
                  int max_iterations) {
  const int n = static_cast<int>(H.rows());
  require(H.cols() == n && f.size() == n, "qp_solve: H and f dimension mismatch");
  const int mi = static_cast<int>(A_in.rows());
  const int me = static_cast<int>(A_eq.rows());
  require(b_in.size() == mi && (mi == 0 || A_in.cols() == n), "qp_solve: inequality dimension mismatch");
  require(b_eq.size() == me && (me == 0 || A_eq.cols() == n), "qp_solve: equality dimension mismatch");
  require(H.allFinite() && f.allFinite() && A_in.allFinite() && b_in.allFinite() && A_eq.allFinite() &&
              b_eq.allFinite(),
          "qp_solve: inputs must be finite");

  Mat Hs = 0.5 * (H + H.transpose());
  Eigen::LLT<Mat> llt(Hs);
  if (llt.info() != Eigen::Success) {
    Hs.diagonal().array() += 1e-9;
    llt.compute(Hs);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("qp_solve: H is not positive semidefinite");
  }

  Workspace w;
  w.n = n;
  w.J = llt.matrixU().solve(Mat::Identity(n, n));  // L^{-T}
  w.R = Mat::Zero(n, n);
  w.u.resize(0);

  QpResult result;
  Vec x = -llt.solve(f);
  double r_norm = 1.0;
  // A_in rows are a' x <= b, i.e. (-a)' x >= -b.
  auto normal = [&](int id) -> Vec {
    if (id < me) return A_eq.row(id).transpose();
    return -A_in.row(id - me).transpose();
  };
  auto slack = [&](int id, const Vec& xv) -> double {
    if (id < me) return A_eq.row(id).dot(xv) - b_eq(id);
    return b_in(id - me) - A_in.row(id - me).dot(xv);
  };

  Vec d(n), z, r;
  // Equalities are activated first with full steps and never dropped.
  for (int i = 0; i < me; ++i) {
    const Vec np = normal(i);
    d = w.J.transpose() * np;
    step_directions(w, d, z, r);
    const double zn = z.dot(np);
    if (std::abs(zn) <= 1e-14 * (1.0 + np.norm())) {
      if (std::abs(slack(i, x)) > 1e-9 * (1.0 + std::abs(b_eq(i)))) {
        result.status = QpStatus::kInfeasible;
        result.x = x;
        result.blocking_constraint = -1;
        return result;
      }
      continue;  // redundant equality
    }
    const double t = -slack(i, x) / zn;
    x += t * z;
    Vec un(w.q + 1);
    un.head(w.q) = w.u - t * r;
    un(w.q) = t;
    w.u = un;
    w.active.push_back(i);
    r_norm = std::max(r_norm, d.norm());
    if (!add_constraint(w, d, r_norm)) {
      // Numerically dependent; drop it again.
      w.active.pop_back();
      w.u.conservativeResize(w.q - 1);
      w.R.col(w.q - 1).setZero();
      w.q -= 1;
    }
  }

  std::vector<char> is_active(static_cast<size_t>(me + mi), 0);
  for (int id : w.active) is_active[static_cast<size_t>(id)] = 1;
  const int n_eq_active = w.q;

  Vec inv_norm(mi), tol(mi);
  for (int i = 0; i < mi; ++i) {
    const double rn = A_in.row(i).norm();
    inv_norm(i) = rn > 0.0 ? 1.0 / rn : 1.0;
    tol(i) = 1e-11 * (1.0 + std::abs(b_in(i)) * inv_norm(i));
  }
  Vec slacks(mi);

  int iter = 0;
  while (true) {
    if (++iter > max_iterations) {
      result.status = QpStatus::kMaxIterations;
      break;
    }
    // Most violated inequality, scaled by its norm.
    int p = -1;
    double worst = 0.0;
    if (mi > 0) slacks.noalias() = b_in - A_in * x;
    for (int i = 0; i < mi; ++i) {
      if (is_active[static_cast<size_t>(me + i)]) continue;
      const double s = slacks(i) * inv_norm(i);
      if (s < -tol(i) && s < worst) {
        worst = s;
        p = me + i;
      }
    }
    if (p < 0) {
      result.status = QpStatus::kOptimal;
      break;
    }

    const Vec np = normal(p);
    double u_p = 0.0;
    bool added = false;
    while (!added) {
      d = w.J.transpose() * np;
      step_directions(w, d, z, r);
      // Partial step: largest dual step keeping active inequality multipliers >= 0.
      double t1 = kInf;
      int k_drop = -1;
      for (int j = n_eq_active; j < w.q; ++j) {
        if (r(j) > 0.0) {
          const double ratio = w.u(j) / r(j);
          if (ratio < t1) {
            t1 = ratio;
            k_drop = j;
          }
        }
      }
      const double zn = z.dot(np);
      const double t2 = std::abs(zn) > 1e-14 * (1.0 + np.squaredNorm()) ? -slack(p, x) / zn : kInf;
      const double t = std::min(t1, t2);
      if (t == kInf) {
        result.status = QpStatus::kInfeasible;
        result.blocking_constraint = p - me;
        result.x = x;
        result.iterations = iter;
        return result;
      }
      if (t2 == kInf) {
        w.u -= t * r;
        u_p += t;
        is_active[static_cast<size_t>(w.active[static_cast<size_t>(k_drop)])] = 0;
        delete_constraint(w, k_drop);
        if (++iter > max_iterations) break;
        continue;
      }
      x += t * z;
      w.u -= t * r;
      u_p += t;
      if (t == t2) {
        Vec un(w.q + 1);
        un.head(w.q) = w.u;
        un(w.q) = u_p;
        r_norm = std::max(r_norm, d.norm());
        const int q_before = w.q;
        if (!add_constraint(w, d, r_norm)) {
          w.q = q_before;
          w.R.col(q_before).setZero();
          result.status = QpStatus::kInfeasible;
          result.blocking_constraint = p - me;
          result.x = x;
          result.iterations = iter;
          return result;
        }
        w.u = un;
        w.active.push_back(p);
        is_active[static_cast<size_t>(p)] = 1;
        added = true;
      } else {
        is_active[static_cast<size_t>(w.active[static_cast<size_t>(k_drop)])] = 0;
        delete_constraint(w, k_drop);
        if (++iter > max_iterations) break;
      }
    }
    if (!added) {
      result.status = QpStatus::kMaxIterations;
      break;
    }
  }

  result.x = x;
  result.iterations = iter;
  result.lambda_eq = Vec::Zero(me);
  result.lambda_in = Vec::Zero(mi);
  for (int j = 0; j < w.q; ++j) {
    const int id = w.active[static_cast<size_t>(j)];
    if (id < me) {
      result.lambda_eq(id) = -w.u(j);
    } else {
      result.lambda_in(id - me) = w.u(j);
    }
  }
  result.objective = 0.5 * x.dot(H * x) + f.dot(x);
  return result;
}

QpKkt kkt_residuals(const Mat& H, const Vec& f, const Mat& A_in, const Vec& b_in, const Mat& A_eq, const Vec& b_eq,
                    const QpResult& result) {
  QpKkt k;
  const Vec& x = result.x;
  Vec grad = H * x + f;
  if (A_eq.rows() > 0) grad += A_eq.transpose() * result.lambda_eq;
  if (A_in.rows() > 0) grad += A_in.transpose() * result.lambda_in;
  k.stationarity = grad.cwiseAbs().maxCoeff();
  if (A_eq.rows() > 0) k.primal = std::max(k.primal, (A_eq * x - b_eq).cwiseAbs().maxCoeff());
  if (A_in.rows() > 0) {
    const Vec s = b_in - A_in * x;
    k.primal = std::max(k.primal, std::max(0.0, -s.minCoeff()));
    k.complementarity = (result.lambda_in.array() * s.array()).abs().maxCoeff();
    k.dual = std::max(0.0, -result.lambda_in.minCoeff());
  }
  return k;
}

}  // namespace gmpc
