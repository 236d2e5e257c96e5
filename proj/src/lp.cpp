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

#include "gmpc/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace gmpc {
namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-10;

struct Tableau {
  Mat t;                    // rows x (cols + 1), last column is the rhs
  std::vector<int> basis;   // basic column per row
  std::vector<bool> forbidden;

  int rows() const { return static_cast<int>(t.rows()); }
  int cols() const { return static_cast<int>(t.cols()) - 1; }

  void pivot(int r, int c) {
    t.row(r) /= t(r, c);
    for (int i = 0; i < rows(); ++i) {
      if (i == r) continue;
      const double f = t(i, c);
      if (f != 0.0) t.row(i) -= f * t.row(r);
    }
    basis[static_cast<size_t>(r)] = c;
  }
};

// Minimizes cost'y over the tableau's current basis. Returns false when the
// objective is unbounded below.
bool run_simplex(Tableau& tab, const Vec& cost) {
  const int m = tab.rows();
  const int n = tab.cols();
  const int max_iter = 50 * (m + n) + 1000;
  for (int iter = 0; iter < max_iter; ++iter) {
    int enter = -1;
    for (int j = 0; j < n; ++j) {
      if (tab.forbidden[static_cast<size_t>(j)]) continue;
      double r = cost(j);
      for (int i = 0; i < m; ++i) r -= cost(tab.basis[static_cast<size_t>(i)]) * tab.t(i, j);
      if (r < -kCostTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;

    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double a = tab.t(i, enter);
      if (a <= kPivotTol) continue;
      const double ratio = tab.t(i, n) / a;
      if (ratio < best - 1e-14 ||
          (std::abs(ratio - best) <= 1e-14 && leave >= 0 &&
           tab.basis[static_cast<size_t>(i)] < tab.basis[static_cast<size_t>(leave)])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) return false;
    tab.pivot(leave, enter);
  }
  throw std::runtime_error("lp_maximize: simplex iteration cap exceeded");
}

}  // namespace

LpResult lp_maximize(const Vec& c, const Mat& A, const Vec& b) {
  require(A.cols() == c.size(), "lp_maximize: objective/constraint dimension mismatch");
  require(A.rows() == b.size(), "lp_maximize: constraint rows/rhs mismatch");
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(A.rows());

  // Columns: x+ (n), x- (n), slack (m), artificial (m).
  const int n_cols = 2 * n + 2 * m;
  Tableau tab;
  tab.t = Mat::Zero(m, n_cols + 1);
  tab.basis.resize(static_cast<size_t>(m));
  tab.forbidden.assign(static_cast<size_t>(n_cols), false);
  for (int i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    tab.t.block(i, 0, 1, n) = sign * A.row(i);
    tab.t.block(i, n, 1, n) = -sign * A.row(i);
    tab.t(i, 2 * n + i) = sign;
    tab.t(i, 2 * n + m + i) = 1.0;
    tab.t(i, n_cols) = sign * b(i);
    tab.basis[static_cast<size_t>(i)] = 2 * n + m + i;
  }

  Vec phase1 = Vec::Zero(n_cols);
  phase1.tail(m).setOnes();
  run_simplex(tab, phase1);

  LpResult result;
  double infeasibility = 0.0;
  for (int i = 0; i < m; ++i) {
    if (tab.basis[static_cast<size_t>(i)] >= 2 * n + m) infeasibility += tab.t(i, n_cols);
  }
  const double scale = 1.0 + b.cwiseAbs().sum();
  if (infeasibility > 1e-9 * scale) {
    result.status = LpStatus::kInfeasible;
    return result;
  }

  // Drive zero-level artificials out of the basis where possible.
  for (int i = 0; i < m; ++i) {
    if (tab.basis[static_cast<size_t>(i)] < 2 * n + m) continue;
    for (int j = 0; j < 2 * n + m; ++j) {
      if (std::abs(tab.t(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
    }
  }
  for (int j = 2 * n + m; j < n_cols; ++j) tab.forbidden[static_cast<size_t>(j)] = true;

  Vec phase2 = Vec::Zero(n_cols);
  phase2.head(n) = -c;
  phase2.segment(n, n) = c;
  if (!run_simplex(tab, phase2)) {
    result.status = LpStatus::kUnbounded;
    return result;
  }

  Vec y = Vec::Zero(n_cols);
  for (int i = 0; i < m; ++i) y(tab.basis[static_cast<size_t>(i)]) = tab.t(i, n_cols);
  result.x = y.head(n) - y.segment(n, n);
  result.value = c.dot(result.x);
  result.status = LpStatus::kOptimal;
  return result;
}

}  // namespace gmpc
