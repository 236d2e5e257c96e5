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

// Dense strictly convex quadratic programming.
//
//   min 0.5 x'Hx + f'x   s.t.   A_eq x = b_eq,   A_in x <= b_in
//
// Solved by the Goldfarb-Idnani dual active-set method. H must be positive
// definite; a PSD H is regularized by +1e-9 I when its factorization fails.

#ifndef GMPC_QP_HPP_
#define GMPC_QP_HPP_

#include "gmpc/linalg.hpp"

namespace gmpc {

enum class QpStatus { kOptimal, kInfeasible, kMaxIterations };

const char* to_string(QpStatus status);

struct QpResult {
  QpStatus status = QpStatus::kInfeasible;
  Vec x;
  Vec lambda_eq;  // stationarity: Hx + f + A_eq' lambda_eq + A_in' lambda_in = 0
  Vec lambda_in;  // >= 0
  double objective = 0.0;
  int iterations = 0;
  // Inequality that could not be added when infeasibility was detected.
  int blocking_constraint = -1;
};

struct QpKkt {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double dual = 0.0;
};

QpResult qp_solve(const Mat& H, const Vec& f, const Mat& A_in, const Vec& b_in, const Mat& A_eq, const Vec& b_eq,
                  int max_iterations = 10000);

QpKkt kkt_residuals(const Mat& H, const Vec& f, const Mat& A_in, const Vec& b_in, const Mat& A_eq, const Vec& b_eq,
                    const QpResult& result);

}  // namespace gmpc

#endif  // GMPC_QP_HPP_
