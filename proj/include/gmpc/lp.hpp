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

#ifndef GMPC_LP_HPP_
#define GMPC_LP_HPP_

#include "gmpc/linalg.hpp"

namespace gmpc {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  double value = 0.0;
  Vec x;
};

/// Dense two-phase simplex (Bland's rule) for
///   maximize c'x  subject to  A x <= b,  x free.
/// Intended for the small problems that arise in set arithmetic
/// (a handful of variables, tens of rows).
LpResult lp_maximize(const Vec& c, const Mat& A, const Vec& b);

}  // namespace gmpc

#endif  // GMPC_LP_HPP_
