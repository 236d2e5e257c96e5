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

// Tube construction for the robust short-term stage.
//
// The detailed plant is driven by u = K x + nu. The error between the plant
// and its disturbance-free copy stays in the invariant set Z, so the nominal
// trajectory is planned against the tightened sets X (-) Z and U (-) KZ.

#ifndef GMPC_TUBE_HPP_
#define GMPC_TUBE_HPP_

#include "gmpc/setops.hpp"
#include "gmpc/sysmodel.hpp"

namespace gmpc {

struct TubeSpec {
  Zonotope Z;
  Zonotope KZ;
  HPolytope Xbar;
  HPolytope Ubar;
  Mat K;
  Mat Phi;
  double alpha = 0.0;
  int s = 0;
};

TubeSpec build_tube(const LinearModel& model, const Mat& K, double eps, const HPolytope& X, const HPolytope& U,
                    int max_generators = 512);

// xbar+ = Phi xbar + B nu.
Vec nominal_step(const Mat& Phi, const Mat& B, const Vec& xbar, const Vec& nu);

// x0 - xbar0 in Z written as xbar0 = offset - generators * beta, |beta|_inf <= 1.
struct InitialStateEncoding {
  Vec offset;
  Mat generators;

  int num_aux() const { return static_cast<int>(generators.cols()); }
  Vec nominal(const Vec& beta) const;
};

InitialStateEncoding initial_state_constraint(const Zonotope& Z, const Vec& x0);

// Largest Euclidean distance from the center of Z to a point of Z, measured
// only in the two coordinates (ix, iy). Evaluated through the support
// function over a fine angular grid, so it is a lower bound accurate to
// about 1e-6 relative.
double planar_radius(const Zonotope& Z, int ix, int iy);

nlohmann::json to_json(const TubeSpec& tube);

}  // namespace gmpc

#endif  // GMPC_TUBE_HPP_
