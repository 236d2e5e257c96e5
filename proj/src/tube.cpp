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

#include "gmpc/tube.hpp"

#include <cmath>
#include <numbers>

namespace gmpc {

TubeSpec build_tube(const LinearModel& model, const Mat& K, double eps, const HPolytope& X, const HPolytope& U,
                    int max_generators) {
  require(model.is_bounded(), "build_tube: model must carry a bounded disturbance set");
  require(X.dim() == model.nx(), "build_tube: state set dimension mismatch");
  require(U.dim() == model.nu(), "build_tube: input set dimension mismatch");
  require(eps > 0.0, "build_tube: eps must be positive");
  const Mat Phi = closed_loop(model, K);
  const Zonotope D = linear_map(model.G(), model.disturbance_set());

  MrpiOptions options;
  options.eps = eps;
  options.max_generators = max_generators;
  MrpiResult mrpi = mrpi_outer(Phi, D, options);
  Zonotope KZ = linear_map(K, mrpi.Z);
  HPolytope Xbar = pontryagin_diff(X, mrpi.Z);
  HPolytope Ubar = pontryagin_diff(U, KZ);
  return {mrpi.Z, KZ, Xbar, Ubar, K, Phi, mrpi.alpha, mrpi.s};
}

Vec nominal_step(const Mat& Phi, const Mat& B, const Vec& xbar, const Vec& nu) {
  require(Phi.rows() == Phi.cols() && Phi.rows() == xbar.size(), "nominal_step: state dimension mismatch");
  require(B.rows() == Phi.rows() && B.cols() == nu.size(), "nominal_step: input dimension mismatch");
  return Phi * xbar + B * nu;
}

Vec InitialStateEncoding::nominal(const Vec& beta) const {
  require(beta.size() == num_aux(), "InitialStateEncoding: beta dimension mismatch");
  return offset - generators * beta;
}

InitialStateEncoding initial_state_constraint(const Zonotope& Z, const Vec& x0) {
  require(x0.size() == Z.dim(), "initial_state_constraint: dimension mismatch");
  return {x0 - Z.center(), Z.generators()};
}

double planar_radius(const Zonotope& Z, int ix, int iy) {
  require(ix >= 0 && iy >= 0 && ix < Z.dim() && iy < Z.dim() && ix != iy, "planar_radius: invalid coordinates");
  Mat sel = Mat::Zero(2, Z.dim());
  sel(0, ix) = 1.0;
  sel(1, iy) = 1.0;
  const Zonotope planar = linear_map(sel, Zonotope(Vec::Zero(Z.dim()), Z.generators()));
  // The farthest point is a vertex; the support function over all unit
  // directions attains |v| at d = v / |v|.
  constexpr int kSamples = 7200;
  double best = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const double th = 2.0 * std::numbers::pi * i / kSamples;
    Vec d(2);
    d << std::cos(th), std::sin(th);
    best = std::max(best, support(planar, d));
  }
  return best;
}

nlohmann::json to_json(const TubeSpec& tube) {
  return {{"Z", to_json(tube.Z)},       {"KZ", to_json(tube.KZ)},   {"Xbar", to_json(tube.Xbar)},
          {"Ubar", to_json(tube.Ubar)}, {"K", to_json(tube.K)},     {"Phi", to_json(tube.Phi)},
          {"alpha", tube.alpha},        {"s", tube.s}};
}

}  // namespace gmpc
