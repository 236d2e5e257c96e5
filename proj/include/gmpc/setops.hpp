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

// Convex set arithmetic on H-polytopes and zonotopes, and an outer
// approximation of the minimal disturbance invariant set of a stable
// linear system.
//
// Constraint sets stay in half-space form; disturbance propagation sets are
// zonotopes, which are closed under linear maps and Minkowski sums. The
// Pontryagin difference of an H-polytope minus a zonotope is then exact:
// every offset shrinks by the zonotope's support in that normal direction.

#ifndef GMPC_SETOPS_HPP_
#define GMPC_SETOPS_HPP_

#include <stdexcept>
#include <string>

#include "gmpc/linalg.hpp"

namespace gmpc {

// Raised when a support query is unbounded in the requested direction.
class UnboundedSetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an operation would produce an empty (or interior-less) set.
class EmptySetError : public std::runtime_error {
 public:
  EmptySetError(const std::string& what, int halfspace)
      : std::runtime_error(what), halfspace_(halfspace) {}
  // Index of the offending half-space, or -1 when not attributable.
  int halfspace() const { return halfspace_; }

 private:
  int halfspace_;
};

class HPolytope {
 public:
  // {x : normals * x <= offsets}. Throws EmptySetError if the set is empty.
  HPolytope(Mat normals, Vec offsets);

  static HPolytope box(const Vec& lower, const Vec& upper);

  const Mat& normals() const { return normals_; }
  const Vec& offsets() const { return offsets_; }
  int dim() const { return static_cast<int>(normals_.cols()); }
  int num_halfspaces() const { return static_cast<int>(normals_.rows()); }

  // A point certified to satisfy all half-spaces (Chebyshev center, capped
  // radius for unbounded sets) and its clearance to the nearest boundary.
  const Vec& interior_point() const { return interior_point_; }
  double chebyshev_radius() const { return chebyshev_radius_; }

  bool contains(const Vec& x, double tol = 1e-9) const;

 private:
  Mat normals_;
  Vec offsets_;
  Vec interior_point_;
  double chebyshev_radius_ = 0.0;
};

class Zonotope {
 public:
  // {center + generators * xi : |xi|_inf <= 1}; generators are columns.
  Zonotope(Vec center, Mat generators);

  static Zonotope box(const Vec& lower, const Vec& upper);
  static Zonotope singleton(const Vec& point);

  const Vec& center() const { return center_; }
  const Mat& generators() const { return generators_; }
  int dim() const { return static_cast<int>(center_.size()); }
  int num_generators() const { return static_cast<int>(generators_.cols()); }

  // Interval hull half-widths.
  Vec radius() const;
  bool is_full_dimensional(double tol = 1e-12) const;

 private:
  Vec center_;
  Mat generators_;
};

// max over x in S of dir'x.
double support(const Zonotope& s, const Vec& dir);
double support(const HPolytope& s, const Vec& dir);

Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b);
Zonotope linear_map(const Mat& m, const Zonotope& s);
Zonotope scale(const Zonotope& s, double factor);

// p minus z: offsets tightened by the support of z along each normal.
HPolytope pontryagin_diff(const HPolytope& p, const Zonotope& z);

// Half-space representation of a zonotope (facet enumeration over
// (n-1)-subsets of generators). Requires a full-dimensional zonotope.
HPolytope to_hpolytope(const Zonotope& z);

// Merges exactly parallel generators and drops zero columns. Exact.
Zonotope compact(const Zonotope& z, double tol = 1e-12);

// Outer approximation with at most max_generators columns: the smallest
// generators are replaced by their interval hull.
Zonotope reduce_outer(const Zonotope& z, int max_generators);

// Inner approximation with at most max_generators columns: each dropped
// generator is folded, sign-aligned, into the kept generator it is most
// parallel to. The segment spanned by g1 + g2 lies inside the parallelogram
// spanned by g1 and g2, so the result is a subset of z.
Zonotope reduce_inner(const Zonotope& z, int max_generators);

struct MrpiResult {
  Zonotope Z;
  double alpha;
  int s;
};

struct MrpiOptions {
  // Accuracy, relative to the largest axis extent of the disturbance set.
  double eps = 1e-3;
  int max_iterations = 500;
  int max_generators = 512;
};

// Outer approximation of the minimal disturbance invariant set of
// e+ = Phi e + d, d in D: Z = (1 - alpha)^-1 (D + Phi D + ... + Phi^(s-1) D)
// with the smallest s such that Phi^s D is inside alpha D and alpha meets the
// eps-dependent bound. A disturbance set without interior is first inflated
// by an eps-scaled box so that the containment test is well posed.
MrpiResult mrpi_outer(const Mat& Phi, const Zonotope& D, const MrpiOptions& options = {});

nlohmann::json to_json(const HPolytope& p);
nlohmann::json to_json(const Zonotope& z);

}  // namespace gmpc

#endif  // GMPC_SETOPS_HPP_
