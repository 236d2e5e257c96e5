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

#include "gmpc/setops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/LU>

#include "gmpc/lp.hpp"

namespace gmpc {
namespace {

struct ChebyshevBall {
  bool feasible = false;
  Vec center;
  double radius = 0.0;
};

// max t s.t. a_i x + |a_i| t <= b_i, t <= 1.
ChebyshevBall chebyshev_ball(const Mat& A, const Vec& b) {
  const Eigen::Index n = A.cols();
  const Eigen::Index m = A.rows();
  Mat lifted = Mat::Zero(m + 1, n + 1);
  Vec rhs(m + 1);
  lifted.topLeftCorner(m, n) = A;
  lifted.block(0, n, m, 1) = A.rowwise().norm();
  rhs.head(m) = b;
  lifted(m, n) = 1.0;
  rhs(m) = 1.0;
  Vec c = Vec::Zero(n + 1);
  c(n) = 1.0;
  const LpResult lp = lp_maximize(c, lifted, rhs);
  ChebyshevBall ball;
  if (lp.status != LpStatus::kOptimal) return ball;
  ball.feasible = lp.value >= -1e-12;
  ball.center = lp.x.head(n);
  ball.radius = lp.value;
  return ball;
}

Vec canonical_direction(const Vec& g, double tol) {
  Vec d = g / g.norm();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (std::abs(d(i)) > tol) {
      if (d(i) < 0) d = -d;
      break;
    }
  }
  return d;
}

// Unit normal orthogonal to the n-1 columns of cols, or empty if they are
// rank deficient.
Vec facet_normal(const Mat& cols) {
  const Eigen::Index n = cols.rows();
  Eigen::FullPivLU<Mat> lu(cols.transpose());
  lu.setThreshold(1e-10);
  if (lu.rank() != n - 1) return Vec();
  Mat kernel = lu.kernel();
  Vec normal = kernel.col(0);
  return normal / normal.norm();
}

}  // namespace

// ---------------------------------------------------------------------------
// HPolytope

HPolytope::HPolytope(Mat normals, Vec offsets)
    : normals_(std::move(normals)), offsets_(std::move(offsets)) {
  require(normals_.rows() == offsets_.size(), "HPolytope: normals/offsets row mismatch");
  require(normals_.cols() > 0, "HPolytope: dimension must be positive");
  require(normals_.allFinite() && offsets_.allFinite(), "HPolytope: entries must be finite");
  for (Eigen::Index i = 0; i < normals_.rows(); ++i) {
    require(normals_.row(i).norm() > 0.0, "HPolytope: zero normal in row " + std::to_string(i));
  }
  const ChebyshevBall ball = chebyshev_ball(normals_, offsets_);
  if (!ball.feasible) throw EmptySetError("HPolytope: constraint set is empty", -1);
  interior_point_ = ball.center;
  chebyshev_radius_ = ball.radius;
}

HPolytope HPolytope::box(const Vec& lower, const Vec& upper) {
  require(lower.size() == upper.size(), "HPolytope::box: bound size mismatch");
  const Eigen::Index n = lower.size();
  Mat normals(2 * n, n);
  normals << Mat::Identity(n, n), -Mat::Identity(n, n);
  Vec offsets(2 * n);
  offsets << upper, -lower;
  return HPolytope(normals, offsets);
}

bool HPolytope::contains(const Vec& x, double tol) const {
  require(x.size() == dim(), "HPolytope::contains: dimension mismatch");
  return ((normals_ * x - offsets_).array() <= tol).all();
}

// ---------------------------------------------------------------------------
// Zonotope

Zonotope::Zonotope(Vec center, Mat generators)
    : center_(std::move(center)), generators_(std::move(generators)) {
  if (generators_.size() == 0) generators_.resize(center_.size(), 0);
  require(generators_.rows() == center_.size(), "Zonotope: generator rows must match center");
  require(center_.allFinite() && generators_.allFinite(), "Zonotope: entries must be finite");
}

Zonotope Zonotope::box(const Vec& lower, const Vec& upper) {
  require(lower.size() == upper.size(), "Zonotope::box: bound size mismatch");
  require(((upper - lower).array() >= 0.0).all(), "Zonotope::box: lower exceeds upper");
  Vec radius = 0.5 * (upper - lower);
  Mat gens(lower.size(), 0);
  std::vector<Eigen::Index> nonzero;
  for (Eigen::Index i = 0; i < radius.size(); ++i) {
    if (radius(i) > 0.0) nonzero.push_back(i);
  }
  gens = Mat::Zero(lower.size(), static_cast<Eigen::Index>(nonzero.size()));
  for (size_t k = 0; k < nonzero.size(); ++k) {
    gens(nonzero[k], static_cast<Eigen::Index>(k)) = radius(nonzero[k]);
  }
  return Zonotope(0.5 * (upper + lower), gens);
}

Zonotope Zonotope::singleton(const Vec& point) { return Zonotope(point, Mat(point.size(), 0)); }

Vec Zonotope::radius() const { return generators_.cwiseAbs().rowwise().sum(); }

bool Zonotope::is_full_dimensional(double tol) const {
  if (generators_.cols() < generators_.rows()) return false;
  Eigen::FullPivLU<Mat> lu(generators_);
  lu.setThreshold(tol);
  return lu.rank() == generators_.rows();
}

// ---------------------------------------------------------------------------
// Support functions and operations

double support(const Zonotope& s, const Vec& dir) {
  require(dir.size() == s.dim(), "support: dimension mismatch");
  require(dir.allFinite() && dir.norm() > 0.0, "support: direction must be finite and nonzero");
  return s.center().dot(dir) + (s.generators().transpose() * dir).cwiseAbs().sum();
}

double support(const HPolytope& s, const Vec& dir) {
  require(dir.size() == s.dim(), "support: dimension mismatch");
  require(dir.allFinite() && dir.norm() > 0.0, "support: direction must be finite and nonzero");
  const LpResult lp = lp_maximize(dir, s.normals(), s.offsets());
  if (lp.status == LpStatus::kUnbounded) {
    throw UnboundedSetError("support: polytope is unbounded in the requested direction");
  }
  if (lp.status != LpStatus::kOptimal) throw EmptySetError("support: polytope is empty", -1);
  return lp.value;
}

Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b) {
  require(a.dim() == b.dim(), "minkowski_sum: dimension mismatch");
  Mat gens(a.dim(), a.num_generators() + b.num_generators());
  gens << a.generators(), b.generators();
  return Zonotope(a.center() + b.center(), gens);
}

Zonotope linear_map(const Mat& m, const Zonotope& s) {
  require(m.cols() == s.dim(), "linear_map: matrix columns must equal set dimension");
  return Zonotope(m * s.center(), m * s.generators());
}

Zonotope scale(const Zonotope& s, double factor) {
  return Zonotope(factor * s.center(), factor * s.generators());
}

HPolytope pontryagin_diff(const HPolytope& p, const Zonotope& z) {
  require(p.dim() == z.dim(), "pontryagin_diff: dimension mismatch");
  const Mat& normals = p.normals();
  Vec offsets = p.offsets();
  for (Eigen::Index i = 0; i < normals.rows(); ++i) {
    offsets(i) -= support(z, normals.row(i).transpose());
  }

  const ChebyshevBall ball = chebyshev_ball(normals, offsets);
  if (ball.feasible && ball.radius > 1e-12) return HPolytope(normals, offsets);

  // Attribute the collapse to the normal along which the subtrahend is
  // widest relative to the original set.
  int worst = -1;
  double worst_ratio = -1.0;
  for (Eigen::Index i = 0; i < normals.rows(); ++i) {
    const Vec a = normals.row(i).transpose();
    double width = 0.0;
    try {
      width = p.offsets()(i) + support(p, Vec(-a));
    } catch (const UnboundedSetError&) {
      continue;
    }
    const double tube_width = support(z, a) + support(z, Vec(-a));
    const double ratio = width > 0.0 ? tube_width / width : tube_width;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst = static_cast<int>(i);
    }
  }
  std::ostringstream msg;
  msg << "pontryagin_diff: tightened set has no interior; the subtracted set does not fit "
         "inside the constraint set along half-space "
      << worst;
  if (worst >= 0) {
    msg << " (normal " << normals.row(worst) << ", offset " << p.offsets()(worst) << ")";
  }
  throw EmptySetError(msg.str(), worst);
}

Zonotope compact(const Zonotope& z, double tol) {
  std::vector<Vec> dirs;
  std::vector<double> lengths;
  for (int j = 0; j < z.num_generators(); ++j) {
    const Vec g = z.generators().col(j);
    const double len = g.norm();
    if (len <= tol) continue;
    const Vec d = canonical_direction(g, tol);
    bool merged = false;
    for (size_t k = 0; k < dirs.size(); ++k) {
      if ((dirs[k] - d).norm() <= tol * 10.0) {
        lengths[k] += len;
        merged = true;
        break;
      }
    }
    if (!merged) {
      dirs.push_back(d);
      lengths.push_back(len);
    }
  }
  Mat gens(z.dim(), static_cast<Eigen::Index>(dirs.size()));
  for (size_t k = 0; k < dirs.size(); ++k) gens.col(static_cast<Eigen::Index>(k)) = lengths[k] * dirs[k];
  return Zonotope(z.center(), gens);
}

Zonotope reduce_outer(const Zonotope& z, int max_generators) {
  require(max_generators >= 1, "reduce_outer: max_generators must be positive");
  if (z.num_generators() <= max_generators) return z;
  const int n = z.dim();
  std::vector<int> order(static_cast<size_t>(z.num_generators()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return z.generators().col(a).norm() > z.generators().col(b).norm();
  });
  const int keep = std::max(0, max_generators - n);
  Mat gens(n, keep + n);
  Vec boxed = Vec::Zero(n);
  for (size_t k = 0; k < order.size(); ++k) {
    const Vec g = z.generators().col(order[k]);
    if (static_cast<int>(k) < keep) {
      gens.col(static_cast<Eigen::Index>(k)) = g;
    } else {
      boxed += g.cwiseAbs();
    }
  }
  gens.rightCols(n) = boxed.asDiagonal();
  return compact(Zonotope(z.center(), gens));
}

Zonotope reduce_inner(const Zonotope& z, int max_generators) {
  require(max_generators >= 1, "reduce_inner: max_generators must be positive");
  const Zonotope c = compact(z);
  if (c.num_generators() <= max_generators) return c;
  std::vector<int> order(static_cast<size_t>(c.num_generators()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return c.generators().col(a).norm() > c.generators().col(b).norm();
  });
  Mat kept(c.dim(), max_generators);
  for (int k = 0; k < max_generators; ++k) kept.col(k) = c.generators().col(order[static_cast<size_t>(k)]);
  const Mat kept_dirs = kept.colwise().normalized();
  for (size_t k = static_cast<size_t>(max_generators); k < order.size(); ++k) {
    const Vec g = c.generators().col(order[k]);
    const Vec cosines = kept_dirs.transpose() * (g / g.norm());
    Eigen::Index best = 0;
    cosines.cwiseAbs().maxCoeff(&best);
    kept.col(best) += (cosines(best) >= 0.0 ? 1.0 : -1.0) * g;
  }
  return Zonotope(c.center(), kept);
}

HPolytope to_hpolytope(const Zonotope& z) {
  const Zonotope c = compact(z);
  const int n = c.dim();
  require(c.is_full_dimensional(), "to_hpolytope: zonotope must be full-dimensional");
  std::vector<Vec> normals;
  auto add_normal = [&](const Vec& d) {
    for (const Vec& existing : normals) {
      if ((existing - d).norm() < 1e-9 || (existing + d).norm() < 1e-9) return;
    }
    normals.push_back(d);
  };
  if (n == 1) {
    add_normal(Vec::Ones(1));
  } else {
    const int g = c.num_generators();
    std::vector<int> idx(static_cast<size_t>(n - 1));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      Mat cols(n, n - 1);
      for (int k = 0; k < n - 1; ++k) cols.col(k) = c.generators().col(idx[static_cast<size_t>(k)]);
      const Vec normal = facet_normal(cols);
      if (normal.size() == n) add_normal(normal);
      int pos = n - 2;
      while (pos >= 0 && idx[static_cast<size_t>(pos)] == g - (n - 1) + pos) --pos;
      if (pos < 0) break;
      ++idx[static_cast<size_t>(pos)];
      for (int k = pos + 1; k < n - 1; ++k) idx[static_cast<size_t>(k)] = idx[static_cast<size_t>(k - 1)] + 1;
    }
  }
  Mat A(2 * static_cast<Eigen::Index>(normals.size()), n);
  Vec b(A.rows());
  for (size_t k = 0; k < normals.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(2 * k);
    A.row(r) = normals[k].transpose();
    b(r) = support(c, normals[k]);
    A.row(r + 1) = -normals[k].transpose();
    b(r + 1) = support(c, Vec(-normals[k]));
  }
  return HPolytope(A, b);
}

// ---------------------------------------------------------------------------
// Minimal disturbance invariant set, outer approximation

MrpiResult mrpi_outer(const Mat& Phi, const Zonotope& D, const MrpiOptions& options) {
  const int n = D.dim();
  require(Phi.rows() == n && Phi.cols() == n, "mrpi_outer: Phi must be square and match D");
  require(options.eps > 0.0, "mrpi_outer: eps must be positive");
  const double rho = spectral_radius(Phi);
  if (!(rho < 1.0)) {
    std::ostringstream msg;
    msg << "mrpi_outer: Phi is not stable (spectral radius " << rho << ")";
    throw std::invalid_argument(msg.str());
  }

  const double extent = D.radius().maxCoeff();
  const double eps_abs = options.eps * std::max(extent, 1e-300);

  Zonotope W = compact(D);
  if (W.num_generators() == 0) {
    // Zero disturbance: the invariant set is the origin.
    require(W.center().norm() == 0.0, "mrpi_outer: D must contain the origin");
    return {Zonotope::singleton(Vec::Zero(n)), 0.0, 1};
  }
  if (!W.is_full_dimensional()) {
    W = compact(minkowski_sum(W, Zonotope::box(Vec::Constant(n, -eps_abs), Vec::Constant(n, eps_abs))));
  }
  const HPolytope facets = to_hpolytope(W);
  require(facets.contains(Vec::Zero(n), 0.0), "mrpi_outer: D must contain the origin");
  for (int i = 0; i < facets.num_halfspaces(); ++i) {
    require(facets.offsets()(i) > 0.0, "mrpi_outer: D must contain the origin in its interior");
  }

  // Running axis supports of F_s = W + Phi W + ... + Phi^(s-1) W.
  Vec sum_pos = Vec::Zero(n);
  Vec sum_neg = Vec::Zero(n);
  Mat power = Mat::Identity(n, n);
  std::vector<Mat> powers;
  for (int s = 1; s <= options.max_iterations; ++s) {
    powers.push_back(power);
    const Zonotope term = linear_map(power, W);
    for (int j = 0; j < n; ++j) {
      const Vec e = Vec::Unit(n, j);
      sum_pos(j) += support(term, e);
      sum_neg(j) += support(term, Vec(-e));
    }
    power = Phi * power;

    const Zonotope next = linear_map(power, W);
    double alpha = 0.0;
    for (int i = 0; i < facets.num_halfspaces(); ++i) {
      const Vec f = facets.normals().row(i).transpose();
      alpha = std::max(alpha, support(next, f) / facets.offsets()(i));
    }
    const double M = std::max(sum_pos.maxCoeff(), sum_neg.maxCoeff());
    if (alpha <= eps_abs / (eps_abs + M)) {
      Mat gens(n, W.num_generators() * s);
      Vec center = Vec::Zero(n);
      for (int k = 0; k < s; ++k) {
        gens.middleCols(static_cast<Eigen::Index>(k) * W.num_generators(), W.num_generators()) =
            powers[static_cast<size_t>(k)] * W.generators();
        center += powers[static_cast<size_t>(k)] * W.center();
      }
      Zonotope Z = compact(Zonotope(center, gens));
      Z = scale(Z, 1.0 / (1.0 - alpha));
      Z = reduce_outer(Z, options.max_generators);
      return {Z, alpha, s};
    }
  }
  throw std::runtime_error("mrpi_outer: iteration cap exceeded before reaching the requested accuracy");
}

nlohmann::json to_json(const HPolytope& p) {
  return {{"type", "hpolytope"}, {"normals", to_json(p.normals())}, {"offsets", to_json(p.offsets())}};
}

nlohmann::json to_json(const Zonotope& z) {
  return {{"type", "zonotope"}, {"center", to_json(z.center())}, {"generators", to_json(Mat(z.generators().transpose()))}};
}

}  // namespace gmpc
