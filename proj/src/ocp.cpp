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

#include "gmpc/ocp.hpp"

#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

namespace gmpc {
namespace {

// Accumulates rows of a dense constraint system with tags.
class RowBuilder {
 public:
  explicit RowBuilder(int n) : n_(n) {}

  Eigen::Ref<Eigen::RowVectorXd> add(double rhs, const std::string& tag) {
    rows_.push_back(Eigen::RowVectorXd::Zero(n_));
    rhs_.push_back(rhs);
    tags_.push_back(tag);
    return rows_.back();
  }

  void finish(Mat& A, Vec& b, std::vector<std::string>* tags) const {
    A.resize(static_cast<int>(rows_.size()), n_);
    b.resize(static_cast<int>(rows_.size()));
    for (size_t i = 0; i < rows_.size(); ++i) {
      A.row(static_cast<int>(i)) = rows_[i];
      b(static_cast<int>(i)) = rhs_[i];
    }
    if (tags != nullptr) *tags = tags_;
  }

 private:
  int n_;
  std::vector<Eigen::RowVectorXd> rows_;
  std::vector<double> rhs_;
  std::vector<std::string> tags_;
};

// Adds (S w - r)' W (S w - r) to 0.5 w'Hw + f'w + c, where S has nonzero
// blocks at the given offsets.
struct QuadTerm {
  std::vector<std::pair<int, Mat>> blocks;  // (offset, block of S)
};

void add_quadratic(Mat& H, Vec& f, double& c, const QuadTerm& term, const Mat& W, const Vec& r) {
  for (const auto& [oi, Si] : term.blocks) {
    for (const auto& [oj, Sj] : term.blocks) {
      H.block(oi, oj, Si.cols(), Sj.cols()) += 2.0 * Si.transpose() * W * Sj;
    }
    f.segment(oi, Si.cols()) -= 2.0 * Si.transpose() * W * r;
  }
  c += r.dot(W * r);
}

VarBlock take(int& cursor, int size) {
  VarBlock b{cursor, size};
  cursor += size;
  return b;
}

Vec slot(const Vec& w, const VarBlock& b) { return w.segment(b.offset, b.size); }

bool gate_open(const PathConstraint& pc, const Vec& state) {
  if (pc.gate_index < 0) return true;
  const double v = state(pc.gate_index);
  // Open interval: a state on the gate boundary touches the box exterior.
  return v > pc.gate_lo + 1e-9 && v < pc.gate_hi - 1e-9;
}

double margin(const PathConstraint& pc, const Vec& state) {
  return pc.g.value(state) - gamma(pc.g.gradient(state), pc.sigma, pc.g.p());
}

// Linearization point of a path constraint at the iterate. For an ellipse
// whose iterate is inside the tightened region, a point of the tightened
// boundary rotated towards the preferred direction is used instead; the tangent
// half-plane there excludes the whole ellipse.
Vec linearization_point(const PathConstraint& pc, const Vec& state) {
  if (pc.g.kind() != ChanceConstraint::Kind::kEllipse) return state;
  // Iterates on the boundary up to rounding keep their own tangent.
  const bool forced = pc.force_prefer && pc.prefer.norm() > 0.0;
  if (!forced && margin(pc, state) >= -1e-8) return state;
  const ChanceConstraint& g = pc.g;
  Eigen::Vector2d u((state(g.ix()) - g.center()(0)) / g.a(), (state(g.iy()) - g.center()(1)) / g.b());
  const Eigen::Vector2d& prefer = pc.prefer;
  const bool has_prefer = prefer.norm() > 0.0;
  Eigen::Vector2d dir;
  if (forced) {
    dir = prefer.normalized();
  } else if (u.norm() < 1e-9) {
    dir = has_prefer ? Eigen::Vector2d(prefer.normalized()) : Eigen::Vector2d(-1.0, 0.0);
  } else if (!has_prefer) {
    dir = u.normalized();
  } else {
    dir = u.normalized() + prefer.normalized();
    dir = dir.norm() < 1e-9 ? Eigen::Vector2d(prefer.normalized()) : Eigen::Vector2d(dir.normalized());
    // Do not rotate past the preferred direction.
    if (dir.dot(prefer) < 0.0) dir = prefer.normalized();
  }
  // Along the ray center + t (a dir_x, b dir_y) the margin is
  // t^2 - 1 - t gamma_1, with gamma_1 the tightening at t = 1; place q on
  // the tightened boundary.
  Vec q = state;
  q(g.ix()) = g.center()(0) + g.a() * dir(0);
  q(g.iy()) = g.center()(1) + g.b() * dir(1);
  const double gamma_1 = gamma(g.gradient(q), pc.sigma, g.p());
  const double t = 0.5 * (gamma_1 + std::sqrt(gamma_1 * gamma_1 + 4.0));
  q(g.ix()) = g.center()(0) + t * g.a() * dir(0);
  q(g.iy()) = g.center()(1) + t * g.b() * dir(1);
  return q;
}

void check_dims(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("assemble: " + what);
}

}  // namespace

const char* to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::kGranular:
      return "granular";
    case MethodKind::kSingleRsmpc:
      return "single-rsmpc";
    case MethodKind::kSingleRmpc:
      return "single-rmpc";
  }
  return "unknown";
}

MethodKind method_from_string(const std::string& name) {
  if (name == "granular") return MethodKind::kGranular;
  if (name == "single-rsmpc") return MethodKind::kSingleRsmpc;
  if (name == "single-rmpc") return MethodKind::kSingleRmpc;
  throw std::invalid_argument("unknown method '" + name + "' (expected granular, single-rsmpc or single-rmpc)");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kMaxIterations:
      return "max-iter";
    case SolveStatus::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

int OcpProblem::independent_decisions() const {
  int count = beta.size;
  for (const VarBlock& b : nu) count += b.size;
  for (const VarBlock& b : c) count += b.size;
  return count;
}

OcpProblem assemble(const OcpInputs& in, MethodKind kind) {
  check_dims(in.Ns >= 1 && in.Nl >= 0, "horizons must satisfy Ns >= 1, Nl >= 0");
  const int nx = static_cast<int>(in.A.rows());
  const int nu = static_cast<int>(in.B.cols());
  check_dims(in.A.cols() == nx && in.B.rows() == nx, "detailed model dimensions");
  check_dims(in.K.rows() == nu && in.K.cols() == nx, "feedback gain dimensions");
  check_dims(in.x0.size() == nx, "x0 dimension");
  check_dims(in.Z_init.dim() == nx, "tube set dimension");
  check_dims(in.Xbar.dim() == nx && in.Ubar.dim() == nu, "tightened set dimensions");
  check_dims(in.Q.rows() == nx && in.R.rows() == nu && in.x_target.size() == nx, "detailed cost dimensions");
  check_dims(in.position_rows.cols() == nx, "position rows dimension");
  check_dims(in.p_target.size() == in.position_rows.rows(), "position target dimension");
  check_dims(in.Qc.rows() == in.p_target.size(), "terminal weight dimension");

  OcpProblem p;
  p.kind = kind;
  p.Ns = in.Ns;
  p.Nl = in.Nl;
  p.inputs = in;
  const int N = in.Ns + in.Nl;
  const bool granular = kind == MethodKind::kGranular;
  const bool coarse = granular && in.Nl > 0;
  const int Nd = granular ? in.Ns : N;
  const Mat Phi = in.A + in.B * in.K;

  int nxi = 0, nv = 0;
  Mat Mxx, Mxu, Mvx, Mvu, Phic;
  if (coarse) {
    check_dims(in.proj.has_value(), "granular method requires a projection map");
    const ProjectionMap& pm = *in.proj;
    check_dims(pm.nx() == nx && pm.nu() == nu, "projection dimensions");
    nxi = pm.nxi();
    nv = pm.nv();
    check_dims(in.Ac.rows() == nxi && in.Bc.cols() == nv && in.Kc.rows() == nv && in.Kc.cols() == nxi,
               "coarse model dimensions");
    check_dims(in.Qc.rows() == nxi && in.Rc.rows() == nv, "coarse cost dimensions");
    Mxx = pm.matrix().topLeftCorner(nxi, nx);
    Mxu = pm.matrix().topRightCorner(nxi, nu);
    Mvx = pm.matrix().bottomLeftCorner(nv, nx);
    Mvu = pm.matrix().bottomRightCorner(nv, nu);
    Phic = in.Ac + in.Bc * in.Kc;
  }

  int cursor = 0;
  p.beta = take(cursor, in.Z_init.num_generators());
  for (int k = 0; k <= Nd; ++k) p.xbar.push_back(take(cursor, nx));
  const int n_nu = granular ? in.Ns + 1 : N;
  for (int k = 0; k < n_nu; ++k) p.nu.push_back(take(cursor, nu));
  if (coarse) {
    for (int k = in.Ns; k <= N; ++k) p.z.push_back(take(cursor, nxi));
    for (int k = in.Ns; k < N; ++k) p.c.push_back(take(cursor, nv));
  }
  p.n_vars = cursor;
  const int n = cursor;
  for (int i = 0; i < p.beta.size; ++i) p.free_vars.push_back(p.beta.offset + i);
  if (granular) {
    for (int i = 0; i < nu; ++i) p.free_vars.push_back(p.nu[static_cast<size_t>(in.Ns)].offset + i);
  }

  // Equalities.
  RowBuilder eq(n);
  const Vec init = in.x0 - in.Z_init.center();
  for (int i = 0; i < nx; ++i) {
    auto row = eq.add(init(i), "init");
    row(p.xbar[0].offset + i) = 1.0;
    for (int j = 0; j < p.beta.size; ++j) row(p.beta.offset + j) = in.Z_init.generators()(i, j);
  }
  for (int k = 0; k < Nd; ++k) {
    const VarBlock& xk = p.xbar[static_cast<size_t>(k)];
    const VarBlock& xn = p.xbar[static_cast<size_t>(k) + 1];
    const VarBlock& uk = p.nu[static_cast<size_t>(k)];
    for (int i = 0; i < nx; ++i) {
      auto row = eq.add(0.0, "dynamics");
      row(xn.offset + i) = 1.0;
      row.segment(xk.offset, nx) -= Phi.row(i);
      row.segment(uk.offset, nu) -= in.B.row(i);
    }
  }
  if (coarse) {
    const VarBlock& xs = p.xbar[static_cast<size_t>(in.Ns)];
    const VarBlock& us = p.nu[static_cast<size_t>(in.Ns)];
    const Mat Sx = Mxx + Mxu * in.K;
    const Mat Sv = Mvx + Mvu * in.K;
    for (int i = 0; i < nxi; ++i) {
      auto row = eq.add(0.0, "coupling-state");
      row(p.z[0].offset + i) = 1.0;
      row.segment(xs.offset, nx) -= Sx.row(i);
      row.segment(us.offset, nu) -= Mxu.row(i);
    }
    for (int i = 0; i < nv; ++i) {
      auto row = eq.add(0.0, "coupling-input");
      row(p.c[0].offset + i) = 1.0;
      row.segment(p.z[0].offset, nxi) += in.Kc.row(i);
      row.segment(xs.offset, nx) -= Sv.row(i);
      row.segment(us.offset, nu) -= Mvu.row(i);
    }
    for (int j = 0; j < in.Nl; ++j) {
      const VarBlock& zk = p.z[static_cast<size_t>(j)];
      const VarBlock& zn = p.z[static_cast<size_t>(j) + 1];
      const VarBlock& ck = p.c[static_cast<size_t>(j)];
      for (int i = 0; i < nxi; ++i) {
        auto row = eq.add(0.0, "coarse-dynamics");
        row(zn.offset + i) = 1.0;
        row.segment(zk.offset, nxi) -= Phic.row(i);
        row.segment(ck.offset, nv) -= in.Bc.row(i);
      }
    }
  }
  eq.finish(p.A_eq, p.b_eq, nullptr);

  // Linear inequalities.
  RowBuilder ineq(n);
  const int robust_last = kind == MethodKind::kSingleRmpc ? N : in.Ns;
  for (int k = 0; k <= robust_last; ++k) {
    const VarBlock& xk = p.xbar[static_cast<size_t>(k)];
    for (int h = 0; h < in.Xbar.num_halfspaces(); ++h) {
      auto row = ineq.add(in.Xbar.offsets()(h), "xbar");
      row.segment(xk.offset, nx) = in.Xbar.normals().row(h);
    }
  }
  auto add_input_set = [&](const HPolytope& set, int k, const char* tag) {
    const VarBlock& xk = p.xbar[static_cast<size_t>(k)];
    const VarBlock& uk = p.nu[static_cast<size_t>(k)];
    for (int h = 0; h < set.num_halfspaces(); ++h) {
      auto row = ineq.add(set.offsets()(h), tag);
      row.segment(xk.offset, nx) = set.normals().row(h) * in.K;
      row.segment(uk.offset, nu) = set.normals().row(h);
    }
  };
  for (int k = 0; k < robust_last; ++k) add_input_set(in.Ubar, k, "ubar");
  if (kind == MethodKind::kSingleRsmpc) {
    check_dims(in.U.dim() == nu, "input set dimension");
    for (int k = in.Ns; k < N; ++k) add_input_set(in.U, k, "u");
  }
  for (int j = 0; j < p.beta.size; ++j) {
    ineq.add(1.0, "beta")(p.beta.offset + j) = 1.0;
    ineq.add(1.0, "beta")(p.beta.offset + j) = -1.0;
  }
  if (coarse) {
    for (int j = 0; j < in.Nl; ++j) {
      const VarBlock& zk = p.z[static_cast<size_t>(j)];
      const VarBlock& ck = p.c[static_cast<size_t>(j)];
      for (int i = 0; i < nv; ++i) {
        for (double s : {1.0, -1.0}) {
          auto row = ineq.add(in.v_bound, "v");
          row.segment(zk.offset, nxi) = s * in.Kc.row(i);
          row(ck.offset + i) += s;
        }
      }
    }
    for (int j = 1; j < in.Nl; ++j) {
      const VarBlock& zk = p.z[static_cast<size_t>(j)];
      const VarBlock& ck = p.c[static_cast<size_t>(j)];
      const VarBlock& zp = p.z[static_cast<size_t>(j) - 1];
      const VarBlock& cp = p.c[static_cast<size_t>(j) - 1];
      for (int i = 0; i < nv; ++i) {
        for (double s : {1.0, -1.0}) {
          auto row = ineq.add(in.rate_bound, "rate");
          row.segment(zk.offset, nxi) = s * in.Kc.row(i);
          row(ck.offset + i) += s;
          row.segment(zp.offset, nxi) -= s * in.Kc.row(i);
          row(cp.offset + i) -= s;
        }
      }
    }
  }
  ineq.finish(p.A_in, p.b_in, &p.in_tags);

  // Nonlinear path constraints.
  for (const PathConstraint& pc : in.robust_path) {
    check_dims(pc.k >= 0 && pc.k <= robust_last, "robust constraint step out of range");
    const VarBlock& b = p.xbar[static_cast<size_t>(pc.k)];
    check_dims(pc.g.state_dim() == b.size && pc.sigma.rows() == b.size, "robust constraint dimension");
    p.path.push_back({pc, b});
  }
  for (const PathConstraint& pc : in.chance_path) {
    check_dims(kind != MethodKind::kSingleRmpc, "single-model RMPC takes no chance constraints");
    check_dims(pc.k >= in.Ns && pc.k <= N, "chance constraint step out of range");
    const VarBlock& b = coarse ? p.z[static_cast<size_t>(pc.k - in.Ns)] : p.xbar[static_cast<size_t>(pc.k)];
    check_dims(pc.g.state_dim() == b.size && pc.sigma.rows() == b.size, "chance constraint dimension");
    p.path.push_back({pc, b});
  }

  // Cost.
  p.H = Mat::Zero(n, n);
  p.f = Vec::Zero(n);
  const Vec p_ref = in.terminal == TerminalCost::kTarget ? in.p_target : Vec(Vec::Zero(in.p_target.size()));
  for (int k = 0; k < Nd; ++k) {
    const VarBlock& xk = p.xbar[static_cast<size_t>(k)];
    const VarBlock& uk = p.nu[static_cast<size_t>(k)];
    add_quadratic(p.H, p.f, p.cost_const, {{{xk.offset, Mat::Identity(nx, nx)}}}, in.Q, in.x_target);
    add_quadratic(p.H, p.f, p.cost_const, {{{xk.offset, in.K}, {uk.offset, Mat::Identity(nu, nu)}}}, in.R,
                  Vec::Zero(nu));
  }
  if (coarse) {
    for (int j = 0; j < in.Nl; ++j) {
      const VarBlock& zk = p.z[static_cast<size_t>(j)];
      const VarBlock& ck = p.c[static_cast<size_t>(j)];
      add_quadratic(p.H, p.f, p.cost_const, {{{zk.offset, Mat::Identity(nxi, nxi)}}}, in.Qc, in.p_target);
      add_quadratic(p.H, p.f, p.cost_const, {{{zk.offset, in.Kc}, {ck.offset, Mat::Identity(nv, nv)}}}, in.Rc,
                    Vec::Zero(nv));
    }
    add_quadratic(p.H, p.f, p.cost_const, {{{p.z.back().offset, Mat::Identity(nxi, nxi)}}}, in.Qc, p_ref);
  } else {
    add_quadratic(p.H, p.f, p.cost_const, {{{p.xbar.back().offset, in.position_rows}}}, in.Qc, p_ref);
  }
  return p;
}

double objective_by_definition(const OcpProblem& p, const Vec& w) {
  const OcpInputs& in = p.inputs;
  const bool coarse = !p.z.empty();
  const int Nd = static_cast<int>(p.xbar.size()) - 1;
  double J = 0.0;
  for (int k = 0; k < Nd; ++k) {
    const Vec x = slot(w, p.xbar[static_cast<size_t>(k)]);
    const Vec u = in.K * x + slot(w, p.nu[static_cast<size_t>(k)]);
    const Vec dx = x - in.x_target;
    J += dx.dot(in.Q * dx) + u.dot(in.R * u);
  }
  const Vec p_ref = in.terminal == TerminalCost::kTarget ? in.p_target : Vec(Vec::Zero(in.p_target.size()));
  if (coarse) {
    for (size_t j = 0; j < p.c.size(); ++j) {
      const Vec z = slot(w, p.z[j]);
      const Vec v = in.Kc * z + slot(w, p.c[j]);
      const Vec dz = z - in.p_target;
      J += dz.dot(in.Qc * dz) + v.dot(in.Rc * v);
    }
    const Vec dz = slot(w, p.z.back()) - p_ref;
    J += dz.dot(in.Qc * dz);
  } else {
    const Vec dz = in.position_rows * slot(w, p.xbar.back()) - p_ref;
    J += dz.dot(in.Qc * dz);
  }
  return J;
}

double path_violation(const OcpProblem& p, const Vec& w) {
  double worst = 0.0;
  for (const auto& path : p.path) {
    const Vec s = slot(w, path.state);
    if (!gate_open(path.c, s)) continue;
    worst = std::max(worst, -margin(path.c, s));
  }
  return worst;
}

Vec straight_line_guess(const OcpProblem& p, double step_length) {
  const OcpInputs& in = p.inputs;
  Vec w = Vec::Zero(p.n_vars);
  const Vec p0 = in.position_rows * in.x0;
  const Vec delta = in.p_target - p0;
  const double dist = delta.norm();
  auto position_at = [&](int k) -> Vec {
    if (dist < 1e-12) return p0;
    const double travel = std::min(dist, step_length * k);
    return Vec(p0 + delta * (travel / dist));
  };
  // Velocities are left at the current state; only positions serve as
  // linearization points.
  for (size_t k = 0; k < p.xbar.size(); ++k) {
    Vec x = in.x0;
    const Vec pos = position_at(static_cast<int>(k));
    x += in.position_rows.transpose() * (pos - in.position_rows * x);
    w.segment(p.xbar[k].offset, p.xbar[k].size) = x;
  }
  for (size_t j = 0; j < p.z.size(); ++j) {
    w.segment(p.z[j].offset, p.z[j].size) = position_at(p.Ns + static_cast<int>(j));
  }
  return w;
}

Vec shifted_guess(const OcpProblem& p, const OcpSolution& prev) {
  const OcpInputs& in = p.inputs;
  Vec w = Vec::Zero(p.n_vars);
  const size_t nd = p.xbar.size();
  if (prev.xbar.size() != nd || prev.z.size() != p.z.size()) return straight_line_guess(p, 0.4);
  for (size_t k = 0; k + 1 < nd; ++k) w.segment(p.xbar[k].offset, p.xbar[k].size) = prev.xbar[k + 1];
  Vec last = prev.xbar.back();
  if (!p.z.empty() && prev.z.size() > 1) {
    last += in.position_rows.transpose() * (prev.z[1] - in.position_rows * last);
  }
  w.segment(p.xbar.back().offset, p.xbar.back().size) = last;
  for (size_t k = 0; k < p.nu.size(); ++k) {
    w.segment(p.nu[k].offset, p.nu[k].size) = prev.nu[std::min(k + 1, prev.nu.size() - 1)];
  }
  for (size_t j = 0; j < p.z.size(); ++j) {
    w.segment(p.z[j].offset, p.z[j].size) = prev.z[std::min(j + 1, prev.z.size() - 1)];
  }
  for (size_t j = 0; j < p.c.size(); ++j) {
    w.segment(p.c[j].offset, p.c[j].size) = prev.c[std::min(j + 1, prev.c.size() - 1)];
  }
  return w;
}

namespace {

struct Linearized {
  Mat A;
  Vec b;
  std::vector<int> path_index;
};

Linearized linearize_path(const OcpProblem& p, const Vec& w) {
  std::vector<std::pair<Eigen::RowVectorXd, double>> rows;
  Linearized lin;
  for (size_t i = 0; i < p.path.size(); ++i) {
    const auto& path = p.path[i];
    const Vec s = slot(w, path.state);
    if (!gate_open(path.c, s)) {
      // Outside the gate with the half-plane violated: keep the iterate on
      // its side of the gate instead (box exterior face selection).
      if (margin(path.c, s) >= 0.0) continue;
      const int gi = path.c.gate_index;
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(p.n_vars);
      if (s(gi) <= 0.5 * (path.c.gate_lo + path.c.gate_hi)) {
        row(path.state.offset + gi) = 1.0;
        rows.emplace_back(row, path.c.gate_lo);
      } else {
        row(path.state.offset + gi) = -1.0;
        rows.emplace_back(row, -path.c.gate_hi);
      }
      lin.path_index.push_back(static_cast<int>(i));
      continue;
    }
    const Vec q = linearization_point(path.c, s);
    const Vec grad = path.c.g.gradient(q);
    const double gam = gamma(grad, path.c.sigma, path.c.g.p());
    // g(q) + grad'(x - q) >= gam  <=>  -grad' x <= g(q) - grad' q - gam
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(p.n_vars);
    row.segment(path.state.offset, path.state.size) = -grad.transpose();
    rows.emplace_back(row, path.c.g.value(q) - grad.dot(q) - gam);
    lin.path_index.push_back(static_cast<int>(i));
  }
  lin.A.resize(static_cast<int>(rows.size()), p.n_vars);
  lin.b.resize(static_cast<int>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    lin.A.row(static_cast<int>(r)) = rows[r].first;
    lin.b(static_cast<int>(r)) = rows[r].second;
  }
  return lin;
}

}  // namespace

OcpSolution solve_sqp(const OcpProblem& p, const SqpSettings& settings, const Vec& guess) {
  require(settings.step_tolerance > 0.0 && settings.violation_tolerance > 0.0 && settings.max_iterations > 0,
          "solve_sqp: tolerances and iteration cap must be positive");
  require(guess.size() == p.n_vars, "solve_sqp: guess dimension mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  const int n = p.n_vars;

  Mat H = p.H;
  for (int i : p.free_vars) H(i, i) += settings.regularization;
  // Adding the squared equality residual leaves the optimum unchanged and
  // makes H definite on the states without cost.
  H += p.A_eq.transpose() * p.A_eq;
  const Vec f = p.f - p.A_eq.transpose() * p.b_eq;

  OcpSolution sol;
  Vec w = guess;
  bool converged = false;
  int it = 0;
  for (; it < settings.max_iterations; ++it) {
    const Linearized lin = linearize_path(p, w);
    const int m_lin = static_cast<int>(p.A_in.rows());
    const int m_path = static_cast<int>(lin.A.rows());
    Mat A_in(m_lin + m_path, n);
    Vec b_in(m_lin + m_path);
    A_in << p.A_in, lin.A;
    b_in << p.b_in, lin.b;
    QpResult qp = qp_solve(H, f, A_in, b_in, p.A_eq, p.b_eq);
    bool soft_step = false;
    if (qp.status == QpStatus::kInfeasible) {
      // Retry with slacks on soft path rows.
      std::vector<int> soft_rows;
      for (int r = 0; r < m_path; ++r) {
        if (p.path[static_cast<size_t>(lin.path_index[static_cast<size_t>(r)])].c.soft) soft_rows.push_back(r);
      }
      const int ns = static_cast<int>(soft_rows.size());
      if (ns > 0) {
        Mat Hs = Mat::Zero(n + ns, n + ns);
        Hs.topLeftCorner(n, n) = H;
        Hs.bottomRightCorner(ns, ns) = Mat::Identity(ns, ns);
        Vec fs(n + ns);
        fs << f, Vec::Constant(ns, settings.soft_weight);
        Mat As = Mat::Zero(m_lin + m_path + ns, n + ns);
        As.topLeftCorner(m_lin + m_path, n) = A_in;
        Vec bs(m_lin + m_path + ns);
        bs << b_in, Vec::Zero(ns);
        for (int j = 0; j < ns; ++j) {
          As(m_lin + soft_rows[static_cast<size_t>(j)], n + j) = -1.0;
          As(m_lin + m_path + j, n + j) = -1.0;
        }
        Mat Aes = Mat::Zero(p.A_eq.rows(), n + ns);
        Aes.leftCols(n) = p.A_eq;
        QpResult soft = qp_solve(Hs, fs, As, bs, Aes, p.b_eq);
        if (soft.status == QpStatus::kOptimal) {
          qp = soft;
          qp.x = soft.x.head(n);
          soft_step = true;
          sol.softened = true;
        }
      }
      if (!soft_step) {
        sol.status = SolveStatus::kInfeasible;
        const int blk = qp.blocking_constraint;
        if (blk >= 0 && blk < m_lin) {
          sol.violated.push_back(p.in_tags[static_cast<size_t>(blk)]);
        } else if (blk >= m_lin) {
          const auto& path = p.path[static_cast<size_t>(lin.path_index[static_cast<size_t>(blk - m_lin)])];
          sol.violated.push_back(path.c.tag + "@" + std::to_string(path.c.k));
        } else {
          sol.violated.push_back("equality");
        }
        sol.iterations = it + 1;
        sol.w = w;
        sol.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return sol;
      }
    }
    if (qp.status == QpStatus::kMaxIterations) {
      sol.status = SolveStatus::kInfeasible;
      sol.violated.push_back("qp-iteration-cap");
      sol.iterations = it + 1;
      sol.w = w;
      sol.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      return sol;
    }

    const Vec delta = qp.x - w;
    double alpha = 1.0;
    if (it > 0) {
      const double v0 = path_violation(p, w);
      int halvings = 0;
      while (halvings < settings.max_halvings &&
             path_violation(p, w + alpha * delta) > v0 + settings.violation_tolerance) {
        alpha *= 0.5;
        ++halvings;
      }
    }
    w += alpha * delta;
    const double step = delta.cwiseAbs().maxCoeff();
    if (settings.trace) {
      sol.trace.push_back({{"iteration", it},
                           {"step", step},
                           {"alpha", alpha},
                           {"violation", path_violation(p, w)},
                           {"objective", 0.5 * w.dot(p.H * w) + p.f.dot(w) + p.cost_const},
                           {"qp_iterations", qp.iterations},
                           {"active_path_rows", m_path},
                           {"softened", soft_step}});
    }
    if (step < settings.step_tolerance) {
      converged = true;
      ++it;
      break;
    }
  }

  sol.status = converged ? SolveStatus::kConverged : SolveStatus::kMaxIterations;
  sol.iterations = it;
  sol.w = w;
  sol.beta = slot(w, p.beta);
  for (const VarBlock& b : p.xbar) sol.xbar.push_back(slot(w, b));
  for (const VarBlock& b : p.nu) sol.nu.push_back(slot(w, b));
  for (const VarBlock& b : p.z) sol.z.push_back(slot(w, b));
  for (const VarBlock& b : p.c) sol.c.push_back(slot(w, b));
  sol.objective = 0.5 * w.dot(p.H * w) + p.f.dot(w) + p.cost_const;
  sol.violation = path_violation(p, w);
  for (const auto& path : p.path) {
    const Vec s = slot(w, path.state);
    if (gate_open(path.c, s) && margin(path.c, s) < -settings.violation_tolerance) {
      sol.violated.push_back(path.c.tag + "@" + std::to_string(path.c.k));
    }
  }
  sol.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

OcpProblem with_preference(const OcpProblem& problem, const Eigen::Vector2d& prefer) {
  OcpProblem out = problem;
  for (auto& path : out.path) {
    if (path.c.g.kind() == ChanceConstraint::Kind::kEllipse) {
      path.c.prefer = prefer;
      path.c.force_prefer = true;
    }
  }
  return out;
}

Vec hold_guess(const OcpProblem& p) {
  const OcpInputs& in = p.inputs;
  Vec w = Vec::Zero(p.n_vars);
  const Vec pos = in.position_rows * in.x0;
  const Vec rest = in.position_rows.transpose() * pos;
  for (const VarBlock& b : p.xbar) w.segment(b.offset, b.size) = rest;
  for (const VarBlock& b : p.z) w.segment(b.offset, b.size) = pos;
  return w;
}

namespace {

// True when the plan is infeasible, breaks a constraint within the first
// `horizon` stages, or breaks a robust constraint before the last robust
// stage.
bool needs_yield(const OcpProblem& problem, const OcpSolution& sol, int horizon) {
  if (sol.status == SolveStatus::kInfeasible) return true;
  int robust_end = -1;
  std::set<std::string> robust_tags;
  for (const PathConstraint& pc : problem.inputs.robust_path) {
    robust_end = std::max(robust_end, pc.k);
    robust_tags.insert(pc.tag);
  }
  for (const auto& tag : sol.violated) {
    const auto at = tag.rfind('@');
    if (at == std::string::npos) return true;
    const int k = std::stoi(tag.substr(at + 1));
    if (k <= horizon) return true;
    if (k < robust_end && robust_tags.count(tag.substr(0, at)) > 0) return true;
  }
  return false;
}

}  // namespace

OcpSolution solve_with_yield(const OcpProblem& problem, const SqpSettings& settings, const Vec& guess) {
  OcpSolution sol = solve_sqp(problem, settings, guess);
  if (!settings.allow_yield || !needs_yield(problem, sol, settings.yield_horizon)) return sol;
  const OcpProblem behind = with_preference(problem, Eigen::Vector2d(-1.0, 0.0));
  OcpSolution alt = solve_sqp(behind, settings, hold_guess(behind));
  const bool alt_better = alt.admissible() || (alt.status != SolveStatus::kInfeasible &&
                                                 (sol.status == SolveStatus::kInfeasible || alt.violation < sol.violation));
  OcpSolution& kept = alt_better ? alt : sol;
  OcpSolution& dropped = alt_better ? sol : alt;
  kept.solve_ms += dropped.solve_ms;
  kept.yielded = alt_better;
  for (auto& t : alt.trace) t["fallback"] = true;
  for (auto& t : dropped.trace) kept.trace.push_back(std::move(t));
  return std::move(kept);
}

AppliedControl extract_control(const OcpSolution& solution, const Vec& x0, const Mat& K) {
  if (solution.status == SolveStatus::kInfeasible) {
    throw std::runtime_error("extract_control: solution is infeasible");
  }
  require(!solution.nu.empty() && !solution.xbar.empty(), "extract_control: empty solution");
  require(K.cols() == x0.size() && K.rows() == solution.nu[0].size(), "extract_control: dimension mismatch");
  AppliedControl out;
  out.u = K * x0 + solution.nu[0];
  const Vec ubar0 = K * solution.xbar[0] + solution.nu[0];
  out.u_via_tube = ubar0 + K * (x0 - solution.xbar[0]);
  if ((out.u - out.u_via_tube).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + out.u.cwiseAbs().maxCoeff())) {
    std::ostringstream msg;
    msg << "extract_control: control forms disagree by " << (out.u - out.u_via_tube).cwiseAbs().maxCoeff();
    throw std::logic_error(msg.str());
  }
  return out;
}

}  // namespace gmpc
