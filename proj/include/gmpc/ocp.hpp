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

// Two-stage optimal control problem and its SQP solver.
//
// Decision variables are laid out in lifted form: tube auxiliaries beta,
// nominal states and inputs of the detailed stage, then (granular method)
// the coarse deterministic states z and inputs c of the long stage.
// Dynamics, the initial-state tube membership and the model coupling are
// linear equalities. Obstacle constraints are nonlinear and re-linearized
// at each SQP iterate.

#ifndef GMPC_OCP_HPP_
#define GMPC_OCP_HPP_

#include <optional>
#include <string>
#include <vector>

#include "gmpc/chance.hpp"
#include "gmpc/qp.hpp"
#include "gmpc/setops.hpp"
#include "gmpc/sysmodel.hpp"

namespace gmpc {

enum class MethodKind { kGranular, kSingleRsmpc, kSingleRmpc };

const char* to_string(MethodKind kind);
// Accepts granular | single-rsmpc | single-rmpc.
MethodKind method_from_string(const std::string& name);

enum class TerminalCost { kTarget, kOrigin };

// g(x_k) >= gamma_k on the state predicted for step k. Robust constraints
// carry a zero covariance (gamma = 0). A gated constraint is only imposed
// when coordinate gate_index of the current iterate lies in [gate_lo, gate_hi].
struct PathConstraint {
  ChanceConstraint g;
  Mat sigma;
  int k = 0;
  std::string tag;
  bool soft = false;
  int gate_index = -1;
  double gate_lo = 0.0;
  double gate_hi = 0.0;
  // Ellipses only: preferred direction (normalized ellipse coordinates)
  // used to pick the supporting half-plane when the iterate lies inside
  // the ellipse. Zero means the radial direction.
  Eigen::Vector2d prefer = Eigen::Vector2d::Zero();
  // Always linearize at the tightened boundary point in direction prefer,
  // whatever the iterate (a fixed supporting half-plane).
  bool force_prefer = false;
};

struct OcpInputs {
  int Ns = 7;
  int Nl = 13;
  // Detailed model, u = K x + nu, Phi = A + B K.
  Mat A, B, K;
  // x0 - xbar0 in Z_init (any inner approximation of the tube set keeps the
  // robust guarantee).
  Zonotope Z_init = Zonotope::singleton(Vec::Zero(1));
  HPolytope Xbar = HPolytope::box(-Vec::Ones(1), Vec::Ones(1));
  HPolytope Ubar = HPolytope::box(-Vec::Ones(1), Vec::Ones(1));
  // Untightened input set, used on the long stage of the single-model R+SMPC.
  HPolytope U = HPolytope::box(-Vec::Ones(1), Vec::Ones(1));
  // Coarse model, v = Kc xi + c.
  Mat Ac, Bc, Kc;
  std::optional<ProjectionMap> proj;
  double v_bound = 3.0;
  double rate_bound = 0.6;
  // Costs: ||x - x_target||_Q + ||u||_R and ||z - p_target||_Qc + ||v||_Rc.
  Mat Q, R, Qc, Rc;
  Vec x_target, p_target;
  TerminalCost terminal = TerminalCost::kTarget;
  // Rows of the detailed state holding the positions (terminal cost of the
  // single-model methods and of a granular problem without long stage).
  Mat position_rows;
  Vec x0;
  std::vector<PathConstraint> robust_path;
  std::vector<PathConstraint> chance_path;
};

struct VarBlock {
  int offset = 0;
  int size = 0;
};

struct OcpProblem {
  MethodKind kind = MethodKind::kGranular;
  int Ns = 0;
  int Nl = 0;
  int n_vars = 0;
  VarBlock beta;
  std::vector<VarBlock> xbar;  // steps 0..(detailed horizon)
  std::vector<VarBlock> nu;
  std::vector<VarBlock> z;  // steps Ns..N (granular only)
  std::vector<VarBlock> c;  // steps Ns..N-1 (granular only)
  // 0.5 w'Hw + f'w + cost_const equals the OCP objective.
  Mat H;
  Vec f;
  double cost_const = 0.0;
  Mat A_eq;
  Vec b_eq;
  Mat A_in;
  Vec b_in;
  std::vector<std::string> in_tags;
  struct Path {
    PathConstraint c;
    VarBlock state;
  };
  std::vector<Path> path;
  std::vector<int> free_vars;  // variables without cost (regularized)
  OcpInputs inputs;

  int N() const { return Ns + Nl; }
  // Number of free decisions: tube auxiliaries, nominal inputs and coarse
  // inputs (states are fixed by the dynamics).
  int independent_decisions() const;
};

OcpProblem assemble(const OcpInputs& inputs, MethodKind kind);

// Objective evaluated from the stage-cost definitions, independent of H, f.
double objective_by_definition(const OcpProblem& problem, const Vec& w);

struct SqpSettings {
  int max_iterations = 20;
  double step_tolerance = 1e-6;
  double violation_tolerance = 1e-6;
  int max_halvings = 8;
  double soft_weight = 1e6;
  double regularization = 1e-6;
  bool trace = false;
  // Yield fallback triggers on violations at stages 0..yield_horizon.
  int yield_horizon = 2;
  bool allow_yield = true;
};

enum class SolveStatus { kConverged, kMaxIterations, kInfeasible };

const char* to_string(SolveStatus status);

struct OcpSolution {
  SolveStatus status = SolveStatus::kInfeasible;
  Vec w;
  Vec beta;
  std::vector<Vec> xbar, nu, z, c;
  double objective = 0.0;
  int iterations = 0;
  double solve_ms = 0.0;
  bool softened = false;
  double violation = 0.0;
  std::vector<std::string> violated;
  std::vector<nlohmann::json> trace;
  // True when the plan came from the yield fallback of solve_with_yield.
  bool yielded = false;

  // Solved without infeasibility and with every path constraint satisfied.
  bool admissible() const { return status != SolveStatus::kInfeasible && violated.empty(); }
};

// Initial guess of the SQP iterate; only the state slots act as
// linearization points.
Vec straight_line_guess(const OcpProblem& problem, double step_length);
Vec shifted_guess(const OcpProblem& problem, const OcpSolution& previous);

OcpSolution solve_sqp(const OcpProblem& problem, const SqpSettings& settings, const Vec& guess);

// Copy of the problem whose ellipse constraints are replaced by their
// supporting half-planes in the given direction.
OcpProblem with_preference(const OcpProblem& problem, const Eigen::Vector2d& prefer);

// Every state slot holds the current position at rest.
Vec hold_guess(const OcpProblem& problem);

// Solves from the guess. If settings.allow_yield is set and the plan is
// infeasible, violates a constraint within settings.yield_horizon stages or
// violates a robust constraint before the last robust stage, the problem is
// solved again with ellipse constraints preferring to stay behind the
// obstacle (direction (-1, 0)) from the hold guess. That plan is used when
// it is admissible, or when neither is and it violates the path constraints
// less. solve_ms covers both solves.
OcpSolution solve_with_yield(const OcpProblem& problem, const SqpSettings& settings, const Vec& guess);

// Largest violation of the nonlinear path constraints (0 when satisfied).
double path_violation(const OcpProblem& problem, const Vec& w);

struct AppliedControl {
  Vec u;            // K x0 + nu0
  Vec u_via_tube;   // ubar0 + K (x0 - xbar0)
};

AppliedControl extract_control(const OcpSolution& solution, const Vec& x0, const Mat& K);

}  // namespace gmpc

#endif  // GMPC_OCP_HPP_
