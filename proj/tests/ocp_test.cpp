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

#include <algorithm>
#include <map>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "gmpc/scenario.hpp"
#include "oracles.hpp"

namespace gmpc {
namespace {

const Scenario& default_scenario() {
  static const Scenario s = Scenario::build(ScenarioConfig{});
  return s;
}

Vec start_state() { return Vec::Zero(4); }

OcpInputs unconstrained_inputs(MethodKind kind, int Ns, int Nl) {
  return oracle::unconstrained_inputs(default_scenario(), kind, Ns, Nl);
}

TEST(OcpTest, GranularDecisionCountWithFourGenerators) {
  ScenarioConfig c;
  c.init_generators = 4;
  const Scenario s = Scenario::build(c);
  const OcpProblem p = assemble(make_ocp_inputs(s, MethodKind::kGranular, start_state(), c.obstacle_start),
                                MethodKind::kGranular);
  EXPECT_EQ(p.beta.size, 4);
  EXPECT_EQ(p.independent_decisions(), 46);
}

TEST(OcpTest, QuadraticFormMatchesCostDefinition) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (MethodKind kind : {MethodKind::kGranular, MethodKind::kSingleRsmpc, MethodKind::kSingleRmpc}) {
    const Scenario& s = default_scenario();
    const OcpProblem p = assemble(make_ocp_inputs(s, kind, start_state(), s.config.obstacle_start), kind);
    for (int trial = 0; trial < 5; ++trial) {
      Vec w(p.n_vars);
      for (int i = 0; i < w.size(); ++i) w(i) = 3.0 * nd(rng);
      const double quad = 0.5 * w.dot(p.H * w) + p.f.dot(w) + p.cost_const;
      const double def = objective_by_definition(p, w);
      EXPECT_NEAR(quad, def, 1e-9 * (1.0 + std::abs(def))) << to_string(kind);
    }
  }
}

TEST(OcpTest, CostGradientMatchesFiniteDifferences) {
  const Scenario& s = default_scenario();
  const OcpProblem p =
      assemble(make_ocp_inputs(s, MethodKind::kGranular, start_state(), s.config.obstacle_start), MethodKind::kGranular);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Vec w(p.n_vars);
  for (int i = 0; i < w.size(); ++i) w(i) = nd(rng);
  const Vec grad = p.H * w + p.f;
  const double h = 1e-5;
  for (int i = 0; i < p.n_vars; ++i) {
    Vec wp = w, wm = w;
    wp(i) += h;
    wm(i) -= h;
    const double fd = (objective_by_definition(p, wp) - objective_by_definition(p, wm)) / (2.0 * h);
    EXPECT_NEAR(grad(i), fd, 1e-5 * (1.0 + std::abs(fd))) << "variable " << i;
  }
}

TEST(OcpTest, UnconstrainedSolveMatchesBatchOracle) {
  for (MethodKind kind : {MethodKind::kGranular, MethodKind::kSingleRmpc}) {
    const int Ns = 7;
    const int Nl = kind == MethodKind::kGranular ? 0 : 13;
    const OcpInputs in = unconstrained_inputs(kind, Ns, Nl);
    const OcpProblem p = assemble(in, kind);
    ASSERT_EQ(p.A_in.rows(), static_cast<int>(p.in_tags.size()));
    const OcpSolution sol = solve_sqp(p, SqpSettings{}, straight_line_guess(p, 0.4));
    ASSERT_EQ(sol.status, SolveStatus::kConverged);
    const int N = Ns + Nl;
    const std::vector<Vec> ref = oracle::batch_solution(in, N);
    for (int k = 0; k < N; ++k) {
      EXPECT_LT((sol.nu[static_cast<size_t>(k)] - ref[static_cast<size_t>(k)]).cwiseAbs().maxCoeff(), 1e-6)
          << to_string(kind) << " step " << k;
    }
  }
}

TEST(OcpTest, TargetIsAFixedPoint) {
  OcpInputs in = unconstrained_inputs(MethodKind::kSingleRmpc, 7, 13);
  in.x0 = in.x_target;
  const OcpProblem p = assemble(in, MethodKind::kSingleRmpc);
  const OcpSolution sol = solve_sqp(p, SqpSettings{}, straight_line_guess(p, 0.4));
  ASSERT_EQ(sol.status, SolveStatus::kConverged);
  for (const Vec& x : sol.xbar) EXPECT_LT((x - in.x_target).cwiseAbs().maxCoeff(), 1e-8);
  const AppliedControl u = extract_control(sol, in.x0, in.K);
  EXPECT_LT(u.u.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(OcpTest, AppliedControlFormsAgree) {
  const Scenario& s = default_scenario();
  const Vec x0 = (Vec(4) << 0.3, 0.5, 0.1, -0.2).finished();
  const OcpProblem p = assemble(make_ocp_inputs(s, MethodKind::kGranular, x0, s.config.obstacle_start),
                                MethodKind::kGranular);
  const OcpSolution sol = solve_sqp(p, SqpSettings{}, straight_line_guess(p, 0.4));
  ASSERT_NE(sol.status, SolveStatus::kInfeasible);
  const AppliedControl u = extract_control(sol, x0, p.inputs.K);
  EXPECT_LT((u.u - (p.inputs.K * x0 + sol.nu[0])).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((u.u - u.u_via_tube).cwiseAbs().maxCoeff(), 1e-10);
  // The nominal initial state stays inside x0 - Z_init.
  EXPECT_LE(sol.beta.cwiseAbs().maxCoeff(), 1.0 + 1e-9);
}

TEST(OcpTest, ConstraintCensus) {
  const Scenario& s = default_scenario();
  const int Ns = s.config.Ns, Nl = s.config.Nl, N = Ns + Nl;
  struct Expect {
    MethodKind kind;
    int robust_last;
    std::vector<std::string> robust_tags;
    std::vector<std::string> chance_tags;
  };
  const std::vector<std::string> robust = {"robust-ellipse", "robust-box"};
  const std::vector<std::string> chance2 = {"chance-ellipse", "chance-lane-upper", "chance-lane-lower", "chance-box"};
  std::vector<std::string> chance4 = chance2;
  for (int i = 0; i < 4; ++i) chance4.push_back("chance-velocity");
  const std::vector<Expect> cases = {{MethodKind::kGranular, Ns, robust, chance2},
                                     {MethodKind::kSingleRsmpc, Ns, robust, chance4},
                                     {MethodKind::kSingleRmpc, N, robust, {}}};
  for (const Expect& e : cases) {
    const OcpProblem p = assemble(make_ocp_inputs(s, e.kind, start_state(), s.config.obstacle_start), e.kind);
    std::map<std::pair<std::string, int>, int> seen;
    for (const auto& path : p.path) ++seen[{path.c.tag, path.c.k}];
    std::map<std::pair<std::string, int>, int> expected;
    for (int k = 0; k <= e.robust_last; ++k)
      for (const auto& t : e.robust_tags) ++expected[{t, k}];
    if (!e.chance_tags.empty())
      for (int k = Ns; k <= N; ++k)
        for (const auto& t : e.chance_tags) ++expected[{t, k}];
    EXPECT_EQ(seen, expected) << to_string(e.kind);

    std::map<std::string, int> rows;
    for (const auto& t : p.in_tags) ++rows[t];
    const int nxh = s.Xbar.num_halfspaces(), nuh = s.Ubar.num_halfspaces();
    EXPECT_EQ(rows["xbar"], (e.robust_last + 1) * nxh) << to_string(e.kind);
    EXPECT_EQ(rows["ubar"], e.robust_last * nuh) << to_string(e.kind);
    EXPECT_EQ(rows["beta"], 2 * s.Z_init.num_generators()) << to_string(e.kind);
    if (e.kind == MethodKind::kGranular) {
      EXPECT_EQ(rows["v"], 4 * Nl);
      EXPECT_EQ(rows["rate"], 4 * (Nl - 1));
    } else {
      EXPECT_EQ(rows.count("v"), 0u);
      EXPECT_EQ(rows.count("rate"), 0u);
    }
    EXPECT_EQ(rows["u"], e.kind == MethodKind::kSingleRsmpc ? Nl * s.U.num_halfspaces() : 0);
  }
}

TEST(OcpTest, ShiftedGuessMovesStatesOneStep) {
  const Scenario& s = default_scenario();
  const OcpProblem p =
      assemble(make_ocp_inputs(s, MethodKind::kGranular, start_state(), s.config.obstacle_start), MethodKind::kGranular);
  const OcpSolution sol = solve_sqp(p, SqpSettings{}, straight_line_guess(p, 0.4));
  const Vec w = shifted_guess(p, sol);
  for (size_t k = 0; k + 1 < p.xbar.size(); ++k) {
    EXPECT_EQ(w.segment(p.xbar[k].offset, p.xbar[k].size), sol.xbar[k + 1]);
  }
  for (size_t j = 0; j + 1 < p.z.size(); ++j) {
    EXPECT_EQ(w.segment(p.z[j].offset, p.z[j].size), sol.z[j + 1]);
  }
}

TEST(OcpTest, FirstStepConvergesForEveryMethod) {
  const Scenario& s = default_scenario();
  for (MethodKind kind : {MethodKind::kGranular, MethodKind::kSingleRsmpc, MethodKind::kSingleRmpc}) {
    const OcpProblem p = assemble(make_ocp_inputs(s, kind, start_state(), s.config.obstacle_start), kind);
    const OcpSolution sol = solve_sqp(p, SqpSettings{}, straight_line_guess(p, 0.4));
    EXPECT_EQ(sol.status, SolveStatus::kConverged) << to_string(kind);
    EXPECT_LE(path_violation(p, sol.w), 1e-6) << to_string(kind);
    EXPECT_LT((p.A_eq * sol.w - p.b_eq).cwiseAbs().maxCoeff(), 1e-8) << to_string(kind);
    EXPECT_LE((p.A_in * sol.w - p.b_in).maxCoeff(), 1e-8) << to_string(kind);
  }
}

TEST(OcpTest, PreferenceFixesEllipseHalfPlanes) {
  const Scenario& s = default_scenario();
  const OcpProblem p = assemble(make_ocp_inputs(s, MethodKind::kSingleRmpc, start_state(), s.config.obstacle_start),
                                MethodKind::kSingleRmpc);
  const OcpProblem behind = with_preference(p, Eigen::Vector2d(-1.0, 0.0));
  ASSERT_EQ(behind.path.size(), p.path.size());
  int ellipses = 0;
  for (const auto& path : behind.path) {
    if (path.c.tag.find("ellipse") == std::string::npos) continue;
    ++ellipses;
    EXPECT_TRUE(path.c.force_prefer);
    EXPECT_EQ(path.c.prefer, Eigen::Vector2d(-1.0, 0.0));
  }
  EXPECT_EQ(ellipses, s.config.Ns + s.config.Nl + 1);
  const Vec w = hold_guess(behind);
  for (const VarBlock& b : behind.xbar) {
    EXPECT_EQ(w.segment(b.offset, b.size), Vec::Zero(4));
  }
}

TEST(OcpTest, YieldDisabledReturnsPrimarySolve) {
  const Scenario& s = default_scenario();
  const Vec x0 = (Vec(4) << 1.2, 2.3, 0.0, 0.0).finished();
  const OcpProblem p = assemble(make_ocp_inputs(s, MethodKind::kSingleRmpc, x0, s.config.obstacle_start),
                                MethodKind::kSingleRmpc);
  SqpSettings st;
  st.allow_yield = false;
  const Vec guess = straight_line_guess(p, 0.4);
  const OcpSolution a = solve_with_yield(p, st, guess);
  const OcpSolution b = solve_sqp(p, st, guess);
  EXPECT_FALSE(a.yielded);
  EXPECT_EQ(a.w, b.w);
}

TEST(OcpTest, YieldKeepsRobotBehindObstacle) {
  const Scenario& s = default_scenario();
  // The robust pass plan found from a straight-line guess breaks the robust
  // ellipse and box at the box entry.
  const Vec x0 = (Vec(4) << 5.0, 2.0, 2.0, 0.0).finished();
  DynamicObstacle obs = s.initial_obstacle();
  obs.position = (Vec(2) << 7.5, 0.0).finished();
  const OcpProblem p = assemble(make_ocp_inputs(s, MethodKind::kSingleRmpc, x0, obs.position), MethodKind::kSingleRmpc);
  const Vec guess = straight_line_guess(p, 0.4);
  ASSERT_FALSE(solve_sqp(p, SqpSettings{}, guess).admissible());
  const OcpSolution sol = solve_with_yield(p, SqpSettings{}, guess);
  ASSERT_TRUE(sol.yielded);
  ASSERT_TRUE(sol.admissible());
  const std::vector<Vec> pred = predict_obstacle(obs, s.config.Ns + s.config.Nl, s.config.dt);
  for (size_t k = 0; k < sol.xbar.size(); ++k) EXPECT_LT(sol.xbar[k](0), pred[k](0)) << "step " << k;
  EXPECT_LE(sol.xbar.back()(0), pred.back()(0) - s.config.robust_ellipse_a + 1e-6);
}

}  // namespace
}  // namespace gmpc
