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

// Closed-loop receding-horizon simulation and Monte Carlo aggregation.

#ifndef GMPC_SIMRUNNER_HPP_
#define GMPC_SIMRUNNER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "gmpc/ocp.hpp"
#include "gmpc/scenario.hpp"

namespace gmpc {

struct StepRecord {
  int k = 0;
  Vec x;            // state at the start of the step
  Vec u;            // applied input
  Vec disturbance;  // realized plant disturbance d_k
  Vec obstacle;     // obstacle position at the start of the step
  double stage_cost = 0.0;
  std::string status;
  int iterations = 0;
  double solve_ms = 0.0;
  bool softened = false;
  // The plan stays behind the obstacle (yield fallback).
  bool yielded = false;
  // Largest path-constraint violation of the applied plan.
  double plan_violation = 0.0;
  // Path constraints violated by the accepted plan (tag@step).
  std::vector<std::string> violated;
};

struct RunRecord {
  MethodKind method = MethodKind::kGranular;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  Vec final_state;
  Vec final_obstacle;
  EpisodeFlags flags;
  // reached | collided | max-steps | infeasible
  std::string termination;
  double cumulative_cost = 0.0;
  double max_px = 0.0;
  // Steps whose realized state leaves the untightened lane/velocity set.
  int state_violations = 0;
  int softened_steps = 0;
  std::vector<nlohmann::json> traces;

  double mean_solve_ms() const;
};

// l(x, u) = (x - x_target)' Q (x - x_target) + u' R u.
double stage_cost(const ScenarioConfig& config, const Vec& x, const Vec& u);

SqpSettings sqp_settings(const ScenarioConfig& config, bool trace = false);

// Deterministic in (scenario, method, seed) apart from the wall-clock
// fields solve_ms. The plant and obstacle draw from separate streams so
// that every method sees the same disturbance sequence for a seed.
RunRecord run_closed_loop(const Scenario& scenario, MethodKind method, std::uint64_t seed, bool trace = false);

// One JSON object per step followed by a summary line. Wall-clock times are
// excluded so the file is reproducible byte for byte.
std::string trajectory_jsonl(const RunRecord& record);

struct MethodSummary {
  MethodKind method = MethodKind::kGranular;
  int n_runs = 0;
  double pass_rate = 0.0;
  double collision_rate = 0.0;
  double reach_rate = 0.0;
  int infeasible_runs = 0;
  int state_violations = 0;
  double max_px = 0.0;
  double mean_cumulative_cost = 0.0;
  double mean_solve_ms = 0.0;
  double median_solve_ms = 0.0;
  // Length max_steps; finished runs are padded with their last value.
  std::vector<double> mean_cost_curve;
  std::vector<double> solve_time_curve;
};

MethodSummary summarize(MethodKind method, const std::vector<RunRecord>& runs, int max_steps);

struct MonteCarloResult {
  MethodSummary summary;
  std::vector<RunRecord> runs;
};

// Seeds base_seed .. base_seed + n_runs - 1, spread over jobs threads.
MonteCarloResult monte_carlo(const Scenario& scenario, MethodKind method, int n_runs, std::uint64_t base_seed,
                             int jobs = 1);

struct Comparison {
  std::vector<MonteCarloResult> methods;  // granular, single-rsmpc, single-rmpc
  double time_ratio = 0.0;  // granular / single-rsmpc mean solve time
  double cost_ratio = 0.0;  // granular / single-rsmpc mean cumulative cost
};

Comparison compare_methods(const Scenario& scenario, int n_runs, std::uint64_t base_seed, int jobs = 1);

nlohmann::ordered_json to_json(const MethodSummary& summary);
nlohmann::ordered_json to_json(const Comparison& comparison);

// Columns: method, run_id, passed, collided, reached, steps, cumulative_cost,
// mean_solve_ms, softened_steps.
std::string summary_csv(const std::vector<RunRecord>& runs, std::uint64_t base_seed);

}  // namespace gmpc

#endif  // GMPC_SIMRUNNER_HPP_
