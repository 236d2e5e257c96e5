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

#include "gmpc/simrunner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace gmpc {
namespace {

using ojson = nlohmann::ordered_json;

ojson vec_json(const Vec& v) {
  ojson out = ojson::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vec step_model(const LinearModel& m, const Vec& x, const Vec& u, const Vec& d) { return step(m, x, u, d); }

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

double sample_bounded(std::mt19937_64& rng, double bound, const std::string& noise) {
  if (noise == "truncated-gaussian") {
    std::normal_distribution<double> normal(0.0, 0.5 * bound);
    for (;;) {
      const double d = normal(rng);
      if (std::abs(d) <= bound) return d;
    }
  }
  std::uniform_real_distribution<double> uniform(-bound, bound);
  return uniform(rng);
}

bool violates_state_bounds(const ScenarioConfig& c, const Vec& x) {
  return x(2) < c.lane_min || x(2) > c.lane_max || std::abs(x(1)) > c.velocity_bound ||
         std::abs(x(3)) > c.velocity_bound;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double RunRecord::mean_solve_ms() const {
  if (steps.empty()) return 0.0;
  double total = 0.0;
  for (const StepRecord& s : steps) total += s.solve_ms;
  return total / static_cast<double>(steps.size());
}

double stage_cost(const ScenarioConfig& c, const Vec& x, const Vec& u) {
  const Vec x_target = (Vec(4) << c.target(0), 0.0, c.target(1), 0.0).finished();
  const Vec dx = x - x_target;
  return dx.dot(c.Q.asDiagonal() * dx) + u.dot(c.R.asDiagonal() * u);
}

SqpSettings sqp_settings(const ScenarioConfig& c, bool trace) {
  SqpSettings s;
  s.max_iterations = c.sqp_max_iterations;
  s.step_tolerance = c.sqp_step_tolerance;
  s.violation_tolerance = c.sqp_violation_tolerance;
  s.max_halvings = c.sqp_max_halvings;
  s.yield_horizon = c.yield_horizon;
  s.soft_weight = c.soft_weight;
  s.regularization = c.regularization;
  s.trace = trace;
  return s;
}

RunRecord run_closed_loop(const Scenario& s, MethodKind method, std::uint64_t seed, bool trace) {
  const ScenarioConfig& c = s.config;
  std::mt19937_64 plant_rng = make_stream(seed, 0);
  std::mt19937_64 obstacle_rng = make_stream(seed, 1);
  const Vec d_bound = s.detailed.disturbance_set().radius();
  SqpSettings settings = sqp_settings(c, trace);

  RunRecord rec;
  rec.method = method;
  rec.seed = seed;
  Vec x = (Vec(4) << c.start(0), 0.0, c.start(1), 0.0).finished();
  Vec obs = c.obstacle_start;
  std::vector<Vec> robot_hist{c.start};
  std::vector<Vec> obs_hist{obs};
  rec.max_px = x(0);
  rec.termination = "max-steps";

  std::optional<OcpSolution> previous;
  bool has_yielded = false;
  for (int k = 0; k < c.max_steps; ++k) {
    const OcpProblem problem = assemble(make_ocp_inputs(s, method, x, obs), method);
    const Vec guess = previous ? shifted_guess(problem, *previous) : straight_line_guess(problem, c.guess_step);
    // Past the rear of the obstacle's robust region a robot that has not
    // yielded yet is committed to the pass and no longer falls back to
    // stopping behind it.
    settings.allow_yield = has_yielded || x(0) <= obs(0) - c.robust_ellipse_a;
    OcpSolution sol = solve_with_yield(problem, settings, guess);
    has_yielded = has_yielded || sol.yielded;

    StepRecord step;
    step.k = k;
    step.x = x;
    step.obstacle = obs;
    step.status = to_string(sol.status);
    step.iterations = sol.iterations;
    step.solve_ms = sol.solve_ms;
    step.softened = sol.softened;
    step.violated = sol.violated;
    step.yielded = sol.yielded;
    step.plan_violation = sol.violation;
    if (trace) {
      for (auto& t : sol.trace) {
        t["k"] = k;
        rec.traces.push_back(std::move(t));
      }
    }
    if (sol.status == SolveStatus::kInfeasible) {
      step.u = Vec::Zero(2);
      step.disturbance = Vec::Zero(4);
      rec.steps.push_back(step);
      rec.termination = "infeasible";
      break;
    }
    step.u = extract_control(sol, x, s.gains.K()).u;
    Vec d(4);
    for (int i = 0; i < 4; ++i) {
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      d(i) = d_bound(i) * unit(plant_rng);
    }
    step.disturbance = d;
    step.stage_cost = stage_cost(c, x, step.u);
    rec.cumulative_cost += step.stage_cost;
    if (step.softened) ++rec.softened_steps;
    rec.steps.push_back(step);

    x = step_model(s.detailed, x, step.u, d);
    Vec od(2);
    for (int i = 0; i < 2; ++i) od(i) = sample_bounded(obstacle_rng, c.obstacle_disturbance, c.obstacle_noise);
    obs = obs + c.dt * (c.obstacle_velocity + od);
    previous = std::move(sol);

    rec.max_px = std::max(rec.max_px, x(0));
    if (violates_state_bounds(c, x)) ++rec.state_violations;
    robot_hist.push_back((Vec(2) << x(0), x(2)).finished());
    obs_hist.push_back(obs);
    rec.flags = collision_and_pass_check(robot_hist, obs_hist, c);
    if (rec.flags.collided) {
      rec.termination = "collided";
      break;
    }
    if (rec.flags.reached) {
      rec.termination = "reached";
      break;
    }
  }
  rec.flags = collision_and_pass_check(robot_hist, obs_hist, c);
  rec.final_state = x;
  rec.final_obstacle = obs;
  return rec;
}

std::string trajectory_jsonl(const RunRecord& r) {
  std::ostringstream out;
  for (const StepRecord& s : r.steps) {
    ojson j;
    j["k"] = s.k;
    j["x"] = vec_json(s.x);
    j["u"] = vec_json(s.u);
    j["disturbance"] = vec_json(s.disturbance);
    j["obstacle"] = vec_json(s.obstacle);
    j["stage_cost"] = s.stage_cost;
    j["status"] = s.status;
    j["iterations"] = s.iterations;
    j["softened"] = s.softened;
    j["yielded"] = s.yielded;
    j["plan_violation"] = s.plan_violation;
    j["violated"] = s.violated;
    out << j.dump() << "\n";
  }
  ojson end;
  end["method"] = to_string(r.method);
  end["seed"] = r.seed;
  end["termination"] = r.termination;
  end["collided"] = r.flags.collided;
  end["passed"] = r.flags.passed;
  end["reached"] = r.flags.reached;
  end["steps"] = static_cast<int>(r.steps.size());
  end["cumulative_cost"] = r.cumulative_cost;
  end["max_px"] = r.max_px;
  end["state_violations"] = r.state_violations;
  end["softened_steps"] = r.softened_steps;
  end["final_state"] = vec_json(r.final_state);
  end["final_obstacle"] = vec_json(r.final_obstacle);
  out << end.dump() << "\n";
  return out.str();
}

MethodSummary summarize(MethodKind method, const std::vector<RunRecord>& runs, int max_steps) {
  require(!runs.empty(), "summarize: at least one run is required");
  MethodSummary m;
  m.method = method;
  m.n_runs = static_cast<int>(runs.size());
  m.mean_cost_curve.assign(static_cast<size_t>(max_steps), 0.0);
  m.solve_time_curve.assign(static_cast<size_t>(max_steps), 0.0);
  std::vector<double> all_times;
  double passed = 0, collided = 0, reached = 0;
  for (const RunRecord& r : runs) {
    passed += r.flags.passed;
    collided += r.flags.collided;
    reached += r.flags.reached;
    if (r.termination == "infeasible") ++m.infeasible_runs;
    m.state_violations += r.state_violations;
    m.max_px = std::max(m.max_px, r.max_px);
    m.mean_cumulative_cost += r.cumulative_cost;
    double last_cost = 0.0, last_time = 0.0;
    for (size_t k = 0; k < static_cast<size_t>(max_steps); ++k) {
      if (k < r.steps.size()) {
        last_cost = r.steps[k].stage_cost;
        last_time = r.steps[k].solve_ms;
        all_times.push_back(last_time);
      }
      m.mean_cost_curve[k] += last_cost;
      m.solve_time_curve[k] += last_time;
    }
  }
  const double n = static_cast<double>(runs.size());
  m.pass_rate = passed / n;
  m.collision_rate = collided / n;
  m.reach_rate = reached / n;
  m.mean_cumulative_cost /= n;
  for (double& v : m.mean_cost_curve) v /= n;
  for (double& v : m.solve_time_curve) v /= n;
  double total = 0.0;
  for (double t : all_times) total += t;
  m.mean_solve_ms = all_times.empty() ? 0.0 : total / static_cast<double>(all_times.size());
  m.median_solve_ms = median(all_times);
  return m;
}

MonteCarloResult monte_carlo(const Scenario& s, MethodKind method, int n_runs, std::uint64_t base_seed, int jobs) {
  require(n_runs >= 1, "monte_carlo: n_runs must be at least 1");
  require(jobs >= 1, "monte_carlo: jobs must be at least 1");
  MonteCarloResult result;
  result.runs.resize(static_cast<size_t>(n_runs));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i; (i = next.fetch_add(1)) < n_runs;) {
      const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
      try {
        result.runs[static_cast<size_t>(i)] = run_closed_loop(s, method, seed);
      } catch (const std::exception& e) {
        RunRecord failed;
        failed.method = method;
        failed.seed = seed;
        failed.termination = "infeasible";
        failed.final_state = Vec::Zero(4);
        failed.final_obstacle = Vec::Zero(2);
        result.runs[static_cast<size_t>(i)] = failed;
      }
    }
  };
  const int threads = std::min(jobs, n_runs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  result.summary = summarize(method, result.runs, s.config.max_steps);
  return result;
}

Comparison compare_methods(const Scenario& s, int n_runs, std::uint64_t base_seed, int jobs) {
  Comparison cmp;
  for (MethodKind m : {MethodKind::kGranular, MethodKind::kSingleRsmpc, MethodKind::kSingleRmpc}) {
    cmp.methods.push_back(monte_carlo(s, m, n_runs, base_seed, jobs));
  }
  const MethodSummary& g = cmp.methods[0].summary;
  const MethodSummary& r = cmp.methods[1].summary;
  cmp.time_ratio = g.mean_solve_ms / r.mean_solve_ms;
  cmp.cost_ratio = g.mean_cumulative_cost / r.mean_cumulative_cost;
  return cmp;
}

ojson to_json(const MethodSummary& m) {
  ojson j;
  j["method"] = to_string(m.method);
  j["n_runs"] = m.n_runs;
  j["pass_rate"] = m.pass_rate;
  j["collision_rate"] = m.collision_rate;
  j["reach_rate"] = m.reach_rate;
  j["infeasible_runs"] = m.infeasible_runs;
  j["state_violations"] = m.state_violations;
  j["max_px"] = m.max_px;
  j["mean_cumulative_cost"] = m.mean_cumulative_cost;
  j["mean_solve_ms"] = m.mean_solve_ms;
  j["median_solve_ms"] = m.median_solve_ms;
  j["mean_cost_curve"] = m.mean_cost_curve;
  j["solve_time_curve"] = m.solve_time_curve;
  return j;
}

ojson to_json(const Comparison& c) {
  ojson j;
  j["methods"] = ojson::array();
  for (const MonteCarloResult& m : c.methods) j["methods"].push_back(to_json(m.summary));
  j["time_ratio_granular_vs_single_rsmpc"] = c.time_ratio;
  j["cost_ratio_granular_vs_single_rsmpc"] = c.cost_ratio;
  return j;
}

std::string summary_csv(const std::vector<RunRecord>& runs, std::uint64_t base_seed) {
  std::ostringstream out;
  out << "method,run_id,passed,collided,reached,steps,cumulative_cost,mean_solve_ms,softened_steps\n";
  out << std::setprecision(10);
  for (const RunRecord& r : runs) {
    out << to_string(r.method) << "," << (r.seed - base_seed) << "," << r.flags.passed << "," << r.flags.collided
        << "," << r.flags.reached << "," << r.steps.size() << "," << r.cumulative_cost << "," << r.mean_solve_ms()
        << "," << r.softened_steps << "\n";
  }
  return out.str();
}

}  // namespace gmpc
