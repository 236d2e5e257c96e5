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

// Command-line entry point: build-sets, run, montecarlo and compare.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmpc/scenario.hpp"
#include "gmpc/simrunner.hpp"

namespace fs = std::filesystem;

namespace gmpc {
namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> method;
  std::optional<int> runs;
  std::optional<std::int64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
  std::optional<std::string> terminal_cost;
  bool debug_trace = false;
};

// Config file, then --set overrides, then dedicated flags.
ScenarioConfig effective_config(const Options& o) {
  ScenarioConfig c = o.config_path.empty() ? ScenarioConfig{} : load_config(o.config_path);
  for (const std::string& s : o.overrides) apply_override(c, s);
  if (o.method) c.run_method = *o.method;
  if (o.runs) c.run_runs = *o.runs;
  if (o.seed) c.run_seed = *o.seed;
  if (o.out) c.run_out = *o.out;
  if (o.jobs) c.run_jobs = *o.jobs;
  if (o.terminal_cost) c.terminal_cost = *o.terminal_cost;
  if (o.debug_trace) c.debug_trace = true;
  c.validate();
  return c;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

fs::path prepare_out(const ScenarioConfig& c) {
  const fs::path out(c.run_out);
  fs::create_directories(out);
  write_file(out / "config.json", dump_config(c));
  return out;
}

void write_runs(const fs::path& out, const std::vector<RunRecord>& runs, bool traces) {
  const fs::path dir = out / "trajectories";
  fs::create_directories(dir);
  for (const RunRecord& r : runs) {
    const std::string stem = std::string(to_string(r.method)) + "_" + std::to_string(r.seed);
    write_file(dir / (stem + ".jsonl"), trajectory_jsonl(r));
    if (traces) {
      std::string text;
      for (const auto& t : r.traces) text += t.dump() + "\n";
      write_file(dir / (stem + "_sqp.jsonl"), text);
    }
  }
}

void report(const MethodSummary& m) {
  std::cout << to_string(m.method) << ": runs=" << m.n_runs << " pass_rate=" << m.pass_rate
            << " collision_rate=" << m.collision_rate << " mean_cost=" << m.mean_cumulative_cost
            << " mean_solve_ms=" << m.mean_solve_ms << "\n";
}

int cmd_build_sets(const ScenarioConfig& c) {
  const fs::path out = prepare_out(c);
  const Scenario s = Scenario::build(c);
  const nlohmann::ordered_json j = sets_report(s);
  write_file(out / "sets.json", j.dump(2) + "\n");
  const NominalBounds b = nominal_bounds(s.tube.Xbar, s.tube.Ubar);
  std::cout << "tightened input bound " << b.input.minCoeff() << ", lane [" << b.lane(0) << ", " << b.lane(1)
            << "], velocity bound " << b.velocity.minCoeff() << "\n";
  return 0;
}

int cmd_batch(const ScenarioConfig& c) {
  const fs::path out = prepare_out(c);
  const Scenario s = Scenario::build(c);
  const MethodKind method = method_from_string(c.run_method);
  const auto seed = static_cast<std::uint64_t>(c.run_seed);
  std::vector<RunRecord> runs;
  if (c.debug_trace) {
    for (int i = 0; i < c.run_runs; ++i) runs.push_back(run_closed_loop(s, method, seed + i, true));
  } else {
    runs = monte_carlo(s, method, c.run_runs, seed, c.run_jobs).runs;
  }
  const MethodSummary m = summarize(method, runs, c.max_steps);
  write_runs(out, runs, c.debug_trace);
  write_file(out / ("summary_" + std::string(to_string(method)) + ".csv"), summary_csv(runs, seed));
  write_file(out / ("summary_" + std::string(to_string(method)) + ".json"), to_json(m).dump(2) + "\n");
  report(m);
  return 0;
}

int cmd_compare(const ScenarioConfig& c) {
  const fs::path out = prepare_out(c);
  const Scenario s = Scenario::build(c);
  const auto seed = static_cast<std::uint64_t>(c.run_seed);
  const Comparison cmp = compare_methods(s, c.run_runs, seed, c.run_jobs);
  for (const MonteCarloResult& r : cmp.methods) {
    write_runs(out, r.runs, false);
    write_file(out / ("summary_" + std::string(to_string(r.summary.method)) + ".csv"), summary_csv(r.runs, seed));
    report(r.summary);
  }
  write_file(out / "comparison.json", to_json(cmp).dump(2) + "\n");
  std::cout << "time_ratio=" << cmp.time_ratio << " cost_ratio=" << cmp.cost_ratio << "\n";
  return 0;
}

void add_common(CLI::App* sub, Options& o, bool batch) {
  sub->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  sub->add_option("--set", o.overrides, "Override a config key, section.key=value")->take_all();
  sub->add_option("--out", o.out, "Output directory");
  sub->add_option("--terminal-cost", o.terminal_cost, "Terminal cost reference")
      ->check(CLI::IsMember({"target", "origin"}));
  if (!batch) return;
  sub->add_option("--method", o.method, "Controller")
      ->check(CLI::IsMember({"granular", "single-rsmpc", "single-rmpc"}));
  sub->add_option("--runs", o.runs, "Number of episodes")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "Seed of the first episode")->check(CLI::NonNegativeNumber);
  sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_flag("--debug-trace", o.debug_trace, "Write per-iteration SQP traces");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Granular tube-based robust and stochastic MPC study"};
  app.require_subcommand(1);
  Options o;
  CLI::App* build = app.add_subcommand("build-sets", "Compute the tube, nominal sets and covariance schedules");
  CLI::App* run = app.add_subcommand("run", "Simulate episodes of one controller");
  CLI::App* mc = app.add_subcommand("montecarlo", "Monte Carlo batch of one controller");
  CLI::App* cmp = app.add_subcommand("compare", "Monte Carlo batches of all controllers with common seeds");
  add_common(build, o, false);
  for (CLI::App* sub : {run, mc, cmp}) add_common(sub, o, true);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  ScenarioConfig c;
  try {
    if (run->parsed() && !o.runs) o.runs = 1;
    c = effective_config(o);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  }
  try {
    if (build->parsed()) return cmd_build_sets(c);
    if (cmp->parsed()) return cmd_compare(c);
    return cmd_batch(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace
}  // namespace gmpc

int main(int argc, char** argv) { return gmpc::run_cli(argc, argv); }
