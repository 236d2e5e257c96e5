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

// The mobile-robot study: a robot drives from (0, 0) to (19, 0) along a
// lane, past a dynamic obstacle moving in x and below a static box.

#ifndef GMPC_SCENARIO_HPP_
#define GMPC_SCENARIO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "gmpc/chance.hpp"
#include "gmpc/ocp.hpp"
#include "gmpc/tube.hpp"

namespace gmpc {

// Invalid configuration content (unknown key, bad value). Maps to a usage
// error at the command line.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ScenarioConfig {
  // Robot and lane.
  Vec start = (Vec(2) << 0.0, 0.0).finished();
  Vec target = (Vec(2) << 19.0, 0.0).finished();
  double robot_radius = 0.5;
  double lane_min = -0.5;
  double lane_max = 2.5;
  double accel_bound = 3.0;
  double velocity_bound = 3.0;
  double dt = 0.2;

  // Dynamic obstacle.
  Vec obstacle_start = (Vec(2) << 6.0, 0.0).finished();
  Vec obstacle_velocity = (Vec(2) << 0.6, 0.0).finished();
  double obstacle_radius = 0.5;
  double obstacle_disturbance = 0.1;
  std::string obstacle_noise = "uniform";  // uniform | truncated-gaussian

  // Obstacle geometry; the nominal ellipse already includes both radii.
  double ellipse_a = 1.0;
  double ellipse_b = 1.0;
  double robust_ellipse_a = 2.10;
  double robust_ellipse_b = 2.10;
  Vec box_min = (Vec(2) << 11.0, 2.0).finished();
  Vec box_max = (Vec(2) << 15.0, 3.0).finished();
  Vec robust_box_min = (Vec(2) << 10.2, 1.2).finished();
  Vec robust_box_max = (Vec(2) << 15.8, 3.8).finished();

  // Control design. Gains are magnitudes; the stabilizing gains are their
  // negatives so that A + B K is Schur.
  Vec Q = (Vec(4) << 1.0, 0.1, 1.0, 0.1).finished();
  Vec R = (Vec(2) << 0.1, 0.1).finished();
  Vec Qc = (Vec(2) << 1.0, 1.0).finished();
  Vec Rc = (Vec(2) << 0.1, 0.1).finished();
  Vec K_gain = (Vec(2) << 3.77, 4.67).finished();
  Vec Kc_gain = (Vec(2) << 2.32, 4.14).finished();
  double p = 0.8;
  Vec sigma_w = (Vec(2) << 0.1, 0.1).finished();
  double single_model_sigma_std = 0.1;
  int Ns = 7;
  int Nl = 13;
  std::string terminal_cost = "target";  // target | origin

  // Tube.
  double disturbance_bound = 0.1;
  std::string disturbance_variant = "velocity";  // velocity | full
  double mrpi_eps = 1e-3;
  int init_generators = 8;
  // Nominal sets used in the controller: "computed" (X - Z, U - KZ) or
  // "published", which intersects them with the published bounds below.
  std::string nominal_bounds = "published";
  Vec published_lane = (Vec(2) << -0.22, 2.22).finished();
  double published_velocity = 2.26;
  double published_input = 1.73;

  // Solver.
  int sqp_max_iterations = 20;
  double sqp_step_tolerance = 1e-6;
  double sqp_violation_tolerance = 1e-6;
  int sqp_max_halvings = 8;
  int yield_horizon = 2;
  double soft_weight = 1e6;
  double regularization = 1e-6;
  double guess_step = 0.4;
  bool side_bias = true;

  // Simulation.
  int max_steps = 50;
  double pass_margin = 1.0;
  double finish_threshold = 0.5;

  // Command-line defaults; flags override them.
  std::string run_method = "granular";
  int run_runs = 100;
  std::int64_t run_seed = 1;
  int run_jobs = 1;
  std::string run_out = "out";
  bool debug_trace = false;

  void validate() const;
};

nlohmann::ordered_json to_json(const ScenarioConfig& config);
// Missing keys keep their defaults; unknown keys throw ConfigError.
ScenarioConfig config_from_json(const nlohmann::ordered_json& j);
ScenarioConfig load_config(const std::string& path);
std::string dump_config(const ScenarioConfig& config);
// Applies "section.key=value"; the value is parsed as JSON, falling back
// to a plain string.
void apply_override(ScenarioConfig& config, const std::string& assignment);

struct DynamicObstacle {
  Vec position;
  Vec velocity;
  double radius = 0.5;
  double disturbance = 0.1;
};

// Constant-velocity extrapolation; element k is the position after k steps.
std::vector<Vec> predict_obstacle(const DynamicObstacle& obs, int horizon, double dt);

// Precomputed models, tube and covariance schedules of a configuration.
struct Scenario {
  ScenarioConfig config;
  LinearModel detailed;
  LinearModel coarse;
  ProjectionMap projection;
  GainPair gains;
  HPolytope X;
  HPolytope U;
  TubeSpec tube;  // computed tube, nominal sets X - Z and U - KZ
  HPolytope Xbar;  // nominal sets used by the controller
  HPolytope Ubar;
  Zonotope Z_init;
  CovarianceSchedule coarse_schedule;
  CovarianceSchedule detailed_schedule;

  static Scenario build(const ScenarioConfig& config);
  DynamicObstacle initial_obstacle() const;
};

// Robust obstacle constraints on the nominal detailed state at step k.
std::vector<PathConstraint> build_rmpc_constraints(const Scenario& s, int k, const Vec& obstacle);

// Chance constraints at step k on the long-stage state, either the coarse
// position (dim 2) or the detailed state (dim 4).
std::vector<PathConstraint> build_smpc_constraints(const Scenario& s, int k, const Vec& obstacle, const Mat& sigma,
                                                   int state_dim);

OcpInputs make_ocp_inputs(const Scenario& s, MethodKind kind, const Vec& x0, const Vec& obstacle_position);

// Per-axis bounds implied by nominal state and input sets.
struct NominalBounds {
  Vec input;     // |u_i| <= input(i)
  Vec lane;      // p_y in [lane(0), lane(1)]
  Vec velocity;  // |v_x| <= velocity(0), |v_y| <= velocity(1)
};

NominalBounds nominal_bounds(const HPolytope& Xbar, const HPolytope& Ubar);

// Tube, nominal sets (computed and used) and covariance schedules.
nlohmann::ordered_json sets_report(const Scenario& s);

struct EpisodeFlags {
  bool collided = false;
  bool passed = false;
  bool reached = false;
};

EpisodeFlags collision_and_pass_check(const std::vector<Vec>& robot, const std::vector<Vec>& obstacle,
                                      const ScenarioConfig& config);

}  // namespace gmpc

#endif  // GMPC_SCENARIO_HPP_
