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

#include "gmpc/scenario.hpp"

#include <fstream>
#include <sstream>

namespace gmpc {
namespace {

using ojson = nlohmann::ordered_json;

ojson vec_json(const Vec& v) {
  ojson out = ojson::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vec vec_from(const ojson& j, const std::string& key, int size) {
  if (!j.is_array() || static_cast<int>(j.size()) != size) {
    throw ConfigError("config key '" + key + "' must be an array of " + std::to_string(size) + " numbers");
  }
  Vec v(size);
  for (int i = 0; i < size; ++i) {
    if (!j[static_cast<size_t>(i)].is_number()) throw ConfigError("config key '" + key + "' must hold numbers");
    v(i) = j[static_cast<size_t>(i)].get<double>();
  }
  return v;
}

double num_from(const ojson& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return j.get<double>();
}

int int_from(const ojson& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return j.get<int>();
}

std::string str_from(const ojson& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return j.get<std::string>();
}

bool bool_from(const ojson& j, const std::string& key) {
  if (!j.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
  return j.get<bool>();
}

// Recursively overwrites entries of base with those of patch. Every key of
// patch must already exist in base.
void merge_into(ojson& base, const ojson& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    ojson& slot = base[it.key()];
    if (slot.is_object()) {
      merge_into(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError("invalid config: " + message);
}

Mat diag(const Vec& v) { return v.asDiagonal(); }

}  // namespace

void ScenarioConfig::validate() const {
  check(dt > 0.0, "world.dt must be positive");
  check(robot_radius > 0.0 && obstacle_radius > 0.0, "radii must be positive");
  check(lane_min < lane_max, "world.lane_min must be below world.lane_max");
  check(accel_bound > 0.0 && velocity_bound > 0.0, "input and velocity bounds must be positive");
  check(obstacle_disturbance >= 0.0 && disturbance_bound >= 0.0, "disturbance bounds must be nonnegative");
  check(obstacle_noise == "uniform" || obstacle_noise == "truncated-gaussian",
        "obstacle.noise must be uniform or truncated-gaussian");
  check(ellipse_a > 0.0 && ellipse_b > 0.0 && robust_ellipse_a > 0.0 && robust_ellipse_b > 0.0,
        "ellipse parameters must be positive");
  check((box_min.array() < box_max.array()).all(), "geometry.box_min must lie below geometry.box_max");
  check((robust_box_min.array() < robust_box_max.array()).all(),
        "geometry.robust_box_min must lie below geometry.robust_box_max");
  check((Q.array() >= 0.0).all() && (Qc.array() >= 0.0).all(), "state weights must be nonnegative");
  check((R.array() > 0.0).all() && (Rc.array() > 0.0).all(), "input weights must be positive");
  check((K_gain.array() > 0.0).all() && (Kc_gain.array() > 0.0).all(), "gain magnitudes must be positive");
  check(p >= 0.5 && p < 1.0, "control.p must lie in [0.5, 1)");
  check((sigma_w.array() >= 0.0).all() && single_model_sigma_std >= 0.0, "covariances must be nonnegative");
  check(Ns >= 1 && Nl >= 0, "horizons must satisfy Ns >= 1 and Nl >= 0");
  check(terminal_cost == "target" || terminal_cost == "origin", "control.terminal_cost must be target or origin");
  check(disturbance_variant == "velocity" || disturbance_variant == "full",
        "tube.disturbance_variant must be velocity or full");
  check(mrpi_eps > 0.0, "tube.mrpi_eps must be positive");
  check(init_generators >= 4, "tube.init_generators must be at least the state dimension");
  check(nominal_bounds == "computed" || nominal_bounds == "published",
        "tube.nominal_bounds must be computed or published");
  check(published_lane(0) < published_lane(1), "tube.published_lane must be increasing");
  check(published_velocity > 0.0 && published_input > 0.0, "published bounds must be positive");
  check(sqp_max_iterations >= 1 && sqp_max_halvings >= 0, "solver iteration limits must be positive");
  check(yield_horizon >= 0, "solver.yield_horizon must be non-negative");
  check(sqp_step_tolerance > 0.0 && sqp_violation_tolerance > 0.0, "solver tolerances must be positive");
  check(soft_weight > 0.0 && regularization > 0.0 && guess_step > 0.0, "solver weights must be positive");
  check(max_steps >= 1, "simulation.max_steps must be positive");
  check(pass_margin >= 0.0 && finish_threshold > 0.0, "simulation thresholds must be positive");
  check(run_method == "granular" || run_method == "single-rsmpc" || run_method == "single-rmpc",
        "run.method must be granular, single-rsmpc or single-rmpc");
  check(run_runs >= 1, "run.runs must be positive");
  check(run_seed >= 0, "run.seed must be non-negative");
  check(run_jobs >= 1, "run.jobs must be positive");
  check(!run_out.empty(), "run.out must not be empty");
}

ojson to_json(const ScenarioConfig& c) {
  ojson j;
  j["world"] = {{"start", vec_json(c.start)},
                {"target", vec_json(c.target)},
                {"robot_radius", c.robot_radius},
                {"lane_min", c.lane_min},
                {"lane_max", c.lane_max},
                {"accel_bound", c.accel_bound},
                {"velocity_bound", c.velocity_bound},
                {"dt", c.dt}};
  j["obstacle"] = {{"start", vec_json(c.obstacle_start)},
                   {"velocity", vec_json(c.obstacle_velocity)},
                   {"radius", c.obstacle_radius},
                   {"disturbance", c.obstacle_disturbance},
                   {"noise", c.obstacle_noise}};
  j["geometry"] = {{"ellipse_a", c.ellipse_a},
                   {"ellipse_b", c.ellipse_b},
                   {"robust_ellipse_a", c.robust_ellipse_a},
                   {"robust_ellipse_b", c.robust_ellipse_b},
                   {"box_min", vec_json(c.box_min)},
                   {"box_max", vec_json(c.box_max)},
                   {"robust_box_min", vec_json(c.robust_box_min)},
                   {"robust_box_max", vec_json(c.robust_box_max)}};
  j["control"] = {{"Q", vec_json(c.Q)},
                  {"R", vec_json(c.R)},
                  {"Qc", vec_json(c.Qc)},
                  {"Rc", vec_json(c.Rc)},
                  {"K_gain", vec_json(c.K_gain)},
                  {"Kc_gain", vec_json(c.Kc_gain)},
                  {"p", c.p},
                  {"sigma_w", vec_json(c.sigma_w)},
                  {"single_model_sigma_std", c.single_model_sigma_std},
                  {"Ns", c.Ns},
                  {"Nl", c.Nl},
                  {"terminal_cost", c.terminal_cost}};
  j["tube"] = {{"disturbance_bound", c.disturbance_bound},
               {"disturbance_variant", c.disturbance_variant},
               {"mrpi_eps", c.mrpi_eps},
               {"init_generators", c.init_generators},
               {"nominal_bounds", c.nominal_bounds},
               {"published_lane", vec_json(c.published_lane)},
               {"published_velocity", c.published_velocity},
               {"published_input", c.published_input}};
  j["solver"] = {{"max_iterations", c.sqp_max_iterations},
                 {"step_tolerance", c.sqp_step_tolerance},
                 {"violation_tolerance", c.sqp_violation_tolerance},
                 {"max_halvings", c.sqp_max_halvings},
                 {"yield_horizon", c.yield_horizon},
                 {"soft_weight", c.soft_weight},
                 {"regularization", c.regularization},
                 {"guess_step", c.guess_step},
                 {"side_bias", c.side_bias}};
  j["simulation"] = {{"max_steps", c.max_steps},
                     {"pass_margin", c.pass_margin},
                     {"finish_threshold", c.finish_threshold}};
  j["run"] = {{"method", c.run_method},
              {"runs", c.run_runs},
              {"seed", c.run_seed},
              {"jobs", c.run_jobs},
              {"out", c.run_out},
              {"debug_trace", c.debug_trace}};
  return j;
}

ScenarioConfig config_from_json(const ojson& patch) {
  ojson j = to_json(ScenarioConfig{});
  merge_into(j, patch, "");
  ScenarioConfig c;
  const ojson& w = j["world"];
  c.start = vec_from(w["start"], "world.start", 2);
  c.target = vec_from(w["target"], "world.target", 2);
  c.robot_radius = num_from(w["robot_radius"], "world.robot_radius");
  c.lane_min = num_from(w["lane_min"], "world.lane_min");
  c.lane_max = num_from(w["lane_max"], "world.lane_max");
  c.accel_bound = num_from(w["accel_bound"], "world.accel_bound");
  c.velocity_bound = num_from(w["velocity_bound"], "world.velocity_bound");
  c.dt = num_from(w["dt"], "world.dt");
  const ojson& o = j["obstacle"];
  c.obstacle_start = vec_from(o["start"], "obstacle.start", 2);
  c.obstacle_velocity = vec_from(o["velocity"], "obstacle.velocity", 2);
  c.obstacle_radius = num_from(o["radius"], "obstacle.radius");
  c.obstacle_disturbance = num_from(o["disturbance"], "obstacle.disturbance");
  c.obstacle_noise = str_from(o["noise"], "obstacle.noise");
  const ojson& g = j["geometry"];
  c.ellipse_a = num_from(g["ellipse_a"], "geometry.ellipse_a");
  c.ellipse_b = num_from(g["ellipse_b"], "geometry.ellipse_b");
  c.robust_ellipse_a = num_from(g["robust_ellipse_a"], "geometry.robust_ellipse_a");
  c.robust_ellipse_b = num_from(g["robust_ellipse_b"], "geometry.robust_ellipse_b");
  c.box_min = vec_from(g["box_min"], "geometry.box_min", 2);
  c.box_max = vec_from(g["box_max"], "geometry.box_max", 2);
  c.robust_box_min = vec_from(g["robust_box_min"], "geometry.robust_box_min", 2);
  c.robust_box_max = vec_from(g["robust_box_max"], "geometry.robust_box_max", 2);
  const ojson& k = j["control"];
  c.Q = vec_from(k["Q"], "control.Q", 4);
  c.R = vec_from(k["R"], "control.R", 2);
  c.Qc = vec_from(k["Qc"], "control.Qc", 2);
  c.Rc = vec_from(k["Rc"], "control.Rc", 2);
  c.K_gain = vec_from(k["K_gain"], "control.K_gain", 2);
  c.Kc_gain = vec_from(k["Kc_gain"], "control.Kc_gain", 2);
  c.p = num_from(k["p"], "control.p");
  c.sigma_w = vec_from(k["sigma_w"], "control.sigma_w", 2);
  c.single_model_sigma_std = num_from(k["single_model_sigma_std"], "control.single_model_sigma_std");
  c.Ns = int_from(k["Ns"], "control.Ns");
  c.Nl = int_from(k["Nl"], "control.Nl");
  c.terminal_cost = str_from(k["terminal_cost"], "control.terminal_cost");
  const ojson& t = j["tube"];
  c.disturbance_bound = num_from(t["disturbance_bound"], "tube.disturbance_bound");
  c.disturbance_variant = str_from(t["disturbance_variant"], "tube.disturbance_variant");
  c.mrpi_eps = num_from(t["mrpi_eps"], "tube.mrpi_eps");
  c.init_generators = int_from(t["init_generators"], "tube.init_generators");
  c.nominal_bounds = str_from(t["nominal_bounds"], "tube.nominal_bounds");
  c.published_lane = vec_from(t["published_lane"], "tube.published_lane", 2);
  c.published_velocity = num_from(t["published_velocity"], "tube.published_velocity");
  c.published_input = num_from(t["published_input"], "tube.published_input");
  const ojson& s = j["solver"];
  c.sqp_max_iterations = int_from(s["max_iterations"], "solver.max_iterations");
  c.sqp_step_tolerance = num_from(s["step_tolerance"], "solver.step_tolerance");
  c.sqp_violation_tolerance = num_from(s["violation_tolerance"], "solver.violation_tolerance");
  c.sqp_max_halvings = int_from(s["max_halvings"], "solver.max_halvings");
  c.yield_horizon = int_from(s["yield_horizon"], "solver.yield_horizon");
  c.soft_weight = num_from(s["soft_weight"], "solver.soft_weight");
  c.regularization = num_from(s["regularization"], "solver.regularization");
  c.guess_step = num_from(s["guess_step"], "solver.guess_step");
  c.side_bias = bool_from(s["side_bias"], "solver.side_bias");
  const ojson& m = j["simulation"];
  c.max_steps = int_from(m["max_steps"], "simulation.max_steps");
  c.pass_margin = num_from(m["pass_margin"], "simulation.pass_margin");
  c.finish_threshold = num_from(m["finish_threshold"], "simulation.finish_threshold");
  const ojson& r = j["run"];
  c.run_method = str_from(r["method"], "run.method");
  c.run_runs = int_from(r["runs"], "run.runs");
  c.run_seed = int_from(r["seed"], "run.seed");
  c.run_jobs = int_from(r["jobs"], "run.jobs");
  c.run_out = str_from(r["out"], "run.out");
  c.debug_trace = bool_from(r["debug_trace"], "run.debug_trace");
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::string dump_config(const ScenarioConfig& config) { return to_json(config).dump(2) + "\n"; }

void apply_override(ScenarioConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  ojson value;
  try {
    value = ojson::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  ojson patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (size_t pos; (pos = rest.find('.')) != std::string::npos;) {
    parts.push_back(rest.substr(0, pos));
    rest = rest.substr(pos + 1);
  }
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    ojson wrapped;
    wrapped[*it] = patch;
    patch = wrapped;
  }
  ojson current = to_json(config);
  merge_into(current, patch, "");
  config = config_from_json(current);
}

std::vector<Vec> predict_obstacle(const DynamicObstacle& obs, int horizon, double dt) {
  require(horizon >= 0, "predict_obstacle: horizon must be nonnegative");
  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(horizon) + 1);
  for (int k = 0; k <= horizon; ++k) out.push_back(obs.position + (k * dt) * obs.velocity);
  return out;
}

namespace {

// Intersection of two H-polytopes; rows with equal normals are merged.
HPolytope intersect(const HPolytope& a, const HPolytope& b) {
  std::vector<Vec> normals;
  std::vector<double> offsets;
  auto add = [&](const HPolytope& p) {
    for (int i = 0; i < p.num_halfspaces(); ++i) {
      const Vec n = p.normals().row(i).transpose();
      bool merged = false;
      for (size_t j = 0; j < normals.size(); ++j) {
        if ((normals[j] - n).cwiseAbs().maxCoeff() <= 1e-12) {
          offsets[j] = std::min(offsets[j], p.offsets()(i));
          merged = true;
          break;
        }
      }
      if (!merged) {
        normals.push_back(n);
        offsets.push_back(p.offsets()(i));
      }
    }
  };
  add(a);
  add(b);
  Mat nm(static_cast<int>(normals.size()), a.dim());
  Vec off(static_cast<int>(normals.size()));
  for (size_t j = 0; j < normals.size(); ++j) {
    nm.row(static_cast<int>(j)) = normals[j].transpose();
    off(static_cast<int>(j)) = offsets[j];
  }
  return HPolytope(nm, off);
}

}  // namespace

Scenario Scenario::build(const ScenarioConfig& c) {
  c.validate();
  const double dt = c.dt;
  Mat A = Mat::Identity(4, 4);
  A(0, 1) = dt;
  A(2, 3) = dt;
  Mat B = Mat::Zero(4, 2);
  B(0, 0) = 0.5 * dt * dt;
  B(1, 0) = dt;
  B(2, 1) = 0.5 * dt * dt;
  B(3, 1) = dt;
  Vec dhi(4);
  if (c.disturbance_variant == "full") {
    dhi.setConstant(c.disturbance_bound);
  } else {
    dhi << 0.0, c.disturbance_bound, 0.0, c.disturbance_bound;
  }
  LinearModel detailed(A, B, Mat::Identity(4, 4), dt, BoundedDisturbance{Zonotope::box(-dhi, dhi)});
  LinearModel coarse(Mat::Identity(2, 2), dt * Mat::Identity(2, 2), Mat::Identity(2, 2), dt,
                     GaussianDisturbance{diag(c.sigma_w)});

  Mat pm = Mat::Zero(4, 6);
  pm(0, 0) = 1.0;
  pm(1, 2) = 1.0;
  pm(2, 1) = 1.0;
  pm(3, 3) = 1.0;
  ProjectionMap projection(pm, 4, 2, 2);

  Mat K = Mat::Zero(2, 4);
  K(0, 0) = -c.K_gain(0);
  K(0, 1) = -c.K_gain(1);
  K(1, 2) = -c.K_gain(0);
  K(1, 3) = -c.K_gain(1);
  Mat Kc = -diag(c.Kc_gain);
  GainPair gains(detailed, K, coarse, Kc);

  Mat xn = Mat::Zero(6, 4);
  Vec xb(6);
  xn(0, 2) = 1.0;
  xn(1, 2) = -1.0;
  xn(2, 1) = 1.0;
  xn(3, 1) = -1.0;
  xn(4, 3) = 1.0;
  xn(5, 3) = -1.0;
  xb << c.lane_max, -c.lane_min, c.velocity_bound, c.velocity_bound, c.velocity_bound, c.velocity_bound;
  HPolytope X(xn, xb);
  HPolytope U = HPolytope::box(Vec::Constant(2, -c.accel_bound), Vec::Constant(2, c.accel_bound));

  TubeSpec tube = build_tube(detailed, K, c.mrpi_eps, X, U);
  HPolytope Xbar = tube.Xbar;
  HPolytope Ubar = tube.Ubar;
  if (c.nominal_bounds == "published") {
    // Intersections with the computed sets, so the tube guarantee holds
    // whatever the published values.
    Vec pb(6);
    pb << c.published_lane(1), -c.published_lane(0), c.published_velocity, c.published_velocity,
        c.published_velocity, c.published_velocity;
    Xbar = intersect(Xbar, HPolytope(xn, pb));
    Ubar = intersect(Ubar, HPolytope::box(Vec::Constant(2, -c.published_input), Vec::Constant(2, c.published_input)));
  }
  Zonotope Z_init = reduce_inner(tube.Z, c.init_generators);

  const int N = c.Ns + c.Nl;
  CovarianceSchedule coarse_schedule =
      propagate_covariance(gains.Phi_c(), coarse.G(), diag(c.sigma_w), Mat::Zero(2, 2), N);
  const double var = c.single_model_sigma_std * c.single_model_sigma_std;
  CovarianceSchedule detailed_schedule =
      propagate_covariance(gains.Phi(), Mat::Identity(4, 4), var * Mat::Identity(4, 4), Mat::Zero(4, 4), N);

  return Scenario{c,    detailed, coarse, projection, gains,           X,
                  U,    tube,     Xbar,   Ubar,       Z_init,          coarse_schedule,
                  detailed_schedule};
}

DynamicObstacle Scenario::initial_obstacle() const {
  return {config.obstacle_start, config.obstacle_velocity, config.obstacle_radius, config.obstacle_disturbance};
}

namespace {

// Pass on the side of the obstacle with more lane clearance.
Eigen::Vector2d passing_side(const ScenarioConfig& c, const Vec& obstacle) {
  if (!c.side_bias) return Eigen::Vector2d::Zero();
  return Eigen::Vector2d(0.0, (c.lane_max - obstacle(1)) >= (obstacle(1) - c.lane_min) ? 1.0 : -1.0);
}

}  // namespace

std::vector<PathConstraint> build_rmpc_constraints(const Scenario& s, int k, const Vec& obstacle) {
  const ScenarioConfig& c = s.config;
  std::vector<PathConstraint> out;
  const Mat zero = Mat::Zero(4, 4);
  PathConstraint ell{ChanceConstraint::ellipse(4, 0, 2, obstacle, c.robust_ellipse_a, c.robust_ellipse_b, 0.5),
                     zero, k, "robust-ellipse", true};
  ell.prefer = passing_side(c, obstacle);
  out.push_back(ell);
  Vec n = Vec::Zero(4);
  n(2) = 1.0;
  PathConstraint box{ChanceConstraint::half_plane(n, c.robust_box_min(1), 0.5), zero, k, "robust-box", true};
  box.gate_index = 0;
  box.gate_lo = c.robust_box_min(0);
  box.gate_hi = c.robust_box_max(0);
  out.push_back(box);
  return out;
}

std::vector<PathConstraint> build_smpc_constraints(const Scenario& s, int k, const Vec& obstacle, const Mat& sigma,
                                                   int state_dim) {
  require(state_dim == 2 || state_dim == 4, "build_smpc_constraints: state must be coarse (2) or detailed (4)");
  require(sigma.rows() == state_dim && sigma.cols() == state_dim, "build_smpc_constraints: covariance dimension");
  const ScenarioConfig& c = s.config;
  const int ix = 0;
  const int iy = state_dim == 2 ? 1 : 2;
  std::vector<PathConstraint> out;
  PathConstraint ell{ChanceConstraint::ellipse(state_dim, ix, iy, obstacle, c.ellipse_a, c.ellipse_b, c.p), sigma,
                     k, "chance-ellipse", true};
  ell.prefer = passing_side(c, obstacle);
  out.push_back(ell);
  Vec ey = Vec::Zero(state_dim);
  ey(iy) = 1.0;
  out.push_back({ChanceConstraint::half_plane(ey, c.lane_max, c.p), sigma, k, "chance-lane-upper"});
  out.push_back({ChanceConstraint::half_plane(-ey, -c.lane_min, c.p), sigma, k, "chance-lane-lower"});
  PathConstraint box{ChanceConstraint::half_plane(ey, c.box_min(1) - c.robot_radius, c.p), sigma, k, "chance-box",
                     true};
  box.gate_index = ix;
  box.gate_lo = c.box_min(0) - c.robot_radius;
  box.gate_hi = c.box_max(0) + c.robot_radius;
  out.push_back(box);
  if (state_dim == 4) {
    for (int iv : {1, 3}) {
      Vec e = Vec::Zero(4);
      e(iv) = 1.0;
      out.push_back({ChanceConstraint::half_plane(e, c.velocity_bound, c.p), sigma, k, "chance-velocity"});
      out.push_back({ChanceConstraint::half_plane(-e, c.velocity_bound, c.p), sigma, k, "chance-velocity"});
    }
  }
  return out;
}

OcpInputs make_ocp_inputs(const Scenario& s, MethodKind kind, const Vec& x0, const Vec& obstacle_position) {
  const ScenarioConfig& c = s.config;
  OcpInputs in;
  in.Ns = c.Ns;
  in.Nl = c.Nl;
  in.A = s.detailed.A();
  in.B = s.detailed.B();
  in.K = s.gains.K();
  in.Z_init = s.Z_init;
  in.Xbar = s.Xbar;
  in.Ubar = s.Ubar;
  in.U = s.U;
  in.Ac = s.coarse.A();
  in.Bc = s.coarse.B();
  in.Kc = s.gains.Kc();
  in.proj = s.projection;
  in.v_bound = c.velocity_bound;
  in.rate_bound = c.accel_bound * c.dt;
  in.Q = diag(c.Q);
  in.R = diag(c.R);
  in.Qc = diag(c.Qc);
  in.Rc = diag(c.Rc);
  in.x_target = (Vec(4) << c.target(0), 0.0, c.target(1), 0.0).finished();
  in.p_target = c.target;
  in.terminal = c.terminal_cost == "origin" ? TerminalCost::kOrigin : TerminalCost::kTarget;
  in.position_rows = Mat::Zero(2, 4);
  in.position_rows(0, 0) = 1.0;
  in.position_rows(1, 2) = 1.0;
  in.x0 = x0;

  const int N = c.Ns + c.Nl;
  DynamicObstacle obs = s.initial_obstacle();
  obs.position = obstacle_position;
  const std::vector<Vec> pred = predict_obstacle(obs, N, c.dt);
  const int robust_last = kind == MethodKind::kSingleRmpc ? N : c.Ns;
  for (int k = 0; k <= robust_last; ++k) {
    for (PathConstraint& pc : build_rmpc_constraints(s, k, pred[static_cast<size_t>(k)])) {
      in.robust_path.push_back(std::move(pc));
    }
  }
  if (kind == MethodKind::kGranular && c.Nl > 0) {
    for (int k = c.Ns; k <= N; ++k) {
      for (PathConstraint& pc :
           build_smpc_constraints(s, k, pred[static_cast<size_t>(k)], s.coarse_schedule.at(k), 2)) {
        in.chance_path.push_back(std::move(pc));
      }
    }
  } else if (kind == MethodKind::kSingleRsmpc && c.Nl > 0) {
    for (int k = c.Ns; k <= N; ++k) {
      for (PathConstraint& pc :
           build_smpc_constraints(s, k, pred[static_cast<size_t>(k)], s.detailed_schedule.at(k), 4)) {
        in.chance_path.push_back(std::move(pc));
      }
    }
  }
  return in;
}

NominalBounds nominal_bounds(const HPolytope& Xbar, const HPolytope& Ubar) {
  auto axis = [](int n, int i, double s) {
    Vec d = Vec::Zero(n);
    d(i) = s;
    return d;
  };
  NominalBounds b;
  b.input = Vec(2);
  for (int i = 0; i < 2; ++i) {
    b.input(i) = std::min(support(Ubar, axis(2, i, 1.0)), support(Ubar, axis(2, i, -1.0)));
  }
  b.lane = (Vec(2) << -support(Xbar, axis(4, 2, -1.0)), support(Xbar, axis(4, 2, 1.0))).finished();
  b.velocity = Vec(2);
  for (int i = 0; i < 2; ++i) {
    const int idx = 2 * i + 1;
    b.velocity(i) = std::min(support(Xbar, axis(4, idx, 1.0)), support(Xbar, axis(4, idx, -1.0)));
  }
  return b;
}

namespace {

ojson bounds_json(const NominalBounds& b) {
  return {{"input", vec_json(b.input)}, {"lane", vec_json(b.lane)}, {"velocity", vec_json(b.velocity)}};
}

ojson schedule_json(const CovarianceSchedule& sched) {
  ojson out = ojson::array();
  for (const Mat& m : sched.sigmas()) {
    ojson rows = ojson::array();
    for (int i = 0; i < m.rows(); ++i) {
      ojson row = ojson::array();
      for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    out.push_back(rows);
  }
  return out;
}

ojson support_json(const Zonotope& z) {
  ojson out = ojson::array();
  for (int i = 0; i < z.dim(); ++i) {
    Vec d = Vec::Zero(z.dim());
    d(i) = 1.0;
    out.push_back(support(z, d));
  }
  return out;
}

}  // namespace

ojson sets_report(const Scenario& s) {
  ojson j;
  j["tube"] = {{"disturbance_variant", s.config.disturbance_variant},
               {"alpha", s.tube.alpha},
               {"s", s.tube.s},
               {"generators", s.tube.Z.num_generators()},
               {"Z_support", support_json(s.tube.Z)},
               {"KZ_support", support_json(s.tube.KZ)},
               {"init_generators", s.Z_init.num_generators()},
               {"Z_init_support", support_json(s.Z_init)}};
  j["computed_bounds"] = bounds_json(nominal_bounds(s.tube.Xbar, s.tube.Ubar));
  ojson used = {{"source", s.config.nominal_bounds}};
  used.update(bounds_json(nominal_bounds(s.Xbar, s.Ubar)));
  j["controller_bounds"] = used;
  j["covariance_schedule"] = {{"coarse", schedule_json(s.coarse_schedule)},
                              {"detailed", schedule_json(s.detailed_schedule)}};
  return j;
}

EpisodeFlags collision_and_pass_check(const std::vector<Vec>& robot, const std::vector<Vec>& obstacle,
                                      const ScenarioConfig& config) {
  require(robot.size() == obstacle.size(), "collision_and_pass_check: histories must have equal length");
  EpisodeFlags flags;
  const double clearance = config.robot_radius + config.obstacle_radius;
  for (size_t i = 0; i < robot.size(); ++i) {
    const Vec& r = robot[i];
    const Vec& o = obstacle[i];
    if ((r - o).norm() < clearance) flags.collided = true;
    if (r(1) < config.lane_min || r(1) > config.lane_max) flags.collided = true;
    if (r(0) > o(0) + config.pass_margin) flags.passed = true;
    if ((r - config.target).norm() <= config.finish_threshold) flags.reached = true;
  }
  return flags;
}

}  // namespace gmpc
