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

#include <random>

#include <gtest/gtest.h>

namespace gmpc {
namespace {

const Scenario& default_scenario() {
  static const Scenario s = Scenario::build(ScenarioConfig{});
  return s;
}

const PathConstraint& find_tag(const std::vector<PathConstraint>& cs, const std::string& tag) {
  for (const auto& c : cs) {
    if (c.tag == tag) return c;
  }
  throw std::runtime_error("missing constraint " + tag);
}

TEST(ScenarioConfigTest, DefaultRoundTripIsByteIdentical) {
  const std::string text = dump_config(ScenarioConfig{});
  const ScenarioConfig back = config_from_json(nlohmann::ordered_json::parse(text));
  EXPECT_EQ(dump_config(back), text);
}

TEST(ScenarioConfigTest, PartialFileKeepsDefaults) {
  const ScenarioConfig c = config_from_json(nlohmann::ordered_json::parse(R"({"control": {"p": 0.9}})"));
  EXPECT_DOUBLE_EQ(c.p, 0.9);
  EXPECT_EQ(c.Ns, 7);
  EXPECT_EQ(c.Nl, 13);
}

TEST(ScenarioConfigTest, UnknownKeyIsRejected) {
  EXPECT_THROW(config_from_json(nlohmann::ordered_json::parse(R"({"control": {"horizon": 3}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::ordered_json::parse(R"({"extra": {}})")), ConfigError);
  ScenarioConfig c;
  EXPECT_THROW(apply_override(c, "control.nope=1"), ConfigError);
}

TEST(ScenarioConfigTest, InvalidValuesAreRejected) {
  EXPECT_THROW(config_from_json(nlohmann::ordered_json::parse(R"({"control": {"p": 0.4}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::ordered_json::parse(R"({"control": {"Ns": 2.5}})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::ordered_json::parse(R"({"world": {"dt": "fast"}})")), ConfigError);
}

TEST(ScenarioConfigTest, OverrideParsesJsonValues) {
  ScenarioConfig c;
  apply_override(c, "control.Ns=5");
  apply_override(c, "control.terminal_cost=origin");
  apply_override(c, "world.start=[1, 2]");
  EXPECT_EQ(c.Ns, 5);
  EXPECT_EQ(c.terminal_cost, "origin");
  EXPECT_DOUBLE_EQ(c.start(0), 1.0);
  EXPECT_DOUBLE_EQ(c.start(1), 2.0);
}

TEST(ScenarioTest, ObstaclePredictionIsConstantVelocity) {
  const std::vector<Vec> pred = predict_obstacle(default_scenario().initial_obstacle(), 20, 0.2);
  ASSERT_EQ(pred.size(), 21u);
  EXPECT_NEAR(pred[5](0), 6.6, 1e-12);
  EXPECT_NEAR(pred[5](1), 0.0, 1e-12);
}

TEST(ScenarioTest, RobustEllipseBoundary) {
  const Scenario& s = default_scenario();
  const auto cs = build_rmpc_constraints(s, 0, s.config.obstacle_start);
  const PathConstraint& e = find_tag(cs, "robust-ellipse");
  const Vec on = (Vec(4) << 8.1, 1.0, 0.0, 0.0).finished();
  EXPECT_NEAR(e.g.value(on), 0.0, 1e-12);
  EXPECT_NEAR(deterministic_residual(e.g, on, e.sigma), 0.0, 1e-12);
  const Vec inside = (Vec(4) << 7.0, 0.0, 0.5, 0.0).finished();
  EXPECT_LT(e.g.value(inside), 0.0);
}

TEST(ScenarioTest, RobustBoxLowerEdge) {
  const Scenario& s = default_scenario();
  const auto cs = build_rmpc_constraints(s, 0, s.config.obstacle_start);
  const PathConstraint& b = find_tag(cs, "robust-box");
  const Vec edge = (Vec(4) << 12.0, 0.0, 1.2, 0.0).finished();
  EXPECT_NEAR(b.g.value(edge), 0.0, 1e-12);
  EXPECT_EQ(b.gate_index, 0);
  EXPECT_DOUBLE_EQ(b.gate_lo, 10.2);
  EXPECT_DOUBLE_EQ(b.gate_hi, 15.8);
  const Vec above = (Vec(4) << 12.0, 0.0, 1.5, 0.0).finished();
  EXPECT_LT(b.g.value(above), 0.0);
}

TEST(ScenarioTest, ChanceConstraintsTightenWithCovariance) {
  const Scenario& s = default_scenario();
  const int k = s.config.Ns + 3;
  const auto cs = build_smpc_constraints(s, k, s.config.obstacle_start, s.coarse_schedule.at(k), 2);
  const PathConstraint& upper = find_tag(cs, "chance-lane-upper");
  const Vec z = (Vec(2) << 3.0, 1.0).finished();
  const double g = upper.g.value(z);
  const double r = deterministic_residual(upper.g, z, upper.sigma);
  EXPECT_GT(g, r);
  // gamma = sqrt(2 n' Sigma n) erfinv(2p - 1) for a unit-normal half-plane.
  const Vec n = -upper.g.gradient(z);
  const double std_dev = std::sqrt(n.dot(upper.sigma * n));
  EXPECT_NEAR(g - r, std_dev * 0.8416212335729143, 1e-9);
}

TEST(ScenarioTest, PublishedBoundsAreInsideComputedSets) {
  const Scenario& s = default_scenario();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(-4.0, 4.0), uu(-4.0, 4.0);
  int inside = 0;
  for (int i = 0; i < 20000; ++i) {
    const Vec x = (Vec(4) << ux(rng), ux(rng), ux(rng), ux(rng)).finished();
    if (s.Xbar.contains(x)) {
      ++inside;
      EXPECT_TRUE(s.tube.Xbar.contains(x));
    }
    const Vec u = (Vec(2) << uu(rng), uu(rng)).finished();
    if (s.Ubar.contains(u)) {
      EXPECT_TRUE(s.tube.Ubar.contains(u));
    }
  }
  EXPECT_GT(inside, 0);
  const Vec lane_top = (Vec(4) << 0.0, 0.0, 2.22, 0.0).finished();
  EXPECT_TRUE(s.Xbar.contains(lane_top));
  EXPECT_FALSE(s.Xbar.contains((Vec(4) << 0.0, 0.0, 2.23, 0.0).finished()));
}

TEST(ScenarioTest, ComputedNominalSetsMatchTheTube) {
  ScenarioConfig c;
  c.nominal_bounds = "computed";
  const Scenario s = Scenario::build(c);
  for (int h = 0; h < s.Xbar.num_halfspaces(); ++h) {
    EXPECT_NEAR(s.Xbar.offsets()(h), s.tube.Xbar.offsets()(h), 1e-12);
  }
}

TEST(ScenarioTest, CollisionBoundaryIsNotACollision) {
  ScenarioConfig c;
  const std::vector<Vec> robot = {(Vec(2) << 0.0, 0.0).finished(), (Vec(2) << 5.0, 1.0).finished()};
  const std::vector<Vec> obs = {(Vec(2) << 1.0, 0.0).finished(), (Vec(2) << 5.0, 0.0).finished()};
  EXPECT_FALSE(collision_and_pass_check(robot, obs, c).collided);
  const std::vector<Vec> close = {(Vec(2) << 0.0, 0.0).finished(), (Vec(2) << 5.0, 0.999).finished()};
  EXPECT_TRUE(collision_and_pass_check(close, obs, c).collided);
}

TEST(ScenarioTest, LaneExitIsACollision) {
  ScenarioConfig c;
  const std::vector<Vec> robot = {(Vec(2) << 0.0, 0.0).finished(), (Vec(2) << 1.0, 2.6).finished()};
  const std::vector<Vec> obs = {(Vec(2) << 6.0, 0.0).finished(), (Vec(2) << 6.0, 0.0).finished()};
  EXPECT_TRUE(collision_and_pass_check(robot, obs, c).collided);
}

TEST(ScenarioTest, PassAndReachFlags) {
  ScenarioConfig c;
  const std::vector<Vec> robot = {(Vec(2) << 0.0, 0.0).finished(), (Vec(2) << 8.1, 2.2).finished(),
                                  (Vec(2) << 18.7, 0.2).finished()};
  const std::vector<Vec> obs = {(Vec(2) << 6.0, 0.0).finished(), (Vec(2) << 7.0, 0.0).finished(),
                                (Vec(2) << 8.0, 0.0).finished()};
  const EpisodeFlags f = collision_and_pass_check(robot, obs, c);
  EXPECT_TRUE(f.passed);
  EXPECT_TRUE(f.reached);
  EXPECT_FALSE(f.collided);
  const std::vector<Vec> behind = {(Vec(2) << 0.0, 0.0).finished(), (Vec(2) << 7.9, 2.2).finished()};
  const std::vector<Vec> obs2 = {(Vec(2) << 6.0, 0.0).finished(), (Vec(2) << 7.0, 0.0).finished()};
  EXPECT_FALSE(collision_and_pass_check(behind, obs2, c).passed);
}

}  // namespace
}  // namespace gmpc
