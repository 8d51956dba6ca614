/*
 Copyright 2026 The CKNet Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cknet/dynamics.hpp"
#include "cknet/errors.hpp"
#include "test_support.hpp"

namespace cknet {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kPi = std::numbers::pi;

bool within(const VectorXd& s, const SystemSpec& spec) {
    return (s.array() >= spec.state_min.array()).all() && (s.array() <= spec.state_max.array()).all();
}

TEST(MountainCar, Defaults) {
    const auto spec = SystemSpec::mountain_car();
    EXPECT_DOUBLE_EQ(spec.param("p1"), 0.0015);
    EXPECT_DOUBLE_EQ(spec.param("p2"), 0.0025);
    EXPECT_DOUBLE_EQ(spec.dt, 1.0);
    EXPECT_EQ(spec.state_dim, 2);
    EXPECT_EQ(spec.action_dim, 1);
    EXPECT_DOUBLE_EQ(spec.state_min[0], -1.2);
    EXPECT_DOUBLE_EQ(spec.state_max[0], 0.6);
    EXPECT_DOUBLE_EQ(spec.state_min[1], -0.07);
    EXPECT_DOUBLE_EQ(spec.state_max[1], 0.07);
    EXPECT_NO_THROW(spec.validate());
}

TEST(MountainCar, NoForceAtCosineZero) {
    const auto spec = SystemSpec::mountain_car();
    const Eigen::Vector2d next = mountain_car_step({kPi / 6.0, 0.0}, 0.0, spec);
    EXPECT_NEAR(next[1], 0.0, 1e-18);
    EXPECT_NEAR(next[0], kPi / 6.0, 1e-15);
}

TEST(MountainCar, HandEvaluatedStep) {
    const auto spec = SystemSpec::mountain_car();
    const Eigen::Vector2d next = mountain_car_step({0.0, 0.0}, 1.0, spec);
    EXPECT_NEAR(next[1], -0.001, 1e-15);
    EXPECT_NEAR(next[0], -0.001, 1e-15);
}

TEST(MountainCar, WallRule) {
    const auto spec = SystemSpec::mountain_car();
    const Eigen::Vector2d next = mountain_car_step({-1.2, -0.01}, 0.0, spec);
    EXPECT_EQ(next[1], 0.0);
    EXPECT_EQ(next[0], -1.2);
}

TEST(MountainCar, VelocityAccumulates) {
    const auto spec = SystemSpec::mountain_car();
    const double x = -0.3, v = 0.02, u = 0.5;
    const Eigen::Vector2d next = mountain_car_step({x, v}, u, spec);
    const double v_expected = v + 0.0015 * u - 0.0025 * std::cos(3.0 * x);
    EXPECT_NEAR(next[1], v_expected, 1e-15);
    EXPECT_NEAR(next[0], x + v_expected, 1e-15);
}

TEST(MountainCar, VelocityClamped) {
    const auto spec = SystemSpec::mountain_car();
    const Eigen::Vector2d next = mountain_car_step({-0.5, 0.0699}, 1.0, spec);
    EXPECT_LE(next[1], 0.07);
}

TEST(CartPole, Defaults) {
    const auto spec = SystemSpec::cart_pole();
    EXPECT_DOUBLE_EQ(spec.dt, 0.02);
    EXPECT_EQ(spec.state_dim, 4);
    EXPECT_DOUBLE_EQ(spec.state_max[0], 2.4);
    EXPECT_DOUBLE_EQ(spec.state_max[2], 0.21);
    EXPECT_DOUBLE_EQ(spec.action_max[0], 10.0);
}

TEST(CartPole, ZeroInputZeroAngle) {
    const auto spec = SystemSpec::cart_pole();
    EXPECT_EQ(cart_pole_angular_acceleration(0.0, 0.0, spec), 0.0);
    const Eigen::Vector4d next = cart_pole_step(Eigen::Vector4d::Zero(), 0.0, spec);
    EXPECT_EQ(next, Eigen::Vector4d::Zero());
}

TEST(CartPole, HandEvaluatedAngularAcceleration) {
    const auto spec = SystemSpec::cart_pole();
    EXPECT_NEAR(cart_pole_angular_acceleration(kPi / 2.0, 0.0, spec), 0.294, 1e-12);
}

TEST(CartPole, PureTranslation) {
    const auto spec = SystemSpec::cart_pole();
    const Eigen::Vector4d next = cart_pole_step({0.0, 1.0, 0.0, 0.0}, 0.0, spec);
    EXPECT_NEAR(next[0], 0.02, 1e-15);
    EXPECT_EQ(next[1], 1.0);
}

TEST(CartPole, EulerUpdate) {
    const auto spec = SystemSpec::cart_pole();
    const Eigen::Vector4d s(0.1, -0.2, 0.05, 0.3);
    const double u = 2.0;
    const Eigen::Vector4d next = cart_pole_step(s, u, spec);
    const double acc = (3.0 * 0.02 / 2.0) * (9.8 * std::sin(0.05) + u * std::cos(0.05));
    EXPECT_NEAR(next[0], 0.1 - 0.2 * 0.02, 1e-15);
    EXPECT_NEAR(next[1], -0.2 + u * 0.02, 1e-15);
    EXPECT_NEAR(next[2], 0.05 + 0.3 * 0.02, 1e-15);
    EXPECT_NEAR(next[3], 0.3 + acc * 0.02, 1e-15);
}

TEST(LinearRef, Identity) {
    const auto spec = SystemSpec::linear_ref(MatrixXd::Identity(3, 3), MatrixXd::Zero(3, 1));
    const VectorXd s = VectorXd::LinSpaced(3, -1.0, 2.0);
    EXPECT_EQ(linear_ref_step(s, VectorXd::Constant(1, 5.0), spec), s);
}

TEST(LinearRef, HandProduct) {
    MatrixXd a(2, 2);
    a << 0.9, 0.0, 0.0, 0.5;
    MatrixXd b(2, 1);
    b << 1.0, 0.0;
    const auto spec = SystemSpec::linear_ref(a, b);
    const VectorXd next = linear_ref_step(VectorXd::Ones(2), VectorXd::Ones(1), spec);
    EXPECT_NEAR(next[0], 1.9, 1e-15);
    EXPECT_NEAR(next[1], 0.5, 1e-15);
}

TEST(LinearRef, Rotation) {
    MatrixXd a(2, 2);
    a << 0.0, -1.0, 1.0, 0.0;
    const auto spec = SystemSpec::linear_ref(a, MatrixXd::Zero(2, 1));
    const VectorXd next = linear_ref_step(VectorXd::Unit(2, 0), VectorXd::Zero(1), spec);
    EXPECT_EQ(next, VectorXd::Unit(2, 1));
}

TEST(LinearRef, DimensionMismatch) {
    auto spec = SystemSpec::linear_ref(MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1));
    EXPECT_THROW(linear_ref_step(VectorXd::Zero(3), VectorXd::Zero(1), spec), ConfigError);
    EXPECT_THROW(linear_ref_step(VectorXd::Zero(2), VectorXd::Zero(2), spec), ConfigError);
    EXPECT_THROW(SystemSpec::linear_ref(MatrixXd::Identity(2, 2), MatrixXd::Zero(3, 1)), ConfigError);
}

TEST(SystemSpec, Validation) {
    auto spec = SystemSpec::mountain_car();
    spec.dt = 0.0;
    EXPECT_THROW(spec.validate(), ConfigError);
    spec = SystemSpec::mountain_car();
    spec.state_min[0] = spec.state_max[0];
    EXPECT_THROW(spec.validate(), ConfigError);
    EXPECT_THROW(SystemSpec::mountain_car().param("l"), ConfigError);
    EXPECT_THROW(parse_system_kind("pendulum"), ConfigError);
    EXPECT_EQ(parse_system_kind("cart_pole"), SystemKind::cart_pole);
    EXPECT_EQ(to_string(SystemKind::mountain_car), "mountain_car");
}

TEST(Trajectory, Deterministic) {
    const auto spec = SystemSpec::linear_ref(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 1));
    const auto a = generate_trajectory(spec, PolicyKind::random_uniform, 5, 7);
    const auto b = generate_trajectory(spec, PolicyKind::random_uniform, 5, 7);
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) EXPECT_EQ(a.states[k], b.states[k]);
    for (std::size_t k = 0; k < a.actions.size(); ++k) EXPECT_EQ(a.actions[k], b.actions[k]);
    const auto c = generate_trajectory(spec, PolicyKind::random_uniform, 5, 8);
    EXPECT_NE(a.actions[0], c.actions[0]);
}

TEST(Trajectory, LengthContract) {
    const auto t = generate_trajectory(SystemSpec::mountain_car(), PolicyKind::sinusoid, 300, 1);
    EXPECT_EQ(t.states.size(), 301u);
    EXPECT_EQ(t.actions.size(), 300u);
    EXPECT_EQ(t.steps(), 300);
    EXPECT_EQ(t.seed, 1u);
    EXPECT_DOUBLE_EQ(t.dt, 1.0);
}

TEST(Trajectory, CartPoleAnglesWithinBounds) {
    const auto spec = SystemSpec::cart_pole();
    const auto t = generate_trajectory(spec, PolicyKind::random_uniform, 200, 3);
    for (const auto& s : t.states) {
        EXPECT_GE(s[2], -0.21);
        EXPECT_LE(s[2], 0.21);
    }
}

TEST(Trajectory, ActionsWithinBounds) {
    for (auto policy : {PolicyKind::random_uniform, PolicyKind::sinusoid}) {
        const auto spec = SystemSpec::mountain_car();
        const auto t = generate_trajectory(spec, policy, 100, 11);
        for (const auto& u : t.actions) {
            EXPECT_GE(u[0], -1.0);
            EXPECT_LE(u[0], 1.0);
        }
    }
}

TEST(Trajectory, ClampedStatesStayInBox) {
    std::mt19937_64 rng(5);
    for (const auto& spec : {SystemSpec::mountain_car(), SystemSpec::cart_pole()}) {
        for (int trial = 0; trial < 20; ++trial) {
            const auto t = generate_trajectory(spec, PolicyKind::random_uniform, 300, rng());
            for (const auto& s : t.states) EXPECT_TRUE(within(s, spec));
        }
    }
}

TEST(Trajectory, LinearResidualIsZero) {
    std::mt19937_64 rng(9);
    const MatrixXd a = testing::random_matrix(3, 3, rng, 0.5);
    const MatrixXd b = testing::random_matrix(3, 2, rng);
    const auto spec = SystemSpec::linear_ref(a, b);
    const auto t = generate_trajectory(spec, PolicyKind::random_uniform, 50, 4);
    for (int k = 0; k < t.steps(); ++k) {
        const VectorXd r = t.states[k + 1] - a * t.states[k] - b * t.actions[k];
        EXPECT_LE(r.norm(), 1e-14 * (1.0 + t.states[k + 1].norm()));
    }
}

TEST(Trajectory, Scripted) {
    const auto spec = SystemSpec::mountain_car();
    std::vector<VectorXd> script;
    for (int k = 0; k < 4; ++k) script.push_back(VectorXd::Constant(1, 0.25 * k));
    const auto t = generate_trajectory(spec, PolicyKind::scripted, 4, 2, &script);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(t.actions[k], script[k]);
    EXPECT_THROW(generate_trajectory(spec, PolicyKind::scripted, 4, 2), ConfigError);
    EXPECT_THROW(generate_trajectory(spec, PolicyKind::scripted, 5, 2, &script), ConfigError);
}

TEST(Trajectory, Errors) {
    EXPECT_THROW(generate_trajectory(SystemSpec::mountain_car(), PolicyKind::sinusoid, 0, 1), ConfigError);
    EXPECT_THROW(parse_policy_kind("greedy"), ConfigError);
    EXPECT_EQ(parse_policy_kind("sinusoid"), PolicyKind::sinusoid);
}

TEST(ActionCsv, RoundTrip) {
    const auto dir = testing::scratch_dir("dynamics_csv");
    std::vector<VectorXd> actions = {VectorXd::Constant(2, 0.1), VectorXd::Constant(2, -1.0 / 3.0)};
    const std::string path = (dir / "actions.csv").string();
    write_action_csv(path, actions);
    const auto back = read_action_csv(path);
    ASSERT_EQ(back.size(), actions.size());
    for (std::size_t k = 0; k < actions.size(); ++k) EXPECT_EQ(back[k], actions[k]);
    EXPECT_THROW(read_state_csv(path), IoError);
}

}  // namespace
}  // namespace cknet
