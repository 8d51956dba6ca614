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

#ifndef CKNET_DYNAMICS_HPP
#define CKNET_DYNAMICS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cknet {

enum class SystemKind { mountain_car, cart_pole, linear_ref };

std::string_view to_string(SystemKind kind);
SystemKind parse_system_kind(std::string_view name);

/**
 * @brief Discrete-time forced system description.
 *
 * MountainCar state: [x, x_dot], CartPole state: [x, x_dot, theta, theta_dot],
 * linear reference state: arbitrary dimension driven by (a_true, b_true).
 */
struct SystemSpec {
    SystemKind kind = SystemKind::linear_ref;
    double dt = 1.0;
    std::map<std::string, double> params;
    Eigen::MatrixXd a_true;
    Eigen::MatrixXd b_true;
    int state_dim = 0;
    int action_dim = 0;
    Eigen::VectorXd state_min, state_max;
    Eigen::VectorXd action_min, action_max;

    double param(const std::string& name) const;

    // Throws ConfigError when an invariant does not hold.
    void validate() const;

    static SystemSpec mountain_car();
    static SystemSpec cart_pole();
    static SystemSpec linear_ref(const Eigen::MatrixXd& a_true, const Eigen::MatrixXd& b_true,
                                 double dt = 1.0);
    // Lightly damped 2-D rotation with a single input; the default for dataset generation.
    static SystemSpec default_linear_ref();
};

struct Trajectory {
    std::vector<Eigen::VectorXd> states;   // T + 1 entries
    std::vector<Eigen::VectorXd> actions;  // T entries
    double dt = 0.0;
    std::uint64_t seed = 0;

    int steps() const { return static_cast<int>(actions.size()); }
};

Eigen::VectorXd clamp_to(const Eigen::VectorXd& v, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

Eigen::Vector2d mountain_car_step(const Eigen::Vector2d& state, double u, const SystemSpec& spec);

// Angular acceleration of the pole, including the sample-time factor.
double cart_pole_angular_acceleration(double theta, double u, const SystemSpec& spec);
Eigen::Vector4d cart_pole_step(const Eigen::Vector4d& state, double u, const SystemSpec& spec);

Eigen::VectorXd linear_ref_step(const Eigen::VectorXd& state, const Eigen::VectorXd& u,
                                const SystemSpec& spec);

// Dispatches on spec.kind.
Eigen::VectorXd step(const Eigen::VectorXd& state, const Eigen::VectorXd& u, const SystemSpec& spec);

// Seeded initial state: Gym-style for the two benchmark systems, uniform in [-1, 1] otherwise.
Eigen::VectorXd initial_state(const SystemSpec& spec, std::uint64_t seed);

enum class PolicyKind { random_uniform, sinusoid, scripted };

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);

/// Runs `steps` transitions from a seeded initial state.
///
/// random_uniform draws i.i.d. actions inside the action box, sinusoid plays
/// u_k = a * sin(omega * k) per action coordinate with a and omega drawn from the
/// seed, scripted replays `script` (at least `steps` rows required).
Trajectory generate_trajectory(const SystemSpec& spec, PolicyKind policy, int steps, std::uint64_t seed,
                               const std::vector<Eigen::VectorXd>* script = nullptr);

Trajectory generate_trajectory(const SystemSpec& spec, PolicyKind policy, int steps, std::uint64_t seed,
                               const Eigen::VectorXd& start,
                               const std::vector<Eigen::VectorXd>* script = nullptr);

// Action script CSV: header "u0,u1,...", one action vector per row.
std::vector<Eigen::VectorXd> read_action_csv(const std::string& path);
void write_action_csv(const std::string& path, const std::vector<Eigen::VectorXd>& actions);
void write_state_csv(const std::string& path, const std::vector<Eigen::VectorXd>& states);
std::vector<Eigen::VectorXd> read_state_csv(const std::string& path);

}  // namespace cknet

#endif  // CKNET_DYNAMICS_HPP
