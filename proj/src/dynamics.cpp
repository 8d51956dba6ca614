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

#include "cknet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cknet/csv.hpp"
#include "cknet/errors.hpp"

namespace cknet {

std::string_view to_string(SystemKind kind) {
    switch (kind) {
        case SystemKind::mountain_car: return "mountain_car";
        case SystemKind::cart_pole: return "cart_pole";
        case SystemKind::linear_ref: return "linear_ref";
    }
    return "unknown";
}

SystemKind parse_system_kind(std::string_view name) {
    if (name == "mountain_car") return SystemKind::mountain_car;
    if (name == "cart_pole") return SystemKind::cart_pole;
    if (name == "linear_ref") return SystemKind::linear_ref;
    throw ConfigError("unknown system '" + std::string(name) + "'");
}

double SystemSpec::param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw ConfigError("system parameter '" + name + "' is not set");
    return it->second;
}

void SystemSpec::validate() const {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (state_dim < 1 || action_dim < 1) throw ConfigError("state and action dimensions must be >= 1");
    if (state_min.size() != state_dim || state_max.size() != state_dim) {
        throw ConfigError("state bounds do not match the state dimension");
    }
    if (action_min.size() != action_dim || action_max.size() != action_dim) {
        throw ConfigError("action bounds do not match the action dimension");
    }
    for (int i = 0; i < state_dim; ++i) {
        if (!(state_min[i] < state_max[i])) throw ConfigError("state bound min >= max");
    }
    for (int i = 0; i < action_dim; ++i) {
        if (!(action_min[i] < action_max[i])) throw ConfigError("action bound min >= max");
    }
    if (kind == SystemKind::linear_ref) {
        if (a_true.rows() != state_dim || a_true.cols() != state_dim) {
            throw ConfigError("A_true must be state_dim x state_dim");
        }
        if (b_true.rows() != state_dim || b_true.cols() != action_dim) {
            throw ConfigError("B_true must be state_dim x action_dim");
        }
    }
}

SystemSpec SystemSpec::mountain_car() {
    SystemSpec s;
    s.kind = SystemKind::mountain_car;
    s.dt = 1.0;
    s.params = {{"p1", 0.0015}, {"p2", 0.0025}};
    s.state_dim = 2;
    s.action_dim = 1;
    s.state_min = Eigen::Vector2d(-1.2, -0.07);
    s.state_max = Eigen::Vector2d(0.6, 0.07);
    s.action_min = Eigen::VectorXd::Constant(1, -1.0);
    s.action_max = Eigen::VectorXd::Constant(1, 1.0);
    return s;
}

SystemSpec SystemSpec::cart_pole() {
    SystemSpec s;
    s.kind = SystemKind::cart_pole;
    s.dt = 0.02;
    s.params = {{"l", 0.5}, {"g", 9.8}};
    s.state_dim = 4;
    s.action_dim = 1;
    s.state_min = Eigen::Vector4d(-2.4, -5.0, -0.21, -5.0);
    s.state_max = Eigen::Vector4d(2.4, 5.0, 0.21, 5.0);
    s.action_min = Eigen::VectorXd::Constant(1, -10.0);
    s.action_max = Eigen::VectorXd::Constant(1, 10.0);
    return s;
}

SystemSpec SystemSpec::linear_ref(const Eigen::MatrixXd& a_true, const Eigen::MatrixXd& b_true, double dt) {
    SystemSpec s;
    s.kind = SystemKind::linear_ref;
    s.dt = dt;
    s.a_true = a_true;
    s.b_true = b_true;
    s.state_dim = static_cast<int>(a_true.rows());
    s.action_dim = static_cast<int>(b_true.cols());
    // Unclamped; the box only bounds sampling and rendering.
    s.state_min = Eigen::VectorXd::Constant(s.state_dim, -1e300);
    s.state_max = Eigen::VectorXd::Constant(s.state_dim, 1e300);
    s.action_min = Eigen::VectorXd::Constant(s.action_dim, -1.0);
    s.action_max = Eigen::VectorXd::Constant(s.action_dim, 1.0);
    s.validate();
    return s;
}

SystemSpec SystemSpec::default_linear_ref() {
    Eigen::Matrix2d a;
    a << 0.95, -0.2, 0.2, 0.95;
    Eigen::MatrixXd b(2, 1);
    b << 0.0, 0.1;
    return linear_ref(a, b, 0.1);
}

Eigen::VectorXd clamp_to(const Eigen::VectorXd& v, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    return v.cwiseMax(lo).cwiseMin(hi);
}

Eigen::Vector2d mountain_car_step(const Eigen::Vector2d& state, double u, const SystemSpec& spec) {
    const double p1 = spec.param("p1");
    const double p2 = spec.param("p2");
    const double x_min = spec.state_min[0], x_max = spec.state_max[0];
    const double v_min = spec.state_min[1], v_max = spec.state_max[1];
    u = std::clamp(u, spec.action_min[0], spec.action_max[0]);

    const double x = std::clamp(state[0], x_min, x_max);
    double v = std::clamp(state[1], v_min, v_max);
    v = std::clamp(v + p1 * u - p2 * std::cos(3.0 * x), v_min, v_max);
    if (x <= x_min && v < 0.0) v = 0.0;
    const double x_next = std::clamp(x + v * spec.dt, x_min, x_max);
    return {x_next, v};
}

double cart_pole_angular_acceleration(double theta, double u, const SystemSpec& spec) {
    const double l = spec.param("l");
    const double g = spec.param("g");
    return (3.0 * spec.dt / (4.0 * l)) * (g * std::sin(theta) + u * std::cos(theta));
}

Eigen::Vector4d cart_pole_step(const Eigen::Vector4d& state, double u, const SystemSpec& spec) {
    u = std::clamp(u, spec.action_min[0], spec.action_max[0]);
    const Eigen::Vector4d s = clamp_to(state, spec.state_min, spec.state_max);
    const double theta_acc = cart_pole_angular_acceleration(s[2], u, spec);
    // Explicit Euler on [x, x_dot, theta, theta_dot] with x_ddot = u.
    Eigen::Vector4d rate(s[1], u, s[3], theta_acc);
    return clamp_to(s + rate * spec.dt, spec.state_min, spec.state_max);
}

Eigen::VectorXd linear_ref_step(const Eigen::VectorXd& state, const Eigen::VectorXd& u, const SystemSpec& spec) {
    if (spec.a_true.rows() != spec.a_true.cols() || spec.a_true.cols() != state.size()) {
        throw ConfigError("linear_ref: A_true does not match the state dimension");
    }
    if (spec.b_true.rows() != state.size() || spec.b_true.cols() != u.size()) {
        throw ConfigError("linear_ref: B_true does not match the state/action dimensions");
    }
    return spec.a_true * state + spec.b_true * u;
}

Eigen::VectorXd step(const Eigen::VectorXd& state, const Eigen::VectorXd& u, const SystemSpec& spec) {
    switch (spec.kind) {
        case SystemKind::mountain_car:
            if (state.size() != 2 || u.size() != 1) throw ConfigError("mountain_car expects 2 states, 1 action");
            return mountain_car_step(Eigen::Vector2d(state), u[0], spec);
        case SystemKind::cart_pole:
            if (state.size() != 4 || u.size() != 1) throw ConfigError("cart_pole expects 4 states, 1 action");
            return cart_pole_step(Eigen::Vector4d(state), u[0], spec);
        case SystemKind::linear_ref:
            return linear_ref_step(state, u, spec);
    }
    throw ConfigError("unknown system kind");
}

Eigen::VectorXd initial_state(const SystemSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Eigen::VectorXd s(spec.state_dim);
    switch (spec.kind) {
        case SystemKind::mountain_car:
            s << -0.6 + 0.2 * uni(rng), 0.0;
            break;
        case SystemKind::cart_pole:
            for (int i = 0; i < 4; ++i) s[i] = -0.05 + 0.1 * uni(rng);
            break;
        case SystemKind::linear_ref:
            for (int i = 0; i < spec.state_dim; ++i) s[i] = -1.0 + 2.0 * uni(rng);
            break;
    }
    return s;
}

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::random_uniform: return "random_uniform";
        case PolicyKind::sinusoid: return "sinusoid";
        case PolicyKind::scripted: return "scripted";
    }
    return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
    if (name == "random_uniform") return PolicyKind::random_uniform;
    if (name == "sinusoid") return PolicyKind::sinusoid;
    if (name == "scripted") return PolicyKind::scripted;
    throw ConfigError("unknown policy '" + std::string(name) + "'");
}

Trajectory generate_trajectory(const SystemSpec& spec, PolicyKind policy, int steps, std::uint64_t seed,
                               const std::vector<Eigen::VectorXd>* script) {
    return generate_trajectory(spec, policy, steps, seed, initial_state(spec, seed), script);
}

Trajectory generate_trajectory(const SystemSpec& spec, PolicyKind policy, int steps, std::uint64_t seed,
                               const Eigen::VectorXd& start, const std::vector<Eigen::VectorXd>* script) {
    spec.validate();
    if (steps < 1) throw ConfigError("trajectory needs at least one step");
    if (start.size() != spec.state_dim) throw ConfigError("initial state has the wrong dimension");
    if (policy == PolicyKind::scripted) {
        if (script == nullptr) throw ConfigError("scripted policy requires an action script");
        if (static_cast<int>(script->size()) < steps) throw ConfigError("action script shorter than requested steps");
        for (int k = 0; k < steps; ++k) {
            if ((*script)[k].size() != spec.action_dim) throw ConfigError("action script has the wrong width");
        }
    }

    // Policy randomness uses a stream distinct from the initial-state draw.
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const int n = spec.action_dim;
    const Eigen::VectorXd half = 0.5 * (spec.action_max - spec.action_min);
    const Eigen::VectorXd mid = 0.5 * (spec.action_max + spec.action_min);

    Eigen::VectorXd amplitude(n), omega(n);
    if (policy == PolicyKind::sinusoid) {
        for (int j = 0; j < n; ++j) {
            amplitude[j] = half[j] * (0.3 + 0.7 * uni(rng));
            omega[j] = 0.02 + 0.18 * uni(rng);
        }
    }

    Trajectory traj;
    traj.dt = spec.dt;
    traj.seed = seed;
    traj.states.reserve(steps + 1);
    traj.actions.reserve(steps);
    Eigen::VectorXd s = spec.kind == SystemKind::linear_ref ? start : clamp_to(start, spec.state_min, spec.state_max);
    traj.states.push_back(s);
    for (int k = 0; k < steps; ++k) {
        Eigen::VectorXd u(n);
        switch (policy) {
            case PolicyKind::random_uniform:
                for (int j = 0; j < n; ++j) u[j] = spec.action_min[j] + 2.0 * half[j] * uni(rng);
                break;
            case PolicyKind::sinusoid:
                for (int j = 0; j < n; ++j) u[j] = mid[j] + amplitude[j] * std::sin(omega[j] * k);
                break;
            case PolicyKind::scripted:
                u = (*script)[k];
                break;
        }
        if (spec.kind != SystemKind::linear_ref) u = clamp_to(u, spec.action_min, spec.action_max);
        s = step(s, u, spec);
        traj.actions.push_back(u);
        traj.states.push_back(s);
    }
    return traj;
}

namespace {

std::vector<Eigen::VectorXd> rows_to_vectors(const NumericTable& t) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) out.push_back(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
    return out;
}

NumericTable vectors_to_table(const std::vector<Eigen::VectorXd>& v, char prefix) {
    NumericTable t;
    const Eigen::Index width = v.empty() ? 0 : v.front().size();
    for (Eigen::Index j = 0; j < width; ++j) t.header.push_back(std::string(1, prefix) + std::to_string(j));
    for (const auto& x : v) {
        if (x.size() != width) throw ConfigError("ragged vector sequence");
        t.rows.emplace_back(x.data(), x.data() + x.size());
    }
    return t;
}

void check_header(const NumericTable& t, char prefix, const std::string& path) {
    for (std::size_t j = 0; j < t.header.size(); ++j) {
        if (t.header[j] != std::string(1, prefix) + std::to_string(j)) {
            throw IoError(path + ": expected header column '" + std::string(1, prefix) + std::to_string(j) + "'");
        }
    }
}

}  // namespace

std::vector<Eigen::VectorXd> read_action_csv(const std::string& path) {
    auto t = read_numeric_csv(path);
    check_header(t, 'u', path);
    return rows_to_vectors(t);
}

void write_action_csv(const std::string& path, const std::vector<Eigen::VectorXd>& actions) {
    write_numeric_csv(path, vectors_to_table(actions, 'u'));
}

std::vector<Eigen::VectorXd> read_state_csv(const std::string& path) {
    auto t = read_numeric_csv(path);
    check_header(t, 's', path);
    return rows_to_vectors(t);
}

void write_state_csv(const std::string& path, const std::vector<Eigen::VectorXd>& states) {
    write_numeric_csv(path, vectors_to_table(states, 's'));
}

}  // namespace cknet
