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

#ifndef CKNET_RENDER_HPP
#define CKNET_RENDER_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cknet/dynamics.hpp"

namespace cknet {

// Grayscale image, row 0 at the top, values in [0, 1].
using Frame = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// World-coordinate window mapped onto the image.
struct Viewport {
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;
};

struct RenderConfig {
    int h = 32;
    int w = 32;
    int c = 3;  // stack depth
    double enhance_threshold = 0.8;
    bool enhance = true;
    int supersample = 2;

    // Scene geometry, in output pixels.
    double car_radius_px = 2.5;
    double line_width_px = 1.0;
    int curve_samples = 64;
    double cart_width_px = 6.0;
    double cart_height_px = 3.0;
    double pole_length_px = 10.0;
    double pole_width_px = 1.2;

    // Defaults to a per-system window covering the whole scene.
    std::optional<Viewport> viewport;

    void validate() const;
};

Viewport default_viewport(SystemKind kind);

/// Stacked observation: c channels of h x w pixels, channel-major then row-major.
struct Observation {
    int c = 0, h = 0, w = 0;
    int frame_index = 0;  // index of the newest frame
    Eigen::VectorXd pixels;

    Frame channel(int j) const;
};

/// Rasterizes one state.
///
/// MountainCar: hill profile y = 0.45 sin(3x) + 0.55 drawn as a gray polyline and
/// the car as a dark disc resting on it. CartPole: gray track, dark cart, pole
/// at angle theta from vertical. Background is 1.0. Supersampled then box-filtered.
Frame render_frame(const Eigen::VectorXd& state, const SystemSpec& spec, const RenderConfig& cfg);

// Pixels strictly above the threshold become 1.0.
Frame enhance(const Frame& frame, double threshold = 0.8);

Observation stack_frames(const std::vector<Frame>& frames, int k, int c);

struct Episode {
    std::vector<Frame> frames;              // one per trajectory state
    std::vector<Eigen::VectorXd> actions;   // actions[j] follows observation j
    int c = 1;
    double dt = 1.0;

    int observation_count() const { return static_cast<int>(frames.size()) - c + 1; }
    Observation observation(int j) const;
    std::vector<Observation> observations() const;
};

// Action u_{j+c-1} follows observation j, so an episode has observation_count() - 1 actions.
Episode render_episode(const Trajectory& traj, const SystemSpec& spec, const RenderConfig& cfg);

// Builds an episode from already-rendered frames and the full trajectory action list.
Episode assemble_episode(std::vector<Frame> frames, const std::vector<Eigen::VectorXd>& trajectory_actions,
                         int c, double dt);

// Rounds every pixel onto the 8-bit grid used by PGM files.
Frame quantize(const Frame& frame);

// Binary PGM (P5, maxval 255), pixel byte = round(value * 255).
void write_pgm(const std::string& path, const Frame& frame);
Frame read_pgm(const std::string& path);

// Column centroid weighted by max(0, level - p). level = 1 weighs all darkness;
// a lower level isolates the darkest objects (car, cart). NaN for an empty frame.
double darkness_centroid_column(const Frame& frame, double level = 1.0);

}  // namespace cknet

#endif  // CKNET_RENDER_HPP
