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

#include "cknet/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>

#include "cknet/errors.hpp"

namespace cknet {

namespace {

constexpr double kBackground = 1.0;
constexpr double kGuide = 0.6;  // hill profile and track
constexpr double kBody = 0.0;   // car and cart
constexpr double kPole = 0.2;

struct Point {
    double x, y;
};

double segment_distance(Point p, Point a, Point b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = p.x - (a.x + t * dx), ey = p.y - (a.y + t * dy);
    return std::sqrt(ex * ex + ey * ey);
}

double hill_height(double x) { return 0.45 * std::sin(3.0 * x) + 0.55; }

// World to output-pixel coordinates (x right, y down).
struct Mapping {
    Viewport vp;
    int h, w;
    Point operator()(double x, double y) const {
        return {(x - vp.x_min) / (vp.x_max - vp.x_min) * w, (vp.y_max - y) / (vp.y_max - vp.y_min) * h};
    }
};

template <typename Shade>
Frame rasterize(const RenderConfig& cfg, Shade&& shade) {
    const int s = cfg.supersample;
    Frame out(cfg.h, cfg.w);
    const double norm = 1.0 / (s * s);
    for (int r = 0; r < cfg.h; ++r) {
        for (int c = 0; c < cfg.w; ++c) {
            double acc = 0.0;
            for (int i = 0; i < s; ++i) {
                for (int j = 0; j < s; ++j) {
                    const Point p{c + (j + 0.5) / s, r + (i + 0.5) / s};
                    acc += shade(p);
                }
            }
            out(r, c) = acc * norm;
        }
    }
    return out;
}

Frame render_mountain_car(const Eigen::VectorXd& state, const SystemSpec& spec, const RenderConfig& cfg,
                          const Mapping& map) {
    std::vector<Point> hill;
    hill.reserve(cfg.curve_samples);
    const double x_lo = spec.state_min[0], x_hi = spec.state_max[0];
    for (int i = 0; i < cfg.curve_samples; ++i) {
        const double x = x_lo + (x_hi - x_lo) * i / (cfg.curve_samples - 1);
        hill.push_back(map(x, hill_height(x)));
    }
    const double x = std::clamp(state[0], x_lo, x_hi);
    Point car = map(x, hill_height(x));
    car.y -= cfg.car_radius_px;  // rests on top of the profile
    const double half_line = 0.5 * cfg.line_width_px;
    const double r2 = cfg.car_radius_px * cfg.car_radius_px;

    return rasterize(cfg, [&](Point p) {
        const double dx = p.x - car.x, dy = p.y - car.y;
        if (dx * dx + dy * dy <= r2) return kBody;
        for (std::size_t i = 0; i + 1 < hill.size(); ++i) {
            if (segment_distance(p, hill[i], hill[i + 1]) <= half_line) return kGuide;
        }
        return kBackground;
    });
}

Frame render_cart_pole(const Eigen::VectorXd& state, const SystemSpec& spec, const RenderConfig& cfg,
                       const Mapping& map) {
    const Eigen::VectorXd s = clamp_to(state, spec.state_min, spec.state_max);
    const Point track_l = map(map.vp.x_min, 0.0);
    const Point track_r = map(map.vp.x_max, 0.0);
    const Point cart = map(s[0], 0.0);
    const double half_w = 0.5 * cfg.cart_width_px;
    const double cart_top = cart.y - cfg.cart_height_px;
    const Point pivot{cart.x, cart_top};
    const Point tip{pivot.x + cfg.pole_length_px * std::sin(s[2]), pivot.y - cfg.pole_length_px * std::cos(s[2])};
    const double half_line = 0.5 * cfg.line_width_px;
    const double half_pole = 0.5 * cfg.pole_width_px;

    return rasterize(cfg, [&](Point p) {
        if (p.x >= cart.x - half_w && p.x <= cart.x + half_w && p.y >= cart_top && p.y <= cart.y) return kBody;
        if (segment_distance(p, pivot, tip) <= half_pole) return kPole;
        if (std::abs(p.y - track_l.y) <= half_line && p.x >= track_l.x && p.x <= track_r.x) return kGuide;
        return kBackground;
    });
}

}  // namespace

void RenderConfig::validate() const {
    if (h < 8 || w < 8) throw ConfigError("render size must be at least 8x8");
    if (c < 1) throw ConfigError("stack depth must be >= 1");
    if (!(enhance_threshold > 0.0 && enhance_threshold <= 1.0)) {
        throw ConfigError("enhance threshold must lie in (0, 1]");
    }
    if (supersample < 1) throw ConfigError("supersample factor must be >= 1");
    if (!(car_radius_px > 0.0) || !(line_width_px > 0.0) || curve_samples < 2) {
        throw ConfigError("degenerate mountain-car geometry");
    }
    if (!(cart_width_px > 0.0) || !(cart_height_px > 0.0) || !(pole_length_px > 0.0) || !(pole_width_px > 0.0)) {
        throw ConfigError("degenerate cart-pole geometry");
    }
    if (viewport && !(viewport->x_min < viewport->x_max && viewport->y_min < viewport->y_max)) {
        throw ConfigError("empty viewport");
    }
}

Viewport default_viewport(SystemKind kind) {
    switch (kind) {
        case SystemKind::mountain_car: return {-1.2, 0.6, 0.0, 1.15};
        case SystemKind::cart_pole: return {-3.0, 3.0, -0.6, 1.4};
        case SystemKind::linear_ref: break;
    }
    throw ConfigError("no renderer for the linear reference system");
}

Frame Observation::channel(int j) const {
    if (j < 0 || j >= c) throw ShapeError("channel index out of range");
    Frame f(h, w);
    std::copy_n(pixels.data() + static_cast<Eigen::Index>(j) * h * w, h * w, f.data());
    return f;
}

Frame render_frame(const Eigen::VectorXd& state, const SystemSpec& spec, const RenderConfig& cfg) {
    cfg.validate();
    if (state.size() != spec.state_dim) throw ShapeError("state dimension does not match the system");
    const Mapping map{cfg.viewport.value_or(default_viewport(spec.kind)), cfg.h, cfg.w};
    switch (spec.kind) {
        case SystemKind::mountain_car: return render_mountain_car(state, spec, cfg, map);
        case SystemKind::cart_pole: return render_cart_pole(state, spec, cfg, map);
        case SystemKind::linear_ref: break;
    }
    throw ConfigError("no renderer for the linear reference system");
}

Frame enhance(const Frame& frame, double threshold) {
    return frame.unaryExpr([threshold](double v) { return v > threshold ? 1.0 : v; });
}

Observation stack_frames(const std::vector<Frame>& frames, int k, int c) {
    if (c < 1) throw ConfigError("stack depth must be >= 1");
    if (k < c - 1) throw InsufficientDataError("frame " + std::to_string(k) + " has fewer than " +
                                               std::to_string(c - 1) + " predecessors");
    if (k >= static_cast<int>(frames.size())) throw InsufficientDataError("frame index past the end");
    Observation obs;
    obs.c = c;
    obs.h = static_cast<int>(frames[k].rows());
    obs.w = static_cast<int>(frames[k].cols());
    obs.frame_index = k;
    const Eigen::Index plane = static_cast<Eigen::Index>(obs.h) * obs.w;
    obs.pixels.resize(plane * c);
    for (int j = 0; j < c; ++j) {
        const Frame& f = frames[k - c + 1 + j];
        if (f.rows() != obs.h || f.cols() != obs.w) throw ShapeError("frames differ in size");
        std::copy_n(f.data(), plane, obs.pixels.data() + j * plane);
    }
    return obs;
}

Observation Episode::observation(int j) const {
    if (j < 0 || j >= observation_count()) throw InsufficientDataError("observation index out of range");
    return stack_frames(frames, j + c - 1, c);
}

std::vector<Observation> Episode::observations() const {
    std::vector<Observation> out;
    out.reserve(std::max(0, observation_count()));
    for (int j = 0; j < observation_count(); ++j) out.push_back(observation(j));
    return out;
}

Episode assemble_episode(std::vector<Frame> frames, const std::vector<Eigen::VectorXd>& trajectory_actions,
                         int c, double dt) {
    if (static_cast<int>(frames.size()) < c) {
        throw InsufficientDataError("episode has " + std::to_string(frames.size()) + " frames, stack depth is " +
                                    std::to_string(c));
    }
    if (trajectory_actions.size() + 1 != frames.size()) throw ShapeError("need exactly one action per transition");
    Episode ep;
    ep.c = c;
    ep.dt = dt;
    ep.frames = std::move(frames);
    ep.actions.assign(trajectory_actions.begin() + (c - 1), trajectory_actions.end());
    return ep;
}

Episode render_episode(const Trajectory& traj, const SystemSpec& spec, const RenderConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(traj.states.size()) < cfg.c) {
        throw InsufficientDataError("trajectory shorter than the stack depth");
    }
    std::vector<Frame> frames;
    frames.reserve(traj.states.size());
    for (const auto& s : traj.states) {
        Frame f = render_frame(s, spec, cfg);
        frames.push_back(cfg.enhance ? enhance(f, cfg.enhance_threshold) : std::move(f));
    }
    return assemble_episode(std::move(frames), traj.actions, cfg.c, traj.dt);
}

Frame quantize(const Frame& frame) {
    return frame.unaryExpr([](double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; });
}

void write_pgm(const std::string& path, const Frame& frame) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P5\n" << frame.cols() << ' ' << frame.rows() << "\n255\n";
    std::vector<unsigned char> bytes(static_cast<std::size_t>(frame.size()));
    for (Eigen::Index i = 0; i < frame.size(); ++i) {
        bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(frame.data()[i], 0.0, 1.0) * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

Frame read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    auto token = [&]() {
        std::string t;
        char ch;
        while (in.get(ch)) {
            if (ch == '#') {
                std::string skip;
                std::getline(in, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(ch))) {
                if (!t.empty()) break;
                continue;
            }
            t.push_back(ch);
        }
        return t;
    };
    if (token() != "P5") throw IoError(path + ": not a binary PGM");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw IoError(path + ": malformed PGM header");
    }
    if (w <= 0 || h <= 0 || maxval != 255) throw IoError(path + ": unsupported PGM geometry or maxval");
    std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw IoError(path + ": truncated PGM");
    Frame f(h, w);
    for (std::size_t i = 0; i < bytes.size(); ++i) f.data()[i] = bytes[i] / 255.0;
    return f;
}

double darkness_centroid_column(const Frame& frame, double level) {
    double mass = 0.0, moment = 0.0;
    for (Eigen::Index r = 0; r < frame.rows(); ++r) {
        for (Eigen::Index c = 0; c < frame.cols(); ++c) {
            const double d = std::max(0.0, level - frame(r, c));
            mass += d;
            moment += d * static_cast<double>(c);
        }
    }
    return mass > 0.0 ? moment / mass : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace cknet
