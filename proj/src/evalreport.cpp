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

#include "cknet/evalreport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cknet/csv.hpp"
#include "cknet/errors.hpp"
#include "cknet/parallel.hpp"
#include "cknet/training.hpp"

namespace cknet {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int decoded_channels(const KoopmanModel& model) {
    const Shape3 in = model.encoder.input_shape();
    return in.h == 1 && in.w == 1 ? 1 : in.c;
}

int target_channels(const KoopmanModel& model) {
    const Shape3 in = model.encoder.input_shape();
    return in.h == 1 && in.w == 1 ? 1 : model.decoder.output_shape().c;
}

// Encoded observations 0..T (columns) and the matching latent rollout.
struct EpisodeRollout {
    MatrixXd observed;   // obs rows x (T + 1)
    MatrixXd latents;    // v x (T + 1)
    MatrixXd predicted;  // v x (T + 1), column 0 = latents.col(0)
};

EpisodeRollout roll_episode(const KoopmanModel& model, const Episode& ep, int T) {
    EpisodeRollout r;
    std::vector<Observation> obs;
    obs.reserve(T + 1);
    for (int j = 0; j <= T; ++j) obs.push_back(ep.observation(j));
    r.observed = to_batch(obs);
    r.latents = encode(model, r.observed);
    r.predicted.resize(r.latents.rows(), T + 1);
    r.predicted.col(0) = r.latents.col(0);
    for (int t = 1; t <= T; ++t) r.predicted.col(t) = model.A * r.predicted.col(t - 1) + model.B * ep.actions.at(t - 1);
    return r;
}

template <class PerEpisode>
MaeCurve reduce_curves(const std::vector<Episode>& episodes, int T, PerEpisode per_episode) {
    if (T < 1) throw ConfigError("horizon must be >= 1");
    std::vector<int> usable;
    for (std::size_t e = 0; e < episodes.size(); ++e) {
        if (episodes[e].observation_count() >= T + 1) usable.push_back(static_cast<int>(e));
    }
    MaeCurve out;
    out.excluded = static_cast<int>(episodes.size() - usable.size());
    out.episodes_used = static_cast<int>(usable.size());
    if (usable.empty()) throw InsufficientDataError("no episode has " + std::to_string(T + 1) + " observations");
    if (out.excluded > 0) {
        std::cerr << "warning: " << out.excluded << " episode(s) shorter than " << T + 1 << " observations skipped\n";
    }
    std::vector<VectorXd> curves(usable.size());
    parallel_for(usable.size(), [&](std::size_t i) { curves[i] = per_episode(episodes[usable[i]]); });
    out.curve = VectorXd::Zero(T);
    for (const auto& c : curves) out.curve += c;
    out.curve /= static_cast<double>(usable.size());
    return out;
}

}  // namespace

MaeCurve latent_mae(const KoopmanModel& model, const std::vector<Episode>& episodes, int T) {
    model.validate();
    return reduce_curves(episodes, T, [&](const Episode& ep) {
        const EpisodeRollout r = roll_episode(model, ep, T);
        VectorXd c(T);
        for (int t = 1; t <= T; ++t) c[t - 1] = (r.predicted.col(t) - r.latents.col(t)).cwiseAbs().mean();
        return c;
    });
}

MaeCurve pixel_mse(const KoopmanModel& model, const std::vector<Episode>& episodes, int T) {
    model.validate();
    const int c = decoded_channels(model);
    const int c_out = target_channels(model);
    return reduce_curves(episodes, T, [&](const Episode& ep) {
        const EpisodeRollout r = roll_episode(model, ep, T);
        const MatrixXd decoded = decode(model, r.predicted.rightCols(T));
        const MatrixXd targets = decoder_targets(r.observed.rightCols(T), c, c_out);
        VectorXd out(T);
        for (int t = 0; t < T; ++t) out[t] = (decoded.col(t) - targets.col(t)).squaredNorm() / decoded.rows();
        return out;
    });
}

EvalReport evaluate(const KoopmanModel& model, const std::vector<Episode>& episodes, int T, const std::string& model_id) {
    EvalReport rep;
    const MaeCurve mae = latent_mae(model, episodes, T);
    rep.latent_mae = mae.curve;
    rep.pixel_mse = pixel_mse(model, episodes, T).curve;
    rep.episodes_used = mae.episodes_used;
    rep.excluded = mae.excluded;
    rep.model_id = model_id;
    return rep;
}

std::vector<Frame> rollout_images(const KoopmanModel& model, const Episode& episode, int T) {
    model.validate();
    if (T < 0) throw ConfigError("horizon must be >= 0");
    if (episode.observation_count() < 1 || static_cast<int>(episode.actions.size()) < T) {
        throw InsufficientDataError("episode has fewer than " + std::to_string(T) + " actions");
    }
    const VectorXd phi0 = encode(model, episode.observation(0).pixels);
    MatrixXd z(phi0.size(), T + 1);
    z.col(0) = phi0;
    for (int t = 1; t <= T; ++t) z.col(t) = model.A * z.col(t - 1) + model.B * episode.actions[t - 1];
    const MatrixXd decoded = decode(model, z);
    const Shape3 out = model.decoder.output_shape();
    const Shape3 in = model.encoder.input_shape();
    const bool vector = in.h == 1 && in.w == 1;
    const int h = vector ? static_cast<int>(decoded.rows()) : out.h;
    const int w = vector ? 1 : out.w;
    const Index plane = static_cast<Index>(h) * w;
    std::vector<Frame> frames;
    frames.reserve(T + 1);
    for (int t = 0; t <= T; ++t) {
        Frame f(h, w);
        std::copy_n(decoded.col(t).data() + decoded.rows() - plane, plane, f.data());
        frames.push_back(std::move(f));
    }
    return frames;
}

void write_frame_series(const std::string& dir, const std::vector<Frame>& frames) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    for (std::size_t k = 0; k < frames.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04d.pgm", static_cast<int>(k));
        write_pgm((std::filesystem::path(dir) / name).string(), frames[k]);
    }
}

Eigen::MatrixXcd eigen_traces(const KoopmanModel& model, const Episode& episode) {
    model.validate();
    const SpectralReport report = spectrum(model.A, model.dt);
    return eigenfunctions(report, encode(model, to_batch(episode.observations())));
}

void write_eigen_traces_csv(const std::string& path, const Eigen::MatrixXcd& traces) {
    NumericTable t;
    t.header = {"step", "mode", "re", "im"};
    for (Index k = 0; k < traces.cols(); ++k) {
        for (Index m = 0; m < traces.rows(); ++m) {
            t.rows.push_back({static_cast<double>(k), static_cast<double>(m), traces(m, k).real(), traces(m, k).imag()});
        }
    }
    write_numeric_csv(path, t);
}

Eigen::MatrixXcd read_eigen_traces_csv(const std::string& path) {
    const NumericTable t = read_numeric_csv(path);
    if (t.header != std::vector<std::string>{"step", "mode", "re", "im"}) throw IoError(path + ": not an eigen trace file");
    Index steps = 0, modes = 0;
    for (const auto& r : t.rows) {
        steps = std::max(steps, static_cast<Index>(r[0]) + 1);
        modes = std::max(modes, static_cast<Index>(r[1]) + 1);
    }
    if (static_cast<std::size_t>(steps * modes) != t.rows.size()) throw IoError(path + ": incomplete trace table");
    Eigen::MatrixXcd out(modes, steps);
    for (const auto& r : t.rows) out(static_cast<Index>(r[1]), static_cast<Index>(r[0])) = {r[2], r[3]};
    return out;
}

void write_eval_csv(const std::string& path, const EvalReport& report) {
    NumericTable t;
    t.header = {"step", "latent_mae", "pixel_mse"};
    for (Index i = 0; i < report.latent_mae.size(); ++i) {
        const double px = i < report.pixel_mse.size() ? report.pixel_mse[i] : std::nan("");
        t.rows.push_back({static_cast<double>(i + 1), report.latent_mae[i], px});
    }
    write_numeric_csv(path, t);
}

std::string svg_line_plot(const std::vector<std::pair<std::string, VectorXd>>& series, const std::string& title,
                          int width, int height) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    const double left = 60, right = 20, top = 40, bottom = 40;
    Index n = 1;
    double y_max = 0.0;
    for (const auto& [name, v] : series) {
        n = std::max(n, v.size());
        for (Index i = 0; i < v.size(); ++i) {
            if (std::isfinite(v[i])) y_max = std::max(y_max, v[i]);
        }
    }
    if (y_max <= 0.0) y_max = 1.0;
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](Index i) { return left + (n > 1 ? pw * static_cast<double>(i) / (n - 1) : 0.0); };
    auto py = [&](double y) { return top + ph * (1.0 - y / y_max); };
    auto escape = [](const std::string& s) {
        std::string o;
        for (char ch : s) {
            if (ch == '<') o += "&lt;";
            else if (ch == '>') o += "&gt;";
            else if (ch == '&') o += "&amp;";
            else o += ch;
        }
        return o;
    };
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title)
      << "</text>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
      << format_double(y_max) << "</text>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << top + ph << "\" text-anchor=\"end\" font-size=\"11\">0</text>\n";
    o << "<text x=\"" << left + pw << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"end\" font-size=\"11\">" << n
      << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& [name, v] = series[s];
        const char* color = colors[s % 6];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (Index i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i])) continue;
            o << px(i) << "," << py(v[i]) << (i + 1 < v.size() ? " " : "");
        }
        o << "\"/>\n";
        o << "<text x=\"" << left + 10 << "\" y=\"" << top + 14 * (s + 1) << "\" font-size=\"12\" fill=\"" << color
          << "\">" << escape(name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void write_svg_line_plot(const std::string& path, const std::vector<std::pair<std::string, VectorXd>>& series,
                         const std::string& title) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f << svg_line_plot(series, title);
}

}  // namespace cknet
