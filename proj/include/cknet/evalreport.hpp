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

#ifndef CKNET_EVALREPORT_HPP
#define CKNET_EVALREPORT_HPP

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cknet/koopman.hpp"
#include "cknet/render.hpp"

namespace cknet {

struct MaeCurve {
    Eigen::VectorXd curve;  // entry t-1 is step t
    int episodes_used = 0;
    int excluded = 0;  // episodes with fewer than T + 1 observations
};

/// Latent evolution error: for t = 1..T, the mean over usable episodes and
/// latent coordinates of |A-rollout of phi(x_0) - phi(x_t)| using the recorded
/// actions. Short episodes are skipped and counted; none usable throws
/// InsufficientDataError. Episodes are evaluated in parallel and reduced in order.
MaeCurve latent_mae(const KoopmanModel& model, const std::vector<Episode>& episodes, int T);

// Mean square pixel error of decoded rollouts against the decoder targets, steps 1..T.
MaeCurve pixel_mse(const KoopmanModel& model, const std::vector<Episode>& episodes, int T);

struct EvalReport {
    Eigen::VectorXd latent_mae;
    Eigen::VectorXd pixel_mse;
    int episodes_used = 0;
    int excluded = 0;
    std::string model_id;
    std::string spectrum_csv;
};

EvalReport evaluate(const KoopmanModel& model, const std::vector<Episode>& episodes, int T,
                    const std::string& model_id = {});

/// decode(rollout(encode(x_0), u_0..u_{T-1})) for steps 0..T. Each frame is the
/// newest decoded channel; vector models give n x 1 frames.
std::vector<Frame> rollout_images(const KoopmanModel& model, const Episode& episode, int T);

// Writes frame_0000.pgm, frame_0001.pgm, ... into dir (created if missing).
void write_frame_series(const std::string& dir, const std::vector<Frame>& frames);

// Koopman eigenfunction values along the encoded episode: one row per mode, one column per step.
Eigen::MatrixXcd eigen_traces(const KoopmanModel& model, const Episode& episode);

// Columns step, mode, re, im.
void write_eigen_traces_csv(const std::string& path, const Eigen::MatrixXcd& traces);
Eigen::MatrixXcd read_eigen_traces_csv(const std::string& path);

// Columns step, latent_mae, pixel_mse (steps 1..T).
void write_eval_csv(const std::string& path, const EvalReport& report);

// Minimal SVG line chart, one polyline per named series over x = 1..n.
std::string svg_line_plot(const std::vector<std::pair<std::string, Eigen::VectorXd>>& series, const std::string& title,
                          int width = 640, int height = 400);
void write_svg_line_plot(const std::string& path, const std::vector<std::pair<std::string, Eigen::VectorXd>>& series,
                         const std::string& title);

}  // namespace cknet

#endif  // CKNET_EVALREPORT_HPP
