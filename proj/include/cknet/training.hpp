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

#ifndef CKNET_TRAINING_HPP
#define CKNET_TRAINING_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cknet/koopman.hpp"
#include "cknet/netcore.hpp"
#include "cknet/render.hpp"

namespace cknet {

/// Hyper-parameters of the CKNet objective and optimizer.
///
/// Defaults are the MountainCar column of the Gym setting; desk-scale runs
/// override latent_dim, horizons, learning rate and network widths.
struct TrainConfig {
    double alpha1 = 0.3;   // linearity
    double alpha2 = 1.0;   // reconstruction
    double alpha3 = 1.0;   // prediction
    double alpha4 = 5e-7;  // l2
    double tau_l = 0.0;
    double tau_p = 0.0;
    int p = 25;    // reconstruction horizon
    int p_l = 25;  // linearity horizon
    int p_p = 25;  // prediction horizon
    int latent_dim = 32;
    int c = 3;
    int c_out = 3;
    double lr = 1e-4;
    int batch_size = 32;
    int epochs = 1000;  // total epochs, counted across resumed runs
    std::uint64_t seed = 0;
    LatentMode mode = LatentMode::deterministic;
    int rank_check_interval = 1;
    HeadActivation head = HeadActivation::none;
    int conv1_channels = 8;
    int conv2_channels = 16;
    int hidden = 64;

    int horizon() const { return std::max({p, p_l, p_p}); }
    void validate() const;
    ArchitectureConfig architecture(int h, int w) const;
};

struct LossBreakdown {
    double linear = 0.0;
    double recon = 0.0;
    double pred = 0.0;
    double l2 = 0.0;
    double total = 0.0;
};

// 1 + tanh(tau * i)
double aux_weight(double tau, int i);

/// One training sequence: observations x_0..x_L as columns and actions u_0..u_{L-1}.
struct Window {
    Eigen::MatrixXd observations;
    Eigen::MatrixXd actions;

    int length() const { return static_cast<int>(observations.cols()) - 1; }
};

Window make_window(const Episode& episode, int offset, int length);

// Decoder targets: every channel when c_out == c, the newest channel when c_out == 1.
Eigen::MatrixXd decoder_targets(const Eigen::MatrixXd& observations, int c, int c_out);

// Individual terms, batch-averaged, using eval-mode latents (variational means).
double linearity_loss(const KoopmanModel& model, const std::vector<Window>& batch, double tau_l, int p_l);
double reconstruction_loss(const KoopmanModel& model, const std::vector<Window>& batch, int p, int c, int c_out);
double prediction_loss(const KoopmanModel& model, const std::vector<Window>& batch, double tau_p, int p_p, int c,
                       int c_out);
// Sum of squares over encoder, decoder, A and B.
double l2_penalty(const KoopmanModel& model);

struct LossEvaluation {
    LossBreakdown loss;
    Eigen::VectorXd gradient;  // d total / d theta in KoopmanModel::flat_parameters() order; empty if not requested
};

/**
 * @brief Full objective with its reverse-mode gradient.
 *
 * `noise` holds one latent-sized column per (step, window) pair with column
 * index step * batch.size() + window; it is required in variational mode and
 * ignored otherwise. Pass nullptr in variational mode to use the means.
 */
LossEvaluation evaluate_loss(const KoopmanModel& model, const std::vector<Window>& batch, const TrainConfig& cfg,
                             const Eigen::MatrixXd* noise, bool with_gradient);

// Combines precomputed terms with the configured weights.
LossBreakdown total_loss(const LossBreakdown& terms, const TrainConfig& cfg);
LossBreakdown total_loss(const KoopmanModel& model, const std::vector<Window>& batch, const TrainConfig& cfg);

struct TrainLogEntry {
    int epoch = 0;
    LossBreakdown loss;
    int rank = 0;  // controllability rank at the most recent check
};

struct TrainState {
    KoopmanModel model;
    AdamState adam;
    int epoch = 0;  // epochs completed
};

// A = 0.99 I + U(-0.01, 0.01), B = U(-0.01, 0.01), Glorot networks.
KoopmanModel init_model(const TrainConfig& cfg, const Shape3& observation, int action_dim, double dt);

struct SequenceDataset {
    std::vector<Episode> episodes;
    // Frames are n x 1 state vectors with c = 1; the model sees (n, 1, 1) inputs
    // and training uses c = c_out = n.
    bool vector_observations = false;

    // (episode, offset) pairs whose windows of `length` transitions fit.
    std::vector<std::pair<int, int>> window_index(int length) const;
};

using TrainCallback = std::function<void(const TrainLogEntry&)>;

/// Mini-batch training: per epoch draw batch_size windows uniformly with
/// replacement, evaluate the objective and take one Adam step. Randomness for
/// epoch e is derived from (seed, e) alone, so resuming reproduces an
/// uninterrupted run. Throws NumericalError on a non-finite loss.
TrainState train(const SequenceDataset& data, const TrainConfig& cfg, std::optional<TrainState> resume,
                 std::vector<TrainLogEntry>& log, const TrainCallback& on_epoch = {});

void write_train_log_csv(const std::string& path, const std::vector<TrainLogEntry>& log);
std::vector<TrainLogEntry> read_train_log_csv(const std::string& path);

}  // namespace cknet

#endif  // CKNET_TRAINING_HPP
