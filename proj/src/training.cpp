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

#include "cknet/training.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "cknet/csv.hpp"
#include "cknet/errors.hpp"

namespace cknet {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void TrainConfig::validate() const {
    if (p < 1 || p_l < 1 || p_p < 1) throw ConfigError("horizons p, p_l, p_p must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (tau_l < 0.0 || tau_p < 0.0) throw ConfigError("tau_l and tau_p must be >= 0");
    if (alpha1 < 0.0 || alpha2 < 0.0 || alpha3 < 0.0 || alpha4 < 0.0) throw ConfigError("loss weights must be >= 0");
    if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (c < 1) throw ConfigError("c must be >= 1");
    if (c_out != c && c_out != 1) throw ConfigError("c_out must equal c or 1");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (rank_check_interval < 1) throw ConfigError("rank_check_interval must be >= 1");
}

ArchitectureConfig TrainConfig::architecture(int h, int w) const {
    ArchitectureConfig a;
    a.c = c;
    a.h = h;
    a.w = w;
    a.c_out = c_out;
    a.latent_dim = latent_dim;
    a.mode = mode;
    a.head = head;
    a.conv1_channels = conv1_channels;
    a.conv2_channels = conv2_channels;
    a.hidden = hidden;
    return a;
}

double aux_weight(double tau, int i) {
    if (tau < 0.0) throw ConfigError("tau must be >= 0");
    if (i < 1) throw ConfigError("step index must be >= 1");
    // 1 + tanh(x) = 2 - 2 / (exp(2x) + 1); rounded down so the result stays below 2.
    const double v = 1.0 + std::tanh(tau * i);
    return std::min(v, std::nextafter(2.0, 0.0));
}

Window make_window(const Episode& episode, int offset, int length) {
    if (offset < 0 || length < 1 || offset + length >= episode.observation_count()) {
        throw InsufficientDataError("window [" + std::to_string(offset) + ", +" + std::to_string(length) +
                                    "] exceeds the episode");
    }
    Window w;
    const Observation first = episode.observation(offset);
    w.observations.resize(first.pixels.size(), length + 1);
    for (int i = 0; i <= length; ++i) w.observations.col(i) = episode.observation(offset + i).pixels;
    const Index n = episode.actions.at(offset).size();
    w.actions.resize(n, length);
    for (int i = 0; i < length; ++i) w.actions.col(i) = episode.actions.at(offset + i);
    return w;
}

MatrixXd decoder_targets(const MatrixXd& observations, int c, int c_out) {
    if (c_out == c) return observations;
    if (c_out != 1) throw ConfigError("c_out must equal c or 1");
    if (observations.rows() % c != 0) throw ShapeError("observation size is not a multiple of c");
    const Index plane = observations.rows() / c;
    return observations.bottomRows(plane);
}

namespace {

void check_batch(const std::vector<Window>& batch, int needed, const KoopmanModel& model) {
    if (batch.empty()) throw InsufficientDataError("empty batch");
    for (const auto& w : batch) {
        if (w.length() < needed) {
            throw InsufficientDataError("window of length " + std::to_string(w.length()) + " is shorter than " +
                                        std::to_string(needed));
        }
        if (w.actions.rows() != model.action_dim() || w.actions.cols() < needed) {
            throw ShapeError("window actions do not match the model");
        }
    }
}

// Columns i * batch + b for steps 0..steps-1.
MatrixXd gather_steps(const std::vector<Window>& batch, int steps) {
    const Index b = static_cast<Index>(batch.size());
    MatrixXd out(batch.front().observations.rows(), steps * b);
    for (int i = 0; i < steps; ++i) {
        for (Index j = 0; j < b; ++j) out.col(i * b + j) = batch[j].observations.col(i);
    }
    return out;
}

MatrixXd actions_at(const std::vector<Window>& batch, int step) {
    MatrixXd u(batch.front().actions.rows(), static_cast<Index>(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) u.col(static_cast<Index>(j)) = batch[j].actions.col(step);
    return u;
}

// Latent columns for steps 0..steps-1 with eval-mode encoding.
MatrixXd eval_latents(const KoopmanModel& model, const std::vector<Window>& batch, int steps) {
    return encode(model, gather_steps(batch, steps));
}

// Z_i = A Z_{i-1} + B U_{i-1}, i = 1..steps; returns [Z_0 ... Z_steps].
std::vector<MatrixXd> rollout_batch(const KoopmanModel& model, const MatrixXd& z0, const std::vector<Window>& batch,
                                    int steps) {
    std::vector<MatrixXd> z;
    z.reserve(steps + 1);
    z.push_back(z0);
    for (int i = 1; i <= steps; ++i) z.push_back(model.A * z.back() + model.B * actions_at(batch, i - 1));
    return z;
}

}  // namespace

double linearity_loss(const KoopmanModel& model, const std::vector<Window>& batch, double tau_l, int p_l) {
    check_batch(batch, p_l, model);
    const Index b = static_cast<Index>(batch.size());
    const MatrixXd phi = eval_latents(model, batch, p_l + 1);
    const auto z = rollout_batch(model, phi.leftCols(b), batch, p_l);
    double sum = 0.0;
    for (int i = 1; i <= p_l; ++i) sum += aux_weight(tau_l, i) * (phi.middleCols(i * b, b) - z[i]).squaredNorm();
    return sum / (static_cast<double>(p_l) * b);
}

double reconstruction_loss(const KoopmanModel& model, const std::vector<Window>& batch, int p, int c, int c_out) {
    check_batch(batch, p, model);
    const Index b = static_cast<Index>(batch.size());
    const MatrixXd x = gather_steps(batch, p + 1);
    const MatrixXd recon = decode(model, encode(model, x));
    return (decoder_targets(x, c, c_out) - recon).squaredNorm() / (static_cast<double>(p + 1) * b);
}

double prediction_loss(const KoopmanModel& model, const std::vector<Window>& batch, double tau_p, int p_p, int c,
                       int c_out) {
    check_batch(batch, p_p, model);
    const Index b = static_cast<Index>(batch.size());
    const MatrixXd x = gather_steps(batch, p_p + 1);
    const auto z = rollout_batch(model, encode(model, x.leftCols(b)), batch, p_p);
    const MatrixXd targets = decoder_targets(x, c, c_out);
    double sum = 0.0;
    for (int i = 1; i <= p_p; ++i) {
        sum += aux_weight(tau_p, i) * (targets.middleCols(i * b, b) - decode(model, z[i])).squaredNorm();
    }
    return sum / (static_cast<double>(p_p) * b);
}

double l2_penalty(const KoopmanModel& model) {
    return model.encoder.parameters().squaredNorm() + model.decoder.parameters().squaredNorm() +
           model.A.squaredNorm() + model.B.squaredNorm();
}

LossBreakdown total_loss(const LossBreakdown& terms, const TrainConfig& cfg) {
    LossBreakdown out = terms;
    out.total = cfg.alpha1 * terms.linear + cfg.alpha2 * terms.recon + cfg.alpha3 * terms.pred + cfg.alpha4 * terms.l2;
    return out;
}

LossBreakdown total_loss(const KoopmanModel& model, const std::vector<Window>& batch, const TrainConfig& cfg) {
    return evaluate_loss(model, batch, cfg, nullptr, false).loss;
}

LossEvaluation evaluate_loss(const KoopmanModel& model, const std::vector<Window>& batch, const TrainConfig& cfg,
                             const MatrixXd* noise, bool with_gradient) {
    cfg.validate();
    model.validate();
    const int ms = cfg.horizon();
    check_batch(batch, ms, model);
    const Index b = static_cast<Index>(batch.size());
    const Index v = model.latent_dim();
    const int steps = ms + 1;
    const bool sampled = model.mode == LatentMode::variational && noise != nullptr;
    if (sampled && (noise->rows() != v || noise->cols() != steps * b)) {
        throw ShapeError("noise must be latent_dim x (horizon + 1) * batch");
    }

    // Encode every observation of every window.
    const MatrixXd x = gather_steps(batch, steps);
    const MatrixXd targets = decoder_targets(x, cfg.c, cfg.c_out);
    const ForwardCache enc = model.encoder.forward(x);
    const MatrixXd& head = enc.output();
    MatrixXd phi;
    MatrixXd sigma;  // exp(log_var / 2), sampled mode only
    if (model.mode == LatentMode::variational) {
        phi = head.topRows(v);
        if (sampled) {
            sigma = (0.5 * head.bottomRows(v).array()).exp().matrix();
            phi.array() += sigma.array() * noise->array();
        }
    } else {
        phi = head;
    }

    // Latent rollout from phi(x_0).
    const int k_roll = std::max(cfg.p_l, cfg.p_p);
    std::vector<MatrixXd> u(k_roll);
    for (int i = 0; i < k_roll; ++i) u[i] = actions_at(batch, i);
    std::vector<MatrixXd> z(k_roll + 1);
    z[0] = phi.leftCols(b);
    for (int i = 1; i <= k_roll; ++i) z[i] = model.A * z[i - 1] + model.B * u[i - 1];

    // One decoder pass: reconstructions of steps 0..p, then predictions of steps 1..p_p.
    const Index n_rec = (cfg.p + 1) * b;
    const Index n_pred = cfg.p_p * b;
    MatrixXd dec_in(v, n_rec + n_pred);
    dec_in.leftCols(n_rec) = phi.leftCols(n_rec);
    for (int i = 1; i <= cfg.p_p; ++i) dec_in.middleCols(n_rec + (i - 1) * b, b) = z[i];
    const ForwardCache dec = model.decoder.forward(dec_in);
    const MatrixXd& out = dec.output();

    LossEvaluation res;
    const double inv_b = 1.0 / static_cast<double>(b);
    MatrixXd d_out;
    if (with_gradient) d_out.resize(out.rows(), out.cols());

    // Reconstruction.
    {
        const MatrixXd diff = out.leftCols(n_rec) - targets.leftCols(n_rec);
        const double scale = inv_b / (cfg.p + 1);
        res.loss.recon = diff.squaredNorm() * scale;
        if (with_gradient) d_out.leftCols(n_rec) = (2.0 * cfg.alpha2 * scale) * diff;
    }
    // Prediction.
    for (int i = 1; i <= cfg.p_p; ++i) {
        const Index col = n_rec + (i - 1) * b;
        const MatrixXd diff = out.middleCols(col, b) - targets.middleCols(i * b, b);
        const double w = aux_weight(cfg.tau_p, i) * inv_b / cfg.p_p;
        res.loss.pred += w * diff.squaredNorm();
        if (with_gradient) d_out.middleCols(col, b) = (2.0 * cfg.alpha3 * w) * diff;
    }
    // Linearity.
    std::vector<MatrixXd> dz;
    MatrixXd d_phi;
    if (with_gradient) {
        dz.assign(k_roll + 1, MatrixXd::Zero(v, b));
        d_phi = MatrixXd::Zero(v, phi.cols());
    }
    for (int i = 1; i <= cfg.p_l; ++i) {
        const MatrixXd diff = phi.middleCols(i * b, b) - z[i];
        const double w = aux_weight(cfg.tau_l, i) * inv_b / cfg.p_l;
        res.loss.linear += w * diff.squaredNorm();
        if (with_gradient) {
            d_phi.middleCols(i * b, b) += (2.0 * cfg.alpha1 * w) * diff;
            dz[i] -= (2.0 * cfg.alpha1 * w) * diff;
        }
    }
    res.loss.l2 = l2_penalty(model);
    res.loss = total_loss(res.loss, cfg);
    if (!with_gradient) return res;

    // Decoder backward.
    const Gradients g_dec = model.decoder.backward(dec, d_out);
    d_phi.leftCols(n_rec) += g_dec.input.leftCols(n_rec);
    for (int i = 1; i <= cfg.p_p; ++i) dz[i] += g_dec.input.middleCols(n_rec + (i - 1) * b, b);

    // Back-propagation through the rollout.
    MatrixXd g_a = MatrixXd::Zero(v, v);
    MatrixXd g_b = MatrixXd::Zero(v, model.action_dim());
    MatrixXd carry = MatrixXd::Zero(v, b);
    for (int i = k_roll; i >= 1; --i) {
        const MatrixXd g = dz[i] + carry;
        g_a.noalias() += g * z[i - 1].transpose();
        g_b.noalias() += g * u[i - 1].transpose();
        carry.noalias() = model.A.transpose() * g;
    }
    d_phi.leftCols(b) += carry;

    // Encoder backward.
    MatrixXd d_head;
    if (model.mode == LatentMode::variational) {
        d_head = MatrixXd::Zero(2 * v, phi.cols());
        d_head.topRows(v) = d_phi;
        if (sampled) d_head.bottomRows(v) = 0.5 * (d_phi.array() * sigma.array() * noise->array()).matrix();
    } else {
        d_head = std::move(d_phi);
    }
    const Gradients g_enc = model.encoder.backward(enc, d_head);

    res.gradient.resize(model.parameter_count());
    Index o = 0;
    res.gradient.segment(o, model.encoder.parameter_count()) = g_enc.parameters;
    o += model.encoder.parameter_count();
    res.gradient.segment(o, model.decoder.parameter_count()) = g_dec.parameters;
    o += model.decoder.parameter_count();
    res.gradient.segment(o, g_a.size()) = g_a.reshaped();
    o += g_a.size();
    res.gradient.segment(o, g_b.size()) = g_b.reshaped();
    res.gradient += (2.0 * cfg.alpha4) * model.flat_parameters();
    return res;
}

KoopmanModel init_model(const TrainConfig& cfg, const Shape3& observation, int action_dim, double dt) {
    cfg.validate();
    if (observation.c != cfg.c) throw ConfigError("observation channels do not match c");
    if (action_dim < 1) throw ConfigError("action_dim must be >= 1");
    KoopmanModel m;
    const ArchitectureConfig arch = cfg.architecture(observation.h, observation.w);
    m.encoder = build_encoder(arch);
    m.decoder = build_decoder(arch);
    m.mode = cfg.mode;
    m.dt = dt;
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), 0x1417u};
    std::mt19937_64 rng(seq);
    m.encoder.initialize(rng());
    m.decoder.initialize(rng());
    std::uniform_real_distribution<double> small(-0.01, 0.01);
    const int v = cfg.latent_dim;
    m.A = 0.99 * MatrixXd::Identity(v, v);
    for (Index j = 0; j < m.A.size(); ++j) m.A.data()[j] += small(rng);
    m.B.resize(v, action_dim);
    for (Index j = 0; j < m.B.size(); ++j) m.B.data()[j] = small(rng);
    return m;
}

std::vector<std::pair<int, int>> SequenceDataset::window_index(int length) const {
    std::vector<std::pair<int, int>> out;
    for (std::size_t e = 0; e < episodes.size(); ++e) {
        const int last = episodes[e].observation_count() - 1 - length;
        for (int o = 0; o <= last; ++o) out.emplace_back(static_cast<int>(e), o);
    }
    return out;
}

TrainState train(const SequenceDataset& data, const TrainConfig& user_cfg, std::optional<TrainState> resume,
                 std::vector<TrainLogEntry>& log, const TrainCallback& on_epoch) {
    user_cfg.validate();
    if (data.episodes.empty()) throw InsufficientDataError("empty dataset");
    const Episode& first = data.episodes.front();
    if (first.observation_count() < 1 || first.actions.empty()) throw InsufficientDataError("first episode is empty");
    const Observation probe = first.observation(0);
    TrainConfig cfg = user_cfg;
    Shape3 obs_shape{probe.c, probe.h, probe.w};
    if (data.vector_observations) {
        obs_shape = Shape3{static_cast<int>(probe.pixels.size()), 1, 1};
        cfg.c = cfg.c_out = obs_shape.c;
    }
    const int action_dim = static_cast<int>(first.actions.front().size());
    const int ms = cfg.horizon();
    const auto index = data.window_index(ms);
    if (index.empty()) {
        throw InsufficientDataError("no episode is long enough for windows of " + std::to_string(ms) + " steps");
    }

    TrainState state = resume ? std::move(*resume) : TrainState{init_model(cfg, obs_shape, action_dim, first.dt), {}, 0};
    state.model.validate();
    if (state.model.mode != cfg.mode || state.model.latent_dim() != cfg.latent_dim) {
        throw ConfigError("resumed model does not match the configured mode/latent_dim");
    }
    if (state.model.encoder.input_shape() != obs_shape) throw ConfigError("dataset observations do not match the model");

    VectorXd theta = state.model.flat_parameters();
    int rank = controllability(state.model).rank;
    const Index v = cfg.latent_dim;
    const Index noise_cols = static_cast<Index>(ms + 1) * cfg.batch_size;

    for (int epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(epoch), 0x7a11u};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<std::size_t> pick(0, index.size() - 1);
        std::vector<Window> batch;
        batch.reserve(cfg.batch_size);
        for (int j = 0; j < cfg.batch_size; ++j) {
            const auto [e, o] = index[pick(rng)];
            batch.push_back(make_window(data.episodes[e], o, ms));
        }
        MatrixXd noise;
        if (cfg.mode == LatentMode::variational) {
            std::normal_distribution<double> normal(0.0, 1.0);
            noise.resize(v, noise_cols);
            for (Index j = 0; j < noise.size(); ++j) noise.data()[j] = normal(rng);
        }

        const LossEvaluation ev =
            evaluate_loss(state.model, batch, cfg, cfg.mode == LatentMode::variational ? &noise : nullptr, true);
        if (!std::isfinite(ev.loss.total) || !ev.gradient.allFinite()) {
            std::ostringstream msg;
            msg << "non-finite loss at epoch " << epoch << ": linear=" << ev.loss.linear << " recon=" << ev.loss.recon
                << " pred=" << ev.loss.pred << " l2=" << ev.loss.l2;
            throw NumericalError(msg.str());
        }
        if (epoch % cfg.rank_check_interval == 0) rank = controllability(state.model).rank;
        TrainLogEntry entry{epoch, ev.loss, rank};
        log.push_back(entry);
        if (on_epoch) on_epoch(entry);

        adam_step(theta, ev.gradient, state.adam, cfg.lr);
        state.model.set_flat_parameters(theta);
        state.epoch = epoch + 1;
    }
    return state;
}

void write_train_log_csv(const std::string& path, const std::vector<TrainLogEntry>& log) {
    NumericTable t;
    t.header = {"epoch", "L_linear", "L_recon", "L_pred", "l2", "total", "rank"};
    for (const auto& e : log) {
        t.rows.push_back({static_cast<double>(e.epoch), e.loss.linear, e.loss.recon, e.loss.pred, e.loss.l2,
                          e.loss.total, static_cast<double>(e.rank)});
    }
    write_numeric_csv(path, t);
}

std::vector<TrainLogEntry> read_train_log_csv(const std::string& path) {
    const NumericTable t = read_numeric_csv(path);
    if (t.header != std::vector<std::string>{"epoch", "L_linear", "L_recon", "L_pred", "l2", "total", "rank"}) {
        throw IoError(path + ": not a training log");
    }
    std::vector<TrainLogEntry> log;
    for (const auto& r : t.rows) {
        TrainLogEntry e;
        e.epoch = static_cast<int>(r[0]);
        e.loss = {r[1], r[2], r[3], r[4], r[5]};
        e.rank = static_cast<int>(r[6]);
        log.push_back(e);
    }
    return log;
}

}  // namespace cknet
