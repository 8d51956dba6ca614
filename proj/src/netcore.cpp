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

#include "cknet/netcore.hpp"

#include <cmath>
#include <random>
#include <string>

#include "cknet/errors.hpp"

namespace cknet {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::deconv2d: return "deconv2d";
        case LayerKind::relu: return "relu";
        case LayerKind::tanh: return "tanh";
        case LayerKind::sigmoid: return "sigmoid";
        case LayerKind::flatten: return "flatten";
        case LayerKind::reshape: return "reshape";
    }
    return "unknown";
}

LayerSpec LayerSpec::dense(int in, int out) {
    LayerSpec l;
    l.kind = LayerKind::dense;
    l.in = in;
    l.out = out;
    return l;
}

LayerSpec LayerSpec::conv2d(int in_channels, int out_channels, int kernel, int stride, int padding) {
    LayerSpec l;
    l.kind = LayerKind::conv2d;
    l.in = in_channels;
    l.out = out_channels;
    l.kernel = kernel;
    l.stride = stride;
    l.padding = padding;
    return l;
}

LayerSpec LayerSpec::deconv2d(int in_channels, int out_channels, int kernel, int stride, int padding) {
    LayerSpec l = conv2d(in_channels, out_channels, kernel, stride, padding);
    l.kind = LayerKind::deconv2d;
    return l;
}

LayerSpec LayerSpec::relu() {
    LayerSpec l;
    l.kind = LayerKind::relu;
    return l;
}

LayerSpec LayerSpec::tanh() {
    LayerSpec l;
    l.kind = LayerKind::tanh;
    return l;
}

LayerSpec LayerSpec::sigmoid() {
    LayerSpec l;
    l.kind = LayerKind::sigmoid;
    return l;
}

LayerSpec LayerSpec::flatten() {
    LayerSpec l;
    l.kind = LayerKind::flatten;
    return l;
}


LayerSpec LayerSpec::reshape(Shape3 target) {
    LayerSpec l;
    l.kind = LayerKind::reshape;
    l.target = target;
    return l;
}

Index layer_parameter_count(const LayerSpec& l) {
    const Index k2 = static_cast<Index>(l.kernel) * l.kernel;
    switch (l.kind) {
        case LayerKind::dense: return static_cast<Index>(l.in) * l.out + l.out;
        case LayerKind::conv2d: return static_cast<Index>(l.out) * l.in * k2 + l.out;
        case LayerKind::deconv2d: return static_cast<Index>(l.in) * l.out * k2 + l.out;
        default: return 0;
    }
}

namespace {

std::string shape_str(const Shape3& s) {
    return std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

Shape3 resolve_shape(const LayerSpec& l, const Shape3& in, std::size_t index) {
    const std::string where = "layer " + std::to_string(index) + " (" + std::string(to_string(l.kind)) + "): ";
    switch (l.kind) {
        case LayerKind::dense:
            if (l.in < 1 || l.out < 1) throw ConfigError(where + "widths must be >= 1");
            if (in.size() != l.in) throw ShapeError(where + "expects " + std::to_string(l.in) + " inputs, got " + shape_str(in));
            return {l.out, 1, 1};
        case LayerKind::conv2d:
        case LayerKind::deconv2d: {
            if (l.in < 1 || l.out < 1) throw ConfigError(where + "channels must be >= 1");
            if (l.kernel < 1 || l.stride < 1 || l.padding < 0) throw ConfigError(where + "kernel/stride must be >= 1");
            if (in.c != l.in) throw ShapeError(where + "expects " + std::to_string(l.in) + " channels, got " + shape_str(in));
            if (l.kind == LayerKind::conv2d) {
                const int hp = in.h + 2 * l.padding, wp = in.w + 2 * l.padding;
                if (hp < l.kernel || wp < l.kernel) throw ShapeError(where + "kernel larger than padded input " + shape_str(in));
                return {l.out, (hp - l.kernel) / l.stride + 1, (wp - l.kernel) / l.stride + 1};
            }
            const int ho = (in.h - 1) * l.stride - 2 * l.padding + l.kernel;
            const int wo = (in.w - 1) * l.stride - 2 * l.padding + l.kernel;
            if (ho < 1 || wo < 1) throw ShapeError(where + "empty output for input " + shape_str(in));
            return {l.out, ho, wo};
        }
        case LayerKind::relu:
        case LayerKind::tanh:
        case LayerKind::sigmoid:
            return in;
        case LayerKind::flatten:
            return {static_cast<int>(in.size()), 1, 1};
        case LayerKind::reshape:
            if (l.target.size() != in.size()) {
                throw ShapeError(where + "cannot reshape " + shape_str(in) + " to " + shape_str(l.target));
            }
            return l.target;
    }
    throw ConfigError(where + "unknown layer kind");
}

// Geometry of a convolution mapping (cin, h, w) -> (cout, ho, wo).
struct ConvGeom {
    int cin, h, w, k, s, p, ho, wo;
    Index patch() const { return static_cast<Index>(cin) * k * k; }
    Index out_plane() const { return static_cast<Index>(ho) * wo; }
};

// cols(row, n * ho * wo + pos): row = (ci * k + ki) * k + kj.
void im2col(const MatrixXd& x, const ConvGeom& g, MatrixXd& cols) {
    const Index rows = g.patch();
    const Index n = x.cols();
    cols.resize(rows, g.out_plane() * n);
    for (Index b = 0; b < n; ++b) {
        const double* src = x.col(b).data();
        for (int oy = 0; oy < g.ho; ++oy) {
            for (int ox = 0; ox < g.wo; ++ox) {
                double* dst = cols.data() + (b * g.out_plane() + static_cast<Index>(oy) * g.wo + ox) * rows;
                for (int ci = 0; ci < g.cin; ++ci) {
                    for (int ki = 0; ki < g.k; ++ki) {
                        const int iy = oy * g.s - g.p + ki;
                        double* row = dst + (static_cast<Index>(ci) * g.k + ki) * g.k;
                        if (iy < 0 || iy >= g.h) {
                            for (int kj = 0; kj < g.k; ++kj) row[kj] = 0.0;
                            continue;
                        }
                        const double* line = src + (static_cast<Index>(ci) * g.h + iy) * g.w;
                        for (int kj = 0; kj < g.k; ++kj) {
                            const int ix = ox * g.s - g.p + kj;
                            row[kj] = (ix >= 0 && ix < g.w) ? line[ix] : 0.0;
                        }
                    }
                }
            }
        }
    }
}

// Adjoint of im2col; x is (cin * h * w) x n and receives the accumulated result.
void col2im(const MatrixXd& cols, const ConvGeom& g, Index n, MatrixXd& x) {
    const Index rows = g.patch();
    x.setZero(static_cast<Index>(g.cin) * g.h * g.w, n);
    for (Index b = 0; b < n; ++b) {
        double* dst = x.col(b).data();
        for (int oy = 0; oy < g.ho; ++oy) {
            for (int ox = 0; ox < g.wo; ++ox) {
                const double* src = cols.data() + (b * g.out_plane() + static_cast<Index>(oy) * g.wo + ox) * rows;
                for (int ci = 0; ci < g.cin; ++ci) {
                    for (int ki = 0; ki < g.k; ++ki) {
                        const int iy = oy * g.s - g.p + ki;
                        if (iy < 0 || iy >= g.h) continue;
                        const double* row = src + (static_cast<Index>(ci) * g.k + ki) * g.k;
                        double* line = dst + (static_cast<Index>(ci) * g.h + iy) * g.w;
                        for (int kj = 0; kj < g.k; ++kj) {
                            const int ix = ox * g.s - g.p + kj;
                            if (ix >= 0 && ix < g.w) line[ix] += row[kj];
                        }
                    }
                }
            }
        }
    }
}

// (channels * plane) x n  <->  channels x (plane * n)
MatrixXd to_channel_rows(const MatrixXd& x, int channels, Index plane) {
    MatrixXd out(channels, plane * x.cols());
    for (Index b = 0; b < x.cols(); ++b) {
        out.middleCols(b * plane, plane) = Eigen::Map<const MatrixXd>(x.col(b).data(), plane, channels).transpose();
    }
    return out;
}

MatrixXd from_channel_rows(const MatrixXd& m, int channels, Index plane, Index n) {
    MatrixXd out(static_cast<Index>(channels) * plane, n);
    for (Index b = 0; b < n; ++b) {
        Eigen::Map<MatrixXd>(out.col(b).data(), plane, channels) = m.middleCols(b * plane, plane).transpose();
    }
    return out;
}

ConvGeom conv_geom(const LayerSpec& l, const Shape3& in, const Shape3& out) {
    return {l.in, in.h, in.w, l.kernel, l.stride, l.padding, out.h, out.w};
}

// Geometry of the forward convolution whose adjoint the deconv layer applies.
ConvGeom deconv_geom(const LayerSpec& l, const Shape3& in, const Shape3& out) {
    return {l.out, out.h, out.w, l.kernel, l.stride, l.padding, in.h, in.w};
}

double sigmoid(double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); }

}  // namespace

Network::Network(Shape3 input, std::vector<LayerSpec> layers) : input_(input), layers_(std::move(layers)) {
    if (input.c < 1 || input.h < 1 || input.w < 1) throw ConfigError("input shape must be positive");
    shapes_.clear();
    shapes_.push_back(input_);
    Index total = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        shapes_.push_back(resolve_shape(layers_[i], shapes_.back(), i));
        offsets_.push_back(total);
        total += layer_parameter_count(layers_[i]);
    }
    params_ = VectorXd::Zero(total);
}

void Network::set_parameters(const VectorXd& params) {
    if (params.size() != params_.size()) {
        throw ShapeError("expected " + std::to_string(params_.size()) + " parameters, got " + std::to_string(params.size()));
    }
    params_ = params;
}

void Network::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    params_.setZero();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& l = layers_[i];
        const Index count = layer_parameter_count(l);
        if (count == 0) continue;
        const double k2 = static_cast<double>(l.kernel) * l.kernel;
        double fan_in = l.in, fan_out = l.out;
        if (l.kind != LayerKind::dense) {
            fan_in *= k2;
            fan_out *= k2;
        }
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> uni(-limit, limit);
        const Index weights = count - l.out;
        for (Index j = 0; j < weights; ++j) params_[offsets_[i] + j] = uni(rng);
    }
}

ForwardCache Network::forward(const MatrixXd& input) const {
    if (input.rows() != input_.size()) {
        throw ShapeError("network expects " + std::to_string(input_.size()) + " features per sample, got " +
                         std::to_string(input.rows()));
    }
    ForwardCache cache;
    cache.activations.reserve(layers_.size() + 1);
    cache.activations.push_back(input);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& l = layers_[i];
        const MatrixXd& x = cache.activations.back();
        const Shape3& sin = shapes_[i];
        const Shape3& sout = shapes_[i + 1];
        const double* p = params_.data() + offsets_[i];
        MatrixXd y;
        switch (l.kind) {
            case LayerKind::dense: {
                Eigen::Map<const MatrixXd> weight(p, l.out, l.in);
                Eigen::Map<const VectorXd> bias(p + static_cast<Index>(l.out) * l.in, l.out);
                y.noalias() = weight * x;
                y.colwise() += bias;
                break;
            }
            case LayerKind::conv2d: {
                const ConvGeom g = conv_geom(l, sin, sout);
                Eigen::Map<const MatrixXd> weight(p, l.out, g.patch());
                Eigen::Map<const VectorXd> bias(p + l.out * g.patch(), l.out);
                MatrixXd cols;
                im2col(x, g, cols);
                MatrixXd r;
                r.noalias() = weight * cols;
                r.colwise() += bias;
                y = from_channel_rows(r, l.out, g.out_plane(), x.cols());
                break;
            }
            case LayerKind::deconv2d: {
                const ConvGeom g = deconv_geom(l, sin, sout);
                Eigen::Map<const MatrixXd> weight(p, l.in, g.patch());
                Eigen::Map<const VectorXd> bias(p + l.in * g.patch(), l.out);
                const Index in_plane = static_cast<Index>(sin.h) * sin.w;
                MatrixXd cols;
                cols.noalias() = weight.transpose() * to_channel_rows(x, l.in, in_plane);
                col2im(cols, g, x.cols(), y);
                const Index plane = static_cast<Index>(sout.h) * sout.w;
                for (int c = 0; c < l.out; ++c) y.middleRows(c * plane, plane).array() += bias[c];
                break;
            }
            case LayerKind::relu: y = x.cwiseMax(0.0); break;
            case LayerKind::tanh: y = x.array().tanh().matrix(); break;
            case LayerKind::sigmoid: y = x.unaryExpr([](double v) { return sigmoid(v); }); break;
            case LayerKind::flatten:
            case LayerKind::reshape: y = x; break;
        }
        cache.activations.push_back(std::move(y));
    }
    return cache;
}

MatrixXd Network::predict(const MatrixXd& input) const { return forward(input).output(); }

Gradients Network::backward(const ForwardCache& cache, const MatrixXd& output_gradient) const {
    if (cache.activations.size() != layers_.size() + 1) throw ConfigError("backward called without a matching forward cache");
    if (output_gradient.rows() != cache.output().rows() || output_gradient.cols() != cache.output().cols()) {
        throw ShapeError("output gradient does not match the cached output");
    }
    Gradients g;
    g.parameters = VectorXd::Zero(params_.size());
    MatrixXd grad = output_gradient;
    for (std::size_t ii = layers_.size(); ii-- > 0;) {
        const LayerSpec& l = layers_[ii];
        const MatrixXd& x = cache.activations[ii];
        const MatrixXd& y = cache.activations[ii + 1];
        const Shape3& sin = shapes_[ii];
        const Shape3& sout = shapes_[ii + 1];
        const double* p = params_.data() + offsets_[ii];
        double* gp = g.parameters.data() + offsets_[ii];
        switch (l.kind) {
            case LayerKind::dense: {
                Eigen::Map<const MatrixXd> weight(p, l.out, l.in);
                Eigen::Map<MatrixXd> gw(gp, l.out, l.in);
                Eigen::Map<VectorXd> gb(gp + static_cast<Index>(l.out) * l.in, l.out);
                gw.noalias() = grad * x.transpose();
                gb = grad.rowwise().sum();
                grad = weight.transpose() * grad;
                break;
            }
            case LayerKind::conv2d: {
                const ConvGeom geo = conv_geom(l, sin, sout);
                Eigen::Map<const MatrixXd> weight(p, l.out, geo.patch());
                Eigen::Map<MatrixXd> gw(gp, l.out, geo.patch());
                Eigen::Map<VectorXd> gb(gp + l.out * geo.patch(), l.out);
                const MatrixXd gm = to_channel_rows(grad, l.out, geo.out_plane());
                MatrixXd cols;
                im2col(x, geo, cols);
                gw.noalias() = gm * cols.transpose();
                gb = gm.rowwise().sum();
                MatrixXd dcols;
                dcols.noalias() = weight.transpose() * gm;
                col2im(dcols, geo, x.cols(), grad);
                break;
            }
            case LayerKind::deconv2d: {
                const ConvGeom geo = deconv_geom(l, sin, sout);
                Eigen::Map<const MatrixXd> weight(p, l.in, geo.patch());
                Eigen::Map<MatrixXd> gw(gp, l.in, geo.patch());
                Eigen::Map<VectorXd> gb(gp + l.in * geo.patch(), l.out);
                const Index plane = static_cast<Index>(sout.h) * sout.w;
                for (int c = 0; c < l.out; ++c) gb[c] = grad.middleRows(c * plane, plane).sum();
                MatrixXd cols;
                im2col(grad, geo, cols);
                const Index in_plane = static_cast<Index>(sin.h) * sin.w;
                gw.noalias() = to_channel_rows(x, l.in, in_plane) * cols.transpose();
                MatrixXd dx;
                dx.noalias() = weight * cols;
                grad = from_channel_rows(dx, l.in, in_plane, x.cols());
                break;
            }
            case LayerKind::relu:
                grad = (x.array() > 0.0).select(grad, 0.0);
                break;
            case LayerKind::tanh:
                grad = grad.cwiseProduct((1.0 - y.array().square()).matrix());
                break;
            case LayerKind::sigmoid:
                grad = grad.cwiseProduct((y.array() * (1.0 - y.array())).matrix());
                break;
            case LayerKind::flatten:
            case LayerKind::reshape:
                break;
        }
    }
    g.input = std::move(grad);
    return g;
}

bool Network::operator==(const Network& other) const {
    return input_ == other.input_ && layers_ == other.layers_ && params_.size() == other.params_.size() &&
           params_ == other.params_;
}

std::string_view to_string(LatentMode mode) {
    return mode == LatentMode::deterministic ? "deterministic" : "variational";
}

LatentMode parse_latent_mode(std::string_view name) {
    if (name == "deterministic" || name == "dcknet") return LatentMode::deterministic;
    if (name == "variational" || name == "vcknet") return LatentMode::variational;
    throw ConfigError("unknown latent mode '" + std::string(name) + "'");
}

EncoderOutput EncoderOutput::from_head(const VectorXd& head, LatentMode mode) {
    EncoderOutput out;
    out.mode = mode;
    if (mode == LatentMode::deterministic) {
        out.mean = head;
        return out;
    }
    if (head.size() % 2 != 0) throw ShapeError("variational head must have an even size");
    const Index v = head.size() / 2;
    out.mean = head.head(v);
    out.log_var = head.tail(v);
    return out;
}

VectorXd sample_latent(const EncoderOutput& out, const VectorXd& noise) {
    if (out.mode != LatentMode::variational) throw ConfigError("sample_latent requires a variational encoder output");
    if (noise.size() != out.mean.size() || out.log_var.size() != out.mean.size()) {
        throw ShapeError("noise, mean and log-variance must share one dimension");
    }
    return out.mean + ((0.5 * out.log_var.array()).exp() * noise.array()).matrix();
}

void adam_step(VectorXd& params, const VectorXd& grads, AdamState& state, double learning_rate,
               const AdamConfig& cfg) {
    if (grads.size() != params.size()) throw ShapeError("gradient and parameter sizes differ");
    if (state.m.size() != params.size()) {
        state.m = VectorXd::Zero(params.size());
        state.v = VectorXd::Zero(params.size());
        state.t = 0;
    }
    ++state.t;
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    params.array() -= learning_rate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.epsilon);
}

namespace {

bool is_vector_input(const ArchitectureConfig& cfg) { return cfg.h == 1 && cfg.w == 1; }

void check_arch(const ArchitectureConfig& cfg) {
    if (cfg.c < 1 || cfg.h < 1 || cfg.w < 1 || cfg.c_out < 1) throw ConfigError("observation shape must be positive");
    if (cfg.latent_dim < 1) throw ConfigError("latent dimension must be >= 1");
    if (cfg.hidden < 0) throw ConfigError("hidden width must be >= 0");
    if (!is_vector_input(cfg) && (cfg.conv1_channels < 1 || cfg.conv2_channels < 1 || cfg.hidden < 1)) {
        throw ConfigError("pixel encoders need positive channel and hidden widths");
    }
}

}  // namespace

Network build_encoder(const ArchitectureConfig& cfg) {
    check_arch(cfg);
    const int head = cfg.mode == LatentMode::variational ? 2 * cfg.latent_dim : cfg.latent_dim;
    std::vector<LayerSpec> layers;
    const Shape3 input{cfg.c, cfg.h, cfg.w};
    if (is_vector_input(cfg)) {
        layers.push_back(LayerSpec::flatten());
        if (cfg.hidden > 0) {
            layers.push_back(LayerSpec::dense(cfg.c, cfg.hidden));
            layers.push_back(LayerSpec::relu());
            layers.push_back(LayerSpec::dense(cfg.hidden, head));
        } else {
            layers.push_back(LayerSpec::dense(cfg.c, head));
        }
    } else {
        layers.push_back(LayerSpec::conv2d(cfg.c, cfg.conv1_channels, cfg.kernel, cfg.stride, cfg.padding));
        layers.push_back(LayerSpec::relu());
        layers.push_back(LayerSpec::conv2d(cfg.conv1_channels, cfg.conv2_channels, cfg.kernel, cfg.stride, cfg.padding));
        layers.push_back(LayerSpec::relu());
        layers.push_back(LayerSpec::flatten());
        // Resolve the flattened width from the conv stack itself.
        const Network probe(input, layers);
        const int flat = static_cast<int>(probe.output_shape().size());
        layers.push_back(LayerSpec::dense(flat, cfg.hidden));
        layers.push_back(LayerSpec::relu());
        layers.push_back(LayerSpec::dense(cfg.hidden, head));
    }
    if (cfg.head == HeadActivation::tanh) layers.push_back(LayerSpec::tanh());
    return Network(input, std::move(layers));
}

Network build_decoder(const ArchitectureConfig& cfg) {
    check_arch(cfg);
    std::vector<LayerSpec> layers;
    const Shape3 latent{cfg.latent_dim, 1, 1};
    if (is_vector_input(cfg)) {
        if (cfg.hidden > 0) {
            layers.push_back(LayerSpec::dense(cfg.latent_dim, cfg.hidden));
            layers.push_back(LayerSpec::relu());
            layers.push_back(LayerSpec::dense(cfg.hidden, cfg.c_out));
        } else {
            layers.push_back(LayerSpec::dense(cfg.latent_dim, cfg.c_out));
        }
        layers.push_back(LayerSpec::reshape({cfg.c_out, 1, 1}));
        return Network(latent, std::move(layers));
    }
    // Spatial shape at the bottom of the encoder.
    const Network enc_convs(Shape3{cfg.c, cfg.h, cfg.w},
                            {LayerSpec::conv2d(cfg.c, cfg.conv1_channels, cfg.kernel, cfg.stride, cfg.padding),
                             LayerSpec::conv2d(cfg.conv1_channels, cfg.conv2_channels, cfg.kernel, cfg.stride, cfg.padding)});
    const Shape3 bottom = enc_convs.output_shape();
    layers.push_back(LayerSpec::dense(cfg.latent_dim, cfg.hidden));
    layers.push_back(LayerSpec::relu());
    layers.push_back(LayerSpec::dense(cfg.hidden, static_cast<int>(bottom.size())));
    layers.push_back(LayerSpec::relu());
    layers.push_back(LayerSpec::reshape(bottom));
    layers.push_back(LayerSpec::deconv2d(cfg.conv2_channels, cfg.conv1_channels, cfg.kernel, cfg.stride, cfg.padding));
    layers.push_back(LayerSpec::relu());
    layers.push_back(LayerSpec::deconv2d(cfg.conv1_channels, cfg.c_out, cfg.kernel, cfg.stride, cfg.padding));
    layers.push_back(LayerSpec::sigmoid());
    Network dec(latent, std::move(layers));
    if (!(dec.output_shape() == Shape3{cfg.c_out, cfg.h, cfg.w})) {
        throw ConfigError("decoder cannot mirror a " + std::to_string(cfg.h) + "x" + std::to_string(cfg.w) +
                          " input with this kernel/stride/padding");
    }
    return dec;
}

}  // namespace cknet
