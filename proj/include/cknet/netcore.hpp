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

#ifndef CKNET_NETCORE_HPP
#define CKNET_NETCORE_HPP

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cknet {

// Per-sample tensor shape. Vectors are (n, 1, 1).
struct Shape3 {
    int c = 1, h = 1, w = 1;

    Eigen::Index size() const { return static_cast<Eigen::Index>(c) * h * w; }
    bool operator==(const Shape3&) const = default;
};

enum class LayerKind : std::uint32_t { dense, conv2d, deconv2d, relu, tanh, sigmoid, flatten, reshape };

std::string_view to_string(LayerKind kind);

/**
 * @brief One layer of a feed-forward network.
 *
 * dense: in -> out features. conv2d / deconv2d: in -> out channels with a square
 * kernel, stride and zero padding; deconv2d is the adjoint (transposed) convolution.
 * reshape: reinterprets the sample as target (same element count).
 */
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    int in = 0;
    int out = 0;
    int kernel = 0;
    int stride = 1;
    int padding = 0;
    Shape3 target;

    static LayerSpec dense(int in, int out);
    static LayerSpec conv2d(int in_channels, int out_channels, int kernel, int stride, int padding = 0);
    static LayerSpec deconv2d(int in_channels, int out_channels, int kernel, int stride, int padding = 0);
    static LayerSpec relu();
    static LayerSpec tanh();
    static LayerSpec sigmoid();
    static LayerSpec flatten();
    static LayerSpec reshape(Shape3 target);

    bool operator==(const LayerSpec&) const = default;
};

// Activations of every layer boundary; activations[0] is the input batch.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> activations;

    const Eigen::MatrixXd& output() const { return activations.back(); }
};

struct Gradients {
    Eigen::VectorXd parameters;
    Eigen::MatrixXd input;
};

/**
 * @brief Sequential network over batches.
 *
 * A batch is a matrix with one sample per column; a sample of shape (c, h, w)
 * is stored channel-major then row-major. Parameters live in one flat vector:
 * per layer, the weight matrix column-major followed by the bias.
 *
 * dense weight: out x in. conv2d weight: out_ch x (in_ch * k * k).
 * deconv2d weight: in_ch x (out_ch * k * k), i.e. the conv2d weight of the
 * adjoint map.
 */
class Network {
public:
    Network() = default;
    Network(Shape3 input, std::vector<LayerSpec> layers);

    const Shape3& input_shape() const { return input_; }
    const Shape3& output_shape() const { return shapes_.back(); }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    // Shape entering layer i; shape_at(layers().size()) is the output shape.
    const Shape3& shape_at(std::size_t i) const { return shapes_.at(i); }

    Eigen::Index parameter_count() const { return static_cast<Eigen::Index>(params_.size()); }
    Eigen::VectorXd& parameters() { return params_; }
    const Eigen::VectorXd& parameters() const { return params_; }
    void set_parameters(const Eigen::VectorXd& params);
    Eigen::Index parameter_offset(std::size_t layer) const { return offsets_.at(layer); }

    // Glorot-uniform weights, zero biases.
    void initialize(std::uint64_t seed);

    ForwardCache forward(const Eigen::MatrixXd& input) const;
    Eigen::MatrixXd predict(const Eigen::MatrixXd& input) const;
    Gradients backward(const ForwardCache& cache, const Eigen::MatrixXd& output_gradient) const;

    bool operator==(const Network& other) const;

private:
    Shape3 input_;
    std::vector<LayerSpec> layers_;
    std::vector<Shape3> shapes_{Shape3{}};
    std::vector<Eigen::Index> offsets_;
    Eigen::VectorXd params_;
};

// Number of parameters a layer owns given the shape that enters it.
Eigen::Index layer_parameter_count(const LayerSpec& layer);

enum class LatentMode : std::uint8_t { deterministic = 0, variational = 1 };

std::string_view to_string(LatentMode mode);
LatentMode parse_latent_mode(std::string_view name);

struct EncoderOutput {
    LatentMode mode = LatentMode::deterministic;
    Eigen::VectorXd mean;     // the latent itself in deterministic mode
    Eigen::VectorXd log_var;  // empty in deterministic mode

    // Splits a head of size latent (deterministic) or 2 * latent (variational: mean first).
    static EncoderOutput from_head(const Eigen::VectorXd& head, LatentMode mode);
};

// mean + exp(log_var / 2) * noise. Throws ConfigError in deterministic mode.
Eigen::VectorXd sample_latent(const EncoderOutput& out, const Eigen::VectorXd& noise);

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::int64_t t = 0;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// One bias-corrected Adam update in place.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double learning_rate,
               const AdamConfig& cfg = {});

enum class HeadActivation : std::uint8_t { none = 0, tanh = 1 };

struct ArchitectureConfig {
    int c = 3, h = 32, w = 32;
    int c_out = 3;
    int latent_dim = 16;
    LatentMode mode = LatentMode::deterministic;
    HeadActivation head = HeadActivation::none;
    int conv1_channels = 8;
    int conv2_channels = 16;
    int hidden = 64;  // 0 gives a purely linear map for vector observations
    int kernel = 4;
    int stride = 2;
    int padding = 1;
};

// Pixel inputs: two strided conv+ReLU stages, dense+ReLU, dense head.
// Vector inputs (h == w == 1): dense+ReLU, dense head.
Network build_encoder(const ArchitectureConfig& cfg);
// Mirror of the encoder ending in a sigmoid for pixels, linear for vectors.
Network build_decoder(const ArchitectureConfig& cfg);

}  // namespace cknet

#endif  // CKNET_NETCORE_HPP
