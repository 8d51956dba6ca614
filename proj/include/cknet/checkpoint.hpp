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

#ifndef CKNET_CHECKPOINT_HPP
#define CKNET_CHECKPOINT_HPP

#include <optional>
#include <string>

#include "cknet/koopman.hpp"
#include "cknet/training.hpp"

namespace cknet {

inline constexpr char kCheckpointMagic[4] = {'C', 'K', 'N', '1'};

/**
 * @brief Binary model file.
 *
 * Layout, all integers and floats little-endian: magic "CKN1"; u8 mode;
 * u32 latent_dim, action_dim, c, c_out, h, w; f64 dt; encoder then decoder
 * layer tables (u32 count, then per layer u32 kind, in, out, kernel, stride,
 * padding, target c, h, w); encoder then decoder parameters (u64 count, f64
 * values); A and B row-major; u8 optimizer flag followed, when set, by u64
 * epoch, u64 Adam step, u64 length and the Adam moments m and v.
 */
struct Checkpoint {
    KoopmanModel model;
    std::optional<TrainState> training;  // model inside is ignored; `model` is authoritative
};

void save_checkpoint(const std::string& path, const KoopmanModel& model, const TrainState* training = nullptr);
Checkpoint load_checkpoint(const std::string& path);

// Model with identity encoder/decoder over latent_dim-sized vectors (EDMD fits).
KoopmanModel linear_model(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double dt);

}  // namespace cknet

#endif  // CKNET_CHECKPOINT_HPP
