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

#ifndef CKNET_CONFIG_HPP
#define CKNET_CONFIG_HPP

#include <string>

#include "cknet/training.hpp"

namespace cknet {

/**
 * @brief Parses a key=value training configuration.
 *
 * One assignment per line; blank lines and lines starting with '#' are
 * skipped. Keys mirror TrainConfig fields (alpha1..alpha4, tau_l, tau_p, p,
 * p_l, p_p, latent_dim, c, c_out, lr, batch_size, epochs, seed, mode,
 * rank_check_interval, head, conv1_channels, conv2_channels, hidden).
 * Unset keys keep their defaults. Throws ConfigError naming the key on any
 * unknown key, malformed value or failed validation.
 */
TrainConfig parse_train_config(const std::string& text, TrainConfig base = {});
TrainConfig load_train_config(const std::string& path, TrainConfig base = {});

// Inverse of parse_train_config; every key is written.
std::string format_train_config(const TrainConfig& cfg);

}  // namespace cknet

#endif  // CKNET_CONFIG_HPP
