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

#ifndef CKNET_DATASET_HPP
#define CKNET_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cknet/dynamics.hpp"
#include "cknet/render.hpp"
#include "cknet/training.hpp"

namespace cknet {

inline constexpr int kDatasetFormatVersion = 1;

struct EpisodeRecord {
    int id = 0;
    int length = 0;  // transitions; length + 1 states
    std::uint64_t seed = 0;
    std::string dir;  // relative to the dataset root
};

/**
 * @brief manifest.json of a generated dataset.
 *
 * Pixel datasets store frame_%04d.pgm per state (after enhancement) next to
 * actions.csv and states.csv. Vector datasets (pixels == false) hold only
 * the CSVs; their observations are the raw states.
 */
struct DatasetManifest {
    int format_version = kDatasetFormatVersion;
    SystemKind system = SystemKind::mountain_car;
    double dt = 1.0;
    int c = 3, h = 32, w = 32;
    bool pixels = true;
    bool enhanced = true;
    double enhance_threshold = 0.8;
    PolicyKind policy = PolicyKind::random_uniform;
    std::uint64_t seed = 0;
    std::vector<EpisodeRecord> episodes;
};

struct GenConfig {
    SystemKind system = SystemKind::mountain_car;
    int episodes = 10;
    int steps = 150;
    PolicyKind policy = PolicyKind::random_uniform;
    std::uint64_t seed = 0;
    RenderConfig render;
};

// Seed of episode `index` for a dataset seeded with `seed`.
std::uint64_t episode_seed(std::uint64_t seed, int index);

SystemSpec system_spec(SystemKind kind);

// Writes the dataset under `dir` (created if missing). Byte-identical for equal inputs.
DatasetManifest generate_dataset(const std::string& dir, const GenConfig& cfg);

void write_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::string& path);

// Reads <dir>/manifest.json and checks every listed file exists with consistent length.
DatasetManifest load_manifest(const std::string& dir);

SequenceDataset load_sequence_dataset(const std::string& dir, const DatasetManifest& manifest);
SequenceDataset load_sequence_dataset(const std::string& dir);

// Raw state/action trajectories of every episode.
std::vector<Trajectory> load_trajectories(const std::string& dir, const DatasetManifest& manifest);

}  // namespace cknet

#endif  // CKNET_DATASET_HPP
