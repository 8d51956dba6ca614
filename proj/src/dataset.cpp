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

#include "cknet/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "cknet/errors.hpp"

namespace cknet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_name(int k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%04d.pgm", k);
    return buf;
}

std::string episode_dir(int id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "episode_%04d", id);
    return buf;
}

Frame state_frame(const Eigen::VectorXd& s) {
    Frame f(s.size(), 1);
    for (Eigen::Index i = 0; i < s.size(); ++i) f(i, 0) = s[i];
    return f;
}

}  // namespace

std::uint64_t episode_seed(std::uint64_t seed, int index) {
    // splitmix64 of the pair
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SystemSpec system_spec(SystemKind kind) {
    switch (kind) {
        case SystemKind::mountain_car: return SystemSpec::mountain_car();
        case SystemKind::cart_pole: return SystemSpec::cart_pole();
        case SystemKind::linear_ref: return SystemSpec::default_linear_ref();
    }
    throw ConfigError("unknown system");
}

DatasetManifest generate_dataset(const std::string& dir, const GenConfig& cfg) {
    if (cfg.episodes < 1) throw ConfigError("episodes must be >= 1");
    if (cfg.steps < 1) throw ConfigError("steps must be >= 1");
    if (cfg.policy == PolicyKind::scripted) throw ConfigError("scripted policy needs an action script");
    const SystemSpec spec = system_spec(cfg.system);
    const bool pixels = cfg.system != SystemKind::linear_ref;
    if (pixels) cfg.render.validate();

    DatasetManifest m;
    m.system = cfg.system;
    m.dt = spec.dt;
    m.pixels = pixels;
    m.c = pixels ? cfg.render.c : 1;
    m.h = pixels ? cfg.render.h : spec.state_dim;
    m.w = pixels ? cfg.render.w : 1;
    m.enhanced = pixels && cfg.render.enhance;
    m.enhance_threshold = cfg.render.enhance_threshold;
    m.policy = cfg.policy;
    m.seed = cfg.seed;

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    for (int e = 0; e < cfg.episodes; ++e) {
        EpisodeRecord rec{e, cfg.steps, episode_seed(cfg.seed, e), episode_dir(e)};
        const fs::path ed = fs::path(dir) / rec.dir;
        fs::create_directories(ed, ec);
        if (ec) throw IoError("cannot create " + ed.string() + ": " + ec.message());
        const Trajectory traj = generate_trajectory(spec, cfg.policy, cfg.steps, rec.seed);
        write_action_csv((ed / "actions.csv").string(), traj.actions);
        write_state_csv((ed / "states.csv").string(), traj.states);
        if (pixels) {
            for (std::size_t k = 0; k < traj.states.size(); ++k) {
                Frame f = render_frame(traj.states[k], spec, cfg.render);
                if (cfg.render.enhance) f = enhance(f, cfg.render.enhance_threshold);
                write_pgm((ed / frame_name(static_cast<int>(k))).string(), f);
            }
        }
        m.episodes.push_back(rec);
    }
    write_manifest((fs::path(dir) / "manifest.json").string(), m);
    return m;
}

void write_manifest(const std::string& path, const DatasetManifest& m) {
    json j;
    j["format_version"] = m.format_version;
    j["system"] = std::string(to_string(m.system));
    j["dt"] = m.dt;
    j["c"] = m.c;
    j["h"] = m.h;
    j["w"] = m.w;
    j["pixels"] = m.pixels;
    j["enhanced"] = m.enhanced;
    j["enhance_threshold"] = m.enhance_threshold;
    j["policy"] = std::string(to_string(m.policy));
    j["seed"] = m.seed;
    json eps = json::array();
    for (const auto& e : m.episodes) eps.push_back({{"id", e.id}, {"length", e.length}, {"seed", e.seed}, {"dir", e.dir}});
    j["episodes"] = eps;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f << j.dump(2) << "\n";
    if (!f) throw IoError("failed writing " + path);
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read manifest " + path);
    DatasetManifest m;
    try {
        const json j = json::parse(f);
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != kDatasetFormatVersion) {
            throw IoError(path + ": unsupported format_version " + std::to_string(m.format_version));
        }
        m.system = parse_system_kind(j.at("system").get<std::string>());
        m.dt = j.at("dt").get<double>();
        m.c = j.at("c").get<int>();
        m.h = j.at("h").get<int>();
        m.w = j.at("w").get<int>();
        m.pixels = j.at("pixels").get<bool>();
        m.enhanced = j.at("enhanced").get<bool>();
        m.enhance_threshold = j.at("enhance_threshold").get<double>();
        m.policy = parse_policy_kind(j.at("policy").get<std::string>());
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& e : j.at("episodes")) {
            m.episodes.push_back({e.at("id").get<int>(), e.at("length").get<int>(), e.at("seed").get<std::uint64_t>(),
                                  e.at("dir").get<std::string>()});
        }
    } catch (const json::exception& e) {
        throw IoError(path + ": malformed manifest: " + e.what());
    } catch (const ConfigError& e) {
        throw IoError(path + ": " + e.what());
    }
    if (m.c < 1 || m.h < 1 || m.w < 1 || !(m.dt > 0.0)) throw IoError(path + ": invalid dimensions");
    if (m.episodes.empty()) throw IoError(path + ": no episodes listed");
    return m;
}

DatasetManifest load_manifest(const std::string& dir) {
    DatasetManifest m = read_manifest((fs::path(dir) / "manifest.json").string());
    for (const auto& e : m.episodes) {
        const fs::path ed = fs::path(dir) / e.dir;
        if (e.length < 1) throw IoError(ed.string() + ": non-positive length");
        for (const char* name : {"actions.csv", "states.csv"}) {
            if (!fs::is_regular_file(ed / name)) throw IoError((ed / name).string() + ": missing");
        }
        if (m.pixels) {
            for (int k = 0; k <= e.length; ++k) {
                if (!fs::is_regular_file(ed / frame_name(k))) throw IoError((ed / frame_name(k)).string() + ": missing");
            }
            if (fs::exists(ed / frame_name(e.length + 1))) {
                throw IoError(ed.string() + ": more frames than the listed length");
            }
        }
    }
    return m;
}

std::vector<Trajectory> load_trajectories(const std::string& dir, const DatasetManifest& m) {
    std::vector<Trajectory> out;
    for (const auto& e : m.episodes) {
        const fs::path ed = fs::path(dir) / e.dir;
        Trajectory t;
        t.actions = read_action_csv((ed / "actions.csv").string());
        t.states = read_state_csv((ed / "states.csv").string());
        t.dt = m.dt;
        t.seed = e.seed;
        if (static_cast<int>(t.actions.size()) != e.length || t.states.size() != t.actions.size() + 1) {
            throw IoError(ed.string() + ": length does not match the manifest");
        }
        out.push_back(std::move(t));
    }
    return out;
}

SequenceDataset load_sequence_dataset(const std::string& dir, const DatasetManifest& m) {
    SequenceDataset data;
    data.vector_observations = !m.pixels;
    const auto trajectories = load_trajectories(dir, m);
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const Trajectory& t = trajectories[i];
        std::vector<Frame> frames;
        frames.reserve(t.states.size());
        if (m.pixels) {
            const fs::path ed = fs::path(dir) / m.episodes[i].dir;
            for (std::size_t k = 0; k < t.states.size(); ++k) {
                Frame f = read_pgm((ed / frame_name(static_cast<int>(k))).string());
                if (f.rows() != m.h || f.cols() != m.w) throw IoError(ed.string() + ": frame size differs from manifest");
                frames.push_back(std::move(f));
            }
        } else {
            for (const auto& s : t.states) frames.push_back(state_frame(s));
        }
        data.episodes.push_back(assemble_episode(std::move(frames), t.actions, m.c, m.dt));
    }
    return data;
}

SequenceDataset load_sequence_dataset(const std::string& dir) { return load_sequence_dataset(dir, load_manifest(dir)); }

}  // namespace cknet
