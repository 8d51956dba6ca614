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

#include "cknet/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cknet/csv.hpp"
#include "cknet/errors.hpp"

namespace cknet {

namespace {

template <typename Int = long long>
Int parse_integer(const std::string& key, const std::string& value) {
    Int out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': not an integer: '" + value + "'");
    return out;
}

int parse_int(const std::string& key, const std::string& value) {
    const long long v = parse_integer(key, value);
    if (v < -2147483647LL || v > 2147483647LL) throw ConfigError("config key '" + key + "': out of range");
    return static_cast<int>(v);
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        return parse_double(value);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
    }
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"alpha1", [](TrainConfig& c, const std::string& k, const std::string& v) { c.alpha1 = parse_real(k, v); }},
        {"alpha2", [](TrainConfig& c, const std::string& k, const std::string& v) { c.alpha2 = parse_real(k, v); }},
        {"alpha3", [](TrainConfig& c, const std::string& k, const std::string& v) { c.alpha3 = parse_real(k, v); }},
        {"alpha4", [](TrainConfig& c, const std::string& k, const std::string& v) { c.alpha4 = parse_real(k, v); }},
        {"tau_l", [](TrainConfig& c, const std::string& k, const std::string& v) { c.tau_l = parse_real(k, v); }},
        {"tau_p", [](TrainConfig& c, const std::string& k, const std::string& v) { c.tau_p = parse_real(k, v); }},
        {"p", [](TrainConfig& c, const std::string& k, const std::string& v) { c.p = parse_int(k, v); }},
        {"p_l", [](TrainConfig& c, const std::string& k, const std::string& v) { c.p_l = parse_int(k, v); }},
        {"p_p", [](TrainConfig& c, const std::string& k, const std::string& v) { c.p_p = parse_int(k, v); }},
        {"latent_dim", [](TrainConfig& c, const std::string& k, const std::string& v) { c.latent_dim = parse_int(k, v); }},
        {"c", [](TrainConfig& c, const std::string& k, const std::string& v) { c.c = parse_int(k, v); }},
        {"c_out", [](TrainConfig& c, const std::string& k, const std::string& v) { c.c_out = parse_int(k, v); }},
        {"lr", [](TrainConfig& c, const std::string& k, const std::string& v) { c.lr = parse_real(k, v); }},
        {"batch_size", [](TrainConfig& c, const std::string& k, const std::string& v) { c.batch_size = parse_int(k, v); }},
        {"epochs", [](TrainConfig& c, const std::string& k, const std::string& v) { c.epochs = parse_int(k, v); }},
        {"seed",
         [](TrainConfig& c, const std::string& k, const std::string& v) {
             c.seed = parse_integer<std::uint64_t>(k, v);
         }},
        {"mode",
         [](TrainConfig& c, const std::string& k, const std::string& v) {
             try {
                 c.mode = parse_latent_mode(v);
             } catch (const std::exception&) {
                 throw ConfigError("config key '" + k + "': unknown mode '" + v + "'");
             }
         }},
        {"rank_check_interval",
         [](TrainConfig& c, const std::string& k, const std::string& v) { c.rank_check_interval = parse_int(k, v); }},
        {"head",
         [](TrainConfig& c, const std::string& k, const std::string& v) {
             if (v == "none") c.head = HeadActivation::none;
             else if (v == "tanh") c.head = HeadActivation::tanh;
             else throw ConfigError("config key '" + k + "': expected none or tanh, got '" + v + "'");
         }},
        {"conv1_channels",
         [](TrainConfig& c, const std::string& k, const std::string& v) { c.conv1_channels = parse_int(k, v); }},
        {"conv2_channels",
         [](TrainConfig& c, const std::string& k, const std::string& v) { c.conv2_channels = parse_int(k, v); }},
        {"hidden", [](TrainConfig& c, const std::string& k, const std::string& v) { c.hidden = parse_int(k, v); }},
    };
    return table;
}

// Maps a validation failure back to the key most likely responsible.
std::string blame(const std::string& message) {
    for (const char* key : {"rank_check_interval", "batch_size", "latent_dim", "c_out", "tau_l", "tau_p", "epochs", "lr",
                            "p_l", "p_p"}) {
        if (message.find(key) != std::string::npos) return key;
    }
    return "";
}

}  // namespace

TrainConfig parse_train_config(const std::string& text, TrainConfig base) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value, got '" + t + "'");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError("config key '" + key + "': unknown key");
        if (value.empty()) throw ConfigError("config key '" + key + "': empty value");
        it->second(base, key, value);
    }
    try {
        base.validate();
    } catch (const ConfigError& e) {
        const std::string key = blame(e.what());
        if (key.empty()) throw;
        throw ConfigError("config key '" + key + "': " + e.what());
    }
    return base;
}

TrainConfig load_train_config(const std::string& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_train_config(ss.str(), base);
}

std::string format_train_config(const TrainConfig& cfg) {
    std::ostringstream o;
    o << "alpha1=" << format_double(cfg.alpha1) << "\nalpha2=" << format_double(cfg.alpha2)
      << "\nalpha3=" << format_double(cfg.alpha3) << "\nalpha4=" << format_double(cfg.alpha4)
      << "\ntau_l=" << format_double(cfg.tau_l) << "\ntau_p=" << format_double(cfg.tau_p) << "\np=" << cfg.p
      << "\np_l=" << cfg.p_l << "\np_p=" << cfg.p_p << "\nlatent_dim=" << cfg.latent_dim << "\nc=" << cfg.c
      << "\nc_out=" << cfg.c_out << "\nlr=" << format_double(cfg.lr) << "\nbatch_size=" << cfg.batch_size
      << "\nepochs=" << cfg.epochs << "\nseed=" << cfg.seed << "\nmode=" << to_string(cfg.mode)
      << "\nrank_check_interval=" << cfg.rank_check_interval
      << "\nhead=" << (cfg.head == HeadActivation::tanh ? "tanh" : "none") << "\nconv1_channels=" << cfg.conv1_channels
      << "\nconv2_channels=" << cfg.conv2_channels << "\nhidden=" << cfg.hidden << "\n";
    return o.str();
}

}  // namespace cknet
