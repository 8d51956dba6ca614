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

#include "cknet/commands.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cknet/checkpoint.hpp"
#include "cknet/config.hpp"
#include "cknet/csv.hpp"
#include "cknet/dataset.hpp"
#include "cknet/edmd.hpp"
#include "cknet/errors.hpp"
#include "cknet/evalreport.hpp"
#include "cknet/koopman.hpp"
#include "cknet/training.hpp"

namespace cknet {

namespace {

struct GenArgs {
    std::string system = "mountain_car";
    int episodes = 10;
    int steps = 150;
    std::string policy = "random_uniform";
    std::uint64_t seed = 0;
    std::string out;
    int height = 32, width = 32, channels = 3;
    double threshold = 0.8;
    bool no_enhance = false;
};

struct TrainArgs {
    std::string data, config, checkpoint, log, resume;
    int epochs = -1;
};

struct EvalArgs {
    std::string checkpoint, data, out, svg;
    int horizon = 60;
};

struct SpectrumArgs {
    std::string checkpoint, out, data, traces;
    int episode = 0;
};

struct PredictArgs {
    std::string checkpoint, data, out;
    int episode = 0;
    int horizon = 30;
};

struct EdmdArgs {
    std::string data, dictionary = "identity", out, spectrum;
};

void print_breakdown(std::ostream& out, const LossBreakdown& l) {
    out << "L_linear=" << format_double(l.linear) << " L_recon=" << format_double(l.recon)
        << " L_pred=" << format_double(l.pred) << " l2=" << format_double(l.l2) << " total=" << format_double(l.total)
        << "\n";
}

void check_compatible(const KoopmanModel& model, const DatasetManifest& m) {
    const Shape3 in = model.encoder.input_shape();
    const bool ok = m.pixels ? (in == Shape3{m.c, m.h, m.w}) : (in == Shape3{m.h * m.w * m.c, 1, 1});
    if (!ok) throw IoError("checkpoint input shape does not match the dataset");
}

int cmd_gen(const GenArgs& a, std::ostream& out) {
    GenConfig g;
    g.system = parse_system_kind(a.system);
    g.episodes = a.episodes;
    g.steps = a.steps;
    g.policy = parse_policy_kind(a.policy);
    g.seed = a.seed;
    g.render.h = a.height;
    g.render.w = a.width;
    g.render.c = a.channels;
    g.render.enhance_threshold = a.threshold;
    g.render.enhance = !a.no_enhance;
    const DatasetManifest m = generate_dataset(a.out, g);
    out << "wrote " << m.episodes.size() << " episodes to " << a.out << "\n";
    return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    TrainConfig cfg = a.config.empty() ? TrainConfig{} : load_train_config(a.config);
    if (a.epochs >= 0) {
        cfg.epochs = a.epochs;
        cfg.validate();
    }
    const DatasetManifest manifest = load_manifest(a.data);
    if (manifest.pixels && manifest.c != cfg.c) {
        throw ConfigError("config key 'c': " + std::to_string(cfg.c) + " does not match the dataset stack depth " +
                          std::to_string(manifest.c));
    }
    const SequenceDataset data = load_sequence_dataset(a.data, manifest);

    std::optional<TrainState> resume;
    std::vector<TrainLogEntry> log;
    if (!a.resume.empty()) {
        Checkpoint ck = load_checkpoint(a.resume);
        check_compatible(ck.model, manifest);
        TrainState s = ck.training ? std::move(*ck.training) : TrainState{};
        s.model = std::move(ck.model);
        resume = std::move(s);
        if (!a.log.empty() && std::filesystem::exists(a.log)) {
            for (const auto& e : read_train_log_csv(a.log)) {
                if (e.epoch < resume->epoch) log.push_back(e);
            }
        }
    }
    const TrainState state = train(data, cfg, std::move(resume), log);
    save_checkpoint(a.checkpoint, state.model, &state);
    if (!a.log.empty()) write_train_log_csv(a.log, log);

    out << "epochs=" << state.epoch << "\n";
    if (!log.empty()) print_breakdown(out, log.back().loss);
    out << "rank=" << controllability(state.model).rank << " latent_dim=" << state.model.latent_dim() << "\n";
    return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const DatasetManifest manifest = load_manifest(a.data);
    check_compatible(ck.model, manifest);
    const SequenceDataset data = load_sequence_dataset(a.data, manifest);
    EvalReport rep = evaluate(ck.model, data.episodes, a.horizon, a.checkpoint);
    write_eval_csv(a.out, rep);
    if (!a.svg.empty()) write_svg_line_plot(a.svg, {{"latent MAE", rep.latent_mae}}, "Latent MAE per step");
    out << "episodes=" << rep.episodes_used << " excluded=" << rep.excluded << " mae[1]=" << format_double(rep.latent_mae[0])
        << " mae[" << a.horizon << "]=" << format_double(rep.latent_mae[a.horizon - 1]) << "\n";
    return kExitOk;
}

int cmd_spectrum(const SpectrumArgs& a, std::ostream& out) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const SpectralReport rep = spectrum(ck.model);
    write_spectrum_csv(a.out, rep);
    double radius = 0.0;
    for (Eigen::Index i = 0; i < rep.mu.size(); ++i) radius = std::max(radius, std::abs(rep.mu[i]));
    out << "modes=" << rep.size() << " spectral_radius=" << format_double(radius)
        << " rank=" << rep.controllability_rank << " condition=" << format_double(rep.eigenvector_condition) << "\n";
    if (!a.traces.empty()) {
        if (a.data.empty()) throw ConfigError("--traces requires --data");
        const DatasetManifest manifest = load_manifest(a.data);
        check_compatible(ck.model, manifest);
        const SequenceDataset data = load_sequence_dataset(a.data, manifest);
        if (a.episode < 0 || a.episode >= static_cast<int>(data.episodes.size())) {
            throw ConfigError("--episode out of range");
        }
        write_eigen_traces_csv(a.traces, eigen_traces(ck.model, data.episodes[a.episode]));
    }
    return kExitOk;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const DatasetManifest manifest = load_manifest(a.data);
    check_compatible(ck.model, manifest);
    const SequenceDataset data = load_sequence_dataset(a.data, manifest);
    if (a.episode < 0 || a.episode >= static_cast<int>(data.episodes.size())) throw ConfigError("--episode out of range");
    const auto frames = rollout_images(ck.model, data.episodes[a.episode], a.horizon);
    write_frame_series(a.out, frames);
    out << "wrote " << frames.size() << " frames to " << a.out << "\n";
    return kExitOk;
}

int cmd_edmd(const EdmdArgs& a, std::ostream& out) {
    const DatasetManifest manifest = load_manifest(a.data);
    const auto trajectories = load_trajectories(a.data, manifest);
    std::vector<Eigen::VectorXd> samples;
    for (const auto& t : trajectories) samples.insert(samples.end(), t.states.begin(), t.states.end());
    const int n = static_cast<int>(samples.front().size());
    const Dictionary dict = parse_dictionary(a.dictionary, n, samples);
    const EdmdFit f = fit(build_snapshots(dict, trajectories));
    const KoopmanModel model = linear_model(f.A, f.B, manifest.dt);
    save_checkpoint(a.out, model);
    const std::string spec_path = a.spectrum.empty() ? a.out + ".spectrum.csv" : a.spectrum;
    const SpectralReport rep = spectrum(model);
    write_spectrum_csv(spec_path, rep);
    out << "dictionary=" << dict.describe() << " lifted_dim=" << dict.output_dim()
        << " residual=" << format_double(f.residual) << " rank=" << rep.controllability_rank << "\n";
    if (f.underdetermined) out << "warning: fewer snapshots than unknowns; fit is ridge-determined\n";
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Koopman latent models from pixel observations"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a dataset of rendered episodes");
    g->add_option("--system", gen.system, "mountain_car | cart_pole | linear_ref")->capture_default_str();
    g->add_option("--episodes", gen.episodes, "Number of episodes")->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--steps", gen.steps, "Transitions per episode")->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--policy", gen.policy, "random_uniform | sinusoid")->capture_default_str();
    g->add_option("--seed", gen.seed, "Dataset seed")->capture_default_str();
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_option("--height", gen.height, "Frame height")->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--width", gen.width, "Frame width")->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--channels", gen.channels, "Frames per observation")->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--threshold", gen.threshold, "Enhancement threshold")->capture_default_str();
    g->add_flag("--no-enhance", gen.no_enhance, "Keep gray levels");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train a model on a dataset");
    t->add_option("--data", tr.data, "Dataset directory")->required();
    t->add_option("--config", tr.config, "key=value configuration file");
    t->add_option("--out-checkpoint", tr.checkpoint, "Checkpoint to write")->required();
    t->add_option("--log", tr.log, "Training log CSV");
    t->add_option("--resume", tr.resume, "Checkpoint to continue from");
    t->add_option("--epochs", tr.epochs, "Total epoch count (overrides the config)")->check(CLI::NonNegativeNumber);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Latent MAE and pixel error curves");
    e->add_option("--checkpoint", ev.checkpoint)->required();
    e->add_option("--data", ev.data)->required();
    e->add_option("--horizon", ev.horizon)->check(CLI::PositiveNumber)->capture_default_str();
    e->add_option("--out", ev.out, "CSV path")->required();
    e->add_option("--svg", ev.svg, "Optional SVG plot of the MAE curve");

    SpectrumArgs sp;
    auto* s = app.add_subcommand("spectrum", "Eigenvalues of A and controllability rank");
    s->add_option("--checkpoint", sp.checkpoint)->required();
    s->add_option("--out", sp.out, "CSV path")->required();
    s->add_option("--data", sp.data, "Dataset for eigenfunction traces");
    s->add_option("--episode", sp.episode)->capture_default_str();
    s->add_option("--traces", sp.traces, "Eigenfunction trace CSV");

    PredictArgs pr;
    auto* p = app.add_subcommand("predict", "Decoded open-loop rollout as PGM frames");
    p->add_option("--checkpoint", pr.checkpoint)->required();
    p->add_option("--data", pr.data)->required();
    p->add_option("--episode", pr.episode)->capture_default_str();
    p->add_option("--horizon", pr.horizon)->check(CLI::NonNegativeNumber)->capture_default_str();
    p->add_option("--out", pr.out, "Output directory")->required();

    EdmdArgs ed;
    auto* d = app.add_subcommand("edmd", "EDMD fit on state trajectories");
    d->add_option("--data-vector", ed.data, "Dataset directory")->required();
    d->add_option("--dictionary", ed.dictionary, "identity | monomial:d | hermite:d | rbf:K:width")->capture_default_str();
    d->add_option("--out", ed.out, "Checkpoint to write")->required();
    d->add_option("--spectrum", ed.spectrum, "Spectrum CSV (default: <out>.spectrum.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& ex) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitUsage;
    }

    try {
        if (g->parsed()) return cmd_gen(gen, out);
        if (t->parsed()) return cmd_train(tr, out);
        if (e->parsed()) return cmd_eval(ev, out);
        if (s->parsed()) return cmd_spectrum(sp, out);
        if (p->parsed()) return cmd_predict(pr, out);
        if (d->parsed()) return cmd_edmd(ed, out);
    } catch (const ConfigError& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace cknet
