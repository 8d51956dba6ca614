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


#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cknet/checkpoint.hpp"
#include "cknet/errors.hpp"
#include "cknet/evalreport.hpp"
#include "test_support.hpp"

namespace cknet {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::random_matrix;

Episode vector_episode(const std::vector<VectorXd>& states, const std::vector<VectorXd>& actions) {
    std::vector<Frame> frames;
    for (const auto& s : states) frames.push_back(Frame(Eigen::Map<const Frame>(s.data(), s.size(), 1)));
    return assemble_episode(std::move(frames), actions, 1, 1.0);
}

// Episode whose states follow the model's own latent recursion exactly.
Episode pseudo_episode(const MatrixXd& A, const MatrixXd& B, int steps, std::mt19937_64& rng) {
    std::vector<VectorXd> actions;
    for (int k = 0; k < steps; ++k) actions.push_back(random_matrix(B.cols(), 1, rng));
    std::vector<VectorXd> states{random_matrix(A.rows(), 1, rng)};
    for (int k = 0; k < steps; ++k) states.push_back(A * states.back() + B * actions[k]);
    return vector_episode(states, actions);
}

Episode pixel_episode(int steps, std::uint64_t seed, int c) {
    const auto spec = SystemSpec::mountain_car();
    RenderConfig cfg;
    cfg.h = 8;
    cfg.w = 8;
    cfg.c = c;
    return render_episode(generate_trajectory(spec, PolicyKind::random_uniform, steps, seed), spec, cfg);
}

KoopmanModel pixel_model(int c, std::uint64_t seed) {
    TrainConfig cfg = testing::tiny_config();
    cfg.c = c;
    cfg.c_out = c;
    cfg.seed = seed;
    return init_model(cfg, Shape3{c, 8, 8}, 1, 1.0);
}

TEST(LatentMae, HandExample) {
    const KoopmanModel model = linear_model(MatrixXd::Identity(1, 1), MatrixXd::Zero(1, 1), 1.0);
    std::vector<VectorXd> states{VectorXd::Constant(1, 0.0), VectorXd::Constant(1, -0.1), VectorXd::Constant(1, 0.3)};
    std::vector<VectorXd> actions(2, VectorXd::Zero(1));
    const MaeCurve c = latent_mae(model, {vector_episode(states, actions)}, 2);
    ASSERT_EQ(c.curve.size(), 2);
    EXPECT_NEAR(c.curve[0], 0.1, 1e-15);
    EXPECT_NEAR(c.curve[1], 0.3, 1e-15);
    EXPECT_EQ(c.episodes_used, 1);
    EXPECT_EQ(c.excluded, 0);
}

TEST(LatentMae, AveragesOverCoordinatesAndEpisodes) {
    const KoopmanModel model = linear_model(MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1), 1.0);
    std::vector<VectorXd> actions(1, VectorXd::Zero(1));
    const Episode a = vector_episode({Eigen::Vector2d(0, 0), Eigen::Vector2d(0.2, -0.4)}, actions);
    const Episode b = vector_episode({Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1)}, actions);
    const MaeCurve c = latent_mae(model, {a, b}, 1);
    EXPECT_NEAR(c.curve[0], (0.3 + 0.0) / 2.0, 1e-15);
}

TEST(LatentMae, ZeroOnPseudoEpisodes) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const MatrixXd A = random_matrix(3, 3, rng, 0.5);
        const MatrixXd B = random_matrix(3, 2, rng);
        const KoopmanModel model = linear_model(A, B, 0.1);
        std::vector<Episode> eps;
        for (int e = 0; e < 4; ++e) eps.push_back(pseudo_episode(A, B, 20, rng));
        const MaeCurve c = latent_mae(model, eps, 20);
        EXPECT_EQ(c.curve.maxCoeff(), 0.0);
        EXPECT_EQ(c.curve.minCoeff(), 0.0);
    }
}

TEST(LatentMae, OrderIndependentAndNonNegative) {
    std::vector<Episode> eps;
    for (int e = 0; e < 5; ++e) eps.push_back(pixel_episode(12, 40 + e, 2));
    const KoopmanModel model = pixel_model(2, 3);
    const MaeCurve fwd = latent_mae(model, eps, 8);
    std::reverse(eps.begin(), eps.end());
    const MaeCurve rev = latent_mae(model, eps, 8);
    EXPECT_EQ(fwd.curve.size(), 8);
    EXPECT_GE(fwd.curve.minCoeff(), 0.0);
    EXPECT_LE((fwd.curve - rev.curve).cwiseAbs().maxCoeff(), 1e-15 * (1.0 + fwd.curve.cwiseAbs().maxCoeff()));
}

TEST(LatentMae, ShortEpisodesExcluded) {
    const KoopmanModel model = linear_model(MatrixXd::Identity(1, 1), MatrixXd::Zero(1, 1), 1.0);
    std::mt19937_64 rng(2);
    std::vector<Episode> eps{pseudo_episode(model.A, model.B, 5, rng), pseudo_episode(model.A, model.B, 2, rng)};
    const MaeCurve c = latent_mae(model, eps, 4);
    EXPECT_EQ(c.episodes_used, 1);
    EXPECT_EQ(c.excluded, 1);
    EXPECT_THROW(latent_mae(model, {eps[1]}, 4), InsufficientDataError);
    EXPECT_THROW(latent_mae(model, {}, 1), InsufficientDataError);
}

TEST(Evaluate, CurvesHaveRequestedLength) {
    std::vector<Episode> eps{pixel_episode(15, 1, 3), pixel_episode(15, 2, 3)};
    const KoopmanModel model = pixel_model(3, 5);
    const EvalReport rep = evaluate(model, eps, 10, "m");
    EXPECT_EQ(rep.latent_mae.size(), 10);
    EXPECT_EQ(rep.pixel_mse.size(), 10);
    EXPECT_GE(rep.pixel_mse.minCoeff(), 0.0);
    EXPECT_EQ(rep.episodes_used, 2);
    EXPECT_EQ(rep.model_id, "m");
}

TEST(PixelMse, ZeroForIdentityModelOnPseudoEpisodes) {
    std::mt19937_64 rng(8);
    const MatrixXd A = random_matrix(2, 2, rng, 0.5);
    const MatrixXd B = random_matrix(2, 1, rng);
    const KoopmanModel model = linear_model(A, B, 1.0);
    const MaeCurve c = pixel_mse(model, {pseudo_episode(A, B, 6, rng)}, 6);
    EXPECT_EQ(c.curve.maxCoeff(), 0.0);
}

TEST(RolloutImages, HorizonZeroIsAutoencoding) {
    const Episode ep = pixel_episode(6, 3, 2);
    const KoopmanModel model = pixel_model(2, 9);
    const auto frames = rollout_images(model, ep, 0);
    ASSERT_EQ(frames.size(), 1u);
    const MatrixXd x0 = ep.observation(0).pixels;
    const MatrixXd decoded = decode(model, encode(model, x0));
    EXPECT_EQ(frames[0].rows(), 8);
    EXPECT_EQ(frames[0].cols(), 8);
    for (Eigen::Index i = 0; i < 64; ++i) EXPECT_EQ(frames[0].data()[i], decoded(64 + i, 0));
}

TEST(RolloutImages, FramesInUnitRange) {
    const Episode ep = pixel_episode(12, 4, 3);
    const KoopmanModel model = pixel_model(3, 11);
    const auto frames = rollout_images(model, ep, 10);
    ASSERT_EQ(frames.size(), 11u);
    for (const auto& f : frames) {
        EXPECT_GE(f.minCoeff(), 0.0);
        EXPECT_LE(f.maxCoeff(), 1.0);
    }
}

TEST(RolloutImages, MatchesRecursiveRollout) {
    std::mt19937_64 rng(13);
    const MatrixXd A = random_matrix(3, 3, rng, 0.5);
    const MatrixXd B = random_matrix(3, 1, rng);
    const KoopmanModel model = linear_model(A, B, 1.0);
    const Episode ep = pseudo_episode(A, B, 7, rng);
    const auto frames = rollout_images(model, ep, 7);
    const auto latents = rollout_recursive(A, B, ep.observation(0).pixels, ep.actions);
    for (int t = 1; t <= 7; ++t) EXPECT_LE((frames[t] - Frame(latents[t - 1])).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RolloutImages, ShortEpisode) {
    const Episode ep = pixel_episode(4, 3, 2);
    EXPECT_THROW(rollout_images(pixel_model(2, 1), ep, 10), InsufficientDataError);
}

TEST(FrameSeries, WritesNumberedPgm) {
    const auto dir = testing::scratch_dir("eval_frames") / "sub";
    const Episode ep = pixel_episode(6, 3, 2);
    const auto frames = rollout_images(pixel_model(2, 1), ep, 3);
    write_frame_series(dir.string(), frames);
    for (int t = 0; t <= 3; ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04d.pgm", t);
        const Frame back = read_pgm((dir / name).string());
        EXPECT_EQ(back, quantize(frames[t]));
    }
    EXPECT_FALSE(std::filesystem::exists(dir / "frame_0004.pgm"));
}

TEST(EigenTraces, ConstantEpisodeGivesConstantTraces) {
    const KoopmanModel model = pixel_model(2, 4);
    const auto spec = SystemSpec::mountain_car();
    RenderConfig cfg;
    cfg.h = 8;
    cfg.w = 8;
    cfg.c = 2;
    std::vector<Frame> frames(6, render_frame(Eigen::Vector2d(-0.5, 0.0), spec, cfg));
    const Episode ep = assemble_episode(frames, std::vector<VectorXd>(5, VectorXd::Zero(1)), 2, 1.0);
    const Eigen::MatrixXcd traces = eigen_traces(model, ep);
    EXPECT_EQ(traces.rows(), model.latent_dim());
    EXPECT_EQ(traces.cols(), ep.observation_count());
    for (Eigen::Index k = 1; k < traces.cols(); ++k) {
        EXPECT_LE((traces.col(k) - traces.col(0)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(EigenTraces, MatchesEigenfunctionsOfEncodedEpisode) {
    const KoopmanModel model = pixel_model(3, 6);
    const Episode ep = pixel_episode(9, 5, 3);
    const Eigen::MatrixXcd traces = eigen_traces(model, ep);
    const SpectralReport rep = spectrum(model.A, model.dt);
    const MatrixXd z = encode(model, to_batch(ep.observations()));
    EXPECT_LE((traces - rep.left.adjoint() * z).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EigenTraces, CsvRoundTrip) {
    const auto dir = testing::scratch_dir("eval_traces");
    const Eigen::MatrixXcd traces = eigen_traces(pixel_model(3, 6), pixel_episode(9, 5, 3));
    const std::string path = (dir / "traces.csv").string();
    write_eigen_traces_csv(path, traces);
    EXPECT_EQ(read_eigen_traces_csv(path), traces);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "step,mode,re,im");
}

TEST(EvalCsv, Columns) {
    const auto dir = testing::scratch_dir("eval_csv");
    EvalReport rep;
    rep.latent_mae = VectorXd::LinSpaced(3, 0.1, 0.3);
    rep.pixel_mse = VectorXd::LinSpaced(3, 1.0, 3.0);
    const std::string path = (dir / "eval.csv").string();
    write_eval_csv(path, rep);
    std::ifstream in(path);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "step,latent_mae,pixel_mse");
    EXPECT_EQ(lines[1].substr(0, 2), "1,");
}

TEST(Svg, ContainsOnePolylinePerSeries) {
    const std::string svg = svg_line_plot({{"a", VectorXd::LinSpaced(5, 0, 1)}, {"b", VectorXd::Constant(5, 0.5)}},
                                          "MAE & more");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    std::size_t count = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) {
        ++count;
    }
    EXPECT_EQ(count, 2u);
    EXPECT_NE(svg.find("&amp;"), std::string::npos);
}

}  // namespace
}  // namespace cknet
