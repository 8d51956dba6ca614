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


#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include <gtest/gtest.h>

#include "cknet/checkpoint.hpp"
#include "cknet/errors.hpp"
#include "test_support.hpp"

namespace cknet {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

KoopmanModel trained_looking_model(LatentMode mode, std::uint64_t seed) {
    TrainConfig cfg = testing::tiny_config(mode);
    cfg.seed = seed;
    cfg.head = HeadActivation::tanh;
    KoopmanModel m = init_model(cfg, Shape3{2, 8, 8}, 2, 0.05);
    std::mt19937_64 rng(seed);
    VectorXd theta = m.flat_parameters() + testing::random_matrix(m.parameter_count(), 1, rng, 0.1);
    m.set_flat_parameters(theta);
    return m;
}

TEST(Checkpoint, RoundTripIsBitExact) {
    const auto dir = testing::scratch_dir("ckpt_roundtrip");
    for (auto mode : {LatentMode::deterministic, LatentMode::variational}) {
        const KoopmanModel m = trained_looking_model(mode, 3);
        const auto path = dir / "m.ckpt";
        save_checkpoint(path.string(), m);
        const Checkpoint ck = load_checkpoint(path.string());
        EXPECT_TRUE(ck.model == m);
        EXPECT_EQ(ck.model.flat_parameters(), m.flat_parameters());
        EXPECT_EQ(ck.model.mode, mode);
        EXPECT_EQ(ck.model.dt, 0.05);
        EXPECT_FALSE(ck.training.has_value());
        const auto second = dir / "m2.ckpt";
        save_checkpoint(second.string(), ck.model);
        EXPECT_EQ(read_bytes(path), read_bytes(second));
    }
}

TEST(Checkpoint, BehaviourPreserved) {
    const auto dir = testing::scratch_dir("ckpt_behaviour");
    const KoopmanModel m = trained_looking_model(LatentMode::variational, 5);
    save_checkpoint((dir / "m.ckpt").string(), m);
    const KoopmanModel back = load_checkpoint((dir / "m.ckpt").string()).model;
    std::mt19937_64 rng(1);
    const MatrixXd x = (testing::random_matrix(128, 3, rng).array() * 0.5 + 0.5).matrix();
    EXPECT_EQ(encode(back, x), encode(m, x));
    const MatrixXd z = encode(m, x);
    EXPECT_EQ(decode(back, z), decode(m, z));
}

TEST(Checkpoint, TrainingStateRoundTrip) {
    const auto dir = testing::scratch_dir("ckpt_state");
    const KoopmanModel m = trained_looking_model(LatentMode::deterministic, 7);
    TrainState st;
    st.model = m;
    st.epoch = 42;
    std::mt19937_64 rng(2);
    st.adam.m = testing::random_matrix(m.parameter_count(), 1, rng);
    st.adam.v = testing::random_matrix(m.parameter_count(), 1, rng).cwiseAbs();
    st.adam.t = 42;
    save_checkpoint((dir / "s.ckpt").string(), m, &st);
    const Checkpoint ck = load_checkpoint((dir / "s.ckpt").string());
    ASSERT_TRUE(ck.training.has_value());
    EXPECT_EQ(ck.training->epoch, 42);
    EXPECT_EQ(ck.training->adam.t, 42);
    EXPECT_EQ(ck.training->adam.m, st.adam.m);
    EXPECT_EQ(ck.training->adam.v, st.adam.v);
    EXPECT_TRUE(ck.training->model == m);
}

TEST(Checkpoint, LinearModel) {
    const auto dir = testing::scratch_dir("ckpt_linear");
    MatrixXd A(2, 2);
    A << 0.9, 0.1, -0.1, 0.9;
    MatrixXd B(2, 1);
    B << 1.0, 0.5;
    const KoopmanModel m = linear_model(A, B, 0.1);
    EXPECT_EQ(encode(m, VectorXd::Ones(2)), MatrixXd(VectorXd::Ones(2)));
    save_checkpoint((dir / "l.ckpt").string(), m);
    const KoopmanModel back = load_checkpoint((dir / "l.ckpt").string()).model;
    EXPECT_EQ(back.A, A);
    EXPECT_EQ(back.B, B);
    EXPECT_EQ(back.latent_dim(), 2);
}

TEST(Checkpoint, RejectsCorruptFiles) {
    const auto dir = testing::scratch_dir("ckpt_corrupt");
    const KoopmanModel m = trained_looking_model(LatentMode::deterministic, 9);
    const auto good = dir / "good.ckpt";
    save_checkpoint(good.string(), m);
    const auto bytes = read_bytes(good);

    auto bad = bytes;
    bad[0] = 'X';
    write_bytes(dir / "magic.ckpt", bad);
    EXPECT_THROW(load_checkpoint((dir / "magic.ckpt").string()), IoError);

    for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        write_bytes(dir / "cut.ckpt", std::vector<char>(bytes.begin(), bytes.begin() + static_cast<long>(cut)));
        EXPECT_THROW(load_checkpoint((dir / "cut.ckpt").string()), IoError) << cut;
    }

    auto longer = bytes;
    longer.push_back('\0');
    write_bytes(dir / "long.ckpt", longer);
    EXPECT_THROW(load_checkpoint((dir / "long.ckpt").string()), IoError);

    bad = bytes;
    bad[4] = 9;  // mode byte
    write_bytes(dir / "mode.ckpt", bad);
    EXPECT_THROW(load_checkpoint((dir / "mode.ckpt").string()), IoError);

    EXPECT_THROW(load_checkpoint((dir / "missing.ckpt").string()), IoError);
}

}  // namespace
}  // namespace cknet
