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

#include <cmath>
#include <complex>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "cknet/errors.hpp"
#include "cknet/koopman.hpp"
#include "test_support.hpp"

namespace cknet {
namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::random_matrix;
using cd = std::complex<double>;

// Random matrix rescaled to a prescribed spectral radius.
MatrixXd with_radius(MatrixXd A, double radius) {
    const double r = A.eigenvalues().cwiseAbs().maxCoeff();
    return A * (radius / r);
}

std::vector<VectorXd> random_actions(int count, int n, std::mt19937_64& rng) {
    std::vector<VectorXd> out;
    for (int i = 0; i < count; ++i) out.push_back(random_matrix(n, 1, rng));
    return out;
}

TEST(Rollout, EmptySequenceReturnsStart) {
    std::mt19937_64 rng(1);
    const MatrixXd A = random_matrix(3, 3, rng), B = random_matrix(3, 2, rng);
    const VectorXd phi0 = random_matrix(3, 1, rng);
    EXPECT_EQ(rollout_closed_form(A, B, phi0, {}), phi0);
    EXPECT_TRUE(rollout_recursive(A, B, phi0, {}).empty());
}

TEST(Rollout, OneStep) {
    std::mt19937_64 rng(2);
    const MatrixXd A = random_matrix(3, 3, rng), B = random_matrix(3, 2, rng);
    const VectorXd phi0 = random_matrix(3, 1, rng);
    const auto u = random_actions(1, 2, rng);
    EXPECT_LT((rollout_closed_form(A, B, phi0, u) - (A * phi0 + B * u[0])).norm(), 1e-15);
}

TEST(Rollout, IdentityAndMemoryless) {
    std::mt19937_64 rng(3);
    const VectorXd phi0 = random_matrix(2, 1, rng);
    const auto u = random_actions(5, 1, rng);
    for (const auto& z : rollout_recursive(MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1), phi0, u)) EXPECT_EQ(z, phi0);
    const MatrixXd B = random_matrix(2, 1, rng);
    const auto zs = rollout_recursive(MatrixXd::Zero(2, 2), B, phi0, u);
    for (int k = 1; k <= 5; ++k) EXPECT_EQ(zs[k - 1], B * u[k - 1]);
}

TEST(Rollout, ClosedFormMatchesRecursion) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> dim(1, 8), act(1, 3), horizon(0, 25);
    std::uniform_real_distribution<double> radius(0.1, 1.2);
    for (int trial = 0; trial < 100; ++trial) {
        const int v = dim(rng), n = act(rng), i = horizon(rng);
        const MatrixXd A = with_radius(random_matrix(v, v, rng), radius(rng));
        const MatrixXd B = random_matrix(v, n, rng);
        const VectorXd phi0 = random_matrix(v, 1, rng);
        const auto u = random_actions(i, n, rng);
        const VectorXd closed = rollout_closed_form(A, B, phi0, u);
        const VectorXd rec = i == 0 ? phi0 : rollout_recursive(A, B, phi0, u).back();
        EXPECT_LT((closed - rec).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Rollout, DimensionMismatch) {
    EXPECT_THROW(rollout_closed_form(MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1), VectorXd::Zero(3), {}), ShapeError);
    EXPECT_THROW(rollout_recursive(MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1), VectorXd::Zero(2), {VectorXd::Zero(2)}),
                 ShapeError);
}

TEST(Spectrum, DiagonalSorted) {
    const SpectralReport r = spectrum(MatrixXd(Eigen::Vector2d(0.5, 0.8).asDiagonal()), 0.3);
    EXPECT_NEAR(r.mu[0].real(), 0.8, 1e-15);
    EXPECT_NEAR(r.mu[1].real(), 0.5, 1e-15);
    EXPECT_EQ(r.mu[0].imag(), 0.0);
}

TEST(Spectrum, ScaledIdentityInvertsExponential) {
    const double lambda = -0.5, dt = 0.1;
    const SpectralReport r = spectrum(std::exp(lambda * dt) * MatrixXd::Identity(3, 3), dt);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(r.mu[i].real(), 0.951229424500714, 1e-15);
        EXPECT_NEAR(r.lambda[i].real(), -0.5, 1e-14);
        EXPECT_NEAR(r.lambda[i].imag(), 0.0, 1e-14);
    }
}

TEST(Spectrum, RotationScaling) {
    const double r = 0.97, omega = 2.0, dt = 0.05, th = omega * dt;
    MatrixXd A(2, 2);
    A << r * std::cos(th), -r * std::sin(th), r * std::sin(th), r * std::cos(th);
    const SpectralReport rep = spectrum(A, dt);
    // conjugate pair, positive imaginary part first
    EXPECT_NEAR(std::abs(rep.mu[0] - std::polar(r, th)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(rep.mu[1] - std::polar(r, -th)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(rep.lambda[0] - cd(std::log(r) / dt, omega)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(rep.lambda[1] - cd(std::log(r) / dt, -omega)), 0.0, 1e-12);
}

TEST(Spectrum, TieBreakByRealThenImaginary) {
    MatrixXd A = MatrixXd::Zero(4, 4);
    A(0, 0) = -0.6;
    A(1, 1) = 0.6;
    A.block(2, 2, 2, 2) << 0.0, -0.6, 0.6, 0.0;  // +-0.6i
    const SpectralReport r = spectrum(A, 1.0);
    EXPECT_NEAR(r.mu[0].real(), 0.6, 1e-15);
    EXPECT_NEAR(r.mu[1].imag(), 0.6, 1e-15);
    EXPECT_NEAR(r.mu[2].imag(), -0.6, 1e-15);
    EXPECT_NEAR(r.mu[3].real(), -0.6, 1e-15);
}

TEST(Spectrum, ZeroEigenvalueSentinel) {
    const SpectralReport r = spectrum(MatrixXd(Eigen::Vector2d(0.5, 0.0).asDiagonal()), 1.0);
    EXPECT_TRUE(r.lambda_finite[0]);
    EXPECT_FALSE(r.lambda_finite[1]);
    EXPECT_TRUE(std::isinf(r.lambda[1].real()));
    EXPECT_LT(r.lambda[1].real(), 0.0);
}

TEST(Spectrum, DefectiveMatrixThrows) {
    MatrixXd J(2, 2);
    J << 0.9, 1.0, 0.0, 0.9;
    EXPECT_THROW(spectrum(J, 1.0), NumericalError);
}

TEST(Spectrum, ConsistencyProperties) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 30; ++trial) {
        const int v = 2 + trial % 7;
        const MatrixXd A = random_matrix(v, v, rng);
        const SpectralReport r = spectrum(A, 0.2);
        const MatrixXcd Ac = A.cast<cd>();
        const MatrixXcd recon = r.right * r.mu.asDiagonal() * r.right.inverse();
        EXPECT_LT((recon - Ac).norm() / A.norm(), 1e-8);
        EXPECT_LT((r.left.adjoint() * r.right - MatrixXcd::Identity(v, v)).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT((r.left.adjoint() * Ac - r.mu.asDiagonal() * r.left.adjoint()).norm() / A.norm(), 1e-8);
        for (int i = 0; i < v; ++i) {
            EXPECT_NEAR(r.right.col(i).norm(), 1.0, 1e-12);
            if (i > 0) EXPECT_GE(std::abs(r.mu[i - 1]) + 1e-12, std::abs(r.mu[i]));
            const bool off_cut = !(r.mu[i].imag() == 0.0 && r.mu[i].real() < 0.0);
            if (off_cut && r.lambda_finite[i]) EXPECT_LT(std::abs(std::exp(r.lambda[i] * 0.2) - r.mu[i]), 1e-13);
        }
    }
}

TEST(Eigenfunctions, DiagonalGivesCoordinates) {
    const MatrixXd A = Eigen::Vector3d(0.9, 0.5, 0.2).asDiagonal();
    const SpectralReport r = spectrum(A, 1.0);
    std::mt19937_64 rng(7);
    const MatrixXd phi = random_matrix(3, 5, rng);
    const MatrixXcd psi = eigenfunctions(r, phi);
    for (int i = 0; i < 3; ++i) {
        // unit-norm real eigenvectors are +-e_i
        EXPECT_LT((psi.row(i).cwiseAbs() - phi.row(i).cwiseAbs()).norm(), 1e-14);
    }
}

TEST(Eigenfunctions, ConstantSequenceAndOneStepConsistency) {
    std::mt19937_64 rng(8);
    const MatrixXd A = with_radius(random_matrix(4, 4, rng), 0.95);
    const SpectralReport r = spectrum(A, 1.0);
    const VectorXd phi0 = random_matrix(4, 1, rng);
    MatrixXd constant(4, 3);
    constant << phi0, phi0, phi0;
    const MatrixXcd c = eigenfunctions(r, constant);
    EXPECT_LT((c.col(0) - c.col(2)).norm(), 1e-15);

    MatrixXd seq(4, 6);
    seq.col(0) = phi0;
    for (int k = 1; k < 6; ++k) seq.col(k) = A * seq.col(k - 1);
    const MatrixXcd psi = eigenfunctions(r, seq);
    for (int k = 0; k + 1 < 6; ++k) EXPECT_LT((psi.col(k + 1) - r.mu.asDiagonal() * psi.col(k)).norm(), 1e-12);
    EXPECT_THROW(eigenfunctions(r, MatrixXd::Zero(3, 2)), ShapeError);
}

TEST(KoopmanModes, SelfRegressionAndScaling) {
    std::mt19937_64 rng(9);
    const MatrixXd A = with_radius(random_matrix(3, 3, rng), 0.9);
    const SpectralReport r = spectrum(A, 1.0);
    const MatrixXd phi = random_matrix(3, 40, rng);
    EXPECT_LT((koopman_modes(phi, phi, r, 0.0).weight - MatrixXd::Identity(3, 3)).norm(), 1e-12);
    EXPECT_LT((koopman_modes(2.5 * phi, phi, r, 0.0).weight - 2.5 * MatrixXd::Identity(3, 3)).norm(), 1e-12);
    const MatrixXd R = random_matrix(5, 3, rng);
    const MatrixXd X = R * phi;
    const KoopmanModes m = koopman_modes(X, phi, r);
    EXPECT_LT((X - m.weight * phi).norm() / X.norm(), 1e-8);
    EXPECT_LT((m.modes - m.weight.cast<cd>() * r.right).norm(), 1e-12);
    EXPECT_THROW(koopman_modes(X.leftCols(2), phi.leftCols(2), r), InsufficientDataError);
}

TEST(Controllability, Examples) {
    const Controllability c1 = controllability(MatrixXd::Identity(2, 2), MatrixXd(Eigen::Vector2d(1, 0)));
    EXPECT_EQ(c1.rank, 1);
    EXPECT_FALSE(c1.controllable);
    EXPECT_EQ(c1.matrix.cols(), 2);

    const Controllability c2 = controllability(MatrixXd(Eigen::Vector2d(0.5, 0.8).asDiagonal()),
                                               MatrixXd(Eigen::Vector2d(1, 1)));
    MatrixXd expected(2, 2);
    expected << 1, 0.5, 1, 0.8;
    EXPECT_LT((c2.matrix - expected).norm(), 1e-15);
    EXPECT_EQ(c2.rank, 2);
    EXPECT_TRUE(c2.controllable);

    EXPECT_EQ(controllability(MatrixXd::Identity(3, 3), MatrixXd::Zero(3, 2)).rank, 0);
}

TEST(Controllability, InvariantUnderCoordinateChange) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const int v = 2 + trial % 5;
        const MatrixXd A = random_matrix(v, v, rng);
        MatrixXd B = random_matrix(v, 1, rng);
        if (trial % 3 == 0) B.bottomRows(1).setZero();
        const MatrixXd T = random_matrix(v, v, rng) + 3.0 * MatrixXd::Identity(v, v);
        const Controllability c = controllability(A, B);
        const Controllability ct = controllability(T * A * T.inverse(), T * B);
        EXPECT_EQ(c.rank, ct.rank);
        EXPECT_GE(c.rank, 0);
        EXPECT_LE(c.rank, v);
    }
}

KoopmanModel small_model(LatentMode mode) {
    ArchitectureConfig a;
    a.c = 2;
    a.h = a.w = 8;
    a.c_out = 2;
    a.latent_dim = 3;
    a.mode = mode;
    a.conv1_channels = 2;
    a.conv2_channels = 2;
    a.hidden = 6;
    KoopmanModel m;
    m.encoder = build_encoder(a);
    m.decoder = build_decoder(a);
    m.encoder.initialize(1);
    m.decoder.initialize(2);
    m.A = MatrixXd::Identity(3, 3);
    m.B = MatrixXd::Ones(3, 1);
    m.mode = mode;
    return m;
}

TEST(EncodeDecode, ShapesAndRange) {
    const KoopmanModel m = small_model(LatentMode::deterministic);
    std::mt19937_64 rng(11);
    const MatrixXd x = random_matrix(128, 4, rng).cwiseAbs();
    const MatrixXd z = encode(m, x);
    EXPECT_EQ(z.rows(), 3);
    const MatrixXd y = decode(m, z);
    EXPECT_EQ(y.rows(), 128);
    EXPECT_GT(y.minCoeff(), 0.0);
    EXPECT_LT(y.maxCoeff(), 1.0);
    EXPECT_THROW(encode(m, x, MatrixXd::Zero(3, 4)), ConfigError);
    EXPECT_THROW(decode(m, MatrixXd::Zero(4, 1)), ShapeError);
}

TEST(EncodeDecode, VariationalEvalModeIsMean) {
    const KoopmanModel m = small_model(LatentMode::variational);
    std::mt19937_64 rng(12);
    const MatrixXd x = random_matrix(128, 3, rng).cwiseAbs();
    const MatrixXd head = m.encoder.predict(x);
    EXPECT_EQ(encode(m, x), head.topRows(3));
    const MatrixXd noise = random_matrix(3, 3, rng);
    const MatrixXd sampled = encode(m, x, noise);
    const MatrixXd expected = head.topRows(3).array() + (0.5 * head.bottomRows(3).array()).exp() * noise.array();
    EXPECT_LT((sampled - expected).norm(), 1e-14);
}

TEST(KoopmanModel, FlatParametersRoundTrip) {
    KoopmanModel m = small_model(LatentMode::deterministic);
    std::mt19937_64 rng(13);
    const VectorXd theta = random_matrix(m.parameter_count(), 1, rng);
    m.set_flat_parameters(theta);
    EXPECT_EQ(m.flat_parameters(), theta);
    EXPECT_EQ(m.A.reshaped(), theta.segment(m.encoder.parameter_count() + m.decoder.parameter_count(), 9));
    EXPECT_THROW(m.set_flat_parameters(theta.head(3)), ShapeError);
}

TEST(SpectrumCsv, Columns) {
    const SpectralReport r = spectrum(MatrixXd(Eigen::Vector2d(0.5, 0.8).asDiagonal()), 0.5);
    const auto path = (testing::scratch_dir("spectrum") / "s.csv").string();
    write_spectrum_csv(path, r);
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header, "mode_index,mu_re,mu_im,lambda_re,lambda_im,abs_mu");
}

}  // namespace
}  // namespace cknet
