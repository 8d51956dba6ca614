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

#include "cknet/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cknet/csv.hpp"
#include "cknet/errors.hpp"

namespace cknet {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

void KoopmanModel::validate() const {
    if (A.rows() < 1 || A.rows() != A.cols()) throw ShapeError("A must be a non-empty square matrix");
    if (B.rows() != A.rows()) throw ShapeError("B must have as many rows as A");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    const Index head = mode == LatentMode::variational ? 2 * A.rows() : A.rows();
    if (encoder.output_shape().size() != head) throw ShapeError("encoder head does not match the latent dimension");
    if (decoder.input_shape().size() != A.rows()) throw ShapeError("decoder input does not match the latent dimension");
}

Index KoopmanModel::parameter_count() const {
    return encoder.parameter_count() + decoder.parameter_count() + A.size() + B.size();
}

VectorXd KoopmanModel::flat_parameters() const {
    VectorXd theta(parameter_count());
    Index o = 0;
    theta.segment(o, encoder.parameter_count()) = encoder.parameters();
    o += encoder.parameter_count();
    theta.segment(o, decoder.parameter_count()) = decoder.parameters();
    o += decoder.parameter_count();
    theta.segment(o, A.size()) = A.reshaped();
    o += A.size();
    theta.segment(o, B.size()) = B.reshaped();
    return theta;
}

void KoopmanModel::set_flat_parameters(const VectorXd& theta) {
    if (theta.size() != parameter_count()) throw ShapeError("flat parameter vector has the wrong length");
    Index o = 0;
    encoder.parameters() = theta.segment(o, encoder.parameter_count());
    o += encoder.parameter_count();
    decoder.parameters() = theta.segment(o, decoder.parameter_count());
    o += decoder.parameter_count();
    A.reshaped() = theta.segment(o, A.size());
    o += A.size();
    B.reshaped() = theta.segment(o, B.size());
}

bool KoopmanModel::operator==(const KoopmanModel& other) const {
    return encoder == other.encoder && decoder == other.decoder && A.rows() == other.A.rows() &&
           A.cols() == other.A.cols() && B.rows() == other.B.rows() && B.cols() == other.B.cols() && A == other.A &&
           B == other.B && mode == other.mode && dt == other.dt;
}

namespace {

void check_rollout_dims(const MatrixXd& A, const MatrixXd& B, const VectorXd& phi0,
                        const std::vector<VectorXd>& actions) {
    if (A.rows() != A.cols() || phi0.size() != A.rows() || B.rows() != A.rows()) {
        throw ShapeError("rollout: A, B and phi0 dimensions disagree");
    }
    for (const auto& u : actions) {
        if (u.size() != B.cols()) throw ShapeError("rollout: action dimension does not match B");
    }
}

}  // namespace

VectorXd rollout_closed_form(const MatrixXd& A, const MatrixXd& B, const VectorXd& phi0,
                             const std::vector<VectorXd>& actions) {
    check_rollout_dims(A, B, phi0, actions);
    const std::size_t i = actions.size();
    MatrixXd power = MatrixXd::Identity(A.rows(), A.cols());  // A^{j-1}
    VectorXd forced = VectorXd::Zero(A.rows());
    for (std::size_t j = 1; j <= i; ++j) {
        forced += power * (B * actions[i - j]);
        power = A * power;
    }
    return power * phi0 + forced;
}

VectorXd rollout_closed_form(const KoopmanModel& model, const VectorXd& phi0, const std::vector<VectorXd>& actions) {
    return rollout_closed_form(model.A, model.B, phi0, actions);
}

std::vector<VectorXd> rollout_recursive(const MatrixXd& A, const MatrixXd& B, const VectorXd& phi0,
                                        const std::vector<VectorXd>& actions) {
    check_rollout_dims(A, B, phi0, actions);
    std::vector<VectorXd> out;
    out.reserve(actions.size());
    VectorXd phi = phi0;
    for (const auto& u : actions) {
        phi = A * phi + B * u;
        out.push_back(phi);
    }
    return out;
}

std::vector<VectorXd> rollout_recursive(const KoopmanModel& model, const VectorXd& phi0,
                                        const std::vector<VectorXd>& actions) {
    return rollout_recursive(model.A, model.B, phi0, actions);
}

SpectralReport spectrum(const MatrixXd& A, double dt) {
    if (A.rows() < 1 || A.rows() != A.cols()) throw ShapeError("spectrum needs a non-empty square matrix");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!A.allFinite()) throw NumericalError("state-transition matrix has non-finite entries");
    const Index n = A.rows();

    Eigen::EigenSolver<MatrixXd> solver(A, true);
    if (solver.info() != Eigen::Success) throw NumericalError("eigen-decomposition did not converge");
    const VectorXcd mu_raw = solver.eigenvalues();
    MatrixXcd vec_raw = solver.eigenvectors();
    for (Index j = 0; j < n; ++j) vec_raw.col(j).normalize();

    // Order: |mu| descending; near-equal magnitudes by real, then imaginary part.
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(mu_raw[a]) > std::abs(mu_raw[b]); });
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    const double tie = 1e-12 * scale;
    for (Index start = 0; start < n;) {
        Index end = start + 1;
        while (end < n && std::abs(std::abs(mu_raw[order[start]]) - std::abs(mu_raw[order[end]])) <= tie) ++end;
        std::stable_sort(order.begin() + start, order.begin() + end, [&](Index a, Index b) {
            if (std::abs(mu_raw[a].real() - mu_raw[b].real()) > tie) return mu_raw[a].real() > mu_raw[b].real();
            return mu_raw[a].imag() > mu_raw[b].imag();
        });
        start = end;
    }

    SpectralReport r;
    r.dt = dt;
    r.mu.resize(n);
    r.right.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        r.mu[j] = mu_raw[order[j]];
        r.right.col(j) = vec_raw.col(order[j]);
    }

    Eigen::JacobiSVD<MatrixXcd> svd(r.right);
    const auto& sv = svd.singularValues();
    const double smin = sv[sv.size() - 1];
    r.eigenvector_condition = smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity();
    if (!(r.eigenvector_condition <= kDefectiveConditionLimit)) {
        throw NumericalError("state-transition matrix is not diagonalizable (eigenvector condition " +
                             format_double(r.eigenvector_condition) + ")");
    }
    // W^* = Xi^{-1}
    r.left = r.right.partialPivLu().inverse().adjoint();

    r.lambda.resize(n);
    r.lambda_finite.assign(n, true);
    for (Index j = 0; j < n; ++j) {
        if (std::abs(r.mu[j]) < kZeroEigenvalue) {
            r.lambda[j] = {-std::numeric_limits<double>::infinity(), 0.0};
            r.lambda_finite[j] = false;
        } else {
            r.lambda[j] = std::log(r.mu[j]) / dt;
        }
    }
    return r;
}

SpectralReport spectrum(const KoopmanModel& model) {
    SpectralReport r = spectrum(model.A, model.dt);
    r.controllability_rank = controllability(model.A, model.B).rank;
    return r;
}

MatrixXcd eigenfunctions(const SpectralReport& report, const MatrixXd& latents) {
    if (latents.rows() != report.left.rows()) throw ShapeError("latent dimension does not match the spectral report");
    return report.left.adjoint() * latents.cast<std::complex<double>>();
}

KoopmanModes koopman_modes(const MatrixXd& states, const MatrixXd& latents, const SpectralReport& report,
                           double eps) {
    const Index v = latents.rows();
    if (states.cols() != latents.cols()) throw ShapeError("states and latents need the same number of snapshots");
    if (report.right.rows() != v) throw ShapeError("spectral report does not match the latent dimension");
    if (latents.cols() < v) throw InsufficientDataError("need at least as many snapshots as latent coordinates");
    const MatrixXd gram = latents * latents.transpose();
    KoopmanModes out;
    out.regularization = eps >= 0.0 ? eps : 1e-10 * gram.trace() / static_cast<double>(v);
    const MatrixXd reg = gram + out.regularization * MatrixXd::Identity(v, v);
    Eigen::LDLT<MatrixXd> ldlt(reg);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
        throw NumericalError("latent Gram matrix is rank deficient beyond regularization");
    }
    // weight = X Phi^T G^{-1}  <=>  G weight^T = Phi X^T
    out.weight = ldlt.solve(latents * states.transpose()).transpose();
    out.modes = out.weight.cast<std::complex<double>>() * report.right;
    return out;
}

Controllability controllability(const MatrixXd& A, const MatrixXd& B) {
    if (A.rows() != A.cols() || B.rows() != A.rows()) throw ShapeError("controllability: A/B dimensions disagree");
    const Index v = A.rows(), n = B.cols();
    Controllability c;
    c.matrix.resize(v, v * n);
    MatrixXd block = B;
    for (Index j = 0; j < v; ++j) {
        c.matrix.middleCols(j * n, n) = block;
        block = A * block;
    }
    Eigen::JacobiSVD<MatrixXd> svd(c.matrix);
    c.singular_values = svd.singularValues();
    const double smax = c.singular_values.size() ? c.singular_values[0] : 0.0;
    const double tol = static_cast<double>(v) * std::numeric_limits<double>::epsilon() * smax;
    c.rank = 0;
    for (Index j = 0; j < c.singular_values.size(); ++j) {
        if (c.singular_values[j] > tol) ++c.rank;
    }
    c.controllable = c.rank == v;
    return c;
}

Controllability controllability(const KoopmanModel& model) { return controllability(model.A, model.B); }

MatrixXd to_batch(const std::vector<Observation>& observations) {
    if (observations.empty()) return {};
    const Index rows = observations.front().pixels.size();
    MatrixXd batch(rows, static_cast<Index>(observations.size()));
    for (std::size_t j = 0; j < observations.size(); ++j) {
        if (observations[j].pixels.size() != rows) throw ShapeError("observations differ in size");
        batch.col(static_cast<Index>(j)) = observations[j].pixels;
    }
    return batch;
}

MatrixXd encode(const KoopmanModel& model, const MatrixXd& observations) {
    MatrixXd head = model.encoder.predict(observations);
    if (model.mode == LatentMode::variational) return head.topRows(model.latent_dim());
    return head;
}

MatrixXd encode(const KoopmanModel& model, const MatrixXd& observations, const MatrixXd& noise) {
    if (model.mode != LatentMode::variational) throw ConfigError("noisy encoding requires a variational model");
    const Index v = model.latent_dim();
    if (noise.rows() != v || noise.cols() != observations.cols()) throw ShapeError("noise batch has the wrong shape");
    const MatrixXd head = model.encoder.predict(observations);
    return head.topRows(v) + ((0.5 * head.bottomRows(v).array()).exp() * noise.array()).matrix();
}

MatrixXd decode(const KoopmanModel& model, const MatrixXd& latents) {
    if (latents.rows() != model.latent_dim()) throw ShapeError("latent batch has the wrong dimension");
    return model.decoder.predict(latents);
}

void write_spectrum_csv(const std::string& path, const SpectralReport& report) {
    NumericTable t;
    t.header = {"mode_index", "mu_re", "mu_im", "lambda_re", "lambda_im", "abs_mu"};
    for (int j = 0; j < report.size(); ++j) {
        t.rows.push_back({static_cast<double>(j), report.mu[j].real(), report.mu[j].imag(), report.lambda[j].real(),
                          report.lambda[j].imag(), std::abs(report.mu[j])});
    }
    write_numeric_csv(path, t);
}

}  // namespace cknet
