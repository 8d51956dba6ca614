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

#ifndef CKNET_KOOPMAN_HPP
#define CKNET_KOOPMAN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cknet/netcore.hpp"
#include "cknet/render.hpp"

namespace cknet {

/// Latent linear model phi(x_{k+1}) = A phi(x_k) + B u_k with its encoder/decoder.
struct KoopmanModel {
    Network encoder;
    Network decoder;
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    LatentMode mode = LatentMode::deterministic;
    double dt = 1.0;

    int latent_dim() const { return static_cast<int>(A.rows()); }
    int action_dim() const { return static_cast<int>(B.cols()); }

    void validate() const;

    // Encoder, decoder, vec(A), vec(B) concatenated (column-major matrices).
    Eigen::Index parameter_count() const;
    Eigen::VectorXd flat_parameters() const;
    void set_flat_parameters(const Eigen::VectorXd& theta);

    bool operator==(const KoopmanModel& other) const;
};

// A^i phi0 + sum_{j=1..i} A^{j-1} B u_{i-j}
Eigen::VectorXd rollout_closed_form(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::VectorXd& phi0,
                                    const std::vector<Eigen::VectorXd>& actions);
Eigen::VectorXd rollout_closed_form(const KoopmanModel& model, const Eigen::VectorXd& phi0,
                                    const std::vector<Eigen::VectorXd>& actions);

// Latents 1..i of phi_{k+1} = A phi_k + B u_k.
std::vector<Eigen::VectorXd> rollout_recursive(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                               const Eigen::VectorXd& phi0,
                                               const std::vector<Eigen::VectorXd>& actions);
std::vector<Eigen::VectorXd> rollout_recursive(const KoopmanModel& model, const Eigen::VectorXd& phi0,
                                               const std::vector<Eigen::VectorXd>& actions);

/**
 * @brief Eigen-structure of the state-transition matrix.
 *
 * Eigenvalues are sorted by |mu| descending, then real part, then imaginary
 * part (both descending), so conjugate pairs sit next to each other. Right
 * eigenvectors have unit norm; left eigenvectors are scaled so W^* Xi = I.
 */
struct SpectralReport {
    double dt = 1.0;
    Eigen::VectorXcd mu;
    // ln(mu) / dt on the principal branch; -inf real part when |mu| < 1e-12.
    Eigen::VectorXcd lambda;
    std::vector<bool> lambda_finite;
    Eigen::MatrixXcd right;  // Xi, one eigenvector per column
    Eigen::MatrixXcd left;   // W, one eigenvector per column
    double eigenvector_condition = 0.0;
    int controllability_rank = -1;  // -1 when B was not supplied

    int size() const { return static_cast<int>(mu.size()); }
};

inline constexpr double kDefectiveConditionLimit = 1e12;
inline constexpr double kZeroEigenvalue = 1e-12;

// Throws NumericalError when A is defective (eigenvector condition number > 1e12).
SpectralReport spectrum(const Eigen::MatrixXd& A, double dt);
SpectralReport spectrum(const KoopmanModel& model);

// psi_k = W^* phi_k per column; rows follow the report's eigenvalue order.
Eigen::MatrixXcd eigenfunctions(const SpectralReport& report, const Eigen::MatrixXd& latents);

struct KoopmanModes {
    Eigen::MatrixXd weight;  // script-B: states = weight * latents
    Eigen::MatrixXcd modes;  // zeta = weight * Xi
    double regularization = 0.0;
};

// Regularized least squares X Phi^T (Phi Phi^T + eps I)^{-1}; eps < 0 picks 1e-10 trace(Phi Phi^T) / v.
KoopmanModes koopman_modes(const Eigen::MatrixXd& states, const Eigen::MatrixXd& latents,
                           const SpectralReport& report, double eps = -1.0);

struct Controllability {
    Eigen::MatrixXd matrix;  // [B, AB, ..., A^{v-1} B]
    Eigen::VectorXd singular_values;
    int rank = 0;
    bool controllable = false;
};

Controllability controllability(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
Controllability controllability(const KoopmanModel& model);

// Stacks observations column-wise into a network batch.
Eigen::MatrixXd to_batch(const std::vector<Observation>& observations);

// Deterministic latents, or variational means (noise suppressed).
Eigen::MatrixXd encode(const KoopmanModel& model, const Eigen::MatrixXd& observations);
// Variational sampling with one noise column per observation.
Eigen::MatrixXd encode(const KoopmanModel& model, const Eigen::MatrixXd& observations, const Eigen::MatrixXd& noise);
Eigen::MatrixXd decode(const KoopmanModel& model, const Eigen::MatrixXd& latents);

void write_spectrum_csv(const std::string& path, const SpectralReport& report);

}  // namespace cknet

#endif  // CKNET_KOOPMAN_HPP
