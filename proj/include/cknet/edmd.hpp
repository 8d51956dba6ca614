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

#ifndef CKNET_EDMD_HPP
#define CKNET_EDMD_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cknet/dynamics.hpp"

namespace cknet {

enum class DictionaryKind { identity, monomial, hermite, rbf };

/**
 * @brief Explicit lifting functions for EDMD.
 *
 * monomial and hermite enumerate multi-indices by total degree (0..degree), and
 * within one degree in lexicographic order with the first coordinate's exponent
 * largest first, so the constant comes first and lower-degree families are
 * prefixes of higher-degree ones. Hermite uses the probabilists' convention.
 */
struct Dictionary {
    DictionaryKind kind = DictionaryKind::identity;
    int state_dim = 0;
    int degree = 0;
    Eigen::MatrixXd centers;  // state_dim x K, rbf only
    double width = 1.0;

    static Dictionary identity(int state_dim);
    static Dictionary monomial(int state_dim, int degree);
    static Dictionary hermite(int state_dim, int degree);
    static Dictionary rbf(const Eigen::MatrixXd& centers, double width);

    int output_dim() const;
    void validate() const;
    std::string describe() const;

    // Multi-indices of the polynomial families, in output order.
    std::vector<std::vector<int>> exponents() const;
};

// "identity", "monomial:<d>", "hermite:<d>", "rbf:<K>:<width>" (K centers spread over `samples`).
Dictionary parse_dictionary(const std::string& text, int state_dim, const std::vector<Eigen::VectorXd>& samples = {});

// Probabilists' Hermite polynomial He_n(s).
double hermite_polynomial(int n, double s);

Eigen::VectorXd lift(const Dictionary& dictionary, const Eigen::VectorXd& state);

// Column j of lifted_next is the lift of the successor of column j under actions column j.
struct SnapshotSet {
    Eigen::MatrixXd lifted;
    Eigen::MatrixXd lifted_next;
    Eigen::MatrixXd actions;

    Eigen::Index size() const { return lifted.cols(); }
};

SnapshotSet build_snapshots(const Dictionary& dictionary, const std::vector<Trajectory>& trajectories);
SnapshotSet build_snapshots(const Dictionary& dictionary, const std::vector<std::vector<Eigen::VectorXd>>& states,
                            const std::vector<std::vector<Eigen::VectorXd>>& actions);

struct EdmdFit {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    double residual = 0.0;        // ||lifted_next - [A B][lifted; actions]||_F
    double regularization = 0.0;  // ridge added to the normal equations
    bool underdetermined = false; // fewer snapshots than unknowns per row
};

// Ridge-regularized normal equations with eps = 1e-12 * trace(Z Z^T) / (v + n).
EdmdFit fit(const SnapshotSet& snapshots);

// Lifted states 1..|actions| of the fitted model started from lift(state0).
std::vector<Eigen::VectorXd> edmd_predict(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                          const Dictionary& dictionary, const Eigen::VectorXd& state0,
                                          const std::vector<Eigen::VectorXd>& actions);

}  // namespace cknet

#endif  // CKNET_EDMD_HPP
