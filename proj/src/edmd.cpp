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

#include "cknet/edmd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cknet/csv.hpp"
#include "cknet/errors.hpp"
#include "cknet/koopman.hpp"

namespace cknet {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Dictionary Dictionary::identity(int state_dim) {
    Dictionary d;
    d.kind = DictionaryKind::identity;
    d.state_dim = state_dim;
    d.validate();
    return d;
}

Dictionary Dictionary::monomial(int state_dim, int degree) {
    Dictionary d;
    d.kind = DictionaryKind::monomial;
    d.state_dim = state_dim;
    d.degree = degree;
    d.validate();
    return d;
}

Dictionary Dictionary::hermite(int state_dim, int degree) {
    Dictionary d = monomial(state_dim, degree);
    d.kind = DictionaryKind::hermite;
    return d;
}

Dictionary Dictionary::rbf(const MatrixXd& centers, double width) {
    Dictionary d;
    d.kind = DictionaryKind::rbf;
    d.state_dim = static_cast<int>(centers.rows());
    d.centers = centers;
    d.width = width;
    d.validate();
    return d;
}

void Dictionary::validate() const {
    if (state_dim < 1) throw ConfigError("dictionary state dimension must be >= 1");
    switch (kind) {
        case DictionaryKind::identity: break;
        case DictionaryKind::monomial:
        case DictionaryKind::hermite:
            if (degree < 0) throw ConfigError("polynomial degree must be >= 0");
            break;
        case DictionaryKind::rbf:
            if (centers.cols() < 1 || centers.rows() != state_dim) throw ConfigError("rbf needs at least one center");
            if (!centers.allFinite()) throw ConfigError("rbf centers must be finite");
            if (!(width > 0.0)) throw ConfigError("rbf width must be positive");
            break;
    }
}

std::vector<std::vector<int>> Dictionary::exponents() const {
    std::vector<std::vector<int>> out;
    if (kind != DictionaryKind::monomial && kind != DictionaryKind::hermite) return out;
    std::vector<int> e(state_dim, 0);
    // Lexicographically descending compositions of `total` into state_dim parts.
    auto emit = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == state_dim - 1) {
            e[pos] = remaining;
            out.push_back(e);
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            e[pos] = k;
            self(self, pos + 1, remaining - k);
        }
    };
    for (int total = 0; total <= degree; ++total) emit(emit, 0, total);
    return out;
}

int Dictionary::output_dim() const {
    switch (kind) {
        case DictionaryKind::identity: return state_dim;
        case DictionaryKind::monomial:
        case DictionaryKind::hermite: return static_cast<int>(exponents().size());
        case DictionaryKind::rbf: return static_cast<int>(centers.cols());
    }
    return 0;
}

std::string Dictionary::describe() const {
    switch (kind) {
        case DictionaryKind::identity: return "identity";
        case DictionaryKind::monomial: return "monomial:" + std::to_string(degree);
        case DictionaryKind::hermite: return "hermite:" + std::to_string(degree);
        case DictionaryKind::rbf: return "rbf:" + std::to_string(centers.cols()) + ":" + format_double(width);
    }
    return "unknown";
}

Dictionary parse_dictionary(const std::string& text, int state_dim, const std::vector<VectorXd>& samples) {
    const auto parts = split(text, ':');
    if (parts.empty()) throw ConfigError("empty dictionary description");
    auto to_int = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("bad dictionary parameter '" + s + "' in '" + text + "'");
        }
    };
    if (parts[0] == "identity" && parts.size() == 1) return Dictionary::identity(state_dim);
    if (parts[0] == "monomial" && parts.size() == 2) return Dictionary::monomial(state_dim, to_int(parts[1]));
    if (parts[0] == "hermite" && parts.size() == 2) return Dictionary::hermite(state_dim, to_int(parts[1]));
    if (parts[0] == "rbf" && parts.size() == 3) {
        const int k = to_int(parts[1]);
        double width = 0.0;
        try {
            width = parse_double(parts[2]);
        } catch (const IoError&) {
            throw ConfigError("bad rbf width in '" + text + "'");
        }
        if (k < 1) throw ConfigError("rbf needs at least one center");
        if (samples.size() < static_cast<std::size_t>(k)) throw ConfigError("not enough samples to place rbf centers");
        MatrixXd centers(state_dim, k);
        // Evenly strided picks keep center placement deterministic.
        for (int j = 0; j < k; ++j) {
            const auto& s = samples[static_cast<std::size_t>(j) * samples.size() / k];
            if (s.size() != state_dim) throw ShapeError("sample dimension does not match the dictionary");
            centers.col(j) = s;
        }
        return Dictionary::rbf(centers, width);
    }
    throw ConfigError("unknown dictionary '" + text + "'");
}

double hermite_polynomial(int n, double s) {
    if (n < 0) throw ConfigError("Hermite degree must be >= 0");
    if (n == 0) return 1.0;
    double prev = 1.0, cur = s;
    // He_{k+1} = s He_k - k He_{k-1}
    for (int k = 1; k < n; ++k) {
        const double next = s * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

VectorXd lift(const Dictionary& d, const VectorXd& state) {
    if (state.size() != d.state_dim) throw ShapeError("state dimension does not match the dictionary");
    switch (d.kind) {
        case DictionaryKind::identity: return state;
        case DictionaryKind::monomial:
        case DictionaryKind::hermite: {
            const auto exps = d.exponents();
            VectorXd out(static_cast<Index>(exps.size()));
            for (std::size_t j = 0; j < exps.size(); ++j) {
                double v = 1.0;
                for (int i = 0; i < d.state_dim; ++i) {
                    v *= d.kind == DictionaryKind::monomial ? std::pow(state[i], exps[j][i])
                                                            : hermite_polynomial(exps[j][i], state[i]);
                }
                out[static_cast<Index>(j)] = v;
            }
            return out;
        }
        case DictionaryKind::rbf: {
            VectorXd out(d.centers.cols());
            const double denom = 2.0 * d.width * d.width;
            for (Index j = 0; j < d.centers.cols(); ++j) out[j] = std::exp(-(state - d.centers.col(j)).squaredNorm() / denom);
            return out;
        }
    }
    throw ConfigError("unknown dictionary kind");
}

SnapshotSet build_snapshots(const Dictionary& d, const std::vector<std::vector<VectorXd>>& states,
                            const std::vector<std::vector<VectorXd>>& actions) {
    if (states.size() != actions.size()) throw ShapeError("need one action sequence per state sequence");
    Index total = 0;
    Index n = -1;
    for (std::size_t e = 0; e < states.size(); ++e) {
        if (states[e].size() != actions[e].size() + 1) throw ShapeError("each episode needs |states| = |actions| + 1");
        total += static_cast<Index>(actions[e].size());
        for (const auto& u : actions[e]) {
            if (n < 0) n = u.size();
            if (u.size() != n) throw ShapeError("actions differ in dimension");
        }
    }
    if (total == 0) throw InsufficientDataError("no snapshot pairs");
    const Index v = d.output_dim();
    SnapshotSet s;
    s.lifted.resize(v, total);
    s.lifted_next.resize(v, total);
    s.actions.resize(n, total);
    Index col = 0;
    for (std::size_t e = 0; e < states.size(); ++e) {
        VectorXd cur = lift(d, states[e][0]);
        for (std::size_t k = 0; k < actions[e].size(); ++k) {
            VectorXd next = lift(d, states[e][k + 1]);
            s.lifted.col(col) = cur;
            s.lifted_next.col(col) = next;
            s.actions.col(col) = actions[e][k];
            cur = std::move(next);
            ++col;
        }
    }
    return s;
}

SnapshotSet build_snapshots(const Dictionary& d, const std::vector<Trajectory>& trajectories) {
    std::vector<std::vector<VectorXd>> states, actions;
    for (const auto& t : trajectories) {
        states.push_back(t.states);
        actions.push_back(t.actions);
    }
    return build_snapshots(d, states, actions);
}

EdmdFit fit(const SnapshotSet& s) {
    const Index v = s.lifted.rows(), n = s.actions.rows(), m = s.lifted.cols();
    if (s.lifted_next.rows() != v || s.lifted_next.cols() != m || s.actions.cols() != m) {
        throw ShapeError("snapshot matrices are not column-aligned");
    }
    if (m == 0) throw InsufficientDataError("no snapshot pairs");
    // Canonical column order makes the sums, and so the fit, independent of snapshot order.
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});
    auto key = [&](Index j, Index r) {
        if (r < v) return s.lifted(r, j);
        if (r < v + n) return s.actions(r - v, j);
        return s.lifted_next(r - v - n, j);
    };
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        for (Index r = 0; r < 2 * v + n; ++r) {
            const double ka = key(a, r), kb = key(b, r);
            if (ka != kb) return ka < kb;
        }
        return false;
    });
    MatrixXd z(v + n, m);
    MatrixXd next(v, m);
    for (Index j = 0; j < m; ++j) {
        const Index src = order[static_cast<std::size_t>(j)];
        z.col(j).head(v) = s.lifted.col(src);
        z.col(j).tail(n) = s.actions.col(src);
        next.col(j) = s.lifted_next.col(src);
    }
    const MatrixXd gram = z * z.transpose();
    const double trace = gram.trace();
    if (!(trace > 0.0) || !std::isfinite(trace)) throw NumericalError("degenerate EDMD fit: snapshot data is all zero");

    EdmdFit out;
    out.underdetermined = m < v + n;
    out.regularization = 1e-12 * trace / static_cast<double>(v + n);
    const MatrixXd reg = gram + out.regularization * MatrixXd::Identity(v + n, v + n);
    Eigen::LDLT<MatrixXd> ldlt(reg);
    if (ldlt.info() != Eigen::Success) throw NumericalError("EDMD normal equations could not be factored");
    // G Z Z^T = Phi' Z^T  <=>  (Z Z^T) G^T = Z Phi'^T
    const MatrixXd g = ldlt.solve(z * next.transpose()).transpose();
    if (!g.allFinite()) throw NumericalError("EDMD fit produced non-finite coefficients");
    out.A = g.leftCols(v);
    out.B = g.rightCols(n);
    out.residual = (next - g * z).norm();
    return out;
}

std::vector<VectorXd> edmd_predict(const MatrixXd& A, const MatrixXd& B, const Dictionary& d, const VectorXd& state0,
                                   const std::vector<VectorXd>& actions) {
    return rollout_recursive(A, B, lift(d, state0), actions);
}

}  // namespace cknet
