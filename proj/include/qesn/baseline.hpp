// Copyright 2026 The QESN Observer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qesn/circuit/reservoir.hpp"
#include "qesn/error.hpp"

namespace qesn {

struct EsnParams {
    std::size_t n_nodes = 4;
    double spectral_radius = 0.9;
    double input_scale = 0.5;
    /// Fraction of reservoir weights set to zero.
    double reservoir_sparsity = 0.9;
    double leak_rate = 0.3;
    std::uint64_t seed = 1;
    std::size_t input_dim = 1;

    void validate() const {
        detail::require(n_nodes >= 1, "ESN needs at least one node");
        detail::require(spectral_radius > 0.0 && std::isfinite(spectral_radius),
                        "spectral radius must be positive");
        detail::require(input_scale >= 0.0 && std::isfinite(input_scale), "input scale must be >= 0");
        detail::require(reservoir_sparsity >= 0.0 && reservoir_sparsity <= 1.0,
                        "reservoir sparsity must be in [0, 1]");
        detail::require(leak_rate > 0.0 && leak_rate <= 1.0, "leak rate must be in (0, 1]");
        detail::require(input_dim >= 1, "input dimension must be positive");
    }
};

struct EsnMatrices {
    Eigen::MatrixXd w_res;
    Eigen::MatrixXd w_in;
};

/// Largest eigenvalue modulus (dense eigendecomposition).
inline double spectral_radius(const Eigen::MatrixXd &m) {
    detail::require(m.rows() == m.cols(), "spectral radius needs a square matrix");
    if (m.size() == 0 || m.isZero(0.0)) {
        return 0.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    if (es.info() != Eigen::Success) {
        throw NumericalError("eigenvalue computation did not converge");
    }
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/**
 * Uniform[-1, 1] reservoir with an exact share of entries zeroed, rescaled
 * to the requested spectral radius. A mask whose matrix has no nonzero
 * eigenvalue (possible for tiny, very sparse reservoirs) is redrawn.
 * Sparsity 1 gives the zero matrix.
 */
template <class URBG> EsnMatrices esn_init(const EsnParams &p, URBG &rng) {
    p.validate();
    const auto n = static_cast<Eigen::Index>(p.n_nodes);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    EsnMatrices m;
    m.w_in.resize(n, static_cast<Eigen::Index>(p.input_dim));
    for (Eigen::Index i = 0; i < m.w_in.size(); ++i) {
        m.w_in.data()[i] = p.input_scale * unit(rng);
    }
    const std::size_t count = p.n_nodes * p.n_nodes;
    const auto zeroed = static_cast<std::size_t>(std::floor(p.reservoir_sparsity * static_cast<double>(count) + 1e-9));
    if (zeroed == count) {
        m.w_res = Eigen::MatrixXd::Zero(n, n);
        return m;
    }
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Eigen::MatrixXd w(n, n);
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            w.data()[i] = unit(rng);
        }
        std::vector<std::size_t> order(count);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t k = 0; k < zeroed; ++k) {
            w.data()[order[k]] = 0.0;
        }
        const double rho = spectral_radius(w);
        if (rho > 1e-8) {
            m.w_res = w * (p.spectral_radius / rho);
            return m;
        }
    }
    throw NumericalError("could not draw a reservoir with a nonzero spectral radius");
}

inline EsnMatrices esn_init(const EsnParams &p) {
    std::mt19937_64 rng(p.seed);
    return esn_init(p, rng);
}

/**
 * Leaky tanh reservoir. Row t holds the state after consuming input t:
 *   s <- (1 - leak) s + leak tanh(W_res s + W_in x_t).
 */
inline FeatureMatrix esn_run(const TimeSeries &inputs, const EsnMatrices &m, const EsnParams &p,
                             const Eigen::VectorXd &initial = {}) {
    detail::require(inputs.cols() == m.w_in.cols(), "input dimension does not match W_in");
    const Eigen::Index n = m.w_res.rows();
    Eigen::VectorXd s = initial.size() == 0 ? Eigen::VectorXd::Zero(n) : initial;
    detail::require(s.size() == n, "initial state has the wrong size");
    FeatureMatrix fm;
    fm.mode = FeatureMode::Expectation;
    fm.values.resize(inputs.rows(), n);
    for (Eigen::Index t = 0; t < inputs.rows(); ++t) {
        const Eigen::VectorXd pre = m.w_res * s + m.w_in * inputs.row(t).transpose();
        s = (1.0 - p.leak_rate) * s + p.leak_rate * pre.array().tanh().matrix();
        fm.values.row(t) = s.transpose();
        fm.source_index.push_back(static_cast<std::size_t>(t));
    }
    return fm;
}

/// Flattened context windows (oldest first), aligned with run_series rows.
inline FeatureMatrix window_features(const TimeSeries &inputs, std::size_t context) {
    const auto n = static_cast<std::size_t>(inputs.rows());
    detail::require(context >= 1 && n >= context, "series is shorter than the context window");
    const auto d = static_cast<std::size_t>(inputs.cols());
    FeatureMatrix fm;
    fm.mode = FeatureMode::Expectation;
    fm.values.resize(static_cast<Eigen::Index>(n - context + 1), static_cast<Eigen::Index>(context * d));
    for (std::size_t t = context; t <= n; ++t) {
        for (std::size_t k = 0; k < context; ++k) {
            for (std::size_t j = 0; j < d; ++j) {
                fm.values(static_cast<Eigen::Index>(t - context), static_cast<Eigen::Index>(k * d + j)) =
                    inputs(static_cast<Eigen::Index>(t - context + k), static_cast<Eigen::Index>(j));
            }
        }
        fm.source_index.push_back(t - 1);
    }
    return fm;
}

/// ESN width matched to a QESN: readout-qubit count (expectation) or
/// readout basis size (probability, the fair-width comparison).
inline std::size_t matched_nodes(std::size_t n_qubits, FeatureMode mode) {
    return mode == FeatureMode::Expectation ? n_qubits / 2 : std::size_t{1} << (n_qubits / 2);
}

} // namespace qesn
