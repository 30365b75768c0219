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

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "qesn/circuit/config.hpp"
#include "qesn/error.hpp"

namespace qesn {

/**
 * Random QESN parameters.
 *
 * `w_in` is stored row-major as [t][i][j] over (window, qubit, axis).
 * `ent_pruned` / `mem_pruned` mark weights zeroed by sparsity; a pruned
 * weight deletes its gate from the circuit.
 */
struct QesnWeights {
    std::size_t window = 0;
    std::size_t n_qubits = 0;
    std::vector<double> w_in;
    std::vector<double> w_bias;
    /// Per pair: {CRY angle, CRX angle}.
    std::vector<std::array<double, 2>> w_ent;
    /// Per memory qubit: CRZ angle towards the next memory qubit.
    std::vector<double> w_mem;
    std::vector<std::array<bool, 2>> ent_pruned;
    std::vector<bool> mem_pruned;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t n_pairs() const noexcept { return n_qubits / 2; }

    [[nodiscard]] double in(std::size_t t, std::size_t i, std::size_t j) const {
        return w_in[(t * n_qubits + i) * 3 + j];
    }
    double &in(std::size_t t, std::size_t i, std::size_t j) {
        return w_in[(t * n_qubits + i) * 3 + j];
    }

    /// Tunable entangler weights (w_ent and w_mem entries) in total.
    [[nodiscard]] std::size_t tunable_count() const noexcept { return 3 * n_pairs(); }

    [[nodiscard]] std::size_t pruned_count() const {
        std::size_t n = 0;
        for (const auto &p : ent_pruned) {
            n += static_cast<std::size_t>(p[0]) + static_cast<std::size_t>(p[1]);
        }
        for (bool p : mem_pruned) {
            n += static_cast<std::size_t>(p);
        }
        return n;
    }

    friend bool operator==(const QesnWeights &, const QesnWeights &) = default;
};

/// Draw from N(mean, stddev) restricted to (0, pi] by rejection.
template <class URBG> double truncated_normal(URBG &rng, double mean, double stddev) {
    std::normal_distribution<double> nd(mean, stddev);
    for (int attempt = 0; attempt < 1'000'000; ++attempt) {
        const double v = nd(rng);
        if (v > 0.0 && v <= std::numbers::pi) {
            return v;
        }
    }
    throw InvalidArgument("truncated normal acceptance region is numerically empty");
}

/// Number of tunable weights pruned for a sparsity fraction. The small
/// epsilon keeps products like 0.29 * 100 from flooring one below.
inline std::size_t pruned_target(double kappa, std::size_t count) {
    return static_cast<std::size_t>(std::floor(kappa * static_cast<double>(count) + 1e-9));
}

/**
 * Draws all weights, scales w_in by 1 / (c * d * n_c) and prunes
 * floor(kappa * count) tunable entangler weights chosen uniformly without
 * replacement over the pooled w_ent and w_mem entries.
 *
 * Every raw weight and the pruning permutation are drawn before kappa is
 * consulted, so configurations differing only in kappa share the same
 * weights and have nested pruning sets.
 */
template <class URBG> QesnWeights init_weights(const QesnConfig &config, URBG &rng) {
    config.validate();
    QesnWeights w;
    w.window = config.window();
    w.n_qubits = config.n_qubits;
    w.seed = config.seed;
    const std::size_t pairs = config.n_pairs();

    const auto draw = [&] { return truncated_normal(rng, config.weight_mean, config.weight_stddev); };
    w.w_in.resize(w.window * w.n_qubits * 3);
    for (auto &v : w.w_in) {
        v = draw();
    }
    w.w_bias.resize(w.n_qubits);
    for (auto &v : w.w_bias) {
        v = draw();
    }
    w.w_ent.resize(pairs);
    for (auto &e : w.w_ent) {
        e[0] = draw();
        e[1] = draw();
    }
    w.w_mem.resize(pairs);
    for (auto &v : w.w_mem) {
        v = draw();
    }

    const double scale = 1.0 / static_cast<double>(config.window() * config.n_blocks);
    for (auto &v : w.w_in) {
        v *= scale;
    }

    // Pool order: w_ent[0][0], w_ent[0][1], w_ent[1][0], ..., w_mem[0], ...
    const std::size_t pool = 3 * pairs;
    std::vector<std::size_t> order(pool);
    for (std::size_t k = 0; k < pool; ++k) {
        order[k] = k;
    }
    for (std::size_t k = pool; k > 1; --k) {
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        std::swap(order[k - 1], order[pick(rng)]);
    }
    w.ent_pruned.assign(pairs, {false, false});
    w.mem_pruned.assign(pairs, false);
    const std::size_t n_pruned = pruned_target(config.kappa, pool);
    for (std::size_t k = 0; k < n_pruned; ++k) {
        const std::size_t idx = order[k];
        if (idx < 2 * pairs) {
            w.ent_pruned[idx / 2][idx % 2] = true;
            w.w_ent[idx / 2][idx % 2] = 0.0;
        } else {
            w.mem_pruned[idx - 2 * pairs] = true;
            w.w_mem[idx - 2 * pairs] = 0.0;
        }
    }
    return w;
}

inline QesnWeights init_weights(const QesnConfig &config) {
    std::mt19937_64 rng(config.seed);
    return init_weights(config, rng);
}

} // namespace qesn
