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

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "qesn/error.hpp"

namespace qesn {

enum class Backend {
    /// Exact measure-and-reset channel on density matrices.
    ExactChannel,
    /// Per-shot pure-state trajectories with sampled outcomes.
    Trajectory,
};

inline std::string_view to_string(Backend b) {
    return b == Backend::ExactChannel ? "exact" : "trajectory";
}

inline Backend backend_from_string(std::string_view s) {
    if (s == "exact" || s == "exact-channel") {
        return Backend::ExactChannel;
    }
    if (s == "trajectory" || s == "shots") {
        return Backend::Trajectory;
    }
    throw InvalidArgument("unknown backend '" + std::string(s) + "'");
}

/// QESN hyperparameters.
struct QesnConfig {
    /// Total qubits; half memory, half readout.
    std::size_t n_qubits = 8;
    /// Context window length c.
    std::size_t context = 4;
    /// Input dimension d per timestep.
    std::size_t input_dim = 1;
    /// Data re-uploading block count n_c.
    std::size_t n_blocks = 3;
    /// Fraction of tunable entangler weights (CRY/CRX/CRZ) set to zero.
    double kappa = 0.0;
    std::uint64_t seed = 1;
    /// Trajectory backend only.
    std::size_t shots = 60000;
    Backend backend = Backend::ExactChannel;
    /// Depolarizing probability after every gate (exact backend only).
    std::optional<double> noise_p;
    /// The memory->readout C-NOT is always present in the QESN; false gives
    /// the fully decoupled circuit used as the no-entanglement reference.
    bool keep_cnot = true;
    /// Raw weights ~ N(mean, stddev) truncated to (0, pi].
    double weight_mean = std::numbers::pi / 2;
    double weight_stddev = std::numbers::pi / 4;
    /// Worker threads for the trajectory backend; 0 = hardware concurrency.
    std::size_t workers = 1;

    [[nodiscard]] std::size_t n_pairs() const noexcept { return n_qubits / 2; }
    [[nodiscard]] std::size_t window() const noexcept { return context * input_dim; }
    [[nodiscard]] std::size_t n_features_probability() const noexcept {
        return std::size_t{1} << n_pairs();
    }

    void validate() const {
        detail::require(n_qubits >= 2 && n_qubits % 2 == 0,
                        "n_qubits must be a positive even number, got " +
                            std::to_string(n_qubits));
        detail::require(n_qubits <= 24, "n_qubits above 24 is not supported");
        detail::require(context >= 1 && input_dim >= 1, "context window must be non-empty");
        detail::require(n_blocks >= 1, "n_blocks must be positive");
        detail::require(kappa >= 0.0 && kappa <= 1.0, "kappa must be in [0, 1]");
        detail::require(shots >= 1, "shots must be positive");
        detail::require(weight_stddev > 0.0, "weight_stddev must be positive");
        if (noise_p) {
            detail::require(*noise_p >= 0.0 && *noise_p <= 1.0,
                            "noise_p must be in [0, 1]");
            detail::require(backend == Backend::ExactChannel,
                            "depolarizing noise requires the exact backend");
        }
    }
};

} // namespace qesn
