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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qesn/circuit/weights.hpp"
#include "qesn/core/gates.hpp"
#include "qesn/error.hpp"

namespace qesn {

/// Per-qubit Euler angles, one row per qubit: (alpha, beta, gamma).
using AngleMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

inline constexpr std::size_t memory_wire(std::size_t pair) { return 2 * pair; }
inline constexpr std::size_t readout_wire(std::size_t pair) { return 2 * pair + 1; }

inline std::vector<std::size_t> readout_wires(std::size_t n_qubits) {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < n_qubits / 2; ++p) {
        out.push_back(readout_wire(p));
    }
    return out;
}

/**
 * Theta_ij = sum_t context_t * w_in[t, i, j] + w_bias[i].
 *
 * `context` is the flattened window, oldest timestep first. The same bias
 * enters all three axes of a qubit.
 */
inline AngleMatrix compute_angles(std::span<const double> context, const QesnWeights &w) {
    detail::require(context.size() == w.window,
                    "context length " + std::to_string(context.size()) +
                        " does not match window " + std::to_string(w.window));
    AngleMatrix theta(static_cast<Eigen::Index>(w.n_qubits), 3);
    for (std::size_t i = 0; i < w.n_qubits; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < w.window; ++t) {
                acc += context[t] * w.in(t, i, j);
            }
            theta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc + w.w_bias[i];
        }
    }
    return theta;
}

/// Appends R(alpha, beta, gamma) = RZ(gamma) RX(beta) RZ(alpha) in time order.
inline void append_rotation(std::vector<GateOp> &gates, std::size_t q, const AngleMatrix &theta) {
    const auto r = static_cast<Eigen::Index>(q);
    gates.push_back(GateOp::rz(q, theta(r, 0)));
    gates.push_back(GateOp::rx(q, theta(r, 1)));
    gates.push_back(GateOp::rz(q, theta(r, 2)));
}

/**
 * The nonlinear embedding layer repeated `n_blocks` times with the same
 * angles. Per block and pair (memory m, readout r):
 *
 *   R(m) R(r)  CNOT(m->r)  R(m) R(r)  CRY(m->r)  R(m) R(r)  CRX(m->r)
 *
 * then the CRZ ring over memory qubits, m_i -> m_{i+1 mod pairs}. Pruned
 * weights delete their gate; `keep_cnot = false` drops the C-NOTs.
 */
inline std::vector<GateOp> build_embedding_layer(const AngleMatrix &theta, const QesnWeights &w,
                                                 std::size_t n_blocks, bool keep_cnot = true) {
    detail::require(static_cast<std::size_t>(theta.rows()) == w.n_qubits,
                    "angle matrix does not match qubit count");
    const std::size_t pairs = w.n_pairs();
    std::vector<GateOp> gates;
    gates.reserve(n_blocks * pairs * 22);
    for (std::size_t rep = 0; rep < n_blocks; ++rep) {
        for (std::size_t p = 0; p < pairs; ++p) {
            const std::size_t m = memory_wire(p);
            const std::size_t r = readout_wire(p);
            append_rotation(gates, m, theta);
            append_rotation(gates, r, theta);
            if (keep_cnot) {
                gates.push_back(GateOp::cnot(m, r));
            }
            append_rotation(gates, m, theta);
            append_rotation(gates, r, theta);
            if (!w.ent_pruned[p][0]) {
                gates.push_back(GateOp::cry(m, r, w.w_ent[p][0]));
            }
            append_rotation(gates, m, theta);
            append_rotation(gates, r, theta);
            if (!w.ent_pruned[p][1]) {
                gates.push_back(GateOp::crx(m, r, w.w_ent[p][1]));
            }
        }
        if (pairs >= 2) {
            for (std::size_t p = 0; p < pairs; ++p) {
                if (!w.mem_pruned[p]) {
                    gates.push_back(
                        GateOp::crz(memory_wire(p), memory_wire((p + 1) % pairs), w.w_mem[p]));
                }
            }
        }
    }
    return gates;
}

struct GateCounts {
    std::size_t rz = 0;
    std::size_t rx = 0;
    std::size_t cnot = 0;
    std::size_t cry = 0;
    std::size_t crx = 0;
    std::size_t crz = 0;

    [[nodiscard]] std::size_t tunable_entanglers() const noexcept { return cry + crx + crz; }
    [[nodiscard]] std::size_t entanglers() const noexcept { return cnot + tunable_entanglers(); }
    [[nodiscard]] std::size_t total() const noexcept { return rz + rx + entanglers(); }
};

inline GateCounts count_gates(std::span<const GateOp> gates) {
    GateCounts c;
    for (const auto &g : gates) {
        switch (g.kind) {
        case GateKind::RZ:
            ++c.rz;
            break;
        case GateKind::RX:
            ++c.rx;
            break;
        case GateKind::CNOT:
            ++c.cnot;
            break;
        case GateKind::CRY:
            ++c.cry;
            break;
        case GateKind::CRX:
            ++c.crx;
            break;
        case GateKind::CRZ:
            ++c.crz;
            break;
        }
    }
    return c;
}

} // namespace qesn
