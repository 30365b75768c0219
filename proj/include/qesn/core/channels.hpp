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
#include <initializer_list>
#include <utility>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qesn/core/gates.hpp"
#include "qesn/core/kernels.hpp"
#include "qesn/core/state.hpp"
#include "qesn/error.hpp"
#include "qesn/rng.hpp"

namespace qesn {

/// Probabilities above this negative threshold are float drift and clamped.
inline constexpr double kProbabilityClamp = -1e-12;

// -------------------------------------------------------------------------
// Gate application
// -------------------------------------------------------------------------

inline void apply_blocks(StateVector &psi, std::span<const Block> blocks) {
    apply_blocks_rows(blocks, psi.data(), psi.dimension(), 1);
}

/// rho <- U rho U^dagger. With A = U rho, the result U A^dagger is already
/// Hermitian, so one row sweep, one adjoint and a second row sweep suffice.
inline void apply_blocks(DensityMatrix &rho, std::span<const Block> blocks) {
    auto &m = rho.elements();
    const std::size_t d = rho.dimension();
    apply_blocks_rows(blocks, m.data(), d, d);
    m.adjointInPlace();
    apply_blocks_rows(blocks, m.data(), d, d);
}

inline void apply_gate(StateVector &psi, const GateOp &gate) {
    const std::array<GateOp, 1> one{gate};
    apply_blocks(psi, compile_gates(one, psi.n_qubits()));
}

inline void apply_gate(DensityMatrix &rho, const GateOp &gate) {
    const std::array<GateOp, 1> one{gate};
    apply_blocks(rho, compile_gates(one, rho.n_qubits()));
}

// -------------------------------------------------------------------------
// Register bookkeeping
// -------------------------------------------------------------------------

/// Wire assignment of a memory/readout register pair. Pair i occupies
/// wires 2i (memory) and 2i+1 (readout); surplus qubits of the larger
/// register follow, memory first.
struct RegisterLayout {
    std::size_t n_qubits = 0;
    std::vector<std::size_t> memory;
    std::vector<std::size_t> readout;
};

inline RegisterLayout interleaved_layout(std::size_t n_memory, std::size_t n_readout) {
    RegisterLayout layout;
    layout.n_qubits = n_memory + n_readout;
    const std::size_t pairs = std::min(n_memory, n_readout);
    for (std::size_t i = 0; i < pairs; ++i) {
        layout.memory.push_back(2 * i);
        layout.readout.push_back(2 * i + 1);
    }
    std::size_t wire = 2 * pairs;
    for (std::size_t i = pairs; i < n_memory; ++i) {
        layout.memory.push_back(wire++);
    }
    for (std::size_t i = pairs; i < n_readout; ++i) {
        layout.readout.push_back(wire++);
    }
    return layout;
}

/// Deposits bit i of `value` on wire `wires[i]`.
inline std::size_t spread_bits(std::size_t value, std::span<const std::size_t> wires) {
    std::size_t out = 0;
    for (std::size_t i = 0; i < wires.size(); ++i) {
        if ((value >> i) & 1U) {
            out |= std::size_t{1} << wires[i];
        }
    }
    return out;
}

/**
 * Index tables splitting a register into readout qubits (in the given
 * order) and the remaining "kept" qubits (ascending wire order). Outcome k
 * has bit i set when readout_qubits[i] reads 1.
 */
class ReadoutMap {
  public:
    ReadoutMap(std::size_t n_qubits, std::span<const std::size_t> readout_qubits)
        : n_qubits_(n_qubits), readout_(readout_qubits.begin(), readout_qubits.end()) {
        const std::size_t dim = dimension_of(n_qubits);
        detail::require(!readout_.empty() && readout_.size() < n_qubits,
                        "readout register must be a non-empty proper subset");
        std::vector<bool> seen(n_qubits, false);
        for (auto q : readout_) {
            detail::require(q < n_qubits, "readout qubit " + std::to_string(q) +
                                              " out of range");
            detail::require(!seen[q], "duplicate readout qubit " + std::to_string(q));
            seen[q] = true;
        }
        for (std::size_t q = 0; q < n_qubits; ++q) {
            if (!seen[q]) {
                kept_.push_back(q);
            }
        }
        const std::size_t n_out = std::size_t{1} << readout_.size();
        const std::size_t n_kept = std::size_t{1} << kept_.size();
        readout_offset_.resize(n_out);
        for (std::size_t k = 0; k < n_out; ++k) {
            readout_offset_[k] = spread_bits(k, readout_);
        }
        kept_offset_.resize(n_kept);
        for (std::size_t a = 0; a < n_kept; ++a) {
            kept_offset_[a] = spread_bits(a, kept_);
        }
        outcome_of_.resize(dim);
        for (std::size_t k = 0; k < n_out; ++k) {
            for (std::size_t a = 0; a < n_kept; ++a) {
                outcome_of_[kept_offset_[a] | readout_offset_[k]] = static_cast<std::uint32_t>(k);
            }
        }
    }

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t n_outcomes() const noexcept { return readout_offset_.size(); }
    [[nodiscard]] std::size_t n_kept_states() const noexcept { return kept_offset_.size(); }
    [[nodiscard]] std::span<const std::size_t> readout_qubits() const noexcept { return readout_; }
    [[nodiscard]] std::span<const std::size_t> kept_qubits() const noexcept { return kept_; }
    [[nodiscard]] std::size_t joint_index(std::size_t kept, std::size_t outcome) const {
        return kept_offset_[kept] | readout_offset_[outcome];
    }
    [[nodiscard]] std::uint32_t outcome_of(std::size_t joint) const { return outcome_of_[joint]; }
    [[nodiscard]] std::size_t readout_offset(std::size_t outcome) const {
        return readout_offset_[outcome];
    }

  private:
    std::size_t n_qubits_;
    std::vector<std::size_t> readout_;
    std::vector<std::size_t> kept_;
    std::vector<std::size_t> readout_offset_;
    std::vector<std::size_t> kept_offset_;
    std::vector<std::uint32_t> outcome_of_;
};

/// Clamps drift-level negatives to zero and renormalizes. Anything more
/// negative than kProbabilityClamp, or a vanished total, is an error.
inline void sanitize_distribution(Eigen::VectorXd &p) {
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (!std::isfinite(p(k)) || p(k) < kProbabilityClamp) {
            throw NumericalError("probability " + std::to_string(p(k)) + " at outcome " +
                                 std::to_string(k) + " is not a valid probability");
        }
        p(k) = std::max(p(k), 0.0);
    }
    const double total = p.sum();
    if (!(total > 1e-9)) {
        throw NumericalError("probability distribution has vanished");
    }
    p /= total;
}

// -------------------------------------------------------------------------
// Channels
// -------------------------------------------------------------------------

/**
 * rho_mem (x) |0...0><0...0| on n_mem + n_readout qubits, wired by
 * `interleaved_layout` (memory i on wire 2i, readout i on wire 2i+1).
 */
inline DensityMatrix tensor_extend(const DensityMatrix &memory, std::size_t n_readout) {
    detail::require(n_readout >= 1, "n_readout must be positive");
    const RegisterLayout layout = interleaved_layout(memory.n_qubits(), n_readout);
    DensityMatrix joint(layout.n_qubits);
    auto &out = joint.elements();
    out.setZero();
    const std::size_t dm = memory.dimension();
    std::vector<std::size_t> offset(dm);
    for (std::size_t a = 0; a < dm; ++a) {
        offset[a] = spread_bits(a, layout.memory);
    }
    const auto &in = memory.elements();
    for (std::size_t a = 0; a < dm; ++a) {
        for (std::size_t b = 0; b < dm; ++b) {
            out(static_cast<Eigen::Index>(offset[a]), static_cast<Eigen::Index>(offset[b])) =
                in(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
    }
    return joint;
}

struct MeasureResetOutcome {
    /// Marginal distribution over the readout register.
    Eigen::VectorXd probabilities;
    /// State of the kept (memory) register after the channel.
    DensityMatrix post_state;
};

/**
 * Computational-basis measurement of `readout_qubits`, outcome discarded,
 * readout reset to |0>.
 *
 * Measuring with projectors P_k, discarding k and resetting gives
 *   sum_k (I (x) <k|) rho (I (x) |k>) (x) |0><0|,
 * and the sum over k of the projected blocks is exactly the partial trace
 * over the readout register. The reset readout is a fixed |0...0> factor,
 * so only the memory register is returned; `tensor_extend` re-attaches the
 * readout before the next step.
 */
inline MeasureResetOutcome measure_and_reset(const DensityMatrix &joint,
                                             std::span<const std::size_t> readout_qubits) {
    const ReadoutMap map(joint.n_qubits(), readout_qubits);
    const auto &rho = joint.elements();
    const std::size_t n_out = map.n_outcomes();
    const std::size_t n_kept = map.n_kept_states();

    Eigen::VectorXd probs(static_cast<Eigen::Index>(n_out));
    for (std::size_t k = 0; k < n_out; ++k) {
        double acc = 0.0;
        for (std::size_t a = 0; a < n_kept; ++a) {
            const auto j = static_cast<Eigen::Index>(map.joint_index(a, k));
            acc += rho(j, j).real();
        }
        probs(static_cast<Eigen::Index>(k)) = acc;
    }
    sanitize_distribution(probs);

    const std::size_t kept_qubits = map.kept_qubits().size();
    RowMatrixXcd post = RowMatrixXcd::Zero(static_cast<Eigen::Index>(n_kept),
                                           static_cast<Eigen::Index>(n_kept));
    for (std::size_t k = 0; k < n_out; ++k) {
        for (std::size_t a = 0; a < n_kept; ++a) {
            const auto ja = static_cast<Eigen::Index>(map.joint_index(a, k));
            for (std::size_t b = 0; b < n_kept; ++b) {
                const auto jb = static_cast<Eigen::Index>(map.joint_index(b, k));
                post(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += rho(ja, jb);
            }
        }
    }
    const double tr = post.trace().real();
    if (!(tr > 1e-9)) {
        throw NumericalError("post-measurement state has vanishing trace");
    }
    post /= tr;
    auto state = DensityMatrix::from_elements(kept_qubits, std::move(post));
    state.hermitize();
    return {std::move(probs), std::move(state)};
}

/// Pauli-Z expectation of each readout qubit: +1 for bit 0, -1 for bit 1.
inline Eigen::VectorXd expectation_z(const Eigen::VectorXd &probabilities,
                                     std::size_t n_readout) {
    detail::require(n_readout >= 1 && n_readout < 63, "n_readout out of range");
    detail::require(static_cast<std::size_t>(probabilities.size()) ==
                        (std::size_t{1} << n_readout),
                    "distribution length must be 2^n_readout");
    Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_readout));
    for (Eigen::Index k = 0; k < probabilities.size(); ++k) {
        for (std::size_t i = 0; i < n_readout; ++i) {
            const double sign = ((static_cast<std::size_t>(k) >> i) & 1U) ? -1.0 : 1.0;
            z(static_cast<Eigen::Index>(i)) += sign * probabilities(k);
        }
    }
    return z;
}

/// rho <- (1-p) rho + (p/3)(X rho X + Y rho Y + Z rho Z) on `qubit`.
inline void apply_depolarizing(DensityMatrix &rho, std::size_t qubit, double p) {
    detail::require(p >= 0.0 && p <= 1.0, "depolarizing probability must be in [0, 1]");
    detail::require(qubit < rho.n_qubits(), "depolarizing qubit out of range");
    if (p == 0.0) {
        return;
    }
    // Per 2x2 block [[a, b], [c, d]] on the qubit's row/column bits the
    // Pauli twirl gives a' = (1-2p/3) a + (2p/3) d and b' = (1-4p/3) b.
    const double keep = 1.0 - 2.0 * p / 3.0;
    const double swap = 2.0 * p / 3.0;
    const double coherence = 1.0 - 4.0 * p / 3.0;
    auto &m = rho.elements();
    const auto dim = static_cast<Eigen::Index>(rho.dimension());
    const auto bit = static_cast<Eigen::Index>(std::size_t{1} << qubit);
    for (Eigen::Index i = 0; i < dim; ++i) {
        if (i & bit) {
            continue;
        }
        for (Eigen::Index j = 0; j < dim; ++j) {
            if (j & bit) {
                continue;
            }
            const cplx a = m(i, j);
            const cplx d = m(i | bit, j | bit);
            m(i, j) = keep * a + swap * d;
            m(i | bit, j | bit) = keep * d + swap * a;
            m(i, j | bit) *= coherence;
            m(i | bit, j) *= coherence;
        }
    }
}

/**
 * A gate list with depolarizing noise after every gate on each qubit it
 * touches, rearranged for speed. The channel is unitarily covariant, so
 * single-qubit gates commute with it and consecutive noise on a qubit
 * compounds; noise is applied only where a two-qubit gate (or the end of
 * the circuit) requires it.
 */
class NoisyProgram {
  public:
    struct Segment {
        std::vector<Block> blocks;
        /// (qubit, depolarizing probability) applied after `blocks`.
        std::vector<std::pair<std::size_t, double>> noise;
    };

    NoisyProgram(std::span<const GateOp> gates, std::size_t n_qubits, double p) {
        detail::require(p >= 0.0 && p <= 1.0, "depolarizing probability must be in [0, 1]");
        const double shrink = 1.0 - 4.0 * p / 3.0;
        std::vector<double> pending(n_qubits, 1.0);
        CircuitCompiler cc(n_qubits);
        const auto flush = [&](std::initializer_list<std::size_t> qubits) {
            Segment s;
            s.blocks = cc.finish();
            for (auto q : qubits) {
                if (pending[q] != 1.0) {
                    s.noise.emplace_back(q, 0.75 * (1.0 - pending[q]));
                    pending[q] = 1.0;
                }
            }
            segments_.push_back(std::move(s));
            cc = CircuitCompiler(n_qubits);
        };
        for (const auto &g : gates) {
            validate_gate(g, n_qubits);
            if (g.control && (pending[*g.control] != 1.0 || pending[g.target] != 1.0)) {
                flush({*g.control, g.target});
            }
            cc.add(g);
            pending[g.target] *= shrink;
            if (g.control) {
                pending[*g.control] *= shrink;
            }
        }
        Segment last;
        last.blocks = cc.finish();
        for (std::size_t q = 0; q < n_qubits; ++q) {
            if (pending[q] != 1.0) {
                last.noise.emplace_back(q, 0.75 * (1.0 - pending[q]));
            }
        }
        segments_.push_back(std::move(last));
    }

    [[nodiscard]] const std::vector<Segment> &segments() const noexcept { return segments_; }

    void apply(DensityMatrix &rho) const {
        for (const auto &s : segments_) {
            if (!s.blocks.empty()) {
                apply_blocks(rho, s.blocks);
            }
            for (const auto &[q, p] : s.noise) {
                apply_depolarizing(rho, q, p);
            }
        }
    }

  private:
    std::vector<Segment> segments_;
};

// -------------------------------------------------------------------------
// Shot sampling
// -------------------------------------------------------------------------

struct TrajectoryStep {
    std::uint64_t outcome = 0;
    StateVector next_state;
};

/// Readout marginal of a pure state.
inline Eigen::VectorXd readout_marginal(const StateVector &psi, const ReadoutMap &map) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(map.n_outcomes()));
    const auto &amps = psi.amplitudes();
    for (Eigen::Index i = 0; i < amps.size(); ++i) {
        p(map.outcome_of(static_cast<std::size_t>(i))) += std::norm(amps(i));
    }
    return p;
}

/**
 * Draws one readout outcome with Born probabilities, projects onto it and
 * resets the readout qubits to |0> in place. `scratch` must have the
 * state's dimension.
 */
template <class URBG>
std::uint64_t sample_and_reset(StateVector &psi, const ReadoutMap &map, URBG &rng,
                               Eigen::VectorXcd &scratch) {
    const Eigen::VectorXd p = readout_marginal(psi, map);
    const double total = p.sum();
    if (!(total >= 1e-9)) {
        throw NumericalError("trajectory state has vanishing norm");
    }
    const double u = uniform01(rng) * total;
    std::size_t chosen = map.n_outcomes();
    std::size_t last_nonzero = 0;
    double acc = 0.0;
    for (std::size_t k = 0; k < map.n_outcomes(); ++k) {
        const double pk = p(static_cast<Eigen::Index>(k));
        if (pk <= 0.0) {
            continue;
        }
        last_nonzero = k;
        acc += pk;
        if (u < acc) {
            chosen = k;
            break;
        }
    }
    if (chosen == map.n_outcomes()) {
        chosen = last_nonzero; // u landed past the rounded cumulative sum
    }
    const double scale = 1.0 / std::sqrt(p(static_cast<Eigen::Index>(chosen)));
    const std::size_t flip = map.readout_offset(chosen);
    auto &amps = psi.amplitudes();
    scratch.setZero();
    for (Eigen::Index i = 0; i < amps.size(); ++i) {
        if (map.outcome_of(static_cast<std::size_t>(i)) == chosen) {
            scratch(static_cast<Eigen::Index>(static_cast<std::size_t>(i) ^ flip)) =
                amps(i) * scale;
        }
    }
    amps.swap(scratch);
    return chosen;
}

template <class URBG>
TrajectoryStep sample_trajectory_step(const StateVector &state,
                                      std::span<const std::size_t> readout_qubits, URBG &rng) {
    const ReadoutMap map(state.n_qubits(), readout_qubits);
    TrajectoryStep out{0, state};
    Eigen::VectorXcd scratch(static_cast<Eigen::Index>(state.dimension()));
    out.outcome = sample_and_reset(out.next_state, map, rng, scratch);
    return out;
}

} // namespace qesn
