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
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qesn/circuit/config.hpp"
#include "qesn/circuit/embedding.hpp"
#include "qesn/circuit/weights.hpp"
#include "qesn/core/channels.hpp"
#include "qesn/core/kernels.hpp"
#include "qesn/error.hpp"
#include "qesn/rng.hpp"

namespace qesn {

/// One row per timestep, one column per input dimension.
using TimeSeries = Eigen::MatrixXd;

enum class FeatureMode { Probability, Expectation };

inline std::string_view to_string(FeatureMode m) {
    return m == FeatureMode::Probability ? "probability" : "expectation";
}

inline FeatureMode feature_mode_from_string(std::string_view s) {
    if (s == "probability" || s == "prob") {
        return FeatureMode::Probability;
    }
    if (s == "expectation" || s == "exp") {
        return FeatureMode::Expectation;
    }
    throw InvalidArgument("unknown feature mode '" + std::string(s) + "'");
}

/**
 * Reservoir read-out over time. Row r was produced after consuming the
 * input at timestep `source_index[r]` (the newest entry of its context
 * window).
 */
struct FeatureMatrix {
    FeatureMode mode = FeatureMode::Probability;
    std::size_t n_readout = 0;
    Eigen::MatrixXd values;
    std::vector<std::size_t> source_index;
    std::size_t washout = 0;

    [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
    [[nodiscard]] std::size_t cols() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

/// Pauli-Z expectation features from probability features.
inline FeatureMatrix to_expectation(const FeatureMatrix &fm) {
    if (fm.mode == FeatureMode::Expectation) {
        return fm;
    }
    FeatureMatrix out = fm;
    out.mode = FeatureMode::Expectation;
    out.values.resize(fm.values.rows(), static_cast<Eigen::Index>(fm.n_readout));
    for (Eigen::Index r = 0; r < fm.values.rows(); ++r) {
        const Eigen::VectorXd p = fm.values.row(r).transpose();
        out.values.row(r) = expectation_z(p, fm.n_readout).transpose();
    }
    return out;
}

inline FeatureMatrix with_mode(const FeatureMatrix &fm, FeatureMode mode) {
    return mode == FeatureMode::Expectation ? to_expectation(fm) : fm;
}

/// Column labels: readout bitstrings (highest readout qubit first) or z_exp_<i>.
inline std::vector<std::string> feature_labels(const FeatureMatrix &fm) {
    std::vector<std::string> labels;
    if (fm.mode == FeatureMode::Expectation) {
        for (std::size_t i = 0; i < fm.cols(); ++i) {
            labels.push_back("z_exp_" + std::to_string(i));
        }
        return labels;
    }
    for (std::size_t k = 0; k < fm.cols(); ++k) {
        std::string s(fm.n_readout, '0');
        for (std::size_t i = 0; i < fm.n_readout; ++i) {
            if ((k >> i) & 1U) {
                s[fm.n_readout - 1 - i] = '1';
            }
        }
        labels.push_back(s);
    }
    return labels;
}

/// Exact backend: the memory register alone (the readout is always |0...0>
/// between steps).
struct ExactMemory {
    DensityMatrix memory;
};

/// Trajectory backend: every shot's full register plus its random stream.
struct ShotPopulation {
    std::vector<StateVector> shots;
    std::vector<CounterStream> streams;
};

struct ReservoirState {
    std::variant<ExactMemory, ShotPopulation> data;
    std::size_t timestep = 0;

    [[nodiscard]] Backend backend() const noexcept {
        return std::holds_alternative<ExactMemory>(data) ? Backend::ExactChannel
                                                         : Backend::Trajectory;
    }
};

/// Key of the per-shot stream family; shot s uses CounterStream(key, s).
inline std::uint64_t shot_stream_key(std::uint64_t seed) {
    return splitmix64(seed ^ 0x51a7c0ffee5eedULL);
}

/**
 * A QESN bound to one set of weights. Stepping consumes one context window
 * and returns the readout distribution (probability features).
 */
class Reservoir {
  public:
    Reservoir(QesnConfig config, QesnWeights weights)
        : config_(std::move(config)), weights_(std::move(weights)),
          map_(config_.n_qubits, readout_wires(config_.n_qubits)) {
        config_.validate();
        detail::require(weights_.n_qubits == config_.n_qubits &&
                            weights_.window == config_.window(),
                        "weights do not match configuration");
    }

    [[nodiscard]] const QesnConfig &config() const noexcept { return config_; }
    [[nodiscard]] const QesnWeights &weights() const noexcept { return weights_; }

    [[nodiscard]] ReservoirState initial_state() const {
        if (config_.backend == Backend::ExactChannel) {
            return {ExactMemory{DensityMatrix(config_.n_pairs())}, 0};
        }
        ShotPopulation pop;
        pop.shots.assign(config_.shots, StateVector(config_.n_qubits));
        pop.streams.reserve(config_.shots);
        const std::uint64_t key = shot_stream_key(config_.seed);
        for (std::size_t s = 0; s < config_.shots; ++s) {
            pop.streams.emplace_back(key, s);
        }
        return {std::move(pop), 0};
    }

    [[nodiscard]] std::vector<GateOp> gates_for(std::span<const double> context) const {
        return build_embedding_layer(compute_angles(context, weights_), weights_,
                                     config_.n_blocks, config_.keep_cnot);
    }

    /// Advances `state` by one recurrent block; returns the readout distribution.
    Eigen::VectorXd step(ReservoirState &state, std::span<const double> context) const {
        const std::vector<GateOp> gates = gates_for(context);
        Eigen::VectorXd row;
        if (auto *exact = std::get_if<ExactMemory>(&state.data)) {
            row = config_.noise_p ? step_noisy(*exact, gates) : step_exact(*exact, gates);
        } else {
            row = step_shots(std::get<ShotPopulation>(state.data), gates);
        }
        ++state.timestep;
        return row;
    }

    /**
     * Slides the context window over `inputs` (N x d): for t = c..N the
     * window is rows [t-c, t), flattened oldest first. Produces N - c + 1
     * rows of probability features.
     */
    [[nodiscard]] FeatureMatrix run_series(const TimeSeries &inputs) const {
        const auto n = static_cast<std::size_t>(inputs.rows());
        detail::require(static_cast<std::size_t>(inputs.cols()) == config_.input_dim,
                        "input dimension does not match configuration");
        detail::require(n >= config_.context, "series of length " + std::to_string(n) +
                                                  " is shorter than the context window " +
                                                  std::to_string(config_.context));
        FeatureMatrix fm;
        fm.mode = FeatureMode::Probability;
        fm.n_readout = config_.n_pairs();
        const std::size_t rows = n - config_.context + 1;
        fm.values.resize(static_cast<Eigen::Index>(rows),
                         static_cast<Eigen::Index>(config_.n_features_probability()));
        fm.source_index.reserve(rows);

        ReservoirState state = initial_state();
        std::vector<double> context(config_.window());
        for (std::size_t t = config_.context; t <= n; ++t) {
            for (std::size_t k = 0; k < config_.context; ++k) {
                for (std::size_t j = 0; j < config_.input_dim; ++j) {
                    context[k * config_.input_dim + j] =
                        inputs(static_cast<Eigen::Index>(t - config_.context + k),
                               static_cast<Eigen::Index>(j));
                }
            }
            const auto r = static_cast<Eigen::Index>(t - config_.context);
            fm.values.row(r) = step(state, context).transpose();
            fm.source_index.push_back(t - 1);
        }
        return fm;
    }

  private:
    /**
     * Noiseless exact step without forming the joint density matrix.
     *
     * With V_a = U |a>_mem |0>_ro, the readout-r Kraus operator of the
     * step is K_r[m, a] = <m, r| V_a>, so
     *   p(r) = tr(K_r rho K_r^dagger),  rho' = sum_r K_r rho K_r^dagger,
     * which equals tensor_extend -> U . U^dagger -> measure_and_reset.
     */
    Eigen::VectorXd step_exact(ExactMemory &mem, std::span<const GateOp> gates) const {
        const auto blocks = compile_gates(gates, config_.n_qubits);
        const std::size_t dim = std::size_t{1} << config_.n_qubits;
        const std::size_t dm = map_.n_kept_states();
        const std::size_t dr = map_.n_outcomes();

        RowMatrixXcd iso = RowMatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dm));
        for (std::size_t a = 0; a < dm; ++a) {
            iso(static_cast<Eigen::Index>(map_.joint_index(a, 0)), static_cast<Eigen::Index>(a)) = 1.0;
        }
        apply_blocks_rows(blocks, iso.data(), dim, dm);

        const auto dmi = static_cast<Eigen::Index>(dm);
        Eigen::MatrixXcd kraus(static_cast<Eigen::Index>(dr * dm), dmi);
        for (std::size_t r = 0; r < dr; ++r) {
            for (std::size_t m = 0; m < dm; ++m) {
                kraus.row(static_cast<Eigen::Index>(r * dm + m)) =
                    iso.row(static_cast<Eigen::Index>(map_.joint_index(m, r)));
            }
        }
        const Eigen::MatrixXcd rho = mem.memory.elements();
        Eigen::MatrixXcd applied;
        applied.noalias() = kraus * rho;

        Eigen::VectorXd probs(static_cast<Eigen::Index>(dr));
        Eigen::MatrixXcd left(dmi, static_cast<Eigen::Index>(dr * dm));
        Eigen::MatrixXcd right(dmi, static_cast<Eigen::Index>(dr * dm));
        for (std::size_t r = 0; r < dr; ++r) {
            const auto off = static_cast<Eigen::Index>(r * dm);
            auto x_r = applied.middleRows(off, dmi);
            auto k_r = kraus.middleRows(off, dmi);
            probs(static_cast<Eigen::Index>(r)) = (x_r.array() * k_r.array().conjugate()).sum().real();
            left.middleCols(off, dmi) = x_r;
            right.middleCols(off, dmi) = k_r;
        }
        sanitize_distribution(probs);

        RowMatrixXcd next;
        next.noalias() = left * right.adjoint();
        const double tr = next.trace().real();
        if (!(tr > 1e-9)) {
            throw NumericalError("memory state trace vanished");
        }
        next /= tr;
        mem.memory = DensityMatrix::from_elements(config_.n_pairs(), std::move(next));
        mem.memory.hermitize();
        return probs;
    }

    /// Joint density-matrix step with depolarizing noise after every gate
    /// on each qubit the gate touches.
    Eigen::VectorXd step_noisy(ExactMemory &mem, std::span<const GateOp> gates) const {
        DensityMatrix joint = tensor_extend(mem.memory, config_.n_pairs());
        NoisyProgram(gates, config_.n_qubits, *config_.noise_p).apply(joint);
        auto out = measure_and_reset(joint, map_.readout_qubits());
        mem.memory = std::move(out.post_state);
        return out.probabilities;
    }

    Eigen::VectorXd step_shots(ShotPopulation &pop, std::span<const GateOp> gates) const {
        const auto blocks = compile_gates(gates, config_.n_qubits);
        const std::size_t n_shots = pop.shots.size();
        const std::size_t n_out = map_.n_outcomes();
        std::size_t workers = config_.workers == 0 ? std::thread::hardware_concurrency()
                                                   : config_.workers;
        workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, n_shots));

        // Integer counts per worker: summation order cannot change the result.
        std::vector<std::vector<std::uint64_t>> counts(workers,
                                                       std::vector<std::uint64_t>(n_out, 0));
        const auto run_range = [&](std::size_t w, std::size_t begin, std::size_t end) {
            Eigen::VectorXcd scratch(static_cast<Eigen::Index>(std::size_t{1} << config_.n_qubits));
            for (std::size_t s = begin; s < end; ++s) {
                apply_blocks(pop.shots[s], blocks);
                ++counts[w][sample_and_reset(pop.shots[s], map_, pop.streams[s], scratch)];
            }
        };
        if (workers == 1) {
            run_range(0, 0, n_shots);
        } else {
            std::vector<std::thread> threads;
            const std::size_t chunk = (n_shots + workers - 1) / workers;
            for (std::size_t w = 0; w < workers; ++w) {
                const std::size_t begin = std::min(n_shots, w * chunk);
                const std::size_t end = std::min(n_shots, begin + chunk);
                threads.emplace_back(run_range, w, begin, end);
            }
            for (auto &t : threads) {
                t.join();
            }
        }
        Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_out));
        for (const auto &c : counts) {
            for (std::size_t k = 0; k < n_out; ++k) {
                row(static_cast<Eigen::Index>(k)) += static_cast<double>(c[k]);
            }
        }
        return row / static_cast<double>(n_shots);
    }

    QesnConfig config_;
    QesnWeights weights_;
    ReadoutMap map_;
};

/// Free-function form: advances `state` and returns the feature row.
inline Eigen::VectorXd step(ReservoirState &state, std::span<const double> context,
                            const QesnConfig &config, const QesnWeights &weights) {
    return Reservoir(config, weights).step(state, context);
}

inline FeatureMatrix run_series(const TimeSeries &inputs, const QesnConfig &config,
                                const QesnWeights &weights) {
    return Reservoir(config, weights).run_series(inputs);
}

} // namespace qesn
