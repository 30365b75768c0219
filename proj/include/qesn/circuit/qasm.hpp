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

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "qesn/circuit/reservoir.hpp"

namespace qesn {

/// Shortest round-trip decimal for an angle (17 significant digits).
inline std::string format_angle(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_qasm_gate(std::ostream &os, const GateOp &g) {
    os << gate_name(g.kind);
    if (has_angle(g.kind)) {
        os << '(' << format_angle(g.angle) << ')';
    }
    if (g.control) {
        os << " q[" << *g.control << "], q[" << g.target << "];\n";
    } else {
        os << " q[" << g.target << "];\n";
    }
}

/**
 * Unrolled recurrent circuit for `inputs` as an OpenQASM 3 program. Each
 * timestep t (same windows as run_series) declares bits m<t>_<i>, one per
 * readout qubit i, then measures and resets the readout wires.
 */
inline std::string export_qasm3(const QesnConfig &config, const QesnWeights &weights,
                                const TimeSeries &inputs) {
    const Reservoir reservoir(config, weights);
    const auto n = static_cast<std::size_t>(inputs.rows());
    detail::require(static_cast<std::size_t>(inputs.cols()) == config.input_dim,
                    "input dimension does not match configuration");
    detail::require(n >= config.context, "series is shorter than the context window");

    std::ostringstream os;
    os << "OPENQASM 3.0;\n";
    os << "include \"stdgates.inc\";\n";
    os << "// qesn: qubits=" << config.n_qubits << " context=" << config.context
       << " blocks=" << config.n_blocks << " kappa=" << format_angle(config.kappa)
       << " seed=" << config.seed << " steps=" << (n - config.context + 1) << "\n";
    os << "qubit[" << config.n_qubits << "] q;\n";

    std::vector<double> context(config.window());
    for (std::size_t t = config.context; t <= n; ++t) {
        const std::size_t step = t - config.context;
        for (std::size_t k = 0; k < config.context; ++k) {
            for (std::size_t j = 0; j < config.input_dim; ++j) {
                context[k * config.input_dim + j] =
                    inputs(static_cast<Eigen::Index>(t - config.context + k), static_cast<Eigen::Index>(j));
            }
        }
        os << "// step " << step << "\n";
        for (const auto &g : reservoir.gates_for(context)) {
            write_qasm_gate(os, g);
        }
        for (std::size_t i = 0; i < config.n_pairs(); ++i) {
            const std::string bit = "m" + std::to_string(step) + "_" + std::to_string(i);
            os << "bit " << bit << ";\n";
            os << bit << " = measure q[" << readout_wire(i) << "];\n";
            os << "reset q[" << readout_wire(i) << "];\n";
        }
    }
    return os.str();
}

} // namespace qesn
