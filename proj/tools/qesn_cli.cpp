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
#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qesn/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Overrides {
    std::string config;
    std::optional<std::size_t> qubits;
    std::optional<double> kappa;
    std::optional<std::size_t> n_c;
    std::optional<std::size_t> shots;
    std::optional<std::string> backend;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
};

void add_common(CLI::App &cmd, Overrides &o) {
    cmd.add_option("--config", o.config, "JSON experiment config; omitted keys take their defaults");
    cmd.add_option("--qubits", o.qubits, "Total qubit count (even; half memory, half readout)")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--kappa", o.kappa, "Entangler sparsity in [0, 1]")->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--n-c", o.n_c, "Data re-uploading block count per step")->check(CLI::PositiveNumber);
    cmd.add_option("--shots", o.shots, "Shots per step for the trajectory backend")->check(CLI::PositiveNumber);
    cmd.add_option("--backend", o.backend, "Simulation backend")->check(CLI::IsMember({"exact", "trajectory"}));
    cmd.add_option("--seed", o.seed, "Master seed (seeds seed .. seed + n_seeds - 1 are run)");
    cmd.add_option("--out", o.out, "Output directory (default: $QESN_OUTPUT_ROOT/<kind>-<config hash>)");
    cmd.add_option("--workers", o.workers, "Worker threads; results do not depend on it")
        ->check(CLI::PositiveNumber);
}

qesn::ExperimentConfig build_config(const std::string &name, const Overrides &o) {
    using qesn::ExperimentKind;
    qesn::ExperimentConfig c = o.config.empty() ? qesn::ExperimentConfig{} : qesn::load_experiment(o.config);
    if (name == "lorenz-gen") {
        c.kind = ExperimentKind::LorenzGen;
    } else if (name == "run-qesn") {
        if (c.kind != ExperimentKind::Sweep) {
            c.kind = ExperimentKind::LorenzObserver;
        }
    } else if (name == "response") {
        c.kind = ExperimentKind::Response;
    } else if (name == "compare") {
        c.kind = ExperimentKind::Compare;
    } else {
        c.kind = ExperimentKind::Export;
    }
    const bool response = c.kind == ExperimentKind::Response;
    if (o.qubits) {
        (response ? c.response.n_qubits : c.qesn.n_qubits) = *o.qubits;
        c.baseline.qubits.clear();
        c.sweep_qubits = {*o.qubits};
    }
    if (o.kappa) {
        c.qesn.kappa = *o.kappa;
        c.response.repeat_kappa = *o.kappa;
    }
    if (o.n_c) {
        (response ? c.response.n_blocks : c.qesn.n_blocks) = *o.n_c;
    }
    if (o.shots) {
        c.qesn.shots = *o.shots;
    }
    if (o.backend) {
        c.qesn.backend = qesn::backend_from_string(*o.backend);
    }
    if (o.seed) {
        c.qesn.seed = *o.seed;
    }
    if (o.out) {
        c.output_dir = *o.out;
    }
    if (o.workers) {
        c.workers = *o.workers;
    }
    c.validate();
    return c;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Quantum echo-state network reservoir experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", qesn::kVersion);

    Overrides o;
    const std::pair<const char *, const char *> commands[] = {
        {"lorenz-gen", "Integrate and normalize the Lorenz series"},
        {"run-qesn", "Lorenz observer: feed x(t), fit y(t+1) and z(t+1) (or a qubit sweep if the config says so)"},
        {"response", "Step/ramp/sinusoid response sweeps over sparsity and block count"},
        {"compare", "QESN against a classical ESN and a windowed linear model on the same split"},
        {"export-qasm", "Write the first recurrent steps as an OpenQASM 3 program"},
    };
    for (const auto &[name, help] : commands) {
        add_common(*app.add_subcommand(name, help), o);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitUsage;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    qesn::ExperimentConfig config;
    try {
        config = build_config(name, o);
    } catch (const std::exception &e) {
        std::cerr << "qesn " << name << ": " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        const qesn::RunOutcome out = qesn::run_experiment(config);
        std::cout << "wrote " << out.dir.string() << "\n";
        if (out.report.contains("best")) {
            std::cout << out.report.at("best").dump(2) << "\n";
        }
    } catch (const std::exception &e) {
        std::cerr << "qesn " << name << ": " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
