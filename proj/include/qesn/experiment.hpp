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
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qesn/baseline.hpp"
#include "qesn/circuit.hpp"
#include "qesn/io.hpp"
#include "qesn/lorenz.hpp"
#include "qesn/regression.hpp"
#include "qesn/response.hpp"

namespace qesn {

inline constexpr const char *kVersion = "0.1.0";

enum class ExperimentKind { LorenzGen, LorenzObserver, Sweep, Response, Compare, Export };

inline std::string_view to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::LorenzGen:
        return "lorenz-gen";
    case ExperimentKind::LorenzObserver:
        return "lorenz-observer";
    case ExperimentKind::Sweep:
        return "sweep";
    case ExperimentKind::Response:
        return "response";
    case ExperimentKind::Compare:
        return "baseline-compare";
    case ExperimentKind::Export:
        return "export";
    }
    return "?";
}

inline ExperimentKind experiment_kind_from_string(std::string_view s) {
    for (auto k : {ExperimentKind::LorenzGen, ExperimentKind::LorenzObserver, ExperimentKind::Sweep, ExperimentKind::Response,
                   ExperimentKind::Compare, ExperimentKind::Export}) {
        if (s == to_string(k)) {
            return k;
        }
    }
    throw InvalidArgument("unknown experiment kind '" + std::string(s) + "'");
}

struct SplitConfig {
    std::size_t train_len = 3000;
    std::size_t test_len = 1000;
    std::size_t washout = 300;
    NormalizationScope scope = NormalizationScope::Global;
};

struct ResponseConfig {
    std::size_t n_qubits = 12;
    std::size_t context = 1;
    std::size_t n_blocks = 3;
    std::vector<double> levels{0.0, 0.29, 0.42, 1.0};
    std::vector<ProbeKind> probes{ProbeKind::Step, ProbeKind::Ramp, ProbeKind::Sinusoid};
    std::vector<std::size_t> repeat_blocks{1, 2, 3, 4};
    double repeat_kappa = 0.29;
    bool decouple_full = true;
    ProbeParams probe;
    double epsilon = 0.02;
    std::size_t washout = 0;
    FeatureMode condition_mode = FeatureMode::Expectation;
    bool plots = true;
};

struct BaselineConfig {
    EsnParams esn;
    std::vector<double> radius_grid{0.5, 0.9, 1.2};
    std::vector<double> leak_grid{0.3, 1.0};
    std::vector<double> input_scale_grid{0.5, 1.0};
    /// Qubit counts compared; empty means the QESN's own.
    std::vector<std::size_t> qubits;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::LorenzObserver;
    /// `qesn.seed` is the master seed; seeds seed .. seed + n_seeds - 1 are run.
    QesnConfig qesn;
    std::size_t n_seeds = 5;
    LorenzParams lorenz;
    SplitConfig split;
    std::vector<FeatureMode> features{FeatureMode::Probability, FeatureMode::Expectation};
    TuneOptions regression;
    ResponseConfig response;
    BaselineConfig baseline;
    /// Qubit counts for the sweep experiment.
    std::vector<std::size_t> sweep_qubits{4, 6, 8};
    std::size_t export_steps = 3;
    /// Where artifacts go. Like `workers`, read from input configs but never
    /// persisted, so the same experiment hashes identically wherever it lands.
    std::optional<std::string> output_dir;
    /// Execution only; never persisted, never changes results.
    std::size_t workers = 1;

    [[nodiscard]] std::vector<std::uint64_t> seeds() const {
        std::vector<std::uint64_t> s;
        for (std::size_t i = 0; i < n_seeds; ++i) {
            s.push_back(qesn.seed + i);
        }
        return s;
    }

    void validate() const {
        qesn.validate();
        lorenz.validate();
        detail::require(n_seeds >= 1, "n_seeds must be positive");
        detail::require(!features.empty(), "at least one feature mode is required");
        detail::require(split.train_len + split.test_len + 1 <= lorenz.n_steps,
                        "train + test + 1 must not exceed the Lorenz series length (targets are one step ahead)");
        detail::require(split.washout < split.train_len, "washout must leave training rows");
        detail::require(export_steps >= 1, "export_steps must be positive");
    }
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

template <class T> void take(const Json &j, const char *key, T &field) {
    if (j.contains(key)) {
        j.at(key).get_to(field);
    }
}

inline Json vec3(const Eigen::Vector3d &v) { return Json::array({v.x(), v.y(), v.z()}); }

} // namespace detail

inline Json experiment_to_json(const ExperimentConfig &c) {
    Json j;
    j["kind"] = std::string(to_string(c.kind));
    j["qesn"] = config_to_json(c.qesn);
    j["n_seeds"] = c.n_seeds;
    j["lorenz"] = {{"sigma", c.lorenz.sigma},       {"rho", c.lorenz.rho},
                   {"beta", c.lorenz.beta},         {"dt", c.lorenz.dt},
                   {"n_steps", c.lorenz.n_steps},   {"x0", detail::vec3(c.lorenz.x0)},
                   {"transient", c.lorenz.transient}};
    j["split"] = {{"train_len", c.split.train_len},
                  {"test_len", c.split.test_len},
                  {"washout", c.split.washout},
                  {"normalization", c.split.scope == NormalizationScope::Global ? "global" : "train-only"}};
    auto modes = Json::array();
    for (auto m : c.features) {
        modes.push_back(std::string(to_string(m)));
    }
    j["features"] = std::move(modes);
    j["regression"] = {{"lambda_grid", c.regression.lambda_grid},
                       {"l1_grid", c.regression.l1_grid},
                       {"selection", std::string(to_string(c.regression.selection))},
                       {"validation_fraction", c.regression.validation_fraction},
                       {"tol", c.regression.tol},
                       {"max_iter", c.regression.max_iter}};
    const auto &r = c.response;
    auto probes = Json::array();
    for (auto p : r.probes) {
        probes.push_back(std::string(to_string(p)));
    }
    j["response"] = {{"n_qubits", r.n_qubits},
                     {"context", r.context},
                     {"n_blocks", r.n_blocks},
                     {"levels", r.levels},
                     {"probes", std::move(probes)},
                     {"repeat_blocks", r.repeat_blocks},
                     {"repeat_kappa", r.repeat_kappa},
                     {"decouple_full", r.decouple_full},
                     {"length", r.probe.length},
                     {"transition", r.probe.transition_index()},
                     {"period", r.probe.period},
                     {"amplitude", r.probe.amplitude},
                     {"epsilon", r.epsilon},
                     {"washout", r.washout},
                     {"condition_mode", std::string(to_string(r.condition_mode))},
                     {"plots", r.plots}};
    j["baseline"] = {{"n_nodes", c.baseline.esn.n_nodes},
                     {"spectral_radius", c.baseline.esn.spectral_radius},
                     {"input_scale", c.baseline.esn.input_scale},
                     {"reservoir_sparsity", c.baseline.esn.reservoir_sparsity},
                     {"leak_rate", c.baseline.esn.leak_rate},
                     {"radius_grid", c.baseline.radius_grid},
                     {"leak_grid", c.baseline.leak_grid},
                     {"input_scale_grid", c.baseline.input_scale_grid},
                     {"qubits", c.baseline.qubits}};
    j["sweep_qubits"] = c.sweep_qubits;
    j["export_steps"] = c.export_steps;
    return j;
}

/// Missing keys keep their defaults.
inline ExperimentConfig experiment_from_json(const Json &j) {
    detail::require(j.is_object(), "experiment config must be a JSON object");
    ExperimentConfig c;
    try {
        if (j.contains("kind")) {
            c.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
        }
        if (j.contains("qesn")) {
            c.qesn = config_from_json(j.at("qesn"));
        }
        detail::take(j, "n_seeds", c.n_seeds);
        if (j.contains("lorenz")) {
            const auto &l = j.at("lorenz");
            detail::take(l, "sigma", c.lorenz.sigma);
            detail::take(l, "rho", c.lorenz.rho);
            detail::take(l, "beta", c.lorenz.beta);
            detail::take(l, "dt", c.lorenz.dt);
            detail::take(l, "n_steps", c.lorenz.n_steps);
            detail::take(l, "transient", c.lorenz.transient);
            if (l.contains("x0")) {
                const auto v = l.at("x0").get<std::vector<double>>();
                detail::require(v.size() == 3, "x0 must have three components");
                c.lorenz.x0 = Eigen::Vector3d(v[0], v[1], v[2]);
            }
        }
        if (j.contains("split")) {
            const auto &s = j.at("split");
            detail::take(s, "train_len", c.split.train_len);
            detail::take(s, "test_len", c.split.test_len);
            detail::take(s, "washout", c.split.washout);
            if (s.contains("normalization")) {
                const auto v = s.at("normalization").get<std::string>();
                detail::require(v == "global" || v == "train-only", "normalization must be global or train-only");
                c.split.scope = v == "global" ? NormalizationScope::Global : NormalizationScope::TrainOnly;
            }
        }
        if (j.contains("features")) {
            c.features.clear();
            for (const auto &m : j.at("features")) {
                c.features.push_back(feature_mode_from_string(m.get<std::string>()));
            }
        }
        if (j.contains("regression")) {
            const auto &r = j.at("regression");
            detail::take(r, "lambda_grid", c.regression.lambda_grid);
            detail::take(r, "l1_grid", c.regression.l1_grid);
            detail::take(r, "validation_fraction", c.regression.validation_fraction);
            detail::take(r, "tol", c.regression.tol);
            detail::take(r, "max_iter", c.regression.max_iter);
            if (r.contains("selection")) {
                c.regression.selection = selection_from_string(r.at("selection").get<std::string>());
            }
        }
        if (j.contains("response")) {
            const auto &r = j.at("response");
            auto &o = c.response;
            detail::take(r, "n_qubits", o.n_qubits);
            detail::take(r, "context", o.context);
            detail::take(r, "n_blocks", o.n_blocks);
            detail::take(r, "levels", o.levels);
            detail::take(r, "repeat_blocks", o.repeat_blocks);
            detail::take(r, "repeat_kappa", o.repeat_kappa);
            detail::take(r, "decouple_full", o.decouple_full);
            detail::take(r, "length", o.probe.length);
            if (r.contains("transition")) {
                o.probe.transition = r.at("transition").get<std::size_t>();
            }
            detail::take(r, "period", o.probe.period);
            detail::take(r, "amplitude", o.probe.amplitude);
            detail::take(r, "epsilon", o.epsilon);
            detail::take(r, "washout", o.washout);
            detail::take(r, "plots", o.plots);
            if (r.contains("probes")) {
                o.probes.clear();
                for (const auto &p : r.at("probes")) {
                    o.probes.push_back(probe_kind_from_string(p.get<std::string>()));
                }
            }
            if (r.contains("condition_mode")) {
                o.condition_mode = feature_mode_from_string(r.at("condition_mode").get<std::string>());
            }
        }
        if (j.contains("baseline")) {
            const auto &b = j.at("baseline");
            detail::take(b, "n_nodes", c.baseline.esn.n_nodes);
            detail::take(b, "spectral_radius", c.baseline.esn.spectral_radius);
            detail::take(b, "input_scale", c.baseline.esn.input_scale);
            detail::take(b, "reservoir_sparsity", c.baseline.esn.reservoir_sparsity);
            detail::take(b, "leak_rate", c.baseline.esn.leak_rate);
            detail::take(b, "radius_grid", c.baseline.radius_grid);
            detail::take(b, "leak_grid", c.baseline.leak_grid);
            detail::take(b, "input_scale_grid", c.baseline.input_scale_grid);
            detail::take(b, "qubits", c.baseline.qubits);
        }
        detail::take(j, "sweep_qubits", c.sweep_qubits);
        detail::take(j, "export_steps", c.export_steps);
        if (j.contains("output_dir") && !j.at("output_dir").is_null()) {
            c.output_dir = j.at("output_dir").get<std::string>();
        }
    } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(std::string("bad experiment config: ") + e.what());
    }
    return c;
}

/// Loads a config file; a missing file is a usage error naming the path.
inline ExperimentConfig load_experiment(const std::filesystem::path &path) {
    if (!std::filesystem::exists(path)) {
        throw InvalidArgument("config file not found: " + path.string());
    }
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error &e) {
        throw InvalidArgument("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return experiment_from_json(j);
}

inline std::string config_text(const ExperimentConfig &c) { return experiment_to_json(c).dump(2) + "\n"; }

inline std::string config_hash(const ExperimentConfig &c) { return sha256_hex(config_text(c)); }

/// Explicit directory, else $QESN_OUTPUT_ROOT (or ./qesn-out) / <kind>-<hash prefix>.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig &c) {
    if (c.output_dir) {
        return *c.output_dir;
    }
    const char *root = std::getenv("QESN_OUTPUT_ROOT");
    const std::filesystem::path base = root && *root ? root : "qesn-out";
    return base / (std::string(to_string(c.kind)) + "-" + config_hash(c).substr(0, 12));
}

// ---------------------------------------------------------------------------
// Observer data plumbing
// ---------------------------------------------------------------------------

/**
 * Regression rows for the observer task: the feature row whose newest input
 * is x[j - 1] predicts (y, z)[j]. Train targets are j in [max(washout, s0 + 1),
 * train_len), test targets j in [train_len, train_len + test_len), where s0
 * is the first feature row's input index.
 */
struct ObserverRows {
    Eigen::MatrixXd x_train;
    Eigen::MatrixXd y_train;
    Eigen::MatrixXd x_test;
    Eigen::MatrixXd y_test;
    std::vector<std::size_t> train_targets;
    std::vector<std::size_t> test_targets;
};

inline ObserverRows observer_rows(const FeatureMatrix &fm, const LorenzDataset &d) {
    detail::require(!fm.source_index.empty(), "empty feature matrix");
    const std::size_t s0 = fm.source_index.front();
    const auto row_for = [&](std::size_t j) {
        const std::size_t r = j - 1 - s0;
        detail::require(r < fm.rows() && fm.source_index[r] == j - 1, "feature rows are not contiguous");
        return static_cast<Eigen::Index>(r);
    };
    ObserverRows out;
    const std::size_t first = std::max(d.washout, s0 + 1);
    for (std::size_t j = first; j < d.train_len; ++j) {
        out.train_targets.push_back(j);
    }
    for (std::size_t j = d.test_begin(); j < d.test_end(); ++j) {
        out.test_targets.push_back(j);
    }
    const auto fill = [&](const std::vector<std::size_t> &targets, Eigen::MatrixXd &x, Eigen::MatrixXd &y) {
        x.resize(static_cast<Eigen::Index>(targets.size()), fm.values.cols());
        y.resize(static_cast<Eigen::Index>(targets.size()), 2);
        for (std::size_t k = 0; k < targets.size(); ++k) {
            const auto r = static_cast<Eigen::Index>(k);
            x.row(r) = fm.values.row(row_for(targets[k]));
            y.row(r) = d.normalized.row(static_cast<Eigen::Index>(targets[k])).tail(2);
        }
    };
    fill(out.train_targets, out.x_train, out.y_train);
    fill(out.test_targets, out.x_test, out.y_test);
    return out;
}

inline LorenzDataset build_dataset(const ExperimentConfig &c) {
    return make_dataset(integrate_lorenz(c.lorenz), c.split.train_len, c.split.test_len, c.split.washout,
                        c.split.scope);
}

inline TimeSeries observer_input(const LorenzDataset &d) { return d.normalized.col(0); }

inline Json fit_report_json(const FitReport &r) {
    auto vec = [](const Eigen::RowVectorXd &v) { return std::vector<double>(v.begin(), v.end()); };
    return {{"train_rmse", r.train_rmse},
            {"test_rmse", r.test_rmse},
            {"train_rmse_per_target", vec(r.train_rmse_per_target)},
            {"test_rmse_per_target", vec(r.test_rmse_per_target)},
            {"lambda", r.lambda},
            {"l1_ratio", r.l1_ratio},
            {"iterations", r.iterations},
            {"converged", r.converged}};
}

inline Json grid_json(const std::vector<GridPoint> &grid) {
    auto a = Json::array();
    for (const auto &g : grid) {
        a.push_back({{"lambda", g.lambda},
                     {"l1_ratio", g.l1_ratio},
                     {"train_rmse", g.train_rmse},
                     {"selection_rmse", g.selection_rmse},
                     {"test_rmse", g.test_rmse},
                     {"iterations", g.iterations},
                     {"converged", g.converged}});
    }
    return a;
}

/// Score a tuned fit was ranked by (test or validation RMSE of its grid point).
inline double selection_score(const TuneResult &t) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto &g : t.grid) {
        if (g.lambda == t.report.lambda && g.l1_ratio == t.report.l1_ratio) {
            best = std::min(best, g.selection_rmse);
        }
    }
    return best;
}

struct SeedFit {
    std::uint64_t seed = 0;
    FeatureMode mode = FeatureMode::Probability;
    TuneResult tuned;
};

struct ObserverResult {
    LorenzDataset data;
    std::vector<SeedFit> fits;
    /// Index into `fits` of the best seed per requested feature mode.
    std::vector<std::size_t> best;
    std::vector<FeatureMatrix> best_features;
    std::vector<QesnWeights> best_weights;
    std::size_t fit_rows = 0;
    std::size_t test_rows = 0;
};

/// The Lorenz observer protocol without file output.
inline ObserverResult observe_lorenz(const ExperimentConfig &c) {
    c.validate();
    ObserverResult out;
    out.data = build_dataset(c);
    const TimeSeries input = observer_input(out.data);
    TuneOptions tune = c.regression;
    tune.workers = c.workers;
    const std::size_t n_modes = c.features.size();
    out.best.assign(n_modes, 0);
    out.best_features.resize(n_modes);
    out.best_weights.resize(n_modes);
    std::vector<double> best_score(n_modes, std::numeric_limits<double>::infinity());
    for (auto seed : c.seeds()) {
        QesnConfig qc = c.qesn;
        qc.seed = seed;
        qc.workers = c.workers;
        qc.input_dim = 1;
        const QesnWeights w = init_weights(qc);
        const FeatureMatrix raw = run_series(input, qc, w);
        for (std::size_t m = 0; m < n_modes; ++m) {
            FeatureMatrix fm = with_mode(raw, c.features[m]);
            fm.washout = c.split.washout;
            const ObserverRows rows = observer_rows(fm, out.data);
            out.fit_rows = rows.train_targets.size();
            out.test_rows = rows.test_targets.size();
            SeedFit f{seed, c.features[m], tune_hyperparameters(rows.x_train, rows.y_train, rows.x_test, rows.y_test, tune)};
            const double score = selection_score(f.tuned);
            out.fits.push_back(std::move(f));
            if (score < best_score[m]) {
                best_score[m] = score;
                out.best[m] = out.fits.size() - 1;
                out.best_features[m] = std::move(fm);
                out.best_weights[m] = w;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Runs with artifacts
// ---------------------------------------------------------------------------

struct RunOutcome {
    std::filesystem::path dir;
    Json report;
};

namespace detail {

inline Json manifest_header(const ExperimentConfig &c, const Json &durations) {
    return {{"tool", "qesn"},
            {"version", kVersion},
            {"kind", std::string(to_string(c.kind))},
            {"config_sha256", config_hash(c)},
            {"durations_seconds", durations}};
}

/// Runs `body` against a fresh writer; removes partial output on failure.
template <class Body> RunOutcome with_artifacts(const ExperimentConfig &c, Body &&body) {
    c.validate();
    RunOutcome out;
    out.dir = resolve_output_dir(c);
    ArtifactWriter w(out.dir);
    try {
        Json durations = Json::object();
        w.write("config.json", config_text(c));
        out.report = body(w, durations);
        w.write_manifest(manifest_header(c, durations));
    } catch (...) {
        w.abandon();
        throw;
    }
    return out;
}

inline void write_lorenz(ArtifactWriter &w, const LorenzDataset &d, double dt) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(d.raw.rows()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    (void)dt;
    w.write("lorenz.csv", csv_table({"t", "x", "y", "z"}, d.raw, idx));
    w.write("lorenz_normalized.csv", csv_table({"t", "x_n", "y_n", "z_n"}, d.normalized, idx));
}

inline std::string file_label(std::string s) {
    for (auto &ch : s) {
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '-') {
            ch = '_';
        }
    }
    return s;
}

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

} // namespace detail

inline RunOutcome run_lorenz_gen(const ExperimentConfig &c) {
    return detail::with_artifacts(c, [&](ArtifactWriter &w, Json &durations) {
        const Stopwatch sw;
        const LorenzDataset d = build_dataset(c);
        detail::write_lorenz(w, d, c.lorenz.dt);
        durations["integrate"] = sw.seconds();
        Json r = {{"n_steps", c.lorenz.n_steps},
                  {"min", std::vector<double>(d.scaling.min.begin(), d.scaling.min.end())},
                  {"max", std::vector<double>(d.scaling.max.begin(), d.scaling.max.end())}};
        w.write_json("report.json", r);
        return r;
    });
}

inline RunOutcome run_lorenz_observer(const ExperimentConfig &c) {
    return detail::with_artifacts(c, [&](ArtifactWriter &w, Json &durations) {
        const Stopwatch sw;
        const ObserverResult res = observe_lorenz(c);
        durations["observer"] = sw.seconds();
        detail::write_lorenz(w, res.data, c.lorenz.dt);

        Json report;
        report["fit_rows"] = res.fit_rows;
        report["test_rows"] = res.test_rows;
        report["washout"] = c.split.washout;
        auto runs = Json::array();
        for (const auto &f : res.fits) {
            Json e = {{"seed", f.seed}, {"features", std::string(to_string(f.mode))}};
            e["fit"] = fit_report_json(f.tuned.report);
            e["grid"] = grid_json(f.tuned.grid);
            runs.push_back(std::move(e));
        }
        report["runs"] = std::move(runs);

        std::string table = "seed,features,train_rmse,test_rmse,lambda,l1_ratio,converged\n";
        for (const auto &f : res.fits) {
            const auto &r = f.tuned.report;
            table += std::to_string(f.seed) + "," + std::string(to_string(f.mode)) + "," +
                     format_double(r.train_rmse) + "," + format_double(r.test_rmse) + "," +
                     format_double(r.lambda) + "," + format_double(r.l1_ratio) + "," +
                     (r.converged ? "1" : "0") + "\n";
        }
        w.write("report.csv", table);

        Json best = Json::object();
        for (std::size_t m = 0; m < c.features.size(); ++m) {
            const SeedFit &f = res.fits[res.best[m]];
            const std::string mode(to_string(f.mode));
            best[mode] = {{"seed", f.seed}, {"fit", fit_report_json(f.tuned.report)}};

            const FeatureMatrix &fm = res.best_features[m];
            std::vector<std::string> header{"t"};
            const auto labels = feature_labels(fm);
            header.insert(header.end(), labels.begin(), labels.end());
            w.write("features_" + mode + ".csv", csv_table(header, fm.values, fm.source_index));

            const ObserverRows rows = observer_rows(fm, res.data);
            Eigen::MatrixXd pred(rows.x_train.rows() + rows.x_test.rows(), 5);
            pred.topRows(rows.x_train.rows()) << rows.y_train, predict(f.tuned.model, rows.x_train),
                Eigen::VectorXd::Zero(rows.x_train.rows());
            pred.bottomRows(rows.x_test.rows()) << rows.y_test, predict(f.tuned.model, rows.x_test),
                Eigen::VectorXd::Ones(rows.x_test.rows());
            std::vector<std::size_t> idx = rows.train_targets;
            idx.insert(idx.end(), rows.test_targets.begin(), rows.test_targets.end());
            w.write("predictions_" + mode + ".csv",
                    csv_table({"t", "y_n", "z_n", "y_pred", "z_pred", "test"}, pred, idx));
            w.write_json("model_" + mode + ".json", model_to_json(f.tuned.model));
            QesnConfig qc = c.qesn;
            qc.seed = f.seed;
            w.write_json("weights_" + mode + ".json", weights_to_json(res.best_weights[m], qc));
        }
        report["best"] = std::move(best);
        w.write_json("report.json", report);
        durations["total"] = sw.seconds();
        return report;
    });
}

/// Observer protocol repeated over `sweep_qubits`; one row per qubit count and mode.
inline RunOutcome run_qubit_sweep(const ExperimentConfig &c) {
    detail::require(!c.sweep_qubits.empty(), "sweep_qubits must not be empty");
    return detail::with_artifacts(c, [&](ArtifactWriter &w, Json &durations) {
        const Stopwatch sw;
        std::string table = "n_qubits,features,best_seed,train_rmse,test_rmse,lambda,l1_ratio\n";
        auto rows = Json::array();
        for (std::size_t nq : c.sweep_qubits) {
            ExperimentConfig qc = c;
            qc.qesn.n_qubits = nq;
            const ObserverResult res = observe_lorenz(qc);
            for (std::size_t m = 0; m < c.features.size(); ++m) {
                const SeedFit &f = res.fits[res.best[m]];
                const auto &r = f.tuned.report;
                table += std::to_string(nq) + "," + std::string(to_string(f.mode)) + "," + std::to_string(f.seed) +
                         "," + format_double(r.train_rmse) + "," + format_double(r.test_rmse) + "," +
                         format_double(r.lambda) + "," + format_double(r.l1_ratio) + "\n";
                rows.push_back({{"n_qubits", nq},
                                {"features", std::string(to_string(f.mode))},
                                {"best_seed", f.seed},
                                {"fit", fit_report_json(r)}});
            }
            durations["qubits_" + std::to_string(nq)] = sw.seconds();
        }
        Json report = {{"rows", std::move(rows)}};
        w.write("sweep.csv", table);
        w.write_json("sweep.json", report);
        return report;
    });
}

inline Json response_entry_json(const ResponseEntry &e, const std::string &csv) {
    return {{"label", e.label},
            {"probe", std::string(to_string(e.probe))},
            {"kappa", e.kappa},
            {"n_blocks", e.n_blocks},
            {"keep_cnot", e.keep_cnot},
            {"realized_sparsity", e.realized_sparsity},
            {"gates_per_step",
             {{"rz", e.gates_per_step.rz},
              {"rx", e.gates_per_step.rx},
              {"cx", e.gates_per_step.cnot},
              {"cry", e.gates_per_step.cry},
              {"crx", e.gates_per_step.crx},
              {"crz", e.gates_per_step.crz},
              {"total", e.gates_per_step.total()}}},
            {"rise_time", e.probe == ProbeKind::Step && e.rise ? Json(*e.rise) : Json(nullptr)},
            {"settled", e.probe != ProbeKind::Step || e.rise.has_value()},
            {"condition_number", detail::finite_or_null(e.condition)},
            {"condition_infinite", std::isinf(e.condition)},
            {"harmonic_fraction", e.harmonic_fraction},
            {"features_csv", csv}};
}

struct ResponseRun {
    ResponseReport sparsity;
    ResponseReport repeats;
};

inline QesnConfig response_qesn(const ExperimentConfig &c) {
    QesnConfig q = c.qesn;
    q.n_qubits = c.response.n_qubits;
    q.context = c.response.context;
    q.n_blocks = c.response.n_blocks;
    q.input_dim = 1;
    q.backend = Backend::ExactChannel;
    q.noise_p.reset();
    q.keep_cnot = true;
    return q;
}

inline ResponseOptions response_options(const ExperimentConfig &c) {
    ResponseOptions o;
    o.probe = c.response.probe;
    o.epsilon = c.response.epsilon;
    o.washout = c.response.washout;
    o.condition_mode = c.response.condition_mode;
    o.workers = c.workers;
    return o;
}

inline ResponseRun analyse_response(const ExperimentConfig &c) {
    const QesnConfig q = response_qesn(c);
    const ResponseOptions o = response_options(c);
    ResponseRun r;
    r.sparsity = sparsity_sweep(c.response.probes, c.response.levels, q, o, c.response.decouple_full);
    if (!c.response.repeat_blocks.empty()) {
        QesnConfig rq = q;
        rq.kappa = c.response.repeat_kappa;
        r.repeats = repeat_block_sweep(c.response.probes, c.response.repeat_blocks, rq, o);
    }
    return r;
}

inline RunOutcome run_response(const ExperimentConfig &c) {
    return detail::with_artifacts(c, [&](ArtifactWriter &w, Json &durations) {
        const Stopwatch sw;
        const ResponseRun run = analyse_response(c);
        durations["sweeps"] = sw.seconds();
        Json report;
        const auto emit = [&](const ResponseReport &rep, const std::string &sweep) {
            auto list = Json::array();
            for (const auto &e : rep.entries) {
                const std::string stem =
                    sweep + "/" + detail::file_label(e.label) + "_" + std::string(to_string(e.probe));
                std::vector<std::string> header{"t", "input"};
                const auto labels = feature_labels(e.features);
                header.insert(header.end(), labels.begin(), labels.end());
                const FeatureMatrix ex = to_expectation(e.features);
                const auto ex_labels = feature_labels(ex);
                header.insert(header.end(), ex_labels.begin(), ex_labels.end());
                Eigen::MatrixXd table(e.features.values.rows(), 1 + e.features.values.cols() + ex.values.cols());
                for (Eigen::Index r = 0; r < table.rows(); ++r) {
                    table(r, 0) = e.input(static_cast<Eigen::Index>(e.features.source_index[static_cast<std::size_t>(r)]), 0);
                }
                table.middleCols(1, e.features.values.cols()) = e.features.values;
                table.rightCols(ex.values.cols()) = ex.values;
                w.write("cells/" + stem + ".csv", csv_table(header, table, e.features.source_index));
                if (c.response.plots) {
                    w.write("plots/" + stem + ".svg", response_svg(e));
                }
                list.push_back(response_entry_json(e, "cells/" + stem + ".csv"));
            }
            report[sweep] = std::move(list);
        };
        emit(run.sparsity, "sparsity");
        emit(run.repeats, "repeat_blocks");
        w.write_json("response_report.json", report);
        durations["total"] = sw.seconds();
        return report;
    });
}

struct CompareRow {
    std::size_t n_qubits = 0;
    FeatureMode mode = FeatureMode::Probability;
    std::string model;
    std::size_t width = 0;
    FitReport fit;
    std::size_t fit_rows = 0;
    std::size_t test_rows = 0;
    std::size_t first_train_target = 0;
};

/// Best ESN over the hyperparameter grid, on the observer rows.
inline CompareRow compare_esn(const ExperimentConfig &c, const LorenzDataset &d, std::size_t nodes,
                              const TuneOptions &tune) {
    const TimeSeries input = observer_input(d);
    CompareRow best;
    double best_score = std::numeric_limits<double>::infinity();
    for (double radius : c.baseline.radius_grid) {
        for (double leak : c.baseline.leak_grid) {
            for (double scale : c.baseline.input_scale_grid) {
                EsnParams p = c.baseline.esn;
                p.n_nodes = nodes;
                p.spectral_radius = radius;
                p.leak_rate = leak;
                p.input_scale = scale;
                p.seed = c.qesn.seed;
                FeatureMatrix fm = esn_run(input, esn_init(p), p);
                const ObserverRows rows = observer_rows(fm, d);
                const TuneResult t = tune_hyperparameters(rows.x_train, rows.y_train, rows.x_test, rows.y_test, tune);
                const double score = selection_score(t);
                if (score < best_score) {
                    best_score = score;
                    best.fit = t.report;
                    best.fit_rows = rows.train_targets.size();
                    best.test_rows = rows.test_targets.size();
                    best.first_train_target = rows.train_targets.front();
                }
            }
        }
    }
    best.width = nodes;
    return best;
}

inline std::vector<CompareRow> compare_models(const ExperimentConfig &c) {
    std::vector<std::size_t> qubits = c.baseline.qubits;
    if (qubits.empty()) {
        qubits.push_back(c.qesn.n_qubits);
    }
    TuneOptions tune = c.regression;
    tune.workers = c.workers;
    std::vector<CompareRow> rows;
    for (std::size_t nq : qubits) {
        ExperimentConfig qc = c;
        qc.qesn.n_qubits = nq;
        const ObserverResult obs = observe_lorenz(qc);
        const LorenzDataset &d = obs.data;

        const FeatureMatrix lin = window_features(observer_input(d), c.qesn.context);
        const ObserverRows lin_rows = observer_rows(lin, d);
        const TuneResult lin_fit =
            tune_hyperparameters(lin_rows.x_train, lin_rows.y_train, lin_rows.x_test, lin_rows.y_test, tune);

        for (std::size_t m = 0; m < c.features.size(); ++m) {
            const FeatureMode mode = c.features[m];
            const SeedFit &qf = obs.fits[obs.best[m]];
            CompareRow q{nq, mode, "qesn", obs.best_features[m].cols(), qf.tuned.report, obs.fit_rows, obs.test_rows,
                         observer_rows(obs.best_features[m], d).train_targets.front()};
            CompareRow e = compare_esn(c, d, matched_nodes(nq, mode), tune);
            e.n_qubits = nq;
            e.mode = mode;
            e.model = mode == FeatureMode::Expectation ? "esn" : "esn-fair-width";
            CompareRow l{nq, mode, "linear", lin.cols(), lin_fit.report, lin_rows.train_targets.size(),
                         lin_rows.test_targets.size(), lin_rows.train_targets.front()};
            rows.push_back(std::move(q));
            rows.push_back(std::move(e));
            rows.push_back(std::move(l));
        }
    }
    return rows;
}

inline RunOutcome run_compare(const ExperimentConfig &c) {
    return detail::with_artifacts(c, [&](ArtifactWriter &w, Json &durations) {
        const Stopwatch sw;
        const std::vector<CompareRow> rows = compare_models(c);
        durations["compare"] = sw.seconds();
        std::string table = "n_qubits,features,model,width,train_rmse,test_rmse,fit_rows,test_rows,first_train_target\n";
        auto list = Json::array();
        bool shared = true;
        for (const auto &r : rows) {
            table += std::to_string(r.n_qubits) + "," + std::string(to_string(r.mode)) + "," + r.model + "," +
                     std::to_string(r.width) + "," + format_double(r.fit.train_rmse) + "," +
                     format_double(r.fit.test_rmse) + "," + std::to_string(r.fit_rows) + "," +
                     std::to_string(r.test_rows) + "," + std::to_string(r.first_train_target) + "\n";
            list.push_back({{"n_qubits", r.n_qubits},
                            {"features", std::string(to_string(r.mode))},
                            {"model", r.model},
                            {"width", r.width},
                            {"fit", fit_report_json(r.fit)},
                            {"fit_rows", r.fit_rows},
                            {"test_rows", r.test_rows},
                            {"first_train_target", r.first_train_target}});
            shared = shared && r.fit_rows == rows.front().fit_rows && r.test_rows == rows.front().test_rows &&
                     r.first_train_target == rows.front().first_train_target;
        }
        Json report = {{"rows", std::move(list)}, {"shared_split", shared}, {"washout", c.split.washout}};
        w.write("compare.csv", table);
        w.write_json("compare.json", report);
        return report;
    });
}

inline RunOutcome run_export(const ExperimentConfig &c) {
    return detail::with_artifacts(c, [&](ArtifactWriter &w, Json &durations) {
        const Stopwatch sw;
        const LorenzDataset d = build_dataset(c);
        QesnConfig q = c.qesn;
        q.input_dim = 1;
        const std::size_t n = std::min<std::size_t>(q.context + c.export_steps - 1, static_cast<std::size_t>(d.normalized.rows()));
        const TimeSeries input = observer_input(d).topRows(static_cast<Eigen::Index>(n));
        const QesnWeights weights = init_weights(q);
        const std::string text = export_qasm3(q, weights, input);
        w.write("circuit.qasm", text);
        w.write_json("weights.json", weights_to_json(weights, q));
        durations["export"] = sw.seconds();
        return Json{{"steps", n - q.context + 1}, {"qubits", q.n_qubits}, {"bytes", text.size()}};
    });
}

inline RunOutcome run_experiment(const ExperimentConfig &c) {
    switch (c.kind) {
    case ExperimentKind::LorenzGen:
        return run_lorenz_gen(c);
    case ExperimentKind::LorenzObserver:
        return run_lorenz_observer(c);
    case ExperimentKind::Sweep:
        return run_qubit_sweep(c);
    case ExperimentKind::Response:
        return run_response(c);
    case ExperimentKind::Compare:
        return run_compare(c);
    case ExperimentKind::Export:
        return run_export(c);
    }
    throw InvalidArgument("unknown experiment kind");
}

} // namespace qesn
