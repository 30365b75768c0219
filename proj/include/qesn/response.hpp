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
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "qesn/circuit/embedding.hpp"
#include "qesn/circuit/reservoir.hpp"
#include "qesn/circuit/weights.hpp"
#include "qesn/error.hpp"

namespace qesn {

enum class ProbeKind { Step, Ramp, Sinusoid };

inline std::string_view to_string(ProbeKind k) {
    switch (k) {
    case ProbeKind::Step:
        return "step";
    case ProbeKind::Ramp:
        return "ramp";
    case ProbeKind::Sinusoid:
        return "sinusoid";
    }
    return "?";
}

inline ProbeKind probe_kind_from_string(std::string_view s) {
    if (s == "step") {
        return ProbeKind::Step;
    }
    if (s == "ramp") {
        return ProbeKind::Ramp;
    }
    if (s == "sinusoid" || s == "sine") {
        return ProbeKind::Sinusoid;
    }
    throw InvalidArgument("unknown probe kind '" + std::string(s) + "'");
}

struct ProbeParams {
    std::size_t length = 200;
    /// Step index; defaults to length / 2.
    std::optional<std::size_t> transition;
    /// Ramp rise per step; defaults to 1 / (length - 1), clipped at 1.
    std::optional<double> slope;
    double period = 25.0;
    double amplitude = 0.5;

    [[nodiscard]] std::size_t transition_index() const { return transition.value_or(length / 2); }
};

/// Probe input series (length x 1) with values in [0, 1].
inline TimeSeries gen_probe(ProbeKind kind, const ProbeParams &p = {}) {
    detail::require(p.length >= 2, "probe length must be at least 2");
    TimeSeries s(static_cast<Eigen::Index>(p.length), 1);
    switch (kind) {
    case ProbeKind::Step: {
        const std::size_t t0 = p.transition_index();
        detail::require(t0 < p.length, "step transition outside the probe");
        for (std::size_t t = 0; t < p.length; ++t) {
            s(static_cast<Eigen::Index>(t), 0) = t < t0 ? 0.0 : 1.0;
        }
        break;
    }
    case ProbeKind::Ramp: {
        const double slope = p.slope.value_or(1.0 / static_cast<double>(p.length - 1));
        detail::require(slope > 0.0 && std::isfinite(slope), "ramp slope must be positive");
        for (std::size_t t = 0; t < p.length; ++t) {
            s(static_cast<Eigen::Index>(t), 0) = std::min(1.0, slope * static_cast<double>(t));
        }
        break;
    }
    case ProbeKind::Sinusoid: {
        detail::require(p.period >= 2.0 && std::isfinite(p.period), "sinusoid period must be >= 2");
        detail::require(p.amplitude >= 0.0 && p.amplitude <= 0.5,
                        "sinusoid amplitude must be in [0, 0.5]");
        for (std::size_t t = 0; t < p.length; ++t) {
            s(static_cast<Eigen::Index>(t), 0) =
                0.5 + p.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / p.period);
        }
        break;
    }
    }
    return s;
}

/// Rise time in steps; nullopt when the rows never settle.
using RiseTime = std::optional<std::size_t>;

/**
 * Smallest k such that every row from `first_row + k` onward lies within
 * `epsilon` (L1) of the settled value, the mean of the last 10 rows.
 */
inline RiseTime rise_time_rows(const Eigen::MatrixXd &rows, std::size_t first_row,
                               double epsilon = 0.02) {
    const auto n = static_cast<std::size_t>(rows.rows());
    detail::require(first_row < n, "transition row outside the feature matrix");
    const std::size_t tail = std::min<std::size_t>(10, n - first_row);
    const Eigen::RowVectorXd settled = rows.bottomRows(static_cast<Eigen::Index>(tail)).colwise().mean();
    std::size_t last_out = n;
    for (std::size_t r = n; r-- > first_row;) {
        if ((rows.row(static_cast<Eigen::Index>(r)) - settled).lpNorm<1>() > epsilon) {
            last_out = r;
            break;
        }
    }
    if (last_out == n) {
        return 0;
    }
    // Settling must happen before the averaging tail starts.
    if (last_out + 1 >= n - tail + 1) {
        return std::nullopt;
    }
    return last_out + 1 - first_row;
}

/// Rise time measured from the first row whose window contains the input
/// at `transition`.
inline RiseTime rise_time(const FeatureMatrix &features, std::size_t transition,
                          double epsilon = 0.02) {
    const auto it = std::find(features.source_index.begin(), features.source_index.end(), transition);
    detail::require(it != features.source_index.end(), "transition not covered by the feature rows");
    return rise_time_rows(features.values,
                          static_cast<std::size_t>(it - features.source_index.begin()), epsilon);
}

/**
 * Singular values by one-sided (Hestenes) Jacobi rotations on the columns,
 * sorted descending. Accurate to high relative precision, which matters
 * for the smallest singular value.
 */
inline Eigen::VectorXd singular_values(const Eigen::MatrixXd &a) {
    detail::require(a.size() > 0, "singular values of an empty matrix");
    // Work on the orientation with fewer columns.
    Eigen::MatrixXd u = a.rows() >= a.cols() ? a : Eigen::MatrixXd(a.transpose());
    const Eigen::Index n = u.cols();
    const double eps = std::numeric_limits<double>::epsilon();
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double alpha = u.col(p).squaredNorm();
                const double beta = u.col(q).squaredNorm();
                const double gamma = u.col(p).dot(u.col(q));
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) {
                    continue;
                }
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                const Eigen::VectorXd up = u.col(p);
                u.col(p) = c * up - s * u.col(q);
                u.col(q) = s * up + c * u.col(q);
            }
        }
        if (!rotated) {
            break;
        }
    }
    Eigen::VectorXd sv = u.colwise().norm().transpose();
    std::sort(sv.data(), sv.data() + sv.size(), std::greater<>());
    return sv;
}

/// sigma_max / sigma_min; +infinity when sigma_min < 1e-14 sigma_max.
inline double condition_number(const Eigen::MatrixXd &features) {
    detail::require(features.rows() > 0 && features.cols() > 0, "condition number of an empty matrix");
    detail::require(features.allFinite(), "feature matrix contains non-finite values");
    const Eigen::VectorXd sv = singular_values(features);
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    if (!(smax > 0.0) || smin < 1e-14 * smax) {
        return std::numeric_limits<double>::infinity();
    }
    return smax / smin;
}

/**
 * Share of non-DC spectral energy at or above twice the fundamental, for
 * one column. The trailing whole periods of `x` are analysed so the
 * fundamental falls on an exact DFT bin.
 */
inline double harmonic_energy_fraction(const Eigen::VectorXd &x, std::size_t period) {
    detail::require(period >= 2, "period must be at least 2");
    const std::size_t cycles = static_cast<std::size_t>(x.size()) / period;
    detail::require(cycles >= 1, "series shorter than one period");
    const std::size_t n = cycles * period;
    const Eigen::VectorXd seg = x.tail(static_cast<Eigen::Index>(n));
    const Eigen::VectorXd centred = seg.array() - seg.mean();
    double total = 0.0;
    double above = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        std::complex<double> acc{};
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
            acc += centred(static_cast<Eigen::Index>(t)) * std::polar(1.0, ang);
        }
        const double power = std::norm(acc);
        total += power;
        if (k >= 2 * cycles) {
            above += power;
        }
    }
    return total > 0.0 ? above / total : 0.0;
}

/// Largest harmonic fraction over the columns of `features`.
inline double max_harmonic_fraction(const Eigen::MatrixXd &features, std::size_t period) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        best = std::max(best, harmonic_energy_fraction(features.col(j), period));
    }
    return best;
}

struct ResponseOptions {
    ProbeParams probe;
    double epsilon = 0.02;
    /// Leading feature rows dropped before the condition number.
    std::size_t washout = 0;
    /// Feature mode the condition number is computed on.
    FeatureMode condition_mode = FeatureMode::Expectation;
    std::size_t workers = 1;
};

/// One (probe, circuit configuration) cell.
struct ResponseEntry {
    std::string label;
    ProbeKind probe = ProbeKind::Step;
    double kappa = 0.0;
    std::size_t n_blocks = 0;
    bool keep_cnot = true;
    /// Pruned share of the tunable entangler weights actually realised.
    double realized_sparsity = 0.0;
    GateCounts gates_per_step;
    TimeSeries input;
    FeatureMatrix features;
    RiseTime rise;
    double condition = 0.0;
    double harmonic_fraction = 0.0;
};

struct ResponseReport {
    std::vector<ResponseEntry> entries;
};

/// A circuit configuration in a sweep.
struct SweepCell {
    double kappa = 0.0;
    std::size_t n_blocks = 3;
    bool keep_cnot = true;
    std::string label;
};

inline ResponseEntry run_cell(const QesnConfig &base, const SweepCell &cell, ProbeKind kind,
                              const ResponseOptions &opt) {
    QesnConfig c = base;
    c.kappa = cell.kappa;
    c.n_blocks = cell.n_blocks;
    c.keep_cnot = cell.keep_cnot;
    c.input_dim = 1;
    const QesnWeights w = init_weights(c);
    const Reservoir res(c, w);

    ResponseEntry e;
    e.label = cell.label;
    e.probe = kind;
    e.kappa = cell.kappa;
    e.n_blocks = cell.n_blocks;
    e.keep_cnot = cell.keep_cnot;
    e.realized_sparsity = static_cast<double>(w.pruned_count()) / static_cast<double>(w.tunable_count());
    e.input = gen_probe(kind, opt.probe);
    std::vector<double> window(c.window(), 0.0);
    e.gates_per_step = count_gates(res.gates_for(window));
    e.features = res.run_series(e.input);

    if (kind == ProbeKind::Step) {
        e.rise = rise_time(e.features, opt.probe.transition_index(), opt.epsilon);
    }
    const FeatureMatrix cond_src = with_mode(e.features, opt.condition_mode);
    const auto rows = static_cast<Eigen::Index>(cond_src.rows());
    const auto drop = static_cast<Eigen::Index>(std::min<std::size_t>(opt.washout, cond_src.rows()));
    e.condition = condition_number(cond_src.values.bottomRows(rows - drop));
    if (kind == ProbeKind::Sinusoid) {
        const auto period = static_cast<std::size_t>(std::lround(opt.probe.period));
        const Eigen::Index half = e.features.values.rows() / 2;
        const FeatureMatrix ex = to_expectation(e.features);
        e.harmonic_fraction =
            std::max(max_harmonic_fraction(e.features.values.bottomRows(half), period),
                     max_harmonic_fraction(ex.values.bottomRows(half), period));
    }
    return e;
}

/// Runs every (cell, probe) pair; entries are ordered cell-major.
inline ResponseReport run_sweep(const QesnConfig &base, const std::vector<SweepCell> &cells,
                                const std::vector<ProbeKind> &kinds, const ResponseOptions &opt) {
    ResponseReport report;
    report.entries.resize(cells.size() * kinds.size());
    const std::size_t total = report.entries.size();
    const auto work = [&](std::size_t i) {
        report.entries[i] = run_cell(base, cells[i / kinds.size()], kinds[i % kinds.size()], opt);
    };
    const std::size_t workers = std::clamp<std::size_t>(opt.workers, 1, std::max<std::size_t>(1, total));
    if (workers == 1) {
        for (std::size_t i = 0; i < total; ++i) {
            work(i);
        }
        return report;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < total; i += workers) {
                    work(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto &t : threads) {
        t.join();
    }
    for (const auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return report;
}

inline std::string sparsity_label(double kappa, bool keep_cnot) {
    std::ostringstream os;
    os << "kappa=" << kappa;
    if (!keep_cnot) {
        os << " decoupled";
    }
    return os.str();
}

/**
 * Same weight draw (the seed in `base`) at every sparsity level. With
 * `decouple_full`, kappa = 1 also removes the C-NOTs, leaving no
 * entanglement at all.
 */
inline ResponseReport sparsity_sweep(const std::vector<ProbeKind> &kinds, const std::vector<double> &levels,
                                     const QesnConfig &base, const ResponseOptions &opt = {},
                                     bool decouple_full = true) {
    std::vector<SweepCell> cells;
    for (double k : levels) {
        const bool keep = !(decouple_full && k >= 1.0);
        cells.push_back({k, base.n_blocks, keep, sparsity_label(k, keep)});
    }
    return run_sweep(base, cells, kinds, opt);
}

inline ResponseReport repeat_block_sweep(const std::vector<ProbeKind> &kinds,
                                         const std::vector<std::size_t> &n_blocks,
                                         const QesnConfig &base, const ResponseOptions &opt = {}) {
    std::vector<SweepCell> cells;
    for (std::size_t b : n_blocks) {
        cells.push_back({base.kappa, b, base.keep_cnot, "n_c=" + std::to_string(b)});
    }
    return run_sweep(base, cells, kinds, opt);
}

namespace detail {

inline std::string svg_panel(const Eigen::MatrixXd &v, double x0, double y0, double w, double h,
                             const std::string &title) {
    static constexpr std::array<const char *, 8> palette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                         "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    std::ostringstream os;
    double lo = v.size() ? v.minCoeff() : 0.0;
    double hi = v.size() ? v.maxCoeff() : 1.0;
    if (hi - lo < 1e-12) {
        hi = lo + 1.0;
    }
    os << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << w << "\" height=\"" << h
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << x0 + 4 << "\" y=\"" << y0 - 6 << "\" font-size=\"12\">" << title << "</text>\n";
    const double n = std::max<double>(1.0, static_cast<double>(v.rows() - 1));
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        os << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << palette[static_cast<std::size_t>(j) % palette.size()]
           << "\" points=\"";
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            const double px = x0 + w * static_cast<double>(r) / n;
            const double py = y0 + h - h * (v(r, j) - lo) / (hi - lo);
            os << px << ',' << py << ' ';
        }
        os << "\"/>\n";
    }
    return os.str();
}

} // namespace detail

/// Two-row plot: Pauli-Z expectations on top, readout distribution below.
inline std::string response_svg(const ResponseEntry &e) {
    const double w = 720;
    const double h = 220;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + 60 << "\" height=\"" << 2 * h + 100
       << "\">\n";
    const std::string head = std::string(to_string(e.probe)) + ", " + e.label;
    os << detail::svg_panel(to_expectation(e.features).values, 40, 30, w, h, head + ": expectation values");
    os << detail::svg_panel(e.features.values, 40, h + 70, w, h, head + ": probabilities");
    os << "</svg>\n";
    return os.str();
}

} // namespace qesn
