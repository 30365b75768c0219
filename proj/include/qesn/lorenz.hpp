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
#include <string>

#include <Eigen/Dense>

#include "qesn/error.hpp"

namespace qesn {

struct LorenzParams {
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
    double dt = 0.02;
    std::size_t n_steps = 4300;
    Eigen::Vector3d x0{1.0, 1.0, 1.0};
    /// RK4 steps integrated and discarded before the first returned state.
    std::size_t transient = 500;

    void validate() const {
        detail::require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
        detail::require(std::isfinite(sigma) && std::isfinite(rho) && std::isfinite(beta),
                        "Lorenz parameters must be finite");
        detail::require(x0.allFinite(), "initial state must be finite");
    }
};

inline Eigen::Vector3d lorenz_field(const LorenzParams &p, const Eigen::Vector3d &s) {
    return {p.sigma * (s.y() - s.x()), s.x() * (p.rho - s.z()) - s.y(), s.x() * s.y() - p.beta * s.z()};
}

/// One classical fourth-order Runge-Kutta step of size h.
inline Eigen::Vector3d rk4_step(const LorenzParams &p, const Eigen::Vector3d &s, double h) {
    const Eigen::Vector3d k1 = lorenz_field(p, s);
    const Eigen::Vector3d k2 = lorenz_field(p, s + 0.5 * h * k1);
    const Eigen::Vector3d k3 = lorenz_field(p, s + 0.5 * h * k2);
    const Eigen::Vector3d k4 = lorenz_field(p, s + h * k3);
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/**
 * States at t = 0, dt, ..., (n_steps - 1) dt, counted after the discarded
 * transient. Throws IntegrationError on blow-up.
 */
inline Eigen::MatrixXd integrate_lorenz(const LorenzParams &p) {
    p.validate();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(p.n_steps), 3);
    Eigen::Vector3d s = p.x0;
    const std::size_t total = p.transient + p.n_steps;
    for (std::size_t k = 0; k < total; ++k) {
        if (k >= p.transient) {
            out.row(static_cast<Eigen::Index>(k - p.transient)) = s.transpose();
        }
        if (k + 1 < total) {
            s = rk4_step(p, s, p.dt);
            if (!s.allFinite()) {
                throw IntegrationError("Lorenz integration produced a non-finite state", k + 1);
            }
        }
    }
    return out;
}

struct MinMax {
    Eigen::RowVectorXd min;
    Eigen::RowVectorXd max;

    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd &x) const {
        detail::require(x.cols() == min.size(), "column count does not match scaling");
        return (x.rowwise() - min).array().rowwise() / (max - min).array();
    }
    [[nodiscard]] Eigen::MatrixXd invert(const Eigen::MatrixXd &x) const {
        detail::require(x.cols() == min.size(), "column count does not match scaling");
        return (x.array().rowwise() * (max - min).array()).matrix().rowwise() + min;
    }
};

/// Per-column min-max statistics over `rows` leading rows (all rows if 0).
inline MinMax fit_min_max(const Eigen::MatrixXd &x, std::size_t rows = 0) {
    detail::require(x.rows() > 0, "cannot normalize an empty trajectory");
    const Eigen::Index n = rows == 0 ? x.rows() : static_cast<Eigen::Index>(rows);
    detail::require(n <= x.rows(), "normalization rows exceed trajectory length");
    MinMax mm{x.topRows(n).colwise().minCoeff(), x.topRows(n).colwise().maxCoeff()};
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        detail::require(mm.max(j) > mm.min(j),
                        "component " + std::to_string(j) + " is constant and cannot be normalized");
    }
    return mm;
}

struct Normalized {
    Eigen::MatrixXd values;
    MinMax scaling;
};

/// Min-max over the whole trajectory: every column spans exactly [0, 1].
inline Normalized normalize(const Eigen::MatrixXd &trajectory) {
    MinMax mm = fit_min_max(trajectory);
    Eigen::MatrixXd v = mm.apply(trajectory);
    return {std::move(v), std::move(mm)};
}

inline Eigen::MatrixXd denormalize(const Eigen::MatrixXd &normalized, const MinMax &scaling) {
    return scaling.invert(normalized);
}

enum class NormalizationScope { Global, TrainOnly };

struct LorenzDataset {
    Eigen::MatrixXd raw;
    Eigen::MatrixXd normalized;
    MinMax scaling;
    NormalizationScope scope = NormalizationScope::Global;
    std::size_t train_len = 0;
    std::size_t test_len = 0;
    std::size_t washout = 0;

    /// Train rows that enter regression fitting.
    [[nodiscard]] std::size_t fit_rows() const noexcept { return train_len - washout; }
    [[nodiscard]] std::size_t test_begin() const noexcept { return train_len; }
    [[nodiscard]] std::size_t test_end() const noexcept { return train_len + test_len; }
};

/**
 * Contiguous split: train = [0, train_len), test = [train_len, train_len +
 * test_len). With TrainOnly scaling, test values may leave [0, 1].
 */
inline LorenzDataset make_dataset(const Eigen::MatrixXd &trajectory, std::size_t train_len,
                                  std::size_t test_len, std::size_t washout,
                                  NormalizationScope scope = NormalizationScope::Global) {
    const auto n = static_cast<std::size_t>(trajectory.rows());
    detail::require(train_len + test_len <= n,
                    "train + test length " + std::to_string(train_len + test_len) +
                        " exceeds trajectory length " + std::to_string(n));
    detail::require(train_len > 0, "train range must be non-empty");
    detail::require(washout < train_len, "washout must leave training rows");
    LorenzDataset d;
    d.raw = trajectory;
    d.scope = scope;
    d.scaling = fit_min_max(trajectory, scope == NormalizationScope::TrainOnly ? train_len : 0);
    d.normalized = d.scaling.apply(trajectory);
    d.train_len = train_len;
    d.test_len = test_len;
    d.washout = washout;
    return d;
}

} // namespace qesn
