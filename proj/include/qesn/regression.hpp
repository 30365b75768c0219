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
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qesn/error.hpp"

namespace qesn {

/// S(z, g) = sign(z) max(|z| - g, 0).
inline double soft_threshold(double z, double gamma) {
    if (z > gamma) {
        return z - gamma;
    }
    if (z < -gamma) {
        return z + gamma;
    }
    return 0.0;
}

struct ElasticNetOptions {
    double lambda = 1e-4;
    double l1_ratio = 0.5;
    /// Stop when no standardized coefficient moves more than this in a sweep.
    double tol = 1e-8;
    std::size_t max_iter = 20000;
};

/**
 * Linear readout on standardized features:
 *   y_hat = ((x - feature_mean) / feature_scale) * coefficients + intercept.
 * Coefficients are F x K, one column per target.
 */
struct RegressionModel {
    Eigen::MatrixXd coefficients;
    Eigen::RowVectorXd intercept;
    double lambda = 0.0;
    double l1_ratio = 0.0;
    Eigen::RowVectorXd feature_mean;
    Eigen::RowVectorXd feature_scale;
    std::size_t iterations = 0;
    bool converged = false;
    /// Objective after every sweep, first target only.
    std::vector<double> objective_trace;
    bool objective_monotone = true;

    [[nodiscard]] Eigen::Index n_features() const noexcept { return coefficients.rows(); }
    [[nodiscard]] Eigen::Index n_targets() const noexcept { return coefficients.cols(); }
};

inline void require_finite(const Eigen::MatrixXd &m, const char *what) {
    detail::require(m.allFinite(), std::string(what) + " contains NaN or infinite values");
}

/// Population standardization; constant columns keep scale 1.
inline void standardization(const Eigen::MatrixXd &x, Eigen::RowVectorXd &mean,
                            Eigen::RowVectorXd &scale) {
    mean = x.colwise().mean();
    scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double var = (x.col(j).array() - mean(j)).square().mean();
        const double sd = std::sqrt(var);
        scale(j) = sd > 1e-12 * std::max(1.0, std::abs(mean(j))) ? sd : 1.0;
    }
}

inline Eigen::MatrixXd standardize(const Eigen::MatrixXd &x, const RegressionModel &m) {
    return (x.rowwise() - m.feature_mean).array().rowwise() / m.feature_scale.array();
}

/**
 * Cyclic coordinate descent for
 *   (1/2n)||y - Z b||^2 + lambda (a ||b||_1 + (1 - a)/2 ||b||^2)
 * per target, with Z the standardized features and the intercept fixed at
 * the target mean. Works on the Gram matrix so each sweep costs O(F^2).
 */
inline RegressionModel fit_elastic_net(const Eigen::MatrixXd &x, const Eigen::MatrixXd &y,
                                       const ElasticNetOptions &opt = {}) {
    detail::require(x.rows() == y.rows(), "feature and target row counts differ");
    detail::require(x.rows() >= 2, "at least two rows are required");
    detail::require(x.cols() >= 1 && y.cols() >= 1, "empty feature or target matrix");
    detail::require(opt.lambda >= 0.0 && std::isfinite(opt.lambda), "lambda must be >= 0");
    detail::require(opt.l1_ratio >= 0.0 && opt.l1_ratio <= 1.0, "l1_ratio must be in [0, 1]");
    require_finite(x, "feature matrix");
    require_finite(y, "target matrix");

    RegressionModel m;
    m.lambda = opt.lambda;
    m.l1_ratio = opt.l1_ratio;
    standardization(x, m.feature_mean, m.feature_scale);
    const Eigen::MatrixXd z = standardize(x, m);
    m.intercept = y.colwise().mean();
    const Eigen::MatrixXd yc = y.rowwise() - m.intercept;

    const auto n = static_cast<double>(x.rows());
    const Eigen::Index f = x.cols();
    Eigen::MatrixXd gram(f, f);
    gram.noalias() = z.transpose() * z / n;
    const Eigen::MatrixXd corr = z.transpose() * yc / n;

    const double l1 = opt.lambda * opt.l1_ratio;
    const double l2 = opt.lambda * (1.0 - opt.l1_ratio);
    m.coefficients = Eigen::MatrixXd::Zero(f, y.cols());
    m.converged = true;

    for (Eigen::Index k = 0; k < y.cols(); ++k) {
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(f);
        // residual correlation: corr - gram * beta
        Eigen::VectorXd resid = corr.col(k);
        const double yy = yc.col(k).squaredNorm() / n;
        const auto objective = [&] {
            const double fit = 0.5 * (yy - 2.0 * corr.col(k).dot(beta) + beta.dot(gram * beta));
            return fit + l1 * beta.lpNorm<1>() + 0.5 * l2 * beta.squaredNorm();
        };
        double prev = objective();
        std::size_t sweep = 0;
        bool done = false;
        while (sweep < opt.max_iter && !done) {
            double max_delta = 0.0;
            for (Eigen::Index j = 0; j < f; ++j) {
                const double denom = gram(j, j) + l2;
                const double old = beta(j);
                const double next =
                    denom > 0.0 ? soft_threshold(resid(j) + gram(j, j) * old, l1) / denom : 0.0;
                const double delta = next - old;
                if (delta != 0.0) {
                    beta(j) = next;
                    resid.noalias() -= delta * gram.col(j);
                    max_delta = std::max(max_delta, std::abs(delta));
                }
            }
            ++sweep;
            const double obj = objective();
            if (k == 0) {
                m.objective_trace.push_back(obj);
            }
            if (obj > prev + 1e-10 * (1.0 + std::abs(prev))) {
                m.objective_monotone = false;
            }
            prev = obj;
            done = max_delta < opt.tol;
        }
        m.iterations = std::max(m.iterations, sweep);
        m.converged = m.converged && done;
        m.coefficients.col(k) = beta;
    }
    return m;
}

inline Eigen::MatrixXd predict(const RegressionModel &m, const Eigen::MatrixXd &x) {
    detail::require(x.cols() == m.n_features(),
                    "feature width " + std::to_string(x.cols()) + " does not match model width " +
                        std::to_string(m.n_features()));
    return (standardize(x, m) * m.coefficients).rowwise() + m.intercept;
}

/// Pooled root-mean-square error over every entry.
inline double rmse(const Eigen::MatrixXd &predicted, const Eigen::MatrixXd &target) {
    detail::require(predicted.rows() == target.rows() && predicted.cols() == target.cols(),
                    "rmse needs equal shapes");
    detail::require(predicted.size() > 0, "rmse of an empty matrix");
    return std::sqrt((predicted - target).array().square().mean());
}

inline Eigen::RowVectorXd rmse_per_target(const Eigen::MatrixXd &predicted,
                                          const Eigen::MatrixXd &target) {
    detail::require(predicted.rows() == target.rows() && predicted.cols() == target.cols(),
                    "rmse needs equal shapes");
    detail::require(predicted.size() > 0, "rmse of an empty matrix");
    return (predicted - target).array().square().colwise().mean().sqrt();
}

struct FitReport {
    double train_rmse = 0.0;
    double test_rmse = 0.0;
    Eigen::RowVectorXd train_rmse_per_target;
    Eigen::RowVectorXd test_rmse_per_target;
    std::size_t iterations = 0;
    bool converged = false;
    double lambda = 0.0;
    double l1_ratio = 0.0;
};

enum class Selection { TestSet, Validation };

inline std::string_view to_string(Selection s) {
    return s == Selection::TestSet ? "test" : "validation";
}

inline Selection selection_from_string(std::string_view s) {
    if (s == "test") {
        return Selection::TestSet;
    }
    if (s == "validation") {
        return Selection::Validation;
    }
    throw InvalidArgument("unknown selection mode '" + std::string(s) + "'");
}

struct GridPoint {
    double lambda = 0.0;
    double l1_ratio = 0.0;
    double train_rmse = 0.0;
    /// RMSE the selection ranked on (test or validation split).
    double selection_rmse = 0.0;
    double test_rmse = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

struct TuneOptions {
    std::vector<double> lambda_grid{1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
    std::vector<double> l1_grid{0.1, 0.5, 0.9};
    Selection selection = Selection::TestSet;
    double validation_fraction = 0.2;
    double tol = 1e-8;
    std::size_t max_iter = 20000;
    std::size_t workers = 1;
};

struct TuneResult {
    RegressionModel model;
    FitReport report;
    std::vector<GridPoint> grid;
    Selection selection = Selection::TestSet;
};

inline FitReport make_report(const RegressionModel &m, const Eigen::MatrixXd &x_train,
                             const Eigen::MatrixXd &y_train, const Eigen::MatrixXd &x_test,
                             const Eigen::MatrixXd &y_test) {
    FitReport r;
    const Eigen::MatrixXd p_train = predict(m, x_train);
    r.train_rmse = rmse(p_train, y_train);
    r.train_rmse_per_target = rmse_per_target(p_train, y_train);
    if (x_test.rows() > 0) {
        const Eigen::MatrixXd p_test = predict(m, x_test);
        r.test_rmse = rmse(p_test, y_test);
        r.test_rmse_per_target = rmse_per_target(p_test, y_test);
    }
    r.iterations = m.iterations;
    r.converged = m.converged;
    r.lambda = m.lambda;
    r.l1_ratio = m.l1_ratio;
    return r;
}

/**
 * Exhaustive grid search. TestSet ranks by test RMSE; Validation fits on the
 * leading train rows, ranks on the trailing `validation_fraction`, and
 * refits the winner on the whole train range. Ties go to the larger lambda.
 */
inline TuneResult tune_hyperparameters(const Eigen::MatrixXd &x_train, const Eigen::MatrixXd &y_train,
                                       const Eigen::MatrixXd &x_test, const Eigen::MatrixXd &y_test,
                                       const TuneOptions &opt = {}) {
    detail::require(!opt.lambda_grid.empty() && !opt.l1_grid.empty(), "empty hyperparameter grid");
    detail::require(x_test.rows() == y_test.rows(), "test feature and target rows differ");
    if (opt.selection == Selection::TestSet) {
        detail::require(x_test.rows() > 0, "test-set selection needs test rows");
    }

    Eigen::Index fit_rows = x_train.rows();
    if (opt.selection == Selection::Validation) {
        detail::require(opt.validation_fraction > 0.0 && opt.validation_fraction < 1.0,
                        "validation fraction must be in (0, 1)");
        fit_rows = x_train.rows() -
                   static_cast<Eigen::Index>(std::ceil(opt.validation_fraction *
                                                       static_cast<double>(x_train.rows())));
        detail::require(fit_rows >= 2 && fit_rows < x_train.rows(), "train range too short to split");
    }
    const Eigen::MatrixXd xf = x_train.topRows(fit_rows);
    const Eigen::MatrixXd yf = y_train.topRows(fit_rows);
    const Eigen::MatrixXd xv = x_train.bottomRows(x_train.rows() - fit_rows);
    const Eigen::MatrixXd yv = y_train.bottomRows(y_train.rows() - fit_rows);

    std::vector<GridPoint> grid;
    for (double lam : opt.lambda_grid) {
        for (double a : opt.l1_grid) {
            grid.push_back({lam, a});
        }
    }
    std::vector<RegressionModel> models(grid.size());
    const auto evaluate = [&](std::size_t g) {
        ElasticNetOptions eo{grid[g].lambda, grid[g].l1_ratio, opt.tol, opt.max_iter};
        models[g] = fit_elastic_net(xf, yf, eo);
        GridPoint &p = grid[g];
        p.train_rmse = rmse(predict(models[g], xf), yf);
        p.test_rmse = x_test.rows() > 0 ? rmse(predict(models[g], x_test), y_test) : 0.0;
        p.selection_rmse = opt.selection == Selection::TestSet ? p.test_rmse
                                                               : rmse(predict(models[g], xv), yv);
        p.iterations = models[g].iterations;
        p.converged = models[g].converged;
    };
    const std::size_t workers = std::clamp<std::size_t>(opt.workers, 1, grid.size());
    if (workers == 1) {
        for (std::size_t g = 0; g < grid.size(); ++g) {
            evaluate(g);
        }
    } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                for (std::size_t g = w; g < grid.size(); g += workers) {
                    evaluate(g);
                }
            });
        }
        for (auto &t : threads) {
            t.join();
        }
    }

    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const double a = grid[g].selection_rmse;
        const double b = grid[best].selection_rmse;
        const double tie = 1e-12 * std::max(1.0, b);
        if (a < b - tie || (std::abs(a - b) <= tie && grid[g].lambda > grid[best].lambda)) {
            best = g;
        }
    }

    TuneResult out;
    out.grid = std::move(grid);
    out.selection = opt.selection;
    if (opt.selection == Selection::Validation) {
        ElasticNetOptions eo{out.grid[best].lambda, out.grid[best].l1_ratio, opt.tol, opt.max_iter};
        out.model = fit_elastic_net(x_train, y_train, eo);
    } else {
        out.model = std::move(models[best]);
    }
    out.report = make_report(out.model, x_train, y_train, x_test, y_test);
    return out;
}

inline nlohmann::ordered_json model_to_json(const RegressionModel &m) {
    nlohmann::ordered_json j;
    auto coef = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.coefficients.rows(); ++i) {
        std::vector<double> row(m.coefficients.row(i).begin(), m.coefficients.row(i).end());
        coef.push_back(row);
    }
    auto vec = [](const Eigen::RowVectorXd &v) { return std::vector<double>(v.begin(), v.end()); };
    j["coefficients"] = std::move(coef);
    j["intercept"] = vec(m.intercept);
    j["lambda"] = m.lambda;
    j["l1_ratio"] = m.l1_ratio;
    j["feature_mean"] = vec(m.feature_mean);
    j["feature_scale"] = vec(m.feature_scale);
    j["iterations"] = m.iterations;
    j["converged"] = m.converged;
    return j;
}

inline RegressionModel model_from_json(const nlohmann::ordered_json &j) {
    RegressionModel m;
    try {
        auto vec = [](const nlohmann::ordered_json &a) {
            const auto v = a.get<std::vector<double>>();
            return Eigen::RowVectorXd(Eigen::Map<const Eigen::RowVectorXd>(v.data(),
                                                                           static_cast<Eigen::Index>(v.size())));
        };
        const auto &coef = j.at("coefficients");
        m.intercept = vec(j.at("intercept"));
        m.coefficients.resize(static_cast<Eigen::Index>(coef.size()), m.intercept.size());
        for (std::size_t i = 0; i < coef.size(); ++i) {
            const auto row = vec(coef[i]);
            detail::require(row.size() == m.intercept.size(), "ragged coefficient matrix");
            m.coefficients.row(static_cast<Eigen::Index>(i)) = row;
        }
        m.lambda = j.at("lambda").get<double>();
        m.l1_ratio = j.at("l1_ratio").get<double>();
        m.feature_mean = vec(j.at("feature_mean"));
        m.feature_scale = vec(j.at("feature_scale"));
        m.iterations = j.value("iterations", std::size_t{0});
        m.converged = j.value("converged", false);
        detail::require(m.feature_mean.size() == m.coefficients.rows() &&
                            m.feature_scale.size() == m.coefficients.rows(),
                        "standardization statistics do not match coefficients");
    } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(std::string("bad model document: ") + e.what());
    }
    return m;
}

} // namespace qesn
