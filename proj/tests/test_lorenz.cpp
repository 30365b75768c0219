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
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "qesn/lorenz.hpp"

using namespace qesn;

namespace {

LorenzParams no_transient(std::size_t n, double dt = 0.02) {
    LorenzParams p;
    p.n_steps = n;
    p.dt = dt;
    p.transient = 0;
    return p;
}

/// Integrate one time unit with step h, starting on the attractor (after
/// the default transient). From (1, 1, 1) itself the first time unit is
/// dominated by the approach to the attractor and the measured order drifts
/// above 5.
Eigen::Vector3d one_time_unit(double h) {
    LorenzParams p;
    p.n_steps = 1;
    Eigen::Vector3d s = integrate_lorenz(p).row(0).transpose();
    const int steps = static_cast<int>(std::lround(1.0 / h));
    for (int k = 0; k < steps; ++k) {
        s = rk4_step(p, s, h);
    }
    return s;
}

} // namespace

TEST(Lorenz, OriginIsAFixedPoint) {
    auto p = no_transient(50);
    p.x0 = Eigen::Vector3d::Zero();
    EXPECT_EQ(integrate_lorenz(p).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Lorenz, VectorFieldAtOnes) {
    const LorenzParams p;
    const Eigen::Vector3d f = lorenz_field(p, Eigen::Vector3d(1, 1, 1));
    EXPECT_DOUBLE_EQ(f.x(), 0.0);
    EXPECT_DOUBLE_EQ(f.y(), 26.0);
    EXPECT_NEAR(f.z(), 1.0 - 8.0 / 3.0, 1e-15);
}

TEST(Lorenz, FullStepAgreesWithTwoHalfSteps) {
    const LorenzParams p;
    const Eigen::Vector3d s(1, 1, 1);
    const double dt = 0.01;
    const Eigen::Vector3d full = rk4_step(p, s, dt);
    const Eigen::Vector3d half = rk4_step(p, rk4_step(p, s, dt / 2), dt / 2);
    // Local error of RK4 is O(dt^5) times the field's derivatives (~1e3 here).
    EXPECT_LT((full - half).norm(), 1e3 * std::pow(dt, 4));
    EXPECT_GT((full - half).norm(), 0.0);
}

TEST(Lorenz, HalfStepDifferenceShrinksBySixteenAtNextHalving) {
    const LorenzParams p;
    const Eigen::Vector3d s(1, 1, 1);
    const auto gap = [&](double dt) {
        return (rk4_step(p, s, dt) - rk4_step(p, rk4_step(p, s, dt / 2), dt / 2)).norm();
    };
    const double ratio = gap(0.01) / gap(0.005);
    // Local step error scales as dt^5; the spec'd bound is the global 2^4.
    EXPECT_GT(ratio, 16.0);
}

TEST(Lorenz, GlobalConvergenceOrderIsFour) {
    const Eigen::Vector3d ref = one_time_unit(0.02 / 128);
    const double e1 = (one_time_unit(0.02) - ref).norm();
    const double e2 = (one_time_unit(0.01) - ref).norm();
    const double e3 = (one_time_unit(0.005) - ref).norm();
    const double order1 = std::log2(e1 / e2);
    const double order2 = std::log2(e2 / e3);
    EXPECT_GE(order1, 3.7);
    EXPECT_LE(order1, 4.3);
    EXPECT_GE(order2, 3.7);
    EXPECT_LE(order2, 4.3);
}

TEST(Lorenz, TransientIsDiscarded) {
    LorenzParams a = no_transient(600);
    LorenzParams b = no_transient(100);
    b.transient = 500;
    const auto full = integrate_lorenz(a);
    const auto tail = integrate_lorenz(b);
    EXPECT_EQ(full.bottomRows(100), tail);
    EXPECT_EQ(full.row(0), Eigen::RowVector3d(1, 1, 1));
}

TEST(Lorenz, ChaoticButBounded) {
    auto a = no_transient(3000);
    auto b = a;
    b.x0.x() += 1e-8;
    const auto ta = integrate_lorenz(a);
    const auto tb = integrate_lorenz(b);
    EXPECT_LT(ta.cwiseAbs().maxCoeff(), 100.0);
    EXPECT_LT(tb.cwiseAbs().maxCoeff(), 100.0);
    EXPECT_GT((ta - tb).rowwise().norm().maxCoeff(), 1.0);
}

TEST(Lorenz, BlowUpReportsStep) {
    auto p = no_transient(100, 0.5);
    p.x0 = Eigen::Vector3d(50, 50, 50);
    try {
        integrate_lorenz(p);
        FAIL() << "expected IntegrationError";
    } catch (const IntegrationError &e) {
        EXPECT_GT(e.step(), 0u);
        EXPECT_LT(e.step(), 100u);
    }
}

TEST(Lorenz, InvalidParameters) {
    auto p = no_transient(10);
    p.dt = 0.0;
    EXPECT_THROW(integrate_lorenz(p), InvalidArgument);
    p.dt = -0.1;
    EXPECT_THROW(integrate_lorenz(p), InvalidArgument);
}

TEST(Normalize, ThreeValues) {
    Eigen::MatrixXd x(3, 1);
    x << 0, 5, 10;
    const auto n = normalize(x);
    EXPECT_DOUBLE_EQ(n.values(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(n.values(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(n.values(2, 0), 1.0);
}

TEST(Normalize, RoundTripAndExactBounds) {
    const auto traj = integrate_lorenz(no_transient(2000));
    const auto n = normalize(traj);
    for (Eigen::Index j = 0; j < 3; ++j) {
        EXPECT_EQ(n.values.col(j).minCoeff(), 0.0);
        EXPECT_EQ(n.values.col(j).maxCoeff(), 1.0);
    }
    EXPECT_LT((denormalize(n.values, n.scaling) - traj).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Normalize, ConstantComponentRejected) {
    Eigen::MatrixXd x(4, 2);
    x << 1, 3, 2, 3, 3, 3, 4, 3;
    EXPECT_THROW(normalize(x), InvalidArgument);
}

TEST(Dataset, PaperSplitFitRows) {
    const Eigen::MatrixXd traj = Eigen::MatrixXd::Random(9900, 3);
    EXPECT_EQ(make_dataset(traj, 6900, 3000, 300).fit_rows(), 6600u);
    EXPECT_EQ(make_dataset(traj, 6900, 3000, 0).fit_rows(), 6900u);
    const Eigen::MatrixXd shorter = Eigen::MatrixXd::Random(2000, 3);
    EXPECT_EQ(make_dataset(shorter, 1200, 800, 15).fit_rows(), 1185u);
}

TEST(Dataset, RangesOrderedAndDisjoint) {
    const Eigen::MatrixXd traj = Eigen::MatrixXd::Random(100, 3);
    const auto d = make_dataset(traj, 60, 30, 5);
    EXPECT_EQ(d.test_begin(), 60u);
    EXPECT_EQ(d.test_end(), 90u);
    EXPECT_LT(d.washout, d.train_len);
}

TEST(Dataset, LengthsExceedingTrajectoryRejected) {
    const Eigen::MatrixXd traj = Eigen::MatrixXd::Random(100, 3);
    EXPECT_THROW(make_dataset(traj, 80, 30, 0), InvalidArgument);
    EXPECT_THROW(make_dataset(traj, 50, 30, 50), InvalidArgument);
}

TEST(Dataset, TrainOnlyScalingUsesTrainRange) {
    const auto traj = integrate_lorenz(no_transient(1000));
    const auto d = make_dataset(traj, 600, 400, 0, NormalizationScope::TrainOnly);
    for (Eigen::Index j = 0; j < 3; ++j) {
        EXPECT_EQ(d.normalized.col(j).head(600).minCoeff(), 0.0);
        EXPECT_EQ(d.normalized.col(j).head(600).maxCoeff(), 1.0);
    }
    const auto g = make_dataset(traj, 600, 400, 0);
    EXPECT_EQ(g.normalized.minCoeff(), 0.0);
    EXPECT_EQ(g.normalized.maxCoeff(), 1.0);
}
