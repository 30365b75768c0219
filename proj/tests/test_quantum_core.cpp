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
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qesn/core.hpp"
#include "qesn/rng.hpp"

using namespace qesn;
namespace orc = qesn::oracle;

namespace {

constexpr double pi = std::numbers::pi;

orc::Dense to_dense(const Matrix2 &m) { return orc::Dense(m); }
orc::Dense to_dense(const RowMatrixXcd &m) { return orc::Dense(m); }

GateOp random_gate(std::size_t n, std::mt19937_64 &rng) {
    std::uniform_int_distribution<int> kind(0, 5);
    std::uniform_int_distribution<std::size_t> qd(0, n - 1);
    std::uniform_real_distribution<double> ang(-2 * pi, 2 * pi);
    const auto k = static_cast<GateKind>(kind(rng));
    const std::size_t t = qd(rng);
    std::size_t c = qd(rng);
    while (c == t)
        c = qd(rng);
    switch (k) {
    case GateKind::RZ:
        return GateOp::rz(t, ang(rng));
    case GateKind::RX:
        return GateOp::rx(t, ang(rng));
    case GateKind::CNOT:
        return GateOp::cnot(c, t);
    case GateKind::CRX:
        return GateOp::crx(c, t, ang(rng));
    case GateKind::CRY:
        return GateOp::cry(c, t, ang(rng));
    case GateKind::CRZ:
        return GateOp::crz(c, t, ang(rng));
    }
    return GateOp::rz(t, 0.0);
}

} // namespace

// ---------------------------------------------------------------- rotations

TEST(ComposeRotation, ZeroAnglesGiveIdentity) {
    EXPECT_LT(orc::max_abs_diff(to_dense(compose_rotation(0, 0, 0)), orc::Dense::Identity(2, 2)),
              1e-12);
}

TEST(ComposeRotation, PiAboutXIsMinusIX) {
    const orc::Dense expected = -orc::I * orc::x();
    const Matrix2 m = compose_rotation(0, pi, 0);
    EXPECT_LT(orc::max_abs_diff(to_dense(m), expected), 1e-12);
    // |0> goes to -i|1>.
    Eigen::Vector2cd out = m * Eigen::Vector2cd(1.0, 0.0);
    EXPECT_NEAR(std::abs(out(0)), 0.0, 1e-12);
    EXPECT_NEAR(out(1).real(), 0.0, 1e-12);
    EXPECT_NEAR(out(1).imag(), -1.0, 1e-12);
}

TEST(ComposeRotation, MatchesMatrixProductOracle) {
    const auto oracle = [](double a, double b, double g) {
        return orc::mul2(orc::rz(g), orc::mul2(orc::rx(b), orc::rz(a)));
    };
    EXPECT_LT(orc::max_abs_diff(to_dense(compose_rotation(pi / 2, pi / 2, pi / 2)),
                                oracle(pi / 2, pi / 2, pi / 2)),
              1e-12);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ang(-4 * pi, 4 * pi);
    for (int i = 0; i < 200; ++i) {
        const double a = ang(rng), b = ang(rng), g = ang(rng);
        const Matrix2 m = compose_rotation(a, b, g);
        EXPECT_LT(orc::max_abs_diff(to_dense(m), oracle(a, b, g)), 1e-12);
        EXPECT_LT((m.adjoint() * m - Matrix2::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(ComposeRotation, RejectsNonFiniteAngles) {
    EXPECT_THROW(compose_rotation(NAN, 0, 0), InvalidArgument);
    EXPECT_THROW(compose_rotation(0, INFINITY, 0), InvalidArgument);
}

TEST(Gates, ControlledUnitariesAreUnitary) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ang(-10, 10);
    for (int i = 0; i < 100; ++i) {
        for (const Matrix2 &u : {rx_matrix(ang(rng)), ry_matrix(ang(rng)), rz_matrix(ang(rng))}) {
            const Matrix4 c = controlled_matrix(u);
            EXPECT_LT((c.adjoint() * c - Matrix4::Identity()).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_LT((u.adjoint() * u - Matrix2::Identity()).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

// ------------------------------------------------------------ gate actions

TEST(ApplyGate, CnotTruthTable) {
    // |01> means qubit 0 = 1, qubit 1 = 0 (basis index 1).
    auto psi = StateVector::basis(2, 0b01);
    apply_gate(psi, GateOp::cnot(0, 1));
    EXPECT_NEAR(psi.probability(0b11), 1.0, 1e-15);

    for (std::size_t in = 0; in < 4; ++in) {
        auto s = StateVector::basis(2, in);
        apply_gate(s, GateOp::cnot(0, 1));
        const std::size_t expected = (in & 1U) ? (in ^ 2U) : in;
        EXPECT_NEAR(s.probability(expected), 1.0, 1e-15) << "input " << in;
    }
}

TEST(ApplyGate, ControlledGateIdleWhenControlUnset) {
    auto psi = StateVector::basis(2, 0);
    apply_gate(psi, GateOp::crz(0, 1, 1.234));
    EXPECT_NEAR(std::abs(psi.amplitudes()(0)), 1.0, 1e-15);
    auto phi = StateVector::basis(2, 0);
    apply_gate(phi, GateOp::crx(0, 1, 2.5));
    EXPECT_NEAR(phi.probability(0), 1.0, 1e-15);
}

TEST(ApplyGate, RxHalfPiOnZeroMatchesDenseOracle) {
    StateVector psi(1);
    apply_gate(psi, GateOp::rx(0, pi / 2));
    const Eigen::VectorXcd expected = orc::rx(pi / 2) * Eigen::Vector2cd(1.0, 0.0);
    EXPECT_NEAR(std::abs(psi.amplitudes()(0) - std::cos(pi / 4)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(psi.amplitudes()(1) - orc::C{0, -std::sin(pi / 4)}), 0.0, 1e-15);
    EXPECT_LT((psi.amplitudes() - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ApplyGate, RejectsBadIndices) {
    StateVector psi(2);
    EXPECT_THROW(apply_gate(psi, GateOp::rz(2, 0.1)), InvalidArgument);
    EXPECT_THROW(apply_gate(psi, GateOp::cnot(1, 1)), InvalidArgument);
    EXPECT_THROW(apply_gate(psi, GateOp::crx(3, 0, 0.1)), InvalidArgument);
    DensityMatrix rho(2);
    EXPECT_THROW(apply_gate(rho, GateOp::cnot(0, 5)), InvalidArgument);
    GateOp malformed = GateOp::rz(0, 0.1);
    malformed.control = 1;
    EXPECT_THROW(apply_gate(psi, malformed), InvalidArgument);
}

TEST(ApplyGate, EveryKindMatchesFullOperatorOracle) {
    std::mt19937_64 rng(11);
    constexpr std::size_t n = 4;
    for (int trial = 0; trial < 300; ++trial) {
        const GateOp g = random_gate(n, rng);
        const orc::Dense u = orc::full_unitary(g, n);

        auto psi = StateVector::from_amplitudes(n, orc::random_state(n, rng));
        const Eigen::VectorXcd expected = u * psi.amplitudes();
        apply_gate(psi, g);
        EXPECT_LT((psi.amplitudes() - expected).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(psi.norm_squared(), 1.0, 1e-10);

        const orc::Dense r = orc::random_density(n, rng);
        auto rho = DensityMatrix::from_elements(n, r);
        apply_gate(rho, g);
        EXPECT_LT(orc::max_abs_diff(to_dense(rho.elements()), u * r * u.adjoint()), 1e-12);
        EXPECT_NEAR(rho.trace().real(), 1.0, 1e-10);
    }
}

TEST(ApplyGate, DensityCnotEqualsDense4x4Conjugation) {
    std::mt19937_64 rng(5);
    orc::Dense cx = orc::Dense::Zero(4, 4);
    cx(0, 0) = cx(2, 2) = 1.0; // control (qubit 0) unset
    cx(3, 1) = cx(1, 3) = 1.0; // |01> <-> |11>
    const orc::Dense r = orc::random_density(2, rng);
    auto rho = DensityMatrix::from_elements(2, r);
    apply_gate(rho, GateOp::cnot(0, 1));
    EXPECT_LT(orc::max_abs_diff(to_dense(rho.elements()), cx * r * cx.adjoint()), 1e-14);
}

TEST(CircuitCompiler, FusedBlocksReproduceGateSequence) {
    std::mt19937_64 rng(99);
    for (std::size_t n : {2U, 3U, 5U}) {
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<GateOp> gates;
            for (int i = 0; i < 30; ++i)
                gates.push_back(random_gate(n, rng));
            const orc::Dense u = orc::full_unitary(gates, n);
            const auto blocks = compile_gates(gates, n);
            EXPECT_LE(blocks.size(), gates.size());

            auto psi = StateVector::from_amplitudes(n, orc::random_state(n, rng));
            const Eigen::VectorXcd expected = u * psi.amplitudes();
            apply_blocks(psi, blocks);
            EXPECT_LT((psi.amplitudes() - expected).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

// ------------------------------------------------------------- registers

TEST(TensorExtend, PureMemory) {
    DensityMatrix mem(1);
    const auto joint = tensor_extend(mem, 1);
    EXPECT_EQ(joint.n_qubits(), 2U);
    orc::Dense expected = orc::Dense::Zero(4, 4);
    expected(0, 0) = 1.0;
    EXPECT_LT(orc::max_abs_diff(to_dense(joint.elements()), expected), 1e-15);
}

TEST(TensorExtend, MaximallyMixedMemoryIsBlockDiagonal) {
    const auto joint = tensor_extend(DensityMatrix::maximally_mixed(1), 1);
    // Memory on wire 0, readout on wire 1: readout = 0 at indices 0 and 1.
    orc::Dense expected = orc::Dense::Zero(4, 4);
    expected(0, 0) = expected(1, 1) = 0.5;
    EXPECT_LT(orc::max_abs_diff(to_dense(joint.elements()), expected), 1e-15);
}

TEST(TensorExtend, PreservesTraceAndMatchesKronecker) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) {
        const auto mem = DensityMatrix::from_elements(2, orc::random_density(2, rng));
        const auto joint = tensor_extend(mem, 2);
        EXPECT_NEAR(std::abs(joint.trace() - mem.trace()), 0.0, 1e-14);
        EXPECT_TRUE(joint.is_valid());
        // Readout wires 1 and 3 are in |0>: tracing them out returns mem.
        const std::vector<std::size_t> ro{1, 3};
        EXPECT_LT(orc::max_abs_diff(orc::projector_sum(joint.elements(), 4, ro), mem.elements()),
                  1e-14);
    }
}

TEST(Layout, InterleavesPairs) {
    const auto l = interleaved_layout(3, 3);
    EXPECT_EQ(l.memory, (std::vector<std::size_t>{0, 2, 4}));
    EXPECT_EQ(l.readout, (std::vector<std::size_t>{1, 3, 5}));
    const auto u = interleaved_layout(1, 2);
    EXPECT_EQ(u.memory, (std::vector<std::size_t>{0}));
    EXPECT_EQ(u.readout, (std::vector<std::size_t>{1, 2}));
}

// ------------------------------------------------------- measure and reset

TEST(MeasureAndReset, ProductStateIsUntouched) {
    std::mt19937_64 rng(2);
    auto mem_state = StateVector::from_amplitudes(1, orc::random_state(1, rng));
    const auto mem = DensityMatrix::from_state(mem_state);
    const std::vector<std::size_t> ro{1};
    const auto out = measure_and_reset(tensor_extend(mem, 1), ro);
    EXPECT_NEAR(out.probabilities(0), 1.0, 1e-14);
    EXPECT_NEAR(out.probabilities(1), 0.0, 1e-14);
    EXPECT_LT(orc::max_abs_diff(to_dense(out.post_state.elements()), to_dense(mem.elements())),
              1e-14);
}

TEST(MeasureAndReset, BellStateLeavesMaximallyMixedMemory) {
    Eigen::VectorXcd bell = Eigen::VectorXcd::Zero(4);
    bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
    const auto joint = DensityMatrix::from_state(StateVector::from_amplitudes(2, bell));
    const std::vector<std::size_t> ro{1};
    const auto out = measure_and_reset(joint, ro);
    EXPECT_NEAR(out.probabilities(0), 0.5, 1e-14);
    EXPECT_NEAR(out.probabilities(1), 0.5, 1e-14);
    EXPECT_LT(orc::max_abs_diff(to_dense(out.post_state.elements()), 0.5 * orc::Dense::Identity(2, 2)),
              1e-14);
}

TEST(MeasureAndReset, MatchesProjectorSumOracle) {
    std::mt19937_64 rng(17);
    const std::vector<std::vector<std::size_t>> registers{{1, 3}, {0}, {3, 0, 2}, {2, 1}};
    for (const auto &ro : registers) {
        for (int i = 0; i < 25; ++i) {
            const orc::Dense r = orc::random_density(4, rng, 1 + static_cast<std::size_t>(i % 16));
            const auto out = measure_and_reset(DensityMatrix::from_elements(4, r), ro);
            EXPECT_LT(orc::max_abs_diff(to_dense(out.post_state.elements()),
                                        orc::projector_sum(r, 4, ro)),
                      1e-10);
            EXPECT_TRUE(out.post_state.is_valid());
            EXPECT_NEAR(out.probabilities.sum(), 1.0, 1e-10);
            EXPECT_GE(out.probabilities.minCoeff(), 0.0);
        }
    }
}

TEST(MeasureAndReset, ProbabilitiesAreReadoutMarginal) {
    std::mt19937_64 rng(4);
    const orc::Dense r = orc::random_density(3, rng);
    const std::vector<std::size_t> ro{2, 0};
    const auto out = measure_and_reset(DensityMatrix::from_elements(3, r), ro);
    for (std::size_t k = 0; k < 4; ++k) {
        double expected = 0.0;
        for (std::size_t i = 0; i < 8; ++i) {
            const std::size_t bits = ((i >> 2) & 1U) | (((i >> 0) & 1U) << 1U);
            if (bits == k)
                expected += r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
        }
        EXPECT_NEAR(out.probabilities(static_cast<Eigen::Index>(k)), expected, 1e-14);
    }
}

TEST(MeasureAndReset, RejectsBadRegisters) {
    DensityMatrix rho(3);
    EXPECT_THROW(measure_and_reset(rho, std::vector<std::size_t>{1, 1}), InvalidArgument);
    EXPECT_THROW(measure_and_reset(rho, std::vector<std::size_t>{3}), InvalidArgument);
    EXPECT_THROW(measure_and_reset(rho, std::vector<std::size_t>{}), InvalidArgument);
}

TEST(MeasureAndReset, StronglyNegativeProbabilityIsAnError) {
    RowMatrixXcd bad = RowMatrixXcd::Zero(4, 4);
    bad(0, 0) = 1.5;
    bad(3, 3) = -0.5;
    EXPECT_THROW(measure_and_reset(DensityMatrix::from_elements(2, bad),
                                   std::vector<std::size_t>{1}),
                 NumericalError);
}

// ------------------------------------------------------------ expectation

TEST(ExpectationZ, Examples) {
    Eigen::VectorXd zeros = Eigen::VectorXd::Zero(8);
    zeros(0) = 1.0;
    EXPECT_TRUE(expectation_z(zeros, 3).isApprox(Eigen::VectorXd::Ones(3)));

    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(4, 0.25);
    EXPECT_LT(expectation_z(uniform, 2).cwiseAbs().maxCoeff(), 1e-15);

    const Eigen::VectorXd skew = (Eigen::VectorXd(2) << 0.75, 0.25).finished();
    EXPECT_NEAR(expectation_z(skew, 1)(0), 0.5, 1e-15);

    EXPECT_THROW(expectation_z(skew, 2), InvalidArgument);
}

// ------------------------------------------------------------ depolarizing

TEST(Depolarizing, ZeroProbabilityIsIdentity) {
    std::mt19937_64 rng(8);
    const orc::Dense r = orc::random_density(2, rng);
    auto rho = DensityMatrix::from_elements(2, r);
    apply_depolarizing(rho, 1, 0.0);
    EXPECT_LT(orc::max_abs_diff(to_dense(rho.elements()), r), 0.0 + 1e-300);
}

TEST(Depolarizing, ThreeQuartersIsFullyMixing) {
    std::mt19937_64 rng(9);
    auto rho = DensityMatrix::from_state(StateVector::from_amplitudes(1, orc::random_state(1, rng)));
    apply_depolarizing(rho, 0, 0.75);
    EXPECT_LT(orc::max_abs_diff(to_dense(rho.elements()), 0.5 * orc::Dense::Identity(2, 2)), 1e-15);
}

TEST(Depolarizing, MatchesPauliSumAndPreservesTrace) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> pd(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        const std::size_t q = static_cast<std::size_t>(i % 3);
        const double p = pd(rng);
        const orc::Dense r = orc::random_density(3, rng);
        const orc::Dense X = orc::embed(orc::x(), q, 3);
        const orc::Dense Y = orc::embed(orc::y(), q, 3);
        const orc::Dense Z = orc::embed(orc::z(), q, 3);
        const orc::Dense expected = (1 - p) * r + (p / 3) * (X * r * X + Y * r * Y + Z * r * Z);
        auto rho = DensityMatrix::from_elements(3, r);
        apply_depolarizing(rho, q, p);
        EXPECT_LT(orc::max_abs_diff(to_dense(rho.elements()), expected), 1e-14);
        EXPECT_NEAR(std::abs(rho.trace() - orc::C{1.0, 0.0}), 0.0, 1e-12);
    }
}

TEST(Depolarizing, RejectsOutOfRangeProbability) {
    DensityMatrix rho(1);
    EXPECT_THROW(apply_depolarizing(rho, 0, -0.1), InvalidArgument);
    EXPECT_THROW(apply_depolarizing(rho, 0, 1.5), InvalidArgument);
}

TEST(Depolarizing, RearrangedNoisyProgramMatchesGateByGateNoise) {
    // Oracle: dense U rho U^dagger per gate, then the Pauli-sum channel on
    // every touched qubit.
    std::mt19937_64 rng(12);
    const std::size_t n = 4;
    for (double p : {0.0, 0.005, 0.05, 0.3}) {
        std::vector<GateOp> gates;
        for (int i = 0; i < 80; ++i) {
            gates.push_back(random_gate(n, rng));
        }
        const orc::Dense r0 = orc::random_density(n, rng);
        orc::Dense expected = r0;
        const auto depol = [&](std::size_t q) {
            const orc::Dense X = orc::embed(orc::x(), q, n);
            const orc::Dense Y = orc::embed(orc::y(), q, n);
            const orc::Dense Z = orc::embed(orc::z(), q, n);
            expected = (1 - p) * expected + (p / 3) * (X * expected * X + Y * expected * Y + Z * expected * Z);
        };
        for (const auto &g : gates) {
            const orc::Dense u = orc::full_unitary(g, n);
            expected = u * expected * u.adjoint();
            depol(g.target);
            if (g.control) {
                depol(*g.control);
            }
        }
        auto rho = DensityMatrix::from_elements(n, r0);
        NoisyProgram(gates, n, p).apply(rho);
        EXPECT_LT(orc::max_abs_diff(to_dense(rho.elements()), expected), 1e-12) << "p=" << p;
        EXPECT_NEAR(std::abs(rho.trace() - orc::C{1.0, 0.0}), 0.0, 1e-12);
    }
}

// -------------------------------------------------------------- sampling

TEST(TrajectoryStep, DeterministicOutcomeOnBasisState) {
    // |10>: qubit 1 set, readout qubit 0 reads 0.
    const auto psi = StateVector::basis(2, 0b10);
    CounterStream rng(1, 0);
    const std::vector<std::size_t> ro{0};
    for (int i = 0; i < 10; ++i) {
        const auto step = sample_trajectory_step(psi, ro, rng);
        EXPECT_EQ(step.outcome, 0U);
        EXPECT_NEAR(step.next_state.probability(0b10), 1.0, 1e-15);
    }
}

TEST(TrajectoryStep, ResetsMeasuredQubitToZero) {
    // Readout qubit 0 is |1>; after the step it must be back in |0>.
    const auto psi = StateVector::basis(2, 0b11);
    CounterStream rng(1, 0);
    const auto step = sample_trajectory_step(psi, std::vector<std::size_t>{0}, rng);
    EXPECT_EQ(step.outcome, 1U);
    EXPECT_NEAR(step.next_state.probability(0b10), 1.0, 1e-15);
}

TEST(TrajectoryStep, BellStateFrequencies) {
    Eigen::VectorXcd bell = Eigen::VectorXcd::Zero(4);
    bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
    const auto psi = StateVector::from_amplitudes(2, bell);
    const ReadoutMap map(2, std::vector<std::size_t>{1});
    CounterStream rng(2024, 0);
    Eigen::VectorXcd scratch(4);
    int ones = 0;
    constexpr int n = 100000;
    for (int i = 0; i < n; ++i) {
        StateVector s = psi;
        const auto k = sample_and_reset(s, map, rng, scratch);
        ones += static_cast<int>(k);
        // Memory collapses with the readout, readout is reset.
        EXPECT_NEAR(s.probability(k == 1 ? 0b01 : 0b00), 1.0, 1e-14);
    }
    EXPECT_NEAR(static_cast<double>(ones) / n, 0.5, 0.01);
}

TEST(TrajectoryStep, SameStreamSameOutcomes) {
    std::mt19937_64 gen(3);
    const auto psi = StateVector::from_amplitudes(3, orc::random_state(3, gen));
    const std::vector<std::size_t> ro{1, 2};
    CounterStream a(77, 5);
    CounterStream b(77, 5);
    for (int i = 0; i < 100; ++i) {
        const auto sa = sample_trajectory_step(psi, ro, a);
        const auto sb = sample_trajectory_step(psi, ro, b);
        EXPECT_EQ(sa.outcome, sb.outcome);
        EXPECT_EQ(sa.next_state.amplitudes(), sb.next_state.amplitudes());
    }
}

TEST(TrajectoryStep, VanishingNormIsAnError) {
    StateVector psi(2);
    psi.amplitudes().setZero();
    CounterStream rng(1, 1);
    EXPECT_THROW(sample_trajectory_step(psi, std::vector<std::size_t>{1}, rng), NumericalError);
}

TEST(TrajectoryStep, ConvergesToExactChannelOverRecurrentSteps) {
    // Fixed random 4-qubit circuit, three recurrent measure-and-reset steps.
    std::mt19937_64 gen(21);
    std::vector<GateOp> gates;
    for (int i = 0; i < 25; ++i)
        gates.push_back(random_gate(4, gen));
    const auto blocks = compile_gates(gates, 4);
    const std::vector<std::size_t> ro{1, 3};
    const ReadoutMap map(4, ro);

    std::vector<Eigen::VectorXd> exact;
    DensityMatrix mem(2);
    for (int t = 0; t < 3; ++t) {
        auto joint = tensor_extend(mem, 2);
        apply_blocks(joint, blocks);
        auto out = measure_and_reset(joint, ro);
        exact.push_back(out.probabilities);
        mem = std::move(out.post_state);
    }

    constexpr int shots = 50000;
    std::vector<Eigen::VectorXd> counts(3, Eigen::VectorXd::Zero(4));
    Eigen::VectorXcd scratch(16);
    for (int s = 0; s < shots; ++s) {
        CounterStream rng(5, static_cast<std::uint64_t>(s));
        StateVector psi(4);
        for (int t = 0; t < 3; ++t) {
            apply_blocks(psi, blocks);
            counts[static_cast<std::size_t>(t)](
                static_cast<Eigen::Index>(sample_and_reset(psi, map, rng, scratch))) += 1.0;
        }
    }
    for (int t = 0; t < 3; ++t) {
        const double tv =
            0.5 * (counts[static_cast<std::size_t>(t)] / shots - exact[static_cast<std::size_t>(t)])
                      .cwiseAbs()
                      .sum();
        EXPECT_LT(tv, 0.02) << "step " << t;
    }
}
