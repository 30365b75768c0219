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

// Reference constructions used only by tests. Everything here is built from
// definitions (explicit matrix entries, full Kronecker operators, projector
// sums) and shares no code path with the library kernels it checks.

#include <cmath>
#include <complex>
#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qesn/core/gates.hpp"
#include "qesn/core/state.hpp"

namespace qesn::oracle {

using C = std::complex<double>;
using Dense = Eigen::MatrixXcd;

inline const C I{0.0, 1.0};

inline Dense rz(double t) {
    Dense m = Dense::Zero(2, 2);
    m(0, 0) = std::exp(-I * (t / 2));
    m(1, 1) = std::exp(I * (t / 2));
    return m;
}

inline Dense rx(double t) {
    Dense m(2, 2);
    m(0, 0) = std::cos(t / 2);
    m(0, 1) = -I * std::sin(t / 2);
    m(1, 0) = -I * std::sin(t / 2);
    m(1, 1) = std::cos(t / 2);
    return m;
}

inline Dense ry(double t) {
    Dense m(2, 2);
    m(0, 0) = std::cos(t / 2);
    m(0, 1) = -std::sin(t / 2);
    m(1, 0) = std::sin(t / 2);
    m(1, 1) = std::cos(t / 2);
    return m;
}

inline Dense x() {
    Dense m = Dense::Zero(2, 2);
    m(0, 1) = m(1, 0) = 1.0;
    return m;
}

inline Dense y() {
    Dense m = Dense::Zero(2, 2);
    m(0, 1) = -I;
    m(1, 0) = I;
    return m;
}

inline Dense z() {
    Dense m = Dense::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
}

/// Plain triple-loop 2x2 product.
inline Dense mul2(const Dense &a, const Dense &b) {
    Dense out = Dense::Zero(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                out(i, j) += a(i, k) * b(k, j);
    return out;
}

inline Dense target_of(const GateOp &g) {
    switch (g.kind) {
    case GateKind::RZ:
    case GateKind::CRZ:
        return rz(g.angle);
    case GateKind::RX:
    case GateKind::CRX:
        return rx(g.angle);
    case GateKind::CRY:
        return ry(g.angle);
    case GateKind::CNOT:
        return x();
    }
    return Dense::Identity(2, 2);
}

/// Full 2^n x 2^n operator of a gate, column by column from its definition.
inline Dense full_unitary(const GateOp &g, std::size_t n) {
    const std::size_t dim = std::size_t{1} << n;
    const Dense u = target_of(g);
    Dense full = Dense::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    const std::size_t tbit = std::size_t{1} << g.target;
    for (std::size_t col = 0; col < dim; ++col) {
        const bool active = !g.control || ((col >> *g.control) & 1U);
        if (!active) {
            full(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(col)) = 1.0;
            continue;
        }
        const int tin = (col & tbit) ? 1 : 0;
        for (int tout = 0; tout < 2; ++tout) {
            const std::size_t row = tout ? (col | tbit) : (col & ~tbit);
            full(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += u(tout, tin);
        }
    }
    return full;
}

inline Dense full_unitary(const std::vector<GateOp> &gates, std::size_t n) {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
    Dense u = Dense::Identity(dim, dim);
    for (const auto &g : gates) {
        u = full_unitary(g, n) * u;
    }
    return u;
}

/// Single-qubit operator on `q` of an n-qubit register.
inline Dense embed(const Dense &op, std::size_t q, std::size_t n) {
    const std::size_t dim = std::size_t{1} << n;
    Dense full = Dense::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    const std::size_t bit = std::size_t{1} << q;
    for (std::size_t col = 0; col < dim; ++col) {
        const int bin = (col & bit) ? 1 : 0;
        for (int bout = 0; bout < 2; ++bout) {
            const std::size_t row = bout ? (col | bit) : (col & ~bit);
            full(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += op(bout, bin);
        }
    }
    return full;
}

inline Dense random_density(std::size_t n, std::mt19937_64 &rng, std::size_t rank = 0) {
    std::normal_distribution<double> nd;
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
    const Eigen::Index r = rank == 0 ? dim : static_cast<Eigen::Index>(rank);
    Dense g(dim, r);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < r; ++j)
            g(i, j) = C{nd(rng), nd(rng)};
    Dense rho = g * g.adjoint();
    return rho / rho.trace();
}

inline Eigen::VectorXcd random_state(std::size_t n, std::mt19937_64 &rng) {
    std::normal_distribution<double> nd;
    Eigen::VectorXcd v(static_cast<Eigen::Index>(std::size_t{1} << n));
    for (auto &a : v)
        a = C{nd(rng), nd(rng)};
    return v / v.norm();
}

/// Projector-sum reduction: sum_k (I (x) <k|) rho (I (x) |k>) over the
/// readout qubits, written directly from the basis-state definition.
inline Dense projector_sum(const Dense &rho, std::size_t n, const std::vector<std::size_t> &readout) {
    std::vector<std::size_t> kept;
    for (std::size_t q = 0; q < n; ++q) {
        bool is_ro = false;
        for (auto r : readout)
            is_ro = is_ro || r == q;
        if (!is_ro)
            kept.push_back(q);
    }
    const std::size_t dk = std::size_t{1} << kept.size();
    const std::size_t dr = std::size_t{1} << readout.size();
    const std::size_t dim = std::size_t{1} << n;
    // Build each (I (x) <k|) as an explicit dk x dim matrix.
    Dense out = Dense::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
    for (std::size_t k = 0; k < dr; ++k) {
        Dense bra = Dense::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dim));
        for (std::size_t a = 0; a < dk; ++a) {
            std::size_t idx = 0;
            for (std::size_t i = 0; i < kept.size(); ++i)
                if ((a >> i) & 1U)
                    idx |= std::size_t{1} << kept[i];
            for (std::size_t i = 0; i < readout.size(); ++i)
                if ((k >> i) & 1U)
                    idx |= std::size_t{1} << readout[i];
            bra(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(idx)) = 1.0;
        }
        out += bra * rho * bra.adjoint();
    }
    return out;
}

inline double max_abs_diff(const Dense &a, const Dense &b) {
    return (a - b).cwiseAbs().maxCoeff();
}

} // namespace qesn::oracle
