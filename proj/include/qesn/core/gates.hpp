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

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "qesn/core/state.hpp"
#include "qesn/error.hpp"

namespace qesn {

using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;

/*
 * Rotation conventions:
 *   RZ(t) = diag(e^{-it/2}, e^{+it/2})
 *   RX(t) = cos(t/2) I - i sin(t/2) X
 *   RY(t) = cos(t/2) I - i sin(t/2) Y
 * Global phase is never tracked; everything downstream is asserted on
 * probabilities or density matrices.
 */

inline Matrix2 rz_matrix(double theta) {
    const cplx phase = std::polar(1.0, theta / 2.0);
    Matrix2 m;
    m << std::conj(phase), 0.0, 0.0, phase;
    return m;
}

inline Matrix2 rx_matrix(double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    Matrix2 m;
    m << c, cplx{0.0, -s}, cplx{0.0, -s}, c;
    return m;
}

inline Matrix2 ry_matrix(double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    Matrix2 m;
    m << c, -s, s, c;
    return m;
}

inline Matrix2 pauli_x() {
    Matrix2 m;
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline Matrix2 pauli_y() {
    Matrix2 m;
    m << 0.0, cplx{0.0, -1.0}, cplx{0.0, 1.0}, 0.0;
    return m;
}

inline Matrix2 pauli_z() {
    Matrix2 m;
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

/// Euler rotation R(alpha, beta, gamma) = RZ(gamma) RX(beta) RZ(alpha).
inline Matrix2 compose_rotation(double alpha, double beta, double gamma) {
    detail::require(std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma),
                    "rotation angles must be finite");
    return rz_matrix(gamma) * rx_matrix(beta) * rz_matrix(alpha);
}

enum class GateKind { RZ, RX, CNOT, CRX, CRY, CRZ };

inline std::string_view gate_name(GateKind kind) {
    switch (kind) {
    case GateKind::RZ:
        return "rz";
    case GateKind::RX:
        return "rx";
    case GateKind::CNOT:
        return "cx";
    case GateKind::CRX:
        return "crx";
    case GateKind::CRY:
        return "cry";
    case GateKind::CRZ:
        return "crz";
    }
    return "?";
}

inline bool is_controlled(GateKind kind) {
    return kind != GateKind::RZ && kind != GateKind::RX;
}

inline bool has_angle(GateKind kind) { return kind != GateKind::CNOT; }

/// One gate of the QESN gate set. `control` is empty for single-qubit gates.
struct GateOp {
    GateKind kind = GateKind::RZ;
    double angle = 0.0;
    std::optional<std::size_t> control;
    std::size_t target = 0;

    static GateOp rz(std::size_t q, double theta) { return {GateKind::RZ, theta, {}, q}; }
    static GateOp rx(std::size_t q, double theta) { return {GateKind::RX, theta, {}, q}; }
    static GateOp cnot(std::size_t c, std::size_t t) { return {GateKind::CNOT, 0.0, c, t}; }
    static GateOp crx(std::size_t c, std::size_t t, double theta) {
        return {GateKind::CRX, theta, c, t};
    }
    static GateOp cry(std::size_t c, std::size_t t, double theta) {
        return {GateKind::CRY, theta, c, t};
    }
    static GateOp crz(std::size_t c, std::size_t t, double theta) {
        return {GateKind::CRZ, theta, c, t};
    }

    friend bool operator==(const GateOp &, const GateOp &) = default;
};

/// The 2x2 unitary applied to the target (when the control is set, for
/// controlled kinds).
inline Matrix2 target_matrix(const GateOp &g) {
    switch (g.kind) {
    case GateKind::RZ:
    case GateKind::CRZ:
        return rz_matrix(g.angle);
    case GateKind::RX:
    case GateKind::CRX:
        return rx_matrix(g.angle);
    case GateKind::CRY:
        return ry_matrix(g.angle);
    case GateKind::CNOT:
        return pauli_x();
    }
    return Matrix2::Identity();
}

/// Controlled-U on a local 2-qubit basis where the control is local bit 0
/// and the target local bit 1 (local index = control + 2 * target).
inline Matrix4 controlled_matrix(const Matrix2 &u) {
    Matrix4 m = Matrix4::Identity();
    m(1, 1) = u(0, 0);
    m(1, 3) = u(0, 1);
    m(3, 1) = u(1, 0);
    m(3, 3) = u(1, 1);
    return m;
}

inline void validate_gate(const GateOp &g, std::size_t n_qubits) {
    detail::require(g.target < n_qubits, "gate target " + std::to_string(g.target) +
                                             " out of range for " +
                                             std::to_string(n_qubits) + " qubits");
    detail::require(std::isfinite(g.angle), "gate angle must be finite");
    detail::require(is_controlled(g.kind) == g.control.has_value(),
                    "control qubit presence does not match gate kind");
    if (g.control) {
        detail::require(*g.control < n_qubits, "gate control " + std::to_string(*g.control) +
                                                   " out of range for " +
                                                   std::to_string(n_qubits) + " qubits");
        detail::require(*g.control != g.target, "control and target must differ");
    }
}

} // namespace qesn
