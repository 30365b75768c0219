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
#include <string>

#include <Eigen/Dense>

#include "qesn/error.hpp"

namespace qesn {

using cplx = std::complex<double>;
using RowMatrixXcd =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Largest register the dense backends accept.
inline constexpr std::size_t kMaxQubits = 26;

inline std::size_t dimension_of(std::size_t n_qubits) {
    detail::require(n_qubits >= 1 && n_qubits <= kMaxQubits,
                    "qubit count must be in [1, " + std::to_string(kMaxQubits) +
                        "], got " + std::to_string(n_qubits));
    return std::size_t{1} << n_qubits;
}

/**
 * Pure state of `n_qubits` qubits. Qubit 0 is the least-significant bit of
 * the basis index.
 */
class StateVector {
  public:
    /// |0...0>
    explicit StateVector(std::size_t n_qubits)
        : n_qubits_(n_qubits),
          amplitudes_(Eigen::VectorXcd::Zero(
              static_cast<Eigen::Index>(dimension_of(n_qubits)))) {
        amplitudes_(0) = 1.0;
    }

    static StateVector basis(std::size_t n_qubits, std::size_t index) {
        StateVector s(n_qubits);
        detail::require(index < s.dimension(), "basis index out of range");
        s.amplitudes_(0) = 0.0;
        s.amplitudes_(static_cast<Eigen::Index>(index)) = 1.0;
        return s;
    }

    /// Wraps caller amplitudes; they must already be normalized to 1e-10.
    static StateVector from_amplitudes(std::size_t n_qubits, Eigen::VectorXcd amps) {
        StateVector s(n_qubits);
        detail::require(static_cast<std::size_t>(amps.size()) == s.dimension(),
                        "amplitude vector has wrong length");
        detail::require(std::abs(amps.squaredNorm() - 1.0) < 1e-10,
                        "amplitudes are not normalized");
        s.amplitudes_ = std::move(amps);
        return s;
    }

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t dimension() const noexcept {
        return static_cast<std::size_t>(amplitudes_.size());
    }
    [[nodiscard]] const Eigen::VectorXcd &amplitudes() const noexcept { return amplitudes_; }
    [[nodiscard]] Eigen::VectorXcd &amplitudes() noexcept { return amplitudes_; }
    [[nodiscard]] cplx *data() noexcept { return amplitudes_.data(); }

    [[nodiscard]] double norm_squared() const { return amplitudes_.squaredNorm(); }
    [[nodiscard]] double probability(std::size_t index) const {
        return std::norm(amplitudes_(static_cast<Eigen::Index>(index)));
    }

  private:
    std::size_t n_qubits_;
    Eigen::VectorXcd amplitudes_;
};

/**
 * Mixed state of `n_qubits` qubits, stored row-major so gate kernels can
 * sweep contiguous rows.
 */
class DensityMatrix {
  public:
    /// |0...0><0...0|
    explicit DensityMatrix(std::size_t n_qubits)
        : n_qubits_(n_qubits),
          elements_(RowMatrixXcd::Zero(static_cast<Eigen::Index>(dimension_of(n_qubits)),
                                       static_cast<Eigen::Index>(dimension_of(n_qubits)))) {
        elements_(0, 0) = 1.0;
    }

    static DensityMatrix from_state(const StateVector &psi) {
        DensityMatrix rho(psi.n_qubits());
        rho.elements_ = psi.amplitudes() * psi.amplitudes().adjoint();
        return rho;
    }

    static DensityMatrix maximally_mixed(std::size_t n_qubits) {
        DensityMatrix rho(n_qubits);
        const auto d = static_cast<Eigen::Index>(rho.dimension());
        rho.elements_ = RowMatrixXcd::Identity(d, d) / static_cast<double>(d);
        return rho;
    }

    /// Adopts caller elements. Only the shape is checked here; use
    /// `is_valid` for the physical invariants.
    static DensityMatrix from_elements(std::size_t n_qubits, RowMatrixXcd elements) {
        DensityMatrix rho(n_qubits);
        detail::require(elements.rows() == elements.cols() &&
                            static_cast<std::size_t>(elements.rows()) == rho.dimension(),
                        "density matrix has wrong shape");
        rho.elements_ = std::move(elements);
        return rho;
    }

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t dimension() const noexcept {
        return static_cast<std::size_t>(elements_.rows());
    }
    [[nodiscard]] const RowMatrixXcd &elements() const noexcept { return elements_; }
    [[nodiscard]] RowMatrixXcd &elements() noexcept { return elements_; }

    [[nodiscard]] cplx trace() const { return elements_.trace(); }

    /// Replaces the matrix by its Hermitian part.
    void hermitize() {
        RowMatrixXcd h = 0.5 * (elements_ + elements_.adjoint());
        elements_.swap(h);
    }

    /// Hermitian, unit trace and positive semidefinite within tolerances.
    [[nodiscard]] bool is_valid(double tol = 1e-10, double eig_tol = 1e-8) const {
        if ((elements_ - elements_.adjoint()).cwiseAbs().maxCoeff() > tol) {
            return false;
        }
        if (std::abs(trace() - cplx{1.0, 0.0}) > tol) {
            return false;
        }
        const Eigen::MatrixXcd herm = 0.5 * (elements_ + elements_.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff() >= -eig_tol;
    }

  private:
    std::size_t n_qubits_;
    RowMatrixXcd elements_;
};

} // namespace qesn
