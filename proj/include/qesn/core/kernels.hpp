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
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "qesn/core/gates.hpp"

namespace qesn {

/**
 * A fused 1- or 2-qubit unitary. For two-qubit blocks the local basis index
 * is bit(qubits[0]) + 2 * bit(qubits[1]).
 */
struct Block {
    std::size_t arity = 1;
    std::array<std::size_t, 2> qubits{0, 0};
    Matrix2 m2 = Matrix2::Identity();
    Matrix4 m4 = Matrix4::Identity();
    bool diagonal = false;
};

namespace detail {

inline bool is_diagonal(const Matrix4 &m) {
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (r != c && m(r, c) != cplx{0.0, 0.0}) {
                return false;
            }
        }
    }
    return true;
}

/// Embeds a single-qubit unitary at local position `pos` of a 2-qubit block.
inline Matrix4 lift(const Matrix2 &u, std::size_t pos) {
    return pos == 0 ? Matrix4(Eigen::kroneckerProduct(Matrix2::Identity(), u))
                    : Matrix4(Eigen::kroneckerProduct(u, Matrix2::Identity()));
}

/// Swaps the two local qubits of a 4x4 operator.
inline Matrix4 swap_local(const Matrix4 &m) {
    static constexpr std::array<int, 4> perm{0, 2, 1, 3};
    Matrix4 out;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            out(perm[r], perm[c]) = m(r, c);
        }
    }
    return out;
}

} // namespace detail

/**
 * Greedy gate fuser. Consecutive gates are multiplied into 1- and 2-qubit
 * blocks; a block is emitted only when a later gate needs one of its qubits
 * together with a qubit outside it. Gates on disjoint qubits commute, so the
 * emitted block sequence implements the same unitary as the gate list.
 */
class CircuitCompiler {
  public:
    explicit CircuitCompiler(std::size_t n_qubits) : n_qubits_(n_qubits), slot_(n_qubits) {}

    void add(const GateOp &g) {
        validate_gate(g, n_qubits_);
        const Matrix2 u = target_matrix(g);
        if (!g.control) {
            add_single(g.target, u);
        } else {
            add_pair(*g.control, g.target, controlled_matrix(u));
        }
    }

    void add_all(std::span<const GateOp> gates) {
        for (const auto &g : gates) {
            add(g);
        }
    }

    std::vector<Block> finish() {
        for (std::size_t q = 0; q < n_qubits_; ++q) {
            if (slot_[q]) {
                emit(*slot_[q]);
            }
        }
        return std::move(out_);
    }

  private:
    void add_single(std::size_t q, const Matrix2 &u) {
        if (!slot_[q]) {
            Block b;
            b.arity = 1;
            b.qubits = {q, q};
            b.m2 = u;
            open_.push_back(b);
            slot_[q] = open_.size() - 1;
            return;
        }
        Block &b = open_[*slot_[q]];
        if (b.arity == 1) {
            b.m2 = u * b.m2;
        } else {
            b.m4 = detail::lift(u, b.qubits[0] == q ? 0 : 1) * b.m4;
        }
    }

    // `g` is expressed with local bit 0 = a, local bit 1 = b.
    void add_pair(std::size_t a, std::size_t b, const Matrix4 &g) {
        if (slot_[a] && slot_[a] == slot_[b]) {
            Block &blk = open_[*slot_[a]];
            blk.m4 = (blk.qubits[0] == a ? g : detail::swap_local(g)) * blk.m4;
            return;
        }
        const Matrix2 ma = take_single(a);
        const Matrix2 mb = take_single(b);
        Block blk;
        blk.arity = 2;
        blk.qubits = {a, b};
        blk.m4 = g * Matrix4(Eigen::kroneckerProduct(mb, ma));
        open_.push_back(blk);
        slot_[a] = open_.size() - 1;
        slot_[b] = open_.size() - 1;
    }

    // Detaches qubit q from its open block; returns the pending 1-qubit
    // unitary (identity if q was idle or sat in a 2-qubit block, which is
    // emitted).
    Matrix2 take_single(std::size_t q) {
        if (!slot_[q]) {
            return Matrix2::Identity();
        }
        const std::size_t s = *slot_[q];
        if (open_[s].arity == 1) {
            slot_[q].reset();
            return open_[s].m2;
        }
        emit(s);
        return Matrix2::Identity();
    }

    void emit(std::size_t s) {
        Block b = open_[s];
        for (auto q : b.qubits) {
            if (slot_[q] == s) {
                slot_[q].reset();
            }
        }
        if (b.arity == 2) {
            b.diagonal = detail::is_diagonal(b.m4);
        } else {
            b.diagonal = b.m2(0, 1) == cplx{} && b.m2(1, 0) == cplx{};
        }
        out_.push_back(b);
    }

    std::size_t n_qubits_;
    std::vector<std::optional<std::size_t>> slot_;
    std::vector<Block> open_;
    std::vector<Block> out_;
};

inline std::vector<Block> compile_gates(std::span<const GateOp> gates, std::size_t n_qubits) {
    CircuitCompiler cc(n_qubits);
    cc.add_all(gates);
    return cc.finish();
}

/**
 * Applies `block` to every column of a row-major `(2^n_qubits) x width`
 * array: row i is the basis index, columns are independent vectors.
 */
inline void apply_block_rows(const Block &block, cplx *data, std::size_t dim,
                             std::size_t width) {
    if (block.arity == 1) {
        const std::size_t bit = std::size_t{1} << block.qubits[0];
        const cplx m00 = block.m2(0, 0);
        const cplx m01 = block.m2(0, 1);
        const cplx m10 = block.m2(1, 0);
        const cplx m11 = block.m2(1, 1);
        for (std::size_t hi = 0; hi < dim; hi += 2 * bit) {
            for (std::size_t lo = 0; lo < bit; ++lo) {
                cplx *r0 = data + (hi + lo) * width;
                cplx *r1 = data + (hi + lo + bit) * width;
                if (block.diagonal) {
                    for (std::size_t c = 0; c < width; ++c) {
                        r0[c] *= m00;
                        r1[c] *= m11;
                    }
                    continue;
                }
                for (std::size_t c = 0; c < width; ++c) {
                    const cplx a = r0[c];
                    const cplx b = r1[c];
                    r0[c] = m00 * a + m01 * b;
                    r1[c] = m10 * a + m11 * b;
                }
            }
        }
        return;
    }

    const std::size_t b0 = std::size_t{1} << block.qubits[0];
    const std::size_t b1 = std::size_t{1} << block.qubits[1];
    const std::size_t mask = b0 | b1;
    const std::array<std::size_t, 4> offset{0, b0, b1, b0 | b1};
    const Matrix4 &m = block.m4;
    for (std::size_t base = 0; base < dim; ++base) {
        if ((base & mask) != 0) {
            continue;
        }
        std::array<cplx *, 4> row{};
        for (std::size_t k = 0; k < 4; ++k) {
            row[k] = data + (base + offset[k]) * width;
        }
        if (block.diagonal) {
            for (std::size_t k = 0; k < 4; ++k) {
                const cplx d = m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
                if (d == cplx{1.0, 0.0}) {
                    continue;
                }
                for (std::size_t c = 0; c < width; ++c) {
                    row[k][c] *= d;
                }
            }
            continue;
        }
        for (std::size_t c = 0; c < width; ++c) {
            const cplx v0 = row[0][c];
            const cplx v1 = row[1][c];
            const cplx v2 = row[2][c];
            const cplx v3 = row[3][c];
            row[0][c] = m(0, 0) * v0 + m(0, 1) * v1 + m(0, 2) * v2 + m(0, 3) * v3;
            row[1][c] = m(1, 0) * v0 + m(1, 1) * v1 + m(1, 2) * v2 + m(1, 3) * v3;
            row[2][c] = m(2, 0) * v0 + m(2, 1) * v1 + m(2, 2) * v2 + m(2, 3) * v3;
            row[3][c] = m(3, 0) * v0 + m(3, 1) * v1 + m(3, 2) * v2 + m(3, 3) * v3;
        }
    }
}

inline void apply_blocks_rows(std::span<const Block> blocks, cplx *data, std::size_t dim,
                              std::size_t width) {
    for (const auto &b : blocks) {
        apply_block_rows(b, data, dim, width);
    }
}

} // namespace qesn
