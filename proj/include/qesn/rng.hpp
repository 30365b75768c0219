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

#include <cstdint>
#include <limits>

namespace qesn {

/// SplitMix64 finalizer applied to `x + golden`. One call of this function
/// is one step of the SplitMix64 generator whose state is `x`.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

/**
 * Counter-addressable random stream.
 *
 * The stream is fully determined by (seed, stream id); value number k is
 * `splitmix64(key + k * golden)`, so any stream can be created, skipped
 * ahead or replayed without touching any other. Trajectory sampling gives
 * each shot its own stream keyed by the shot index, which makes sampled
 * counts independent of how shots are partitioned across workers.
 *
 * Satisfies UniformRandomBitGenerator.
 */
class CounterStream {
  public:
    using result_type = std::uint64_t;

    constexpr CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(splitmix64(seed ^ splitmix64(stream ^ 0x632be59bd9b4e019ULL))) {}

    constexpr result_type operator()() noexcept {
        constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;
        return splitmix64(key_ + golden * counter_++);
    }

    constexpr void discard(std::uint64_t n) noexcept { counter_ += n; }
    [[nodiscard]] constexpr std::uint64_t position() const noexcept { return counter_; }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit generator.
template <class URBG> double uniform01(URBG &rng) {
    static_assert(URBG::max() == std::numeric_limits<std::uint64_t>::max() &&
                      URBG::min() == 0,
                  "uniform01 needs a full-range 64-bit generator");
    return static_cast<double>(rng() >> 11U) * 0x1.0p-53;
}

} // namespace qesn
