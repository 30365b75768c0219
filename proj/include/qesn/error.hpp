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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qesn {

/// Thrown when a caller violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when floating-point drift leaves a computation without a
/// meaningful result (e.g. a probability mass that vanished).
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// ODE integration produced a non-finite state.
class IntegrationError : public std::runtime_error {
  public:
    IntegrationError(const std::string &what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
          step_(step) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }

  private:
    std::size_t step_;
};

namespace detail {
inline void require(bool condition, const std::string &message) {
    if (!condition) {
        throw InvalidArgument(message);
    }
}
} // namespace detail

} // namespace qesn
