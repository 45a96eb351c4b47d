// Copyright 2026 The elir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ELIR_ERROR_HPP
#define ELIR_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace elir {

/// Failure categories raised by the library.
enum class ErrorCode {
  invalid_argument,
  out_of_support,
  invalid_datum,
  moment_undefined,
  mean_undefined,
  mode_undefined,
  diverged,
  not_conjugate,
  unknown_pair,
  incompatible_prior,
  grid_overflow,
  non_finite,
  support_violation,
  non_convergence,
  scenario_failed,
  divergent_chains,
  parse_error,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::out_of_support: return "OutOfSupport";
    case ErrorCode::invalid_datum: return "InvalidDatum";
    case ErrorCode::moment_undefined: return "MomentUndefined";
    case ErrorCode::mean_undefined: return "MeanUndefined";
    case ErrorCode::mode_undefined: return "ModeUndefined";
    case ErrorCode::diverged: return "Diverged";
    case ErrorCode::not_conjugate: return "NotConjugate";
    case ErrorCode::unknown_pair: return "UnknownPair";
    case ErrorCode::incompatible_prior: return "IncompatiblePrior";
    case ErrorCode::grid_overflow: return "GridOverflow";
    case ErrorCode::non_finite: return "NonFinite";
    case ErrorCode::support_violation: return "SupportViolation";
    case ErrorCode::non_convergence: return "NonConvergence";
    case ErrorCode::scenario_failed: return "ScenarioFailed";
    case ErrorCode::divergent_chains: return "DivergentChains";
    case ErrorCode::parse_error: return "ParseError";
  }
  return "Unknown";
}

/// Exception carrying an ErrorCode. `detail` holds an auxiliary integer such
/// as the offending moment order for MomentUndefined.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int detail = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(detail) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] int detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  int detail_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& message, int detail = 0) {
  throw Error(code, message, detail);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) {
    fail(ErrorCode::invalid_argument, message);
  }
}

}  // namespace detail

}  // namespace elir

#endif  // ELIR_ERROR_HPP
