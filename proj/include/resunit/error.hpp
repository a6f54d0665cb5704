#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace resunit {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  RankDeficient,
  Singular,
  IllConditioned,
  NotSymmetric,
  GenerationFailed,
  SolverFailed,
  SingularCHat,
  DegenerateRow,
  Io,
  Parse,
};

std::string_view to_string(ErrorKind kind);

/// Library error. `value` carries a diagnostic number when one exists
/// (condition estimate, offending row, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<double> value = std::nullopt)
      : std::runtime_error(message), kind_(kind), value_(value) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<double> value() const noexcept { return value_; }

 private:
  ErrorKind kind_;
  std::optional<double> value_;
};

}  // namespace resunit
