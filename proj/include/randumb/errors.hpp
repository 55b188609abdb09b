#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace randumb {

enum class ErrorKind {
  kConfig,            // invalid configuration or hyperparameters
  kShape,             // dimension mismatch
  kData,              // non-finite or otherwise invalid values
  kFormat,            // malformed file contents
  kInsufficientData,  // not enough samples for the requested statistic
  kEmptyModel,        // prediction before any class was observed
  kNumerical,         // factorization failure
  kSingularUpdate,    // Sherman-Morrison denominator vanished
  kUnsupported,       // operation not defined for this input kind
  kContract,          // violated precondition of a pure function
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. The kind selects the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> pivot = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }

  /// Leading minor that failed to be positive, for kNumerical errors from
  /// a Cholesky factorization (0-based).
  std::optional<std::size_t> pivot() const noexcept { return pivot_; }

  /// Same error with `context` prefixed to the message.
  Error with_context(std::string_view context) const;

 private:
  ErrorKind kind_;
  std::optional<std::size_t> pivot_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace randumb
