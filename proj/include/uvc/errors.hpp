#pragma once

#include <stdexcept>
#include <string>

namespace uvc {

/// Bad dimensions, out-of-range parameters, malformed input files.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix that must be inverted is singular or badly conditioned.
class IllConditioned : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The synthesis program has no acceptable solution. `report()` carries the
/// solver residual summary so callers can print it.
class NoDesign : public std::runtime_error {
 public:
  NoDesign(const std::string& what, std::string report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const std::string& report() const noexcept { return report_; }

 private:
  std::string report_;
};

/// Non-finite values produced during integration or factorization.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace uvc
