#pragma once

#include <stdexcept>
#include <string>

namespace lrmr {

/// Invalid shapes, out-of-range parameters, malformed input files.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative numeric routine failed to converge or hit a singular system.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, double best = 0.0)
      : std::runtime_error(what), best_(best) {}

  /// Best available estimate at the point of failure (0 when meaningless).
  double best() const noexcept { return best_; }

 private:
  double best_;
};

/// A request would exceed a documented memory or size cap.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failures; the message always carries the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lrmr
