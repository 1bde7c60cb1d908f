#pragma once

#include <stdexcept>
#include <string>

namespace ahcl {

// Exit-code families used by the command-line tool: usage errors map to 1,
// data errors to 2, numerical divergence to 3.

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a loss, gradient or parameter becomes non-finite or explodes.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int epoch = -1)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class EigensolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ahcl
