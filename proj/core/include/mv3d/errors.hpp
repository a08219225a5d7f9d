#pragma once

#include <stdexcept>

namespace mv3d {

// Error categories map 1:1 onto CLI exit codes (see tools/).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit 2
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit 3
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit 4
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit 5
};

}  // namespace mv3d
