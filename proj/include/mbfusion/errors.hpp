#pragma once

#include <stdexcept>

namespace mbfusion {

/// Dimension/layout mismatch between operands.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Invalid parameter value (non-positive variance, bad config key, ...).
struct ParamError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: singular matrix, non-finite result, undefined metric.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mbfusion
