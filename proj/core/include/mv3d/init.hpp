#pragma once

#include "mv3d/rng.hpp"
#include "mv3d/tensor.hpp"

namespace mv3d {

inline std::int64_t fan_in_of(const std::vector<int>& shape) {
  if (shape.size() == 4) return static_cast<std::int64_t>(shape[1]) * shape[2] * shape[3];
  if (shape.size() == 2) return shape[1];
  throw std::invalid_argument("he_init: fan-in undefined for shape " + shape_str(shape));
}

// Zero-mean Gaussian with std sqrt(2 / fan_in); deterministic given the seed.
// Samples are drawn in double and rounded once to the target precision.
template <typename T = float>
TensorT<T> he_init(std::vector<int> shape, std::uint64_t seed) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in_of(shape)));
  TensorT<T> t(std::move(shape));
  SplitMix64 rng(seed);
  for (auto& v : t.data) v = static_cast<T>(stddev * rng.normal());
  return t;
}

}  // namespace mv3d
