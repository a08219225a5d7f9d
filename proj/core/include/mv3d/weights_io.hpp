#pragma once

#include <string>
#include <vector>

#include "mv3d/params.hpp"
#include "mv3d/viewnet.hpp"

namespace mv3d {

// Weights container: magic "MV3D", u32 LE format version, u32 LE tensor
// count, then per tensor: u32 LE name length, UTF-8 name, u32 LE rank,
// u32 LE dims, raw 32-bit LE reals. Save/load round-trips bit-exactly.

inline constexpr std::uint32_t kWeightsVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::string& path);  // FormatError on bad magic

std::vector<NamedTensor> snapshot(const ParamSet& params);
// Copies values into matching parameters; throws FormatError when a
// parameter is missing or has a different shape.
void restore(ParamSet& params, const std::vector<NamedTensor>& tensors);

// The architecture is fully determined by the saved tensor shapes, so a
// weights file alone is enough to rebuild the network for inference.
NetConfig net_config_from_tensors(const std::vector<NamedTensor>& tensors);

}  // namespace mv3d
