#pragma once

#include <string>
#include <vector>

#include "oransim/nn.hpp"

namespace oransim::nn {

// Named flat tensor with a shape header, the unit of the checkpoint format.
struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  Vec data;
};

inline constexpr const char* kCheckpointMagic = "ORANSIM-CKPT-1";

// JSON checkpoint: {"magic": ..., "tensors": [{name, shape, data}, ...]}.
// Doubles are emitted in shortest round-trip form, so load(save(x)) == x.
void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

// Convenience: find a tensor by name; throws ConfigError if absent.
const NamedTensor& find_tensor(const std::vector<NamedTensor>& ts, const std::string& name);

}  // namespace oransim::nn
