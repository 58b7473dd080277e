#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ttp/linalg.hpp"

namespace ttp {

/// One named tensor in a checkpoint. Values are row-major.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

inline constexpr char kCheckpointMagic[4] = {'T', 'T', 'P', 'W'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

/// "TTPW", version u16, then per tensor: name length u16, name bytes,
/// rank u8, dims u32..., f32 data.
std::vector<std::uint8_t> serialize_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> parse_checkpoint(std::span<const std::uint8_t> bytes);

/// Snapshot of a parameter: vectors get rank 1, matrices rank 2.
NamedTensor to_named_tensor(const ParamRef& ref);
/// Copies a checkpoint tensor into a parameter of identical shape.
void assign_from(const NamedTensor& tensor, const ParamRef& ref);

}  // namespace ttp
