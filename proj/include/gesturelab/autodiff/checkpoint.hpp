#pragma once

#include <string>

#include "gesturelab/autodiff/nn.hpp"

namespace gesturelab::autodiff {

// Checkpoint layout: magic "GLABCKPT", u32 version, u32 entry count, then
// per entry: u32 name length, name bytes, u32 rank, u64 dims, f64 data.
// All integers and floats little-endian.
inline constexpr char kCheckpointMagic[8] = {'G', 'L', 'A', 'B', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ParameterStore& store);
ParameterStore load_checkpoint(const std::string& path);

} // namespace gesturelab::autodiff
