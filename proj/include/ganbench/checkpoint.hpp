#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ganbench/models.hpp"

namespace ganbench {

// Binary model snapshot. Layout, all integers little-endian:
//   magic "GANCKPT1" (8 bytes)
//   u32 format version (currently 1)
//   u32 kind length, kind bytes
//   u32 config length, config JSON bytes
//   u32 tensor count
//   per tensor: u32 name length, name bytes, u32 rank, u64 dims,
//               f64 values (raw IEEE-754 bits)
// Tensors cover every parameter plus batchnorm running statistics, so a
// load reproduces the model bitwise.
std::vector<std::uint8_t> serialize_checkpoint(const ModelSpec& model);
ModelSpec deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const ModelSpec& model, const std::filesystem::path& path);
ModelSpec load_checkpoint(const std::filesystem::path& path);

}  // namespace ganbench
