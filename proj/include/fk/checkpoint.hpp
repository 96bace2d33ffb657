#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fk/nn.hpp"

namespace fk {

// Binary checkpoint layout (all integers little-endian; see docs/formats.md):
//   magic "FKNNCKP1" | u32 version=1 | u32 layer_count | u32 first_conv_index
//   | u32 input c,h,w | u32 num_classes
//   | per layer: u32 kind, u32 out_channels, kernel_h, kernel_w, stride,
//     pad, out_width
//   | u32 mask_len, mask bytes
//   | u32 tensor_count | per tensor: u32 rank, u32 dims[rank], f64 data[...]
// Doubles are raw IEEE-754 bit patterns, little-endian; round-trips are
// bitwise exact.
std::vector<std::uint8_t> serialize_model(const Model& model);
Model parse_model(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace fk
