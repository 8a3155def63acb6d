#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "iqlut/lut.hpp"

namespace iqlut {

/// Little-endian .iqlut encoding:
///   "IQLUT1"  u16 version
///   u16 layers, channels, upscale, kernel_h, kernel_w; u8 out_bits
///   per block:  f32 a, b, alpha, range_lo, range_hi; u8 bits
///               per input channel: f32 out_scale, out_offset
///   table region: every code, block-major, then channel, level, entry;
///                 ceil(out_bits / 8) bytes each
///   u32 CRC-32 of all preceding bytes
std::vector<std::uint8_t> serialize(const LutModel& model);

/// Throws IntegrityError on wrong magic, unknown version, checksum mismatch,
/// truncation or geometry inconsistencies.
LutModel deserialize(std::span<const std::uint8_t> bytes);

void save_lut_model(const std::filesystem::path& path, const LutModel& model);
LutModel load_lut_model(const std::filesystem::path& path);

/// Byte offset and length of the table region inside a serialized model.
struct TableRegion {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};
TableRegion table_region(const LutModel& model);

inline constexpr std::uint16_t kLutFormatVersion = 1;

}  // namespace iqlut
