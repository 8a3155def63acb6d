#pragma once

#include <cstdint>

// Byte layout of the .iqlut format; see docs/lut_format.md.
namespace iqlut::layout {

inline constexpr char kMagic[6] = {'I', 'Q', 'L', 'U', 'T', '1'};
inline constexpr std::uint16_t kVersion = 1;

// magic(6) version(2) layers, channels, upscale, kernel_h, kernel_w (5 x u16) out_bits(u8)
inline constexpr std::uint64_t kPreambleBytes = 6 + 2 + 5 * 2 + 1;
inline constexpr std::uint64_t kChecksumBytes = 4;
inline constexpr std::uint64_t kFixedBytes = kPreambleBytes + kChecksumBytes;
// a, b, alpha, range_lo, range_hi (5 x f32) + bits (u8)
inline constexpr std::uint64_t kBlockHeaderBytes = 5 * 4 + 1;
// out_scale, out_offset (2 x f32)
inline constexpr std::uint64_t kTableHeaderBytes = 2 * 4;

}  // namespace iqlut::layout
