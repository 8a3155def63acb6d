#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iqlut/dpfi.hpp"
#include "iqlut/model.hpp"
#include "iqlut/quantizer.hpp"

namespace iqlut {

/// One tabulated subnetwork: `levels` rows of `entry_width` integer codes at
/// `out_bits`, decoded as out_offset + out_scale * code.
struct LutTable {
  int levels = 0;
  int entry_width = 0;
  int out_bits = 8;
  float out_scale = 0.0f;
  float out_offset = 0.0f;
  std::vector<std::uint16_t> codes;

  double dequantize(std::uint16_t code) const noexcept {
    return static_cast<double>(out_offset) + static_cast<double>(out_scale) * code;
  }
  /// One output quantization step.
  double step() const noexcept { return static_cast<double>(out_scale); }
  std::uint32_t max_code() const noexcept { return (1u << out_bits) - 1u; }

  void fetch(int level, std::span<double> out) const;

  friend bool operator==(const LutTable&, const LutTable&) = default;
};

/// Quantizes real-valued entries with a per-table min/max affine.
LutTable quantize_table(const DenseTable& table, int out_bits);

/// Tabulates `params` at every level preimage of `quantizer`, then quantizes
/// the outputs to `out_bits`. Throws NumericalError on non-finite outputs.
LutTable build_lut(const SubnetParams& params, const BlockQuantizer& quantizer, int out_bits);

/// Decodes every code.
DenseTable dequantize(const LutTable& table);

/// Dual-path fused lookup of a normalized input x in [-1, 1].
std::vector<double> dpfi_eval(const LutTable& table, const NonUniformQuantizer& quantizer, double x);

struct LutBlock {
  BlockQuant quant;
  float alpha = 0.0f;
  std::vector<LutTable> tables;  // one per input channel

  friend bool operator==(const LutBlock&, const LutBlock&) = default;
};

/// A deployable model: architecture plus per-block quantizers and tables.
struct LutModel {
  int layers = 0;
  int channels = 0;
  int upscale = 1;
  KernelShape kernel;
  int output_bits = 8;
  std::vector<LutBlock> blocks;  // layers + 1

  /// Architecture view (quantizer entries taken from the blocks).
  ModelSpec spec() const;

  /// Throws IntegrityError when tables do not match the declared geometry.
  void validate() const;

  friend bool operator==(const LutModel&, const LutModel&) = default;
};

/// Converts a calibrated model. Alpha and quantizer fields are rounded to
/// float first (see round_to_export_precision).
LutModel build_lut_model(const Model& model, int out_bits);

/// Geometry of one block's tables for size accounting.
struct TableGeometry {
  int input_channels = 0;
  int bits = 0;
  int entry_width = 0;
};

struct SizeReport {
  std::uint64_t table_bytes = 0;     // code payload
  std::uint64_t metadata_bytes = 0;  // per-block and per-table header fields
  std::uint64_t fixed_bytes = 0;     // magic, version, spec fields, checksum
  std::uint64_t total_bytes() const noexcept { return table_bytes + metadata_bytes + fixed_bytes; }
  std::vector<std::uint64_t> block_table_bytes;
};

/// Bytes per stored code: ceil(out_bits / 8).
int code_bytes(int out_bits);

/// Size of a LUT file with the given block geometries. An empty list yields
/// the fixed header only.
SizeReport lut_size_bytes(std::span<const TableGeometry> blocks, int out_bits);

/// Sum over blocks of C_in * (2^bits - 1) * k_h k_w C_out * ceil(out_bits/8),
/// including the upsampling layer, plus headers.
SizeReport lut_size_bytes(const ModelSpec& spec);

std::vector<TableGeometry> table_geometry(const ModelSpec& spec);

}  // namespace iqlut
