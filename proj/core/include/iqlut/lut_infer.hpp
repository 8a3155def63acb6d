#pragma once

#include <memory>
#include <vector>

#include "iqlut/ecnn.hpp"
#include "iqlut/lut.hpp"

namespace iqlut {

struct LutInferOptions {
  bool clamp_output = true;
  int threads = 1;
  std::vector<FeatureTensor>* block_outputs = nullptr;
};

/// Decoded per-block table functions of a LUT model.
std::vector<std::unique_ptr<ChannelFunctions>> make_lut_functions(const LutModel& model);

/// Table-driven super-resolution of a luma plane: per block, quantize ->
/// fused lookup -> tap accumulation -> residual blend; then the upsampling
/// tables, pixel shuffle and the bilinear base. Output is identical for any
/// thread count.
ImagePlane lut_infer(const LutModel& model, const ImagePlane& lr, const LutInferOptions& options = {});

/// Per-block comparison of the LUT path against the unquantized-table path
/// of `model`, feeding both the same block inputs.
struct OracleReport {
  /// Largest |lut - float| over every fused lookup, in units of the fetched
  /// table's output step (<= 1 is the contract).
  double max_steps = 0.0;
  /// Largest absolute difference of any fused lookup.
  double max_abs = 0.0;
  /// Largest absolute difference of the final (clamped) outputs.
  double max_output_abs = 0.0;
};

/// `model` must be the (export-rounded) model the LUT was built from.
OracleReport compare_with_float_tables(const LutModel& lut, const Model& model, const ImagePlane& lr);

}  // namespace iqlut
