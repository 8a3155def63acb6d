#pragma once

#include <memory>
#include <span>
#include <vector>

#include "iqlut/channel_functions.hpp"
#include "iqlut/image.hpp"
#include "iqlut/model.hpp"
#include "iqlut/quantizer.hpp"
#include "iqlut/tensor.hpp"

namespace iqlut {

/// Per-pixel outputs of one block: for every input channel and pixel the
/// entry_width() values of its scalar function, laid out
/// [channel][y][x][c_out][i][j].
struct PixelOutputs {
  int channels = 0;
  int height = 0;
  int width = 0;
  int entry_width = 0;
  std::vector<double> values;

  std::span<double> at(int c, int y, int x) {
    return {values.data() + ((static_cast<std::size_t>(c) * height + y) * width + x) * entry_width,
            static_cast<std::size_t>(entry_width)};
  }
  std::span<const double> at(int c, int y, int x) const {
    return {values.data() + ((static_cast<std::size_t>(c) * height + y) * width + x) * entry_width,
            static_cast<std::size_t>(entry_width)};
  }
};

/// Evaluates `functions` on every pixel of every channel of `input`.
PixelOutputs evaluate_pixels(const FeatureTensor& input, const ChannelFunctions& functions,
                             int threads = 1);

/// "Reshape and in-place add": each pixel's vector is viewed as
/// (C_out, k_h, k_w) and
///   F[c, h, w] = sum_{i, j, c_in} X_{c_in}(h + i, w + j)[c, i, j],
/// with source pixels outside the map contributing nothing. The output has
/// the input's spatial size.
FeatureTensor accumulate_taps(const PixelOutputs& pixels, KernelShape kernel, int out_channels,
                              int threads = 1);

/// Expanded convolution: evaluate_pixels followed by accumulate_taps.
FeatureTensor expanded_conv(const FeatureTensor& input, const ChannelFunctions& functions,
                            KernelShape kernel, int out_channels, int threads = 1);

/// Float expanded convolution of block `block` of a model.
FeatureTensor expanded_conv(const FeatureTensor& input, std::span<const SubnetParams> params,
                            const ModelSpec& spec, int block);

double sigmoid(double x) noexcept;

/// (1 - sigmoid(alpha)) x + sigmoid(alpha) fx. A single-channel x is
/// broadcast over the channels of fx.
FeatureTensor residual_blend(const FeatureTensor& x, const FeatureTensor& fx, double alpha);

/// (s^2, H, W) -> (sH, sW): out[y*s + dy, x*s + dx] = in[dy*s + dx, y, x].
ImagePlane pixel_shuffle(const FeatureTensor& features, int factor);

/// Inverse of pixel_shuffle.
FeatureTensor pixel_unshuffle(const ImagePlane& plane, int factor);

/// Upsampling layer: expanded convolution with upscale^2 outputs, then pixel shuffle.
ImagePlane upsample_block(const FeatureTensor& features, std::span<const SubnetParams> params,
                          const ModelSpec& spec);

/// One stage of the block pipeline.
struct PipelineStage {
  const ChannelFunctions* functions = nullptr;
  double alpha = 0.0;
};

struct PipelineGeometry {
  int layers = 0;
  int channels = 0;
  int upscale = 1;
  KernelShape kernel;
};

struct PipelineOptions {
  bool clamp_output = true;
  int threads = 1;
  /// When set, receives the output of every residual block.
  std::vector<FeatureTensor>* block_outputs = nullptr;
  /// When set, receives the residual added to the bilinear base (pre-clamp).
  ImagePlane* residual = nullptr;
};

/// L residual blocks, upsampling layer, pixel shuffle, plus the bilinear
/// upscale of `lr`. `stages` has layers + 1 entries.
ImagePlane run_pipeline(const ImagePlane& lr, const PipelineGeometry& geometry,
                        std::span<const PipelineStage> stages, const PipelineOptions& options);

enum class ForwardMode {
  kFloat,      // exact subnetworks
  kQuantized,  // quantizer + interpolated tables of exact subnet values
};

struct ForwardOptions {
  ForwardMode mode = ForwardMode::kFloat;
  QuantScheme scheme = QuantScheme::kNonUniform;
  bool clamp_output = true;
  int threads = 1;
  std::vector<FeatureTensor>* block_outputs = nullptr;
};

/// Full model on a low-resolution luma plane. Quantized mode requires
/// calibrated quantizers in the spec.
ImagePlane forward_full(const ImagePlane& lr, const Model& model, const ForwardOptions& options = {});

/// Builds the per-block functions used by forward_full for a mode.
std::vector<std::unique_ptr<ChannelFunctions>> make_block_functions(const Model& model,
                                                                    ForwardMode mode,
                                                                    QuantScheme scheme);

PipelineGeometry geometry_of(const ModelSpec& spec);

}  // namespace iqlut
