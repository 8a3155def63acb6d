#pragma once

#include <span>
#include <vector>

#include "iqlut/channel_functions.hpp"
#include "iqlut/greedy_search.hpp"
#include "iqlut/image.hpp"
#include "iqlut/model.hpp"
#include "iqlut/quantizer.hpp"
#include "iqlut/tensor.hpp"

namespace iqlut {

/// Float-path input tensors of every block (including the upsampling
/// layer), indexed [block][image].
std::vector<std::vector<FeatureTensor>> collect_block_inputs(const Model& model,
                                                             std::span<const ImagePlane> lr_images);

/// Sets every block's activation range to the min/max of its float-path
/// inputs on the calibration images and marks it calibrated. Degenerate
/// ranges are widened to a span of 1e-6 around their centre.
void calibrate_ranges(Model& model, std::span<const ImagePlane> lr_images);

/// Output of block `block` for a given input: the blended features for
/// residual blocks, the pre-shuffle channels for the upsampling layer.
FeatureTensor block_output(const Model& model, int block, const FeatureTensor& input,
                           const ChannelFunctions& functions);

/// Mean squared difference between the quantized and float outputs of one
/// block under quantizer `quant`, over the given float-path inputs.
double block_quantization_mse(const Model& model, int block, const BlockQuant& quant,
                              std::span<const FeatureTensor> inputs,
                              QuantScheme scheme = QuantScheme::kNonUniform);

struct QuantSearchOptions {
  SearchGrid grid = SearchGrid::standard();
  /// One (a, b) for the whole model instead of one per block.
  bool share = false;
};

/// Greedy (a, b) search per block (or shared) with the block quantization
/// MSE as objective; writes the winners into model.spec.quant. Requires
/// calibrated ranges. Returns one result per block (identical when shared).
std::vector<SearchResult> search_quantizers(Model& model, std::span<const ImagePlane> lr_images,
                                            const QuantSearchOptions& options = {});

}  // namespace iqlut
