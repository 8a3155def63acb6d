#include "iqlut/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "iqlut/dpfi.hpp"
#include "iqlut/ecnn.hpp"
#include "iqlut/error.hpp"

namespace iqlut {

std::vector<std::vector<FeatureTensor>> collect_block_inputs(const Model& model,
                                                             std::span<const ImagePlane> lr_images) {
  if (lr_images.empty()) throw DataError("calibration set is empty");
  std::vector<std::vector<FeatureTensor>> inputs(model.spec.block_count());
  for (const ImagePlane& lr : lr_images) {
    std::vector<FeatureTensor> outs;
    ForwardOptions fo;
    fo.block_outputs = &outs;
    forward_full(lr, model, fo);
    inputs[0].push_back(FeatureTensor::from_plane(lr));
    for (int b = 1; b < model.spec.block_count(); ++b) inputs[b].push_back(outs[b - 1]);
  }
  return inputs;
}

void calibrate_ranges(Model& model, std::span<const ImagePlane> lr_images) {
  const auto inputs = collect_block_inputs(model, lr_images);
  for (int b = 0; b < model.spec.block_count(); ++b) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const FeatureTensor& t : inputs[b]) {
      for (double v : t.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      throw NumericalError(fmt::format("block {} activations are not finite", b));
    }
    if (hi - lo < 1e-6) {
      const double centre = 0.5 * (lo + hi);
      lo = centre - 5e-7;
      hi = centre + 5e-7;
    }
    BlockQuant& q = model.spec.quant[b];
    q.range_lo = lo;
    q.range_hi = hi;
    q.calibrated = true;
  }
}

FeatureTensor block_output(const Model& model, int block, const FeatureTensor& input,
                           const ChannelFunctions& functions) {
  const ModelSpec& spec = model.spec;
  FeatureTensor conv = expanded_conv(input, functions, spec.kernel, spec.output_channels(block));
  if (spec.is_upsample(block)) return conv;
  return residual_blend(input, conv, model.blocks[block].alpha);
}

namespace {

double mse(const FeatureTensor& a, const FeatureTensor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

double block_quantization_mse(const Model& model, int block, const BlockQuant& quant,
                              std::span<const FeatureTensor> inputs, QuantScheme scheme) {
  const SubnetFunctions exact(model.blocks[block].subnets);
  const TableFunctions tables = tabulate_block(model.blocks[block], BlockQuantizer(quant, scheme));
  double total = 0.0;
  std::size_t count = 0;
  for (const FeatureTensor& in : inputs) {
    const FeatureTensor ref = block_output(model, block, in, exact);
    const FeatureTensor q = block_output(model, block, in, tables);
    total += mse(ref, q);
    count += ref.size();
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

std::vector<SearchResult> search_quantizers(Model& model, std::span<const ImagePlane> lr_images,
                                            const QuantSearchOptions& options) {
  for (int b = 0; b < model.spec.block_count(); ++b) {
    if (!model.spec.quant[b].calibrated) {
      throw ConfigError(fmt::format("block {} must be calibrated before the (a, b) search", b));
    }
  }
  const auto inputs = collect_block_inputs(model, lr_images);
  const int blocks = model.spec.block_count();

  auto objective_for = [&](int b) {
    return [&, b](double a, double bb) {
      BlockQuant q = model.spec.quant[b];
      q.a = a;
      q.b = bb;
      return block_quantization_mse(model, b, q, inputs[b]);
    };
  };

  std::vector<SearchResult> results;
  if (options.share) {
    const SearchResult r = greedy_search_ab(options.grid, [&](double a, double bb) {
      double total = 0.0;
      for (int b = 0; b < blocks; ++b) total += objective_for(b)(a, bb);
      return total;
    });
    for (int b = 0; b < blocks; ++b) {
      model.spec.quant[b].a = r.a;
      model.spec.quant[b].b = r.b;
      results.push_back(r);
    }
    return results;
  }
  for (int b = 0; b < blocks; ++b) {
    const SearchResult r = greedy_search_ab(options.grid, objective_for(b));
    model.spec.quant[b].a = r.a;
    model.spec.quant[b].b = r.b;
    results.push_back(r);
  }
  return results;
}

}  // namespace iqlut
