#include "iqlut/ecnn.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "iqlut/dpfi.hpp"
#include "iqlut/error.hpp"
#include "iqlut/parallel.hpp"
#include "iqlut/resize.hpp"

namespace iqlut {

PixelOutputs evaluate_pixels(const FeatureTensor& input, const ChannelFunctions& functions,
                             int threads) {
  if (input.channels() != functions.channels()) {
    throw ConfigError(fmt::format("block input has {} channels, block expects {}",
                                  input.channels(), functions.channels()));
  }
  PixelOutputs px;
  px.channels = input.channels();
  px.height = input.height();
  px.width = input.width();
  px.entry_width = functions.entry_width();
  px.values.assign(static_cast<std::size_t>(px.channels) * px.height * px.width * px.entry_width, 0.0);
  const int rows = px.channels * px.height;
  parallel_for(rows, threads, [&](int begin, int end) {
    for (int r = begin; r < end; ++r) {
      const int c = r / px.height;
      const int y = r % px.height;
      for (int x = 0; x < px.width; ++x) {
        const double v = input.at(c, y, x);
        if (!std::isfinite(v)) throw NumericalError("non-finite block activation");
        functions.evaluate(c, v, px.at(c, y, x));
      }
    }
  });
  return px;
}

FeatureTensor accumulate_taps(const PixelOutputs& pixels, KernelShape kernel, int out_channels,
                              int threads) {
  if (pixels.entry_width != out_channels * kernel.taps()) {
    throw ConfigError(fmt::format("entry width {} does not match {} channels x {} taps",
                                  pixels.entry_width, out_channels, kernel.taps()));
  }
  const int h = pixels.height;
  const int w = pixels.width;
  const int taps = kernel.taps();
  FeatureTensor out(out_channels, h, w);
  // Each output row is owned by one worker, and the summation order per cell
  // is fixed, so results do not depend on the thread count.
  parallel_for(h, threads, [&](int begin, int end) {
    for (int y = begin; y < end; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < out_channels; ++c) {
          double acc = 0.0;
          for (int i = 0; i < kernel.height; ++i) {
            const int sy = y + i;
            if (sy >= h) break;
            for (int j = 0; j < kernel.width; ++j) {
              const int sx = x + j;
              if (sx >= w) break;
              const int tap = c * taps + i * kernel.width + j;
              for (int ci = 0; ci < pixels.channels; ++ci) acc += pixels.at(ci, sy, sx)[tap];
            }
          }
          out.at(c, y, x) = acc;
        }
      }
    }
  });
  return out;
}

FeatureTensor expanded_conv(const FeatureTensor& input, const ChannelFunctions& functions,
                            KernelShape kernel, int out_channels, int threads) {
  return accumulate_taps(evaluate_pixels(input, functions, threads), kernel, out_channels, threads);
}

FeatureTensor expanded_conv(const FeatureTensor& input, std::span<const SubnetParams> params,
                            const ModelSpec& spec, int block) {
  if (static_cast<int>(params.size()) != input.channels()) {
    throw ConfigError(fmt::format("{} subnets for {} input channels", params.size(), input.channels()));
  }
  const SubnetFunctions fn(params);
  return expanded_conv(input, fn, spec.kernel, spec.output_channels(block));
}

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

FeatureTensor residual_blend(const FeatureTensor& x, const FeatureTensor& fx, double alpha) {
  const bool broadcast = x.channels() == 1 && fx.channels() > 1;
  if (x.height() != fx.height() || x.width() != fx.width() ||
      (!broadcast && x.channels() != fx.channels())) {
    throw ConfigError("residual blend operands differ in shape");
  }
  const double s = sigmoid(alpha);
  FeatureTensor out(fx.channels(), fx.height(), fx.width());
  for (int c = 0; c < fx.channels(); ++c) {
    auto xv = x.channel(broadcast ? 0 : c);
    auto fv = fx.channel(c);
    auto ov = out.channel(c);
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = (1.0 - s) * xv[i] + s * fv[i];
  }
  return out;
}

ImagePlane pixel_shuffle(const FeatureTensor& features, int factor) {
  if (factor < 1) throw ConfigError("pixel shuffle factor must be >= 1");
  if (features.channels() != factor * factor) {
    throw ConfigError(fmt::format("pixel shuffle by {} needs {} channels, got {}", factor,
                                  factor * factor, features.channels()));
  }
  ImagePlane out(features.height() * factor, features.width() * factor);
  for (int dy = 0; dy < factor; ++dy) {
    for (int dx = 0; dx < factor; ++dx) {
      const int c = dy * factor + dx;
      for (int y = 0; y < features.height(); ++y) {
        for (int x = 0; x < features.width(); ++x) {
          out(y * factor + dy, x * factor + dx) = features.at(c, y, x);
        }
      }
    }
  }
  return out;
}

FeatureTensor pixel_unshuffle(const ImagePlane& plane, int factor) {
  if (factor < 1 || plane.height() % factor != 0 || plane.width() % factor != 0) {
    throw ConfigError("plane is not divisible by the unshuffle factor");
  }
  FeatureTensor out(factor * factor, plane.height() / factor, plane.width() / factor);
  for (int dy = 0; dy < factor; ++dy) {
    for (int dx = 0; dx < factor; ++dx) {
      for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
          out.at(dy * factor + dx, y, x) = plane(y * factor + dy, x * factor + dx);
        }
      }
    }
  }
  return out;
}

ImagePlane upsample_block(const FeatureTensor& features, std::span<const SubnetParams> params,
                          const ModelSpec& spec) {
  const int block = spec.layers;
  if (features.channels() != spec.input_channels(block)) {
    throw ConfigError("upsampling layer input has the wrong channel count");
  }
  for (const SubnetParams& p : params) {
    if (p.output_width() != spec.upscale * spec.upscale * spec.kernel.taps()) {
      throw ConfigError("upsampling subnet does not emit upscale^2 channels per tap");
    }
  }
  return pixel_shuffle(expanded_conv(features, params, spec, block), spec.upscale);
}

PipelineGeometry geometry_of(const ModelSpec& spec) {
  return {spec.layers, spec.channels, spec.upscale, spec.kernel};
}

ImagePlane run_pipeline(const ImagePlane& lr, const PipelineGeometry& geometry,
                        std::span<const PipelineStage> stages, const PipelineOptions& options) {
  if (lr.empty()) throw DataError("input image is empty");
  if (static_cast<int>(stages.size()) != geometry.layers + 1) {
    throw ConfigError("pipeline needs one stage per block plus the upsampling layer");
  }
  if (options.block_outputs) options.block_outputs->clear();

  FeatureTensor x = FeatureTensor::from_plane(lr);
  for (int b = 0; b < geometry.layers; ++b) {
    const FeatureTensor f = expanded_conv(x, *stages[b].functions, geometry.kernel,
                                          geometry.channels, options.threads);
    x = residual_blend(x, f, stages[b].alpha);
    if (options.block_outputs) options.block_outputs->push_back(x);
  }
  const FeatureTensor up = expanded_conv(x, *stages[geometry.layers].functions, geometry.kernel,
                                         geometry.upscale * geometry.upscale, options.threads);
  ImagePlane residual = pixel_shuffle(up, geometry.upscale);
  if (options.residual) *options.residual = residual;

  const ImagePlane base = resize(lr, geometry.upscale, ResizeKernel::kBilinear);
  ImagePlane out(base.height(), base.width());
  auto ov = out.values();
  auto bv = base.values();
  auto rv = residual.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = bv[i] + rv[i];
  return options.clamp_output ? clamp_unit(std::move(out)) : out;
}

std::vector<std::unique_ptr<ChannelFunctions>> make_block_functions(const Model& model,
                                                                    ForwardMode mode,
                                                                    QuantScheme scheme) {
  std::vector<std::unique_ptr<ChannelFunctions>> fns;
  for (int b = 0; b < model.spec.block_count(); ++b) {
    const Block& block = model.blocks[b];
    if (mode == ForwardMode::kFloat) {
      fns.push_back(std::make_unique<SubnetFunctions>(block.subnets));
    } else {
      const BlockQuant& q = model.spec.quant[b];
      if (!q.calibrated) {
        throw ConfigError(fmt::format("block {} quantizer is not calibrated", b));
      }
      fns.push_back(std::make_unique<TableFunctions>(tabulate_block(block, BlockQuantizer(q, scheme))));
    }
  }
  return fns;
}

ImagePlane forward_full(const ImagePlane& lr, const Model& model, const ForwardOptions& options) {
  validate_model(model);
  const auto fns = make_block_functions(model, options.mode, options.scheme);
  std::vector<PipelineStage> stages;
  for (int b = 0; b < model.spec.block_count(); ++b) {
    stages.push_back({fns[b].get(), model.blocks[b].alpha});
  }
  PipelineOptions po;
  po.clamp_output = options.clamp_output;
  po.threads = options.threads;
  po.block_outputs = options.block_outputs;
  return run_pipeline(lr, geometry_of(model.spec), stages, po);
}

}  // namespace iqlut
