#include "iqlut/lut_infer.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "iqlut/error.hpp"

namespace iqlut {

std::vector<std::unique_ptr<ChannelFunctions>> make_lut_functions(const LutModel& model) {
  std::vector<std::unique_ptr<ChannelFunctions>> fns;
  for (const LutBlock& block : model.blocks) {
    std::vector<DenseTable> tables;
    tables.reserve(block.tables.size());
    for (const LutTable& t : block.tables) tables.push_back(dequantize(t));
    fns.push_back(std::make_unique<TableFunctions>(std::move(tables), BlockQuantizer(block.quant)));
  }
  return fns;
}

ImagePlane lut_infer(const LutModel& model, const ImagePlane& lr, const LutInferOptions& options) {
  model.validate();
  const auto fns = make_lut_functions(model);
  std::vector<PipelineStage> stages;
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    stages.push_back({fns[b].get(), static_cast<double>(model.blocks[b].alpha)});
  }
  PipelineOptions po;
  po.clamp_output = options.clamp_output;
  po.threads = options.threads;
  po.block_outputs = options.block_outputs;
  return run_pipeline(lr, geometry_of(model.spec()), stages, po);
}

OracleReport compare_with_float_tables(const LutModel& lut, const Model& model, const ImagePlane& lr) {
  lut.validate();
  if (model.spec.block_count() != static_cast<int>(lut.blocks.size())) {
    throw IntegrityError("model and LUT differ in block count");
  }
  OracleReport report;
  const auto lut_fns = make_lut_functions(lut);
  const auto float_fns = make_block_functions(model, ForwardMode::kQuantized, QuantScheme::kNonUniform);

  // Walk the float-table path and, at every block, evaluate both function
  // sets on its inputs.
  std::vector<FeatureTensor> outputs;
  ForwardOptions fo;
  fo.mode = ForwardMode::kQuantized;
  fo.block_outputs = &outputs;
  const ImagePlane float_out = forward_full(lr, model, fo);
  const ImagePlane lut_out = lut_infer(lut, lr);

  FeatureTensor input = FeatureTensor::from_plane(lr);
  for (int b = 0; b < model.spec.block_count(); ++b) {
    const PixelOutputs a = evaluate_pixels(input, *lut_fns[b]);
    const PixelOutputs f = evaluate_pixels(input, *float_fns[b]);
    const int width = a.entry_width;
    for (int c = 0; c < a.channels; ++c) {
      const double step = lut.blocks[b].tables[c].step();
      for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
          const auto av = a.at(c, y, x);
          const auto fv = f.at(c, y, x);
          for (int k = 0; k < width; ++k) {
            const double d = std::abs(av[k] - fv[k]);
            report.max_abs = std::max(report.max_abs, d);
            const double steps = step > 0.0 ? d / step : (d == 0.0 ? 0.0 : INFINITY);
            report.max_steps = std::max(report.max_steps, steps);
          }
        }
      }
    }
    if (b < model.spec.layers) input = outputs[b];
  }
  for (std::size_t i = 0; i < float_out.size(); ++i) {
    report.max_output_abs =
        std::max(report.max_output_abs, std::abs(float_out.values()[i] - lut_out.values()[i]));
  }
  return report;
}

}  // namespace iqlut
