#include "iqlut/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "iqlut/calibration.hpp"
#include "iqlut/error.hpp"
#include "iqlut/lut_infer.hpp"
#include "iqlut/parallel.hpp"
#include "iqlut/resize.hpp"
#include "iqlut/subnet.hpp"

namespace iqlut {

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (crop < 1) throw ConfigError("crop must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be a finite value >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be > 0");
  if (!(mse_weight >= 0.0) || !(distill_weight >= 0.0)) {
    throw ConfigError("loss weights must be >= 0");
  }
  for (std::size_t i = 0; i < milestones.size(); ++i) {
    if (!(milestones[i] > 0.0 && milestones[i] <= 1.0) || (i > 0 && milestones[i] < milestones[i - 1])) {
      throw ConfigError("milestones must be increasing fractions in (0, 1]");
    }
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

double scheduled_lr(const TrainConfig& cfg, long iteration) {
  if (cfg.iterations <= 0) return cfg.learning_rate;
  const double fraction = static_cast<double>(iteration) / static_cast<double>(cfg.iterations);
  double lr = cfg.learning_rate;
  for (double m : cfg.milestones) {
    if (fraction >= m) lr *= 0.5;
  }
  return lr;
}

namespace {

double mse_term(std::span<const double> a, std::span<const double> b, double weight,
                std::span<double> grad) {
  const auto n = static_cast<double>(a.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
    if (!grad.empty()) grad[i] += weight * 2.0 * d / n;
  }
  return acc / n;
}

}  // namespace

LossTerms loss_total(const ImagePlane& pred, const ImagePlane& target,
                     std::span<const FeatureTensor> student_features, const TeacherTargets* teacher,
                     const TrainConfig& cfg, LossGradients* grads) {
  if (!pred.same_shape(target)) throw ConfigError("prediction and target differ in shape");
  if (cfg.stage == TrainStage::kFinetune && cfg.distill_weight > 0.0 && teacher == nullptr) {
    throw ConfigError("finetune with a distillation weight needs a teacher");
  }
  if (grads) {
    grads->d_pred = ImagePlane(pred.height(), pred.width());
    grads->d_features.clear();
    for (const FeatureTensor& f : student_features) {
      grads->d_features.emplace_back(f.channels(), f.height(), f.width());
    }
  }
  LossTerms terms;
  terms.mse = mse_term(pred.values(), target.values(), cfg.mse_weight,
                       grads ? grads->d_pred.values() : std::span<double>{});

  if (teacher && cfg.distill_weight > 0.0) {
    const bool features = cfg.distill_target != DistillTarget::kOutputs;
    const bool outputs = cfg.distill_target != DistillTarget::kFeatures;
    if (features && teacher->block_outputs.size() != student_features.size()) {
      throw ConfigError("teacher and student differ in block count");
    }
    if (outputs && !teacher->output.same_shape(pred)) {
      throw ConfigError("teacher and student outputs differ in shape");
    }
    const int count = (features ? static_cast<int>(student_features.size()) : 0) + (outputs ? 1 : 0);
    const double w = cfg.distill_weight / count;
    double sum = 0.0;
    if (features) {
      for (std::size_t i = 0; i < student_features.size(); ++i) {
        if (!student_features[i].same_shape(teacher->block_outputs[i])) {
          throw ConfigError(fmt::format("block {} features differ in shape", i));
        }
        sum += mse_term(student_features[i].values(), teacher->block_outputs[i].values(), w,
                        grads ? grads->d_features[i].values() : std::span<double>{});
      }
    }
    if (outputs) {
      sum += mse_term(pred.values(), teacher->output.values(), w,
                      grads ? grads->d_pred.values() : std::span<double>{});
    }
    terms.distill = sum / count;
  }
  terms.total = cfg.mse_weight * terms.mse + cfg.distill_weight * terms.distill;
  return terms;
}

Model make_teacher_model(const Model& pretrained, std::span<const ImagePlane> calibration_lr,
                         int input_bits) {
  Model teacher = pretrained;
  for (BlockQuant& q : teacher.spec.quant) {
    q.bits = input_bits;
    q.a = 0.5;
    q.b = 0.5;
  }
  teacher.spec.validate();
  calibrate_ranges(teacher, calibration_lr);
  return teacher;
}

Teacher::Teacher(Model model, int output_bits)
    : model_(std::move(model)), lut_(build_lut_model(model_, output_bits)), functions_(make_lut_functions(lut_)) {}

TeacherTargets Teacher::targets(const ImagePlane& lr) const {
  std::vector<PipelineStage> stages;
  for (std::size_t b = 0; b < lut_.blocks.size(); ++b) {
    stages.push_back({functions_[b].get(), static_cast<double>(lut_.blocks[b].alpha)});
  }
  TeacherTargets t;
  PipelineOptions po;
  po.clamp_output = false;
  po.block_outputs = &t.block_outputs;
  t.output = run_pipeline(lr, geometry_of(lut_.spec()), stages, po);
  return t;
}

namespace {

// Per-block state kept from the forward pass for backpropagation.
struct BlockTrace {
  FeatureTensor input;
  FeatureTensor conv;
  int hidden = 0;
  std::vector<double> pre1;  // [c][y][x][hidden]
  std::vector<double> pre2;
};

FeatureTensor traced_conv(const FeatureTensor& input, const Block& block, const ModelSpec& spec,
                          int b, const QuantizationContext& quant, BlockTrace& trace) {
  const int channels = input.channels();
  const int h = input.height();
  const int w = input.width();
  const int hidden = block.subnets[0].hidden();
  PixelOutputs px;
  px.channels = channels;
  px.height = h;
  px.width = w;
  px.entry_width = spec.entry_width(b);
  px.values.assign(static_cast<std::size_t>(channels) * h * w * px.entry_width, 0.0);
  trace.hidden = hidden;
  trace.pre1.assign(static_cast<std::size_t>(channels) * h * w * hidden, 0.0);
  trace.pre2.assign(trace.pre1.size(), 0.0);

  PixelOutputs* offsets = nullptr;
  if (quant.offsets_out) {
    offsets = &(*quant.offsets_out)[b];
    *offsets = px;
  }
  const PixelOutputs* frozen = quant.frozen_offsets ? &(*quant.frozen_offsets)[b] : nullptr;
  const ChannelFunctions* tables = quant.tables ? (*quant.tables)[b].get() : nullptr;
  std::vector<double> table_out(px.entry_width);

  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = input.at(c, y, x);
        if (!std::isfinite(v)) throw NumericalError(fmt::format("non-finite activation in block {}", b));
        const std::size_t slot = (static_cast<std::size_t>(c) * h + y) * w + x;
        auto e = px.at(c, y, x);
        subnet_forward(block.subnets[c], v, e, {trace.pre1.data() + slot * hidden, std::size_t(hidden)},
                       {trace.pre2.data() + slot * hidden, std::size_t(hidden)});
        if (frozen) {
          const auto d = frozen->at(c, y, x);
          for (int k = 0; k < px.entry_width; ++k) e[k] += d[k];
        } else if (tables) {
          tables->evaluate(c, v, table_out);
          if (offsets) {
            auto d = offsets->at(c, y, x);
            for (int k = 0; k < px.entry_width; ++k) d[k] = table_out[k] - e[k];
          }
          std::copy(table_out.begin(), table_out.end(), e.begin());
        }
      }
    }
  }
  trace.input = input;
  trace.conv = accumulate_taps(px, spec.kernel, spec.output_channels(b));
  return trace.conv;
}

// Gradient of the tap accumulation (a gather), pushed through the subnets.
// Returns d(loss)/d(block input).
FeatureTensor conv_backward(const FeatureTensor& d_conv, const Block& block, Block& grad,
                            const ModelSpec& spec, const BlockTrace& trace) {
  const FeatureTensor& input = trace.input;
  const int h = input.height();
  const int w = input.width();
  const int kh = spec.kernel.height;
  const int kw = spec.kernel.width;
  const int taps = spec.kernel.taps();
  const int out_channels = d_conv.channels();
  const int hidden = trace.hidden;
  std::vector<double> d_entry(static_cast<std::size_t>(out_channels) * taps);
  FeatureTensor d_input(input.channels(), h, w);
  for (int c = 0; c < input.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int oc = 0; oc < out_channels; ++oc) {
          for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) {
              const int ty = y - i;
              const int tx = x - j;
              d_entry[oc * taps + i * kw + j] = (ty >= 0 && tx >= 0) ? d_conv.at(oc, ty, tx) : 0.0;
            }
          }
        }
        const std::size_t slot = (static_cast<std::size_t>(c) * h + y) * w + x;
        d_input.at(c, y, x) = subnet_backward(
            block.subnets[c], grad.subnets[c], input.at(c, y, x),
            {trace.pre1.data() + slot * hidden, std::size_t(hidden)},
            {trace.pre2.data() + slot * hidden, std::size_t(hidden)}, d_entry);
      }
    }
  }
  return d_input;
}

}  // namespace

LossTerms sample_gradient(const Model& model, const TrainingSample& sample, const TrainConfig& cfg,
                          const TeacherTargets* teacher, const QuantizationContext& quant,
                          Model* grad) {
  const ModelSpec& spec = model.spec;
  const int blocks = spec.block_count();
  if (quant.offsets_out) quant.offsets_out->assign(blocks, PixelOutputs{});
  if (sample.hr.height() != sample.lr.height() * spec.upscale ||
      sample.hr.width() != sample.lr.width() * spec.upscale) {
    throw ConfigError("HR crop is not the LR crop times the upscale factor");
  }

  std::vector<BlockTrace> traces(blocks);
  std::vector<FeatureTensor> features;
  FeatureTensor x = FeatureTensor::from_plane(sample.lr);
  for (int b = 0; b < spec.layers; ++b) {
    const FeatureTensor f = traced_conv(x, model.blocks[b], spec, b, quant, traces[b]);
    x = residual_blend(x, f, model.blocks[b].alpha);
    features.push_back(x);
  }
  const FeatureTensor up = traced_conv(x, model.blocks[spec.layers], spec, spec.layers, quant,
                                       traces[spec.layers]);
  const ImagePlane base = resize(sample.lr, spec.upscale, ResizeKernel::kBilinear);
  ImagePlane pred = pixel_shuffle(up, spec.upscale);
  for (std::size_t i = 0; i < pred.size(); ++i) pred.values()[i] += base.values()[i];

  LossGradients lg;
  const LossTerms terms = loss_total(pred, sample.hr, features, teacher, cfg, grad ? &lg : nullptr);
  if (!std::isfinite(terms.total)) {
    throw NumericalError(fmt::format("loss is not finite (mse {}, distill {})", terms.mse, terms.distill));
  }
  if (!grad) return terms;

  FeatureTensor d_x = conv_backward(pixel_unshuffle(lg.d_pred, spec.upscale), model.blocks[spec.layers],
                                    grad->blocks[spec.layers], spec, traces[spec.layers]);
  for (int b = spec.layers - 1; b >= 0; --b) {
    // d_x is d(loss)/d(output of block b).
    auto dv = d_x.values();
    const auto df = lg.d_features[b].values();
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] += df[i];

    const BlockTrace& tr = traces[b];
    const double s = sigmoid(model.blocks[b].alpha);
    const bool broadcast = tr.input.channels() == 1 && tr.conv.channels() > 1;
    FeatureTensor d_conv(tr.conv.channels(), tr.conv.height(), tr.conv.width());
    FeatureTensor d_skip(tr.input.channels(), tr.input.height(), tr.input.width());
    double d_alpha = 0.0;
    for (int c = 0; c < tr.conv.channels(); ++c) {
      const auto g = d_x.channel(c);
      const auto fv = tr.conv.channel(c);
      const auto xv = tr.input.channel(broadcast ? 0 : c);
      auto dc = d_conv.channel(c);
      auto ds = d_skip.channel(broadcast ? 0 : c);
      for (std::size_t i = 0; i < g.size(); ++i) {
        dc[i] = s * g[i];
        ds[i] += (1.0 - s) * g[i];
        d_alpha += g[i] * (fv[i] - xv[i]);
      }
    }
    grad->blocks[b].alpha += d_alpha * s * (1.0 - s);
    FeatureTensor d_in = conv_backward(d_conv, model.blocks[b], grad->blocks[b], spec, tr);
    auto di = d_in.values();
    const auto dsv = d_skip.values();
    for (std::size_t i = 0; i < di.size(); ++i) di[i] += dsv[i];
    d_x = std::move(d_in);
  }
  return terms;
}

StepResult train_step(Model& model, AdamState& adam, std::span<const TrainingSample> batch,
                      const TrainConfig& cfg, long iteration, const Teacher* teacher) {
  if (batch.empty()) throw ConfigError("empty batch");
  const std::size_t n = parameter_count(model);
  if (adam.m.empty()) {
    adam.m.assign(n, 0.0);
    adam.v.assign(n, 0.0);
  }
  if (adam.m.size() != n || adam.v.size() != n) throw IntegrityError("optimizer state does not match the model");

  std::vector<std::unique_ptr<ChannelFunctions>> tables;
  QuantizationContext quant;
  if (cfg.stage == TrainStage::kFinetune) {
    tables = make_block_functions(model, ForwardMode::kQuantized, QuantScheme::kNonUniform);
    quant.tables = &tables;
  }

  const int count = static_cast<int>(batch.size());
  std::vector<std::vector<double>> grads(count);
  std::vector<LossTerms> losses(count);
  parallel_for(count, cfg.threads, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Model g = make_model(model.spec);
      std::optional<TeacherTargets> t;
      if (teacher) t = teacher->targets(batch[i].lr);
      losses[i] = sample_gradient(model, batch[i], cfg, t ? &*t : nullptr, quant, &g);
      grads[i] = flatten_parameters(g);
    }
  });

  std::vector<double> g(n, 0.0);
  StepResult result;
  for (int i = 0; i < count; ++i) {
    for (std::size_t k = 0; k < n; ++k) g[k] += grads[i][k];
    result.loss.total += losses[i].total;
    result.loss.mse += losses[i].mse;
    result.loss.distill += losses[i].distill;
  }
  const double inv = 1.0 / count;
  for (double& v : g) v *= inv;
  result.loss.total *= inv;
  result.loss.mse *= inv;
  result.loss.distill *= inv;

  result.learning_rate = scheduled_lr(cfg, iteration);
  adam.step += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step));
  std::vector<double> p = flatten_parameters(model);
  for (std::size_t k = 0; k < n; ++k) {
    adam.m[k] = cfg.beta1 * adam.m[k] + (1.0 - cfg.beta1) * g[k];
    adam.v[k] = cfg.beta2 * adam.v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
    const double mh = adam.m[k] / c1;
    const double vh = adam.v[k] / c2;
    p[k] -= result.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
  }
  assign_parameters(model, p);
  return result;
}

void train(TrainState& state, BatchStream& data, const TrainConfig& cfg, const Teacher* teacher,
           const TrainLogger& log) {
  cfg.validate();
  if (cfg.stage == TrainStage::kFinetune) {
    for (const BlockQuant& q : state.model.spec.quant) {
      if (!q.calibrated) throw ConfigError("finetune needs calibrated quantizers");
    }
  }
  while (state.iteration < cfg.iterations) {
    const auto batch = data.next_batch(cfg.batch_size);
    const StepResult r = train_step(state.model, state.adam, batch, cfg, state.iteration, teacher);
    if (log) log({state.iteration, r.learning_rate, r.loss});
    ++state.iteration;
  }
}

void distill(TrainState& state, const Teacher& teacher, BatchStream& data, TrainConfig cfg,
             const TrainLogger& log) {
  if (teacher.model().spec.block_count() != state.model.spec.block_count()) {
    throw ConfigError("teacher and student differ in block count");
  }
  cfg.stage = TrainStage::kFinetune;
  const std::uint64_t before = teacher.hash();
  train(state, data, cfg, &teacher, log);
  if (teacher.hash() != before) throw IntegrityError("teacher parameters changed during distillation");
}

}  // namespace iqlut
