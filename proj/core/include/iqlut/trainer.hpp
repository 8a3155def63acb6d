#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "iqlut/channel_functions.hpp"
#include "iqlut/dataset.hpp"
#include "iqlut/ecnn.hpp"
#include "iqlut/lut.hpp"
#include "iqlut/model.hpp"

namespace iqlut {

enum class TrainStage { kPretrain, kFinetune };

/// What the distillation term matches: block outputs, the final output, or both.
enum class DistillTarget { kFeatures, kOutputs, kBoth };

struct TrainConfig {
  long iterations = 5000;
  int batch_size = 16;
  int crop = 48;
  double learning_rate = 5e-3;
  std::vector<double> milestones{0.2, 0.4, 0.6, 0.8};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double mse_weight = 1.0;
  double distill_weight = 3.0;
  std::uint64_t seed = 1;
  TrainStage stage = TrainStage::kPretrain;
  DistillTarget distill_target = DistillTarget::kBoth;
  int threads = 1;

  void validate() const;
};

/// Initial rate halved once for every milestone fraction already reached.
double scheduled_lr(const TrainConfig& cfg, long iteration);

struct LossTerms {
  double total = 0.0;
  double mse = 0.0;
  double distill = 0.0;
};

/// Block outputs and unclamped output of the frozen teacher on one input.
struct TeacherTargets {
  std::vector<FeatureTensor> block_outputs;
  ImagePlane output;
};

struct LossGradients {
  ImagePlane d_pred;
  std::vector<FeatureTensor> d_features;
};

/// mse_weight * MSE(pred, target) + distill_weight * D, where D is the mean
/// of the per-term MSEs between student and teacher block outputs and/or
/// final outputs. Without a teacher D is 0; a finetune configuration with a
/// positive distillation weight requires one. Fills `grads` when given.
LossTerms loss_total(const ImagePlane& pred, const ImagePlane& target,
                     std::span<const FeatureTensor> student_features, const TeacherTargets* teacher,
                     const TrainConfig& cfg, LossGradients* grads = nullptr);

/// Frozen high-bit teacher used for distillation, evaluated through its
/// LUT (8-bit input, 12-bit output by default).
class Teacher {
 public:
  /// `model` must have calibrated quantizers.
  explicit Teacher(Model model, int output_bits = 12);

  TeacherTargets targets(const ImagePlane& lr) const;
  const Model& model() const noexcept { return model_; }
  std::uint64_t hash() const { return parameter_hash(model_); }

 private:
  Model model_;
  LutModel lut_;
  std::vector<std::unique_ptr<ChannelFunctions>> functions_;
};

/// Copy of a pretrained model with `input_bits` everywhere, identity
/// companding and ranges calibrated on `calibration_lr`.
Model make_teacher_model(const Model& pretrained, std::span<const ImagePlane> calibration_lr,
                         int input_bits = 8);

/// How block functions are evaluated in the training forward pass.
struct QuantizationContext {
  /// Interpolated tables per block; when set, the forward value of every
  /// subnet output is the table value while gradients follow the exact
  /// subnet (straight-through).
  const std::vector<std::unique_ptr<ChannelFunctions>>* tables = nullptr;
  /// When set, the forward value is subnet + frozen offset instead.
  const std::vector<PixelOutputs>* frozen_offsets = nullptr;
  /// Receives table - subnet per block when tables are used.
  std::vector<PixelOutputs>* offsets_out = nullptr;
};

/// Loss of one sample under the training forward pass (unclamped output)
/// and, when `grad` is given, its gradient added into `grad` (a model of
/// the same spec).
LossTerms sample_gradient(const Model& model, const TrainingSample& sample, const TrainConfig& cfg,
                          const TeacherTargets* teacher, const QuantizationContext& quant,
                          Model* grad = nullptr);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct StepResult {
  LossTerms loss;
  double learning_rate = 0.0;
};

/// One Adam step on the mean loss of `batch`. Pretrain runs the float path;
/// finetune rebuilds the quantized tables from the current parameters and
/// trains straight-through. Per-sample gradients are reduced in batch order,
/// so results do not depend on the thread count. Throws NumericalError when
/// the loss is not finite.
StepResult train_step(Model& model, AdamState& adam, std::span<const TrainingSample> batch,
                      const TrainConfig& cfg, long iteration, const Teacher* teacher = nullptr);

struct TrainState {
  Model model;
  AdamState adam;
  long iteration = 0;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

struct TrainRecord {
  long iteration = 0;
  double learning_rate = 0.0;
  LossTerms loss;
};

using TrainLogger = std::function<void(const TrainRecord&)>;

/// Runs train_step from state.iteration up to cfg.iterations.
void train(TrainState& state, BatchStream& data, const TrainConfig& cfg, const Teacher* teacher,
           const TrainLogger& log = {});

/// Finetune-stage training of `state` against a frozen teacher. Throws
/// ConfigError on a block-count mismatch and IntegrityError if the teacher
/// parameters change.
void distill(TrainState& state, const Teacher& teacher, BatchStream& data, TrainConfig cfg,
             const TrainLogger& log = {});

}  // namespace iqlut
