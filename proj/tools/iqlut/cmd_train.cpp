#include <fstream>
#include <memory>
#include <optional>

#include <fmt/format.h>

#include "common.hpp"
#include "iqlut/calibration.hpp"
#include "iqlut/checkpoint.hpp"
#include "iqlut/ecnn.hpp"
#include "iqlut/error.hpp"
#include "iqlut/trainer.hpp"

namespace iqlut::cli {

namespace {

struct TrainOptions {
  std::string data;
  std::string out;
  std::string stage = "pretrain";
  std::string model = "IQ-L2C4";
  std::string kernel = "2x2";
  std::vector<int> bits;
  int out_bits = 8;
  int scale = 4;
  long iters = 5000;
  int batch = 16;
  int crop = 48;
  double lr = 0.0;
  double mse_weight = 1.0;
  double distill_weight = 3.0;
  std::string distill_target = "both";
  std::uint64_t seed = 1;
  std::string init;
  std::string teacher;
  std::string resume;
  std::vector<double> pin_ab;
  bool share_ab = false;
  std::string log;
  int log_every = 100;
  std::string eval_dir;
  int eval_every = 0;
};

DistillTarget parse_target(const std::string& s) {
  if (s == "features") return DistillTarget::kFeatures;
  if (s == "outputs") return DistillTarget::kOutputs;
  if (s == "both") return DistillTarget::kBoth;
  throw ConfigError(fmt::format("unknown distillation target '{}'", s));
}

void run_train(const TrainOptions& o, RunContext& ctx) {
  if (o.stage != "pretrain" && o.stage != "finetune") {
    throw ConfigError(fmt::format("unknown stage '{}'", o.stage));
  }
  const bool finetune = o.stage == "finetune";
  ctx.add_input("data", o.data);

  TrainConfig cfg;
  cfg.iterations = o.iters;
  cfg.batch_size = o.batch;
  cfg.crop = o.crop;
  cfg.learning_rate = o.lr > 0.0 ? o.lr : (finetune ? 1e-4 : 5e-3);
  cfg.mse_weight = o.mse_weight;
  cfg.distill_weight = o.distill_weight;
  cfg.distill_target = parse_target(o.distill_target);
  cfg.seed = o.seed;
  cfg.stage = finetune ? TrainStage::kFinetune : TrainStage::kPretrain;
  cfg.threads = ctx.threads;
  cfg.validate();

  std::optional<Checkpoint> resumed;
  if (!o.resume.empty()) {
    ctx.add_input("resume", o.resume);
    resumed = load_checkpoint(o.resume);
    if (resumed->stage != cfg.stage) throw ConfigError("resume checkpoint is from a different stage");
  }
  std::optional<Checkpoint> init;
  if (!o.init.empty()) {
    ctx.add_input("init", o.init);
    init = load_checkpoint(o.init);
  }
  if (finetune && !resumed && !init) throw ConfigError("finetune needs --init (a pretrained checkpoint) or --resume");

  int scale = o.scale;
  if (resumed) scale = resumed->state.model.spec.upscale;
  else if (init) scale = init->state.model.spec.upscale;

  DatasetOptions dopt;
  dopt.scale = scale;
  dopt.crop = o.crop;
  dopt.seed = o.seed;
  BatchStream stream = ingest_dataset(o.data, dopt);

  TrainState state;
  if (resumed) {
    state = resumed->state;
    if (!resumed->rng_state.empty()) stream.set_rng_state(resumed->rng_state);
  } else if (finetune) {
    state.model = init->state.model;
    calibrate_ranges(state.model, stream.lr_images());
    if (o.pin_ab.size() == 2) {
      for (BlockQuant& q : state.model.spec.quant) {
        q.a = o.pin_ab[0];
        q.b = o.pin_ab[1];
      }
      state.model.spec.validate();
    } else {
      QuantSearchOptions so;
      so.share = o.share_ab;
      const auto results = search_quantizers(state.model, stream.lr_images(), so);
      for (std::size_t b = 0; b < results.size(); ++b) {
        ctx.emit({{"record", "search"}, {"block", b}, {"a", results[b].a}, {"b", results[b].b},
                  {"loss", results[b].loss}, {"start_loss", results[b].start_loss}});
      }
    }
  } else {
    const auto [layers, channels] = parse_model_name(o.model);
    const std::vector<int> bits = o.bits.empty() ? default_input_bits(layers) : o.bits;
    state.model = make_model(make_model_spec(layers, channels, scale, parse_kernel(o.kernel), bits, o.out_bits));
    initialize_model(state.model, o.seed);
  }

  std::unique_ptr<Teacher> teacher;
  if (finetune && cfg.distill_weight > 0.0) {
    Model base;
    if (!o.teacher.empty()) {
      ctx.add_input("teacher", o.teacher);
      base = load_checkpoint(o.teacher).state.model;
    } else if (init) {
      base = init->state.model;
    } else {
      throw ConfigError("distillation needs --teacher or --init to rebuild the teacher");
    }
    teacher = std::make_unique<Teacher>(make_teacher_model(base, stream.lr_images()));
    ctx.emit({{"record", "teacher"}, {"hash", fmt::format("{:016x}", teacher->hash())}});
  }

  std::vector<NamedPlane> eval_set;
  if (!o.eval_dir.empty() && o.eval_every > 0) {
    ctx.add_input("eval", o.eval_dir);
    eval_set = load_hr_set(o.eval_dir, scale);
  }

  std::ofstream log;
  if (!o.log.empty()) {
    log.open(o.log, std::ios::app);
    if (!log) throw DataError(fmt::format("cannot open log {}", o.log));
    ctx.add_output("log", o.log);
  }
  const TrainLogger logger = [&](const TrainRecord& r) {
    json rec = {{"record", "train"}, {"stage", o.stage},    {"iteration", r.iteration},
                {"lr", r.learning_rate}, {"loss", r.loss.total}, {"mse", r.loss.mse},
                {"distill", r.loss.distill}};
    const long done = r.iteration + 1;
    if (!eval_set.empty() && done % o.eval_every == 0) {
      ForwardOptions fo;
      fo.mode = finetune ? ForwardMode::kQuantized : ForwardMode::kFloat;
      fo.threads = ctx.threads;
      rec["eval_psnr"] = mean_metrics(eval_set, scale, scale, [&](const ImagePlane& lr) {
                           return forward_full(lr, state.model, fo);
                         }).psnr;
    }
    if (log) log << rec.dump() << '\n' << std::flush;
    if (o.log_every > 0 && (done % o.log_every == 0 || done == cfg.iterations)) ctx.emit(rec);
  };

  const uint64_t teacher_hash = teacher ? teacher->hash() : 0;
  if (teacher) {
    distill(state, *teacher, stream, cfg, logger);
  } else {
    train(state, stream, cfg, nullptr, logger);
  }

  Checkpoint ckpt{state, cfg.stage, stream.rng_state()};
  save_checkpoint(o.out, ckpt);
  ctx.add_output("checkpoint", o.out);
  json done = {{"record", "trained"},
               {"stage", o.stage},
               {"model", model_name(state.model.spec)},
               {"iterations", state.iteration},
               {"parameters", parameter_count(state.model)},
               {"parameter_hash", fmt::format("{:016x}", parameter_hash(state.model))}};
  if (teacher) done["teacher_unchanged"] = teacher->hash() == teacher_hash;
  ctx.emit(done);
  fmt::print(stderr, "trained {} to iteration {} -> {}\n", model_name(state.model.spec), state.iteration, o.out);
}

}  // namespace

Runner add_train(CLI::App& app, RunContext& ctx) {
  auto o = std::make_shared<TrainOptions>();
  CLI::App* sub = app.add_subcommand("train", "Pretrain or finetune a model on a directory of HR images");
  sub->add_option("--data", o->data, "Directory of HR training images")->required();
  sub->add_option("--out", o->out, "Checkpoint to write")->required();
  sub->add_option("--stage", o->stage, "pretrain | finetune")->capture_default_str();
  sub->add_option("--model", o->model, "Architecture name IQ-L<layers>C<channels>")->capture_default_str();
  sub->add_option("--kernel", o->kernel, "Expanded-convolution window")->capture_default_str();
  sub->add_option("--bits", o->bits, "Input bit-depth per block, upsampling layer last")->delimiter(',');
  sub->add_option("--out-bits", o->out_bits, "LUT output bit-depth")->capture_default_str();
  sub->add_option("--scale", o->scale, "Upscale factor")->capture_default_str();
  sub->add_option("--iters", o->iters, "Total iterations")->capture_default_str();
  sub->add_option("--batch", o->batch, "Batch size")->capture_default_str();
  sub->add_option("--crop", o->crop, "HR crop size")->capture_default_str();
  sub->add_option("--lr", o->lr, "Initial learning rate (default 5e-3 pretrain, 1e-4 finetune)");
  sub->add_option("--mse-weight", o->mse_weight)->capture_default_str();
  sub->add_option("--distill-weight", o->distill_weight)->capture_default_str();
  sub->add_option("--distill-target", o->distill_target, "features | outputs | both")->capture_default_str();
  sub->add_option("--seed", o->seed)->capture_default_str();
  sub->add_option("--init", o->init, "Pretrained checkpoint to finetune");
  sub->add_option("--teacher", o->teacher, "Teacher checkpoint (default: the --init model)");
  sub->add_option("--resume", o->resume, "Continue from a checkpoint of the same stage");
  sub->add_option("--pin-ab", o->pin_ab, "Fix (a, b) for every block instead of searching")->expected(2);
  sub->add_flag("--share-ab", o->share_ab, "Search one (a, b) for all blocks");
  sub->add_option("--log", o->log, "Append-only JSON-lines training log");
  sub->add_option("--log-every", o->log_every, "Echo every N-th record to stdout")->capture_default_str();
  sub->add_option("--eval-dir", o->eval_dir, "HR images for periodic evaluation");
  sub->add_option("--eval-every", o->eval_every, "Evaluate every N iterations")->capture_default_str();
  return [o, &ctx] { run_train(*o, ctx); };
}

}  // namespace iqlut::cli
