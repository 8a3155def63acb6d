#include <memory>

#include <fmt/format.h>

#include "common.hpp"
#include "iqlut/calibration.hpp"
#include "iqlut/checkpoint.hpp"
#include "iqlut/error.hpp"
#include "iqlut/lut_format.hpp"

namespace iqlut::cli {

namespace {

struct QuantizeOptions {
  std::string checkpoint;
  std::string calib;
  std::vector<double> pin_ab;
  bool share_ab = false;
  bool recalibrate = false;
};

// Prepares quantizers: calibrates ranges and searches (a, b) unless the
// checkpoint already carries finetuned quantizers or (a, b) is pinned.
Model prepare_quantizers(const QuantizeOptions& o, RunContext& ctx, bool force_search) {
  ctx.add_input("checkpoint", o.checkpoint);
  Model model = load_checkpoint(o.checkpoint).state.model;
  bool calibrated = true;
  for (const BlockQuant& q : model.spec.quant) calibrated = calibrated && q.calibrated;
  const bool fresh = !calibrated || o.recalibrate;

  std::vector<ImagePlane> lr;
  if (fresh || (force_search && o.pin_ab.empty())) {
    if (o.calib.empty()) throw ConfigError("--calib is required to calibrate the quantizers");
    ctx.add_input("calib", o.calib);
    lr = degrade_all(load_hr_set(o.calib, model.spec.upscale), model.spec.upscale);
  }
  if (fresh) calibrate_ranges(model, lr);

  if (o.pin_ab.size() == 2) {
    for (BlockQuant& q : model.spec.quant) {
      q.a = o.pin_ab[0];
      q.b = o.pin_ab[1];
    }
    model.spec.validate();
  } else if (fresh || force_search) {
    QuantSearchOptions so;
    so.share = o.share_ab;
    const auto results = search_quantizers(model, lr, so);
    for (std::size_t b = 0; b < results.size(); ++b) {
      const SearchResult& r = results[b];
      ctx.emit({{"record", "search"}, {"block", b}, {"a", r.a}, {"b", r.b}, {"loss", r.loss},
                {"start_loss", r.start_loss}, {"evaluations", r.evaluations}, {"rounds", r.rounds}});
      fmt::print(stderr, "block {}: a={:.2f} b={:.2f} mse {:.3e} (start {:.3e})\n", b, r.a, r.b, r.loss,
                 r.start_loss);
    }
  }
  return model;
}

void add_quantize_options(CLI::App* sub, QuantizeOptions& o) {
  sub->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required();
  sub->add_option("--calib", o.calib, "Directory of HR calibration images");
  sub->add_option("--pin-ab", o.pin_ab, "Use this (a, b) for every block")->expected(2);
  sub->add_flag("--share-ab", o.share_ab, "One (a, b) for all blocks");
  sub->add_flag("--recalibrate", o.recalibrate, "Recalibrate even if the checkpoint carries quantizers");
}

json size_record(const SizeReport& s) {
  return {{"record", "size"},
          {"table_bytes", s.table_bytes},
          {"metadata_bytes", s.metadata_bytes},
          {"fixed_bytes", s.fixed_bytes},
          {"total_bytes", s.total_bytes()},
          {"block_table_bytes", s.block_table_bytes}};
}

}  // namespace

Runner add_build_lut(CLI::App& app, RunContext& ctx) {
  struct Options {
    QuantizeOptions q;
    std::string out;
    int out_bits = 0;
  };
  auto o = std::make_shared<Options>();
  CLI::App* sub = app.add_subcommand("build-lut", "Convert a checkpoint into an .iqlut file");
  add_quantize_options(sub, o->q);
  sub->add_option("--out", o->out, "LUT file to write")->required();
  sub->add_option("--out-bits", o->out_bits, "Output bit-depth (default: the checkpoint's)");
  return [o, &ctx] {
    Model model = prepare_quantizers(o->q, ctx, false);
    const int out_bits = o->out_bits > 0 ? o->out_bits : model.spec.output_bits;
    const LutModel lut = build_lut_model(model, out_bits);
    save_lut_model(o->out, lut);
    ctx.add_output("lut", o->out);

    const SizeReport size = lut_size_bytes(lut.spec());
    const TableRegion region = table_region(lut);
    if (size.table_bytes != region.length) {
      throw IntegrityError("size accounting disagrees with the serialized table region");
    }
    json rec = size_record(size);
    rec["table_region_bytes"] = region.length;
    ctx.emit(rec);
    fmt::print(stderr, "{} -> {} ({} table bytes, {} total)\n", model_name(model.spec), o->out, size.table_bytes,
               size.total_bytes());
  };
}

Runner add_search_ab(CLI::App& app, RunContext& ctx) {
  struct Options {
    QuantizeOptions q;
    std::string out;
  };
  auto o = std::make_shared<Options>();
  CLI::App* sub = app.add_subcommand("search-ab", "Greedy (a, b) search report for a checkpoint");
  sub->add_option("--checkpoint", o->q.checkpoint, "Trained checkpoint")->required();
  sub->add_option("--calib", o->q.calib, "Directory of HR calibration images")->required();
  sub->add_flag("--share-ab", o->q.share_ab, "One (a, b) for all blocks");
  sub->add_flag("--recalibrate", o->q.recalibrate, "Recalibrate ranges first");
  sub->add_option("--out", o->out, "Write the checkpoint with the found quantizers");
  return [o, &ctx] {
    Model model = prepare_quantizers(o->q, ctx, true);
    if (!o->out.empty()) {
      Checkpoint ckpt = load_checkpoint(o->q.checkpoint);
      ckpt.state.model.spec = model.spec;
      save_checkpoint(o->out, ckpt);
      ctx.add_output("checkpoint", o->out);
    }
  };
}

Runner add_inspect(CLI::App& app, RunContext& ctx) {
  auto path = std::make_shared<std::string>();
  CLI::App* sub = app.add_subcommand("inspect", "Dump the header and size breakdown of an .iqlut file");
  sub->add_option("model", *path, "LUT file")->required();
  return [path, &ctx] {
    ctx.add_input("model", *path);
    const LutModel lut = load_lut_model(*path);
    const ModelSpec spec = lut.spec();
    ctx.emit({{"record", "header"},
              {"format_version", kLutFormatVersion},
              {"model", model_name(spec)},
              {"layers", lut.layers},
              {"channels", lut.channels},
              {"upscale", lut.upscale},
              {"kernel", fmt::format("{}x{}", lut.kernel.height, lut.kernel.width)},
              {"output_bits", lut.output_bits}});
    const SizeReport size = lut_size_bytes(spec);
    fmt::print(stderr, "{}  x{}  kernel {}x{}  out_bits {}\n", model_name(spec), lut.upscale, lut.kernel.height,
               lut.kernel.width, lut.output_bits);
    for (std::size_t b = 0; b < lut.blocks.size(); ++b) {
      const LutBlock& blk = lut.blocks[b];
      ctx.emit({{"record", "block"},
                {"block", b},
                {"kind", spec.is_upsample(static_cast<int>(b)) ? "upsample" : "residual"},
                {"bits", blk.quant.bits},
                {"a", blk.quant.a},
                {"b", blk.quant.b},
                {"alpha", blk.alpha},
                {"range", {blk.quant.range_lo, blk.quant.range_hi}},
                {"tables", blk.tables.size()},
                {"table_bytes", size.block_table_bytes[b]}});
      fmt::print(stderr, "  block {}: bits {} a {:.3f} b {:.3f} alpha {:+.4f} range [{:.4f}, {:.4f}] {} B\n", b,
                 blk.quant.bits, blk.quant.a, blk.quant.b, blk.alpha, blk.quant.range_lo, blk.quant.range_hi,
                 size.block_table_bytes[b]);
    }
    ctx.emit(size_record(size));
    fmt::print(stderr, "  tables {} B, metadata {} B, fixed {} B, total {} B\n", size.table_bytes,
               size.metadata_bytes, size.fixed_bytes, size.total_bytes());
  };
}

}  // namespace iqlut::cli
