#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>

#include <fmt/format.h>

#include "common.hpp"
#include "iqlut/checkpoint.hpp"
#include "iqlut/color.hpp"
#include "iqlut/error.hpp"
#include "iqlut/image_io.hpp"
#include "iqlut/lut_format.hpp"
#include "iqlut/lut_infer.hpp"
#include "iqlut/resize.hpp"

namespace iqlut::cli {

namespace {

// Super-resolves a grayscale plane directly, or the Y plane of a colour
// image with bicubic chroma.
std::vector<ImagePlane> upscale_image(const std::vector<ImagePlane>& planes, int scale,
                                      const std::function<ImagePlane(const ImagePlane&)>& luma) {
  if (planes.size() == 1) return {luma(planes[0])};
  const YCbCrPlanes ycc = rgb_to_ycbcr(planes[0], planes[1], planes[2]);
  const ImagePlane y = luma(ycc.y);
  const ImagePlane cb = resize(ycc.cb, scale, ResizeKernel::kBicubic);
  const ImagePlane cr = resize(ycc.cr, scale, ResizeKernel::kBicubic);
  const RgbPlanes rgb = ycbcr_to_rgb(y, cb, cr);
  return {rgb.r, rgb.g, rgb.b};
}

double max_abs_diff(const ImagePlane& a, const ImagePlane& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace

Runner add_infer(CLI::App& app, RunContext& ctx) {
  struct Options {
    std::string model;
    std::string in;
    std::string out;
    std::string oracle;
  };
  auto o = std::make_shared<Options>();
  CLI::App* sub = app.add_subcommand("infer", "Super-resolve an image with an .iqlut model");
  sub->add_option("--model", o->model, "LUT file")->required();
  sub->add_option("--in", o->in, "Input image")->required();
  sub->add_option("--out", o->out, "Output image")->required();
  sub->add_option("--float-oracle", o->oracle, "Checkpoint whose float path is compared against the LUT");
  return [o, &ctx] {
    ctx.add_input("model", o->model);
    ctx.add_input("image", o->in);
    const LutModel lut = load_lut_model(o->model);
    const auto planes = load_image(o->in);
    LutInferOptions lo;
    lo.threads = ctx.threads;

    std::optional<Model> reference;
    if (!o->oracle.empty()) {
      ctx.add_input("float_oracle", o->oracle);
      Model m = load_checkpoint(o->oracle).state.model;
      const ModelSpec spec = lut.spec();
      if (m.spec.layers != spec.layers || m.spec.channels != spec.channels || m.spec.upscale != spec.upscale ||
          m.spec.kernel != spec.kernel) {
        throw ConfigError("oracle checkpoint and LUT differ in architecture");
      }
      m.spec = spec;
      for (int b = 0; b < spec.block_count(); ++b) m.blocks[b].alpha = lut.blocks[b].alpha;
      reference = round_to_export_precision(std::move(m));
    }

    OracleReport oracle;
    double float_gap = 0.0;
    const auto result = upscale_image(planes, lut.upscale, [&](const ImagePlane& lr) {
      if (reference) {
        const OracleReport r = compare_with_float_tables(lut, *reference, lr);
        oracle.max_steps = std::max(oracle.max_steps, r.max_steps);
        oracle.max_abs = std::max(oracle.max_abs, r.max_abs);
        oracle.max_output_abs = std::max(oracle.max_output_abs, r.max_output_abs);
        ForwardOptions fo;
        fo.threads = ctx.threads;
        float_gap = std::max(float_gap, max_abs_diff(forward_full(lr, *reference, fo), lut_infer(lut, lr, lo)));
      }
      return lut_infer(lut, lr, lo);
    });
    save_image(o->out, result);
    ctx.add_output("image", o->out);
    ctx.emit({{"record", "infer"},
              {"width", result[0].width()},
              {"height", result[0].height()},
              {"channels", result.size()}});
    if (reference) {
      const bool ok = oracle.max_steps <= 1.0;
      ctx.emit({{"record", "oracle"},
                {"max_lookup_steps", oracle.max_steps},
                {"bound_steps", 1.0},
                {"within_bound", ok},
                {"max_lookup_abs", oracle.max_abs},
                {"max_output_abs_quantized", oracle.max_output_abs},
                {"max_output_abs_float", float_gap}});
      fmt::print(stderr,
                 "oracle: lookups within {:.4f} output steps (bound 1), max pixel divergence {:.6f} vs the "
                 "quantized float path, {:.6f} vs the unquantized float path\n",
                 oracle.max_steps, oracle.max_output_abs, float_gap);
      if (!ok) throw IntegrityError("LUT diverges from the float oracle beyond one output step");
    }
  };
}

Runner add_eval(CLI::App& app, RunContext& ctx) {
  struct Options {
    std::string data;
    std::string baseline;
    std::string model;
    bool identity = false;
    int scale = 4;
    int shave = -1;
  };
  auto o = std::make_shared<Options>();
  CLI::App* sub = app.add_subcommand("eval", "Y-channel PSNR/SSIM of a model or baseline on an HR directory");
  sub->add_option("data", o->data, "Directory of HR images")->required();
  auto* base = sub->add_option("--baseline", o->baseline, "nearest | bilinear | bicubic");
  auto* model = sub->add_option("--model", o->model, "LUT file");
  auto* ident = sub->add_flag("--identity", o->identity, "Compare every HR image with itself");
  base->excludes(model)->excludes(ident);
  model->excludes(ident);
  sub->add_option("--scale", o->scale, "Downscale factor")->capture_default_str();
  sub->add_option("--shave", o->shave, "Border removed before measuring (default: scale)");
  return [o, &ctx] {
    if (o->baseline.empty() && o->model.empty() && !o->identity) {
      throw ConfigError("eval needs one of --baseline, --model or --identity");
    }
    ctx.add_input("data", o->data);
    std::function<ImagePlane(const ImagePlane&)> predict;
    std::string method;
    std::optional<LutModel> lut;
    int scale = o->scale;
    if (!o->model.empty()) {
      ctx.add_input("model", o->model);
      lut = load_lut_model(o->model);
      scale = lut->upscale;
      method = "lut";
      predict = [&](const ImagePlane& lr) {
        LutInferOptions lo;
        lo.threads = ctx.threads;
        return lut_infer(*lut, lr, lo);
      };
    } else if (!o->baseline.empty()) {
      const ResizeKernel k = parse_resize_kernel(o->baseline);
      method = std::string(to_string(k));
      predict = [k, scale](const ImagePlane& lr) { return resize(lr, scale, k); };
    } else {
      method = "identity";
    }
    if (scale < 1) throw ConfigError("scale must be >= 1");
    const int shave = o->shave >= 0 ? o->shave : scale;
    const auto hr = load_hr_set(o->data, scale);

    double psnr_sum = 0.0;
    double ssim_sum = 0.0;
    int finite = 0;
    fmt::print(stderr, "{:<24} {:>10} {:>8}\n", "image", "PSNR", "SSIM");
    for (const NamedPlane& p : hr) {
      const ImagePlane pred = o->identity ? p.plane : quantize_8bit(predict(degrade(p.plane, scale)));
      const MetricReport r = evaluate_pair(p.plane, pred, shave);
      ctx.emit({{"record", "metric"},
                {"image", p.name},
                {"method", method},
                {"channel", r.channel},
                {"psnr", r.psnr.is_infinite() ? json("inf") : json(r.psnr.db())},
                {"ssim", r.ssim}});
      fmt::print(stderr, "{:<24} {:>10} {:>8.4f}\n", p.name, r.psnr.to_string(), r.ssim);
      if (!r.psnr.is_infinite()) {
        psnr_sum += r.psnr.db();
        ++finite;
      }
      ssim_sum += r.ssim;
    }
    const double n = static_cast<double>(hr.size());
    const json mean_psnr = finite == static_cast<int>(hr.size()) ? json(psnr_sum / finite) : json("inf");
    ctx.emit({{"record", "mean"},
              {"method", method},
              {"scale", scale},
              {"shave", shave},
              {"images", hr.size()},
              {"channel", "Y"},
              {"psnr", mean_psnr},
              {"ssim", ssim_sum / n}});
    fmt::print(stderr, "{:<24} {:>10} {:>8.4f}\n", "mean",
               mean_psnr.is_string() ? std::string("inf") : fmt::format("{:.2f}", psnr_sum / finite), ssim_sum / n);
  };
}

Runner add_resize(CLI::App& app, RunContext& ctx) {
  struct Options {
    std::string in;
    std::string out;
    double scale = 1.0;
    std::string kernel = "bicubic";
    bool nearest = false;
    bool bilinear = false;
    bool bicubic = false;
  };
  auto o = std::make_shared<Options>();
  CLI::App* sub = app.add_subcommand("resize", "Classical resampling of every channel of an image");
  sub->add_option("--in", o->in, "Input image")->required();
  sub->add_option("--out", o->out, "Output image")->required();
  sub->add_option("--scale", o->scale, "Scale factor (< 1 downscales)")->required();
  auto* k = sub->add_option("--kernel", o->kernel, "nearest | bilinear | bicubic")->capture_default_str();
  sub->add_flag("--nearest", o->nearest)->excludes(k);
  sub->add_flag("--bilinear", o->bilinear)->excludes(k);
  sub->add_flag("--bicubic", o->bicubic)->excludes(k);
  return [o, &ctx] {
    ctx.add_input("image", o->in);
    if (!(o->scale > 0.0)) throw ConfigError("scale must be > 0");
    std::string name = o->kernel;
    if (static_cast<int>(o->nearest) + o->bilinear + o->bicubic > 1) throw ConfigError("choose one kernel");
    if (o->nearest) name = "nearest";
    if (o->bilinear) name = "bilinear";
    if (o->bicubic) name = "bicubic";
    const ResizeKernel kernel = parse_resize_kernel(name);
    std::vector<ImagePlane> out;
    for (const ImagePlane& p : load_image(o->in)) out.push_back(resize(p, o->scale, kernel));
    save_image(o->out, out);
    ctx.add_output("image", o->out);
    ctx.emit({{"record", "resize"},
              {"kernel", name},
              {"scale", o->scale},
              {"width", out[0].width()},
              {"height", out[0].height()}});
  };
}

}  // namespace iqlut::cli
