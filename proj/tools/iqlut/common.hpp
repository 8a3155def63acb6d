#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iqlut/image.hpp"
#include "iqlut/metrics.hpp"
#include "iqlut/model.hpp"
#include "run_context.hpp"

namespace iqlut::cli {

using Runner = std::function<void()>;

Runner add_train(CLI::App& app, RunContext& ctx);
Runner add_build_lut(CLI::App& app, RunContext& ctx);
Runner add_search_ab(CLI::App& app, RunContext& ctx);
Runner add_inspect(CLI::App& app, RunContext& ctx);
Runner add_infer(CLI::App& app, RunContext& ctx);
Runner add_eval(CLI::App& app, RunContext& ctx);
Runner add_resize(CLI::App& app, RunContext& ctx);

// "2x2" -> {2, 2}.
KernelShape parse_kernel(const std::string& text);

// HR luma planes of a directory, modcropped to `scale`. DataError if empty.
struct NamedPlane {
  std::string name;
  ImagePlane plane;
};
std::vector<NamedPlane> load_hr_set(const std::filesystem::path& dir, int scale);

// Low-resolution counterparts (bicubic downscale, 8-bit).
std::vector<ImagePlane> degrade_all(const std::vector<NamedPlane>& hr, int scale);

struct MeanMetrics {
  double psnr = 0.0;
  double ssim = 0.0;
  int infinite = 0;  // images with identical reference and prediction
};

// Mean over the set of evaluate_pair(hr, predict(lr)), with outputs rounded
// to 8-bit codes first. Infinite PSNRs are excluded from the mean.
MeanMetrics mean_metrics(const std::vector<NamedPlane>& hr, int scale, int shave,
                         const std::function<ImagePlane(const ImagePlane&)>& predict);

}  // namespace iqlut::cli
