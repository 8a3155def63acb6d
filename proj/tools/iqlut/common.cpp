#include "common.hpp"

#include <regex>

#include <fmt/format.h>

#include "iqlut/dataset.hpp"
#include "iqlut/error.hpp"

namespace iqlut::cli {

KernelShape parse_kernel(const std::string& text) {
  static const std::regex re(R"((\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw ConfigError(fmt::format("kernel must look like 2x2, got '{}'", text));
  return {std::stoi(m[1]), std::stoi(m[2])};
}

std::vector<NamedPlane> load_hr_set(const std::filesystem::path& dir, int scale) {
  std::vector<NamedPlane> out;
  for (const auto& f : list_images(dir)) out.push_back({f.filename().string(), modcrop(load_luma(f), scale)});
  if (out.empty()) throw DataError(fmt::format("no images in {}", dir.string()));
  return out;
}

std::vector<ImagePlane> degrade_all(const std::vector<NamedPlane>& hr, int scale) {
  std::vector<ImagePlane> out;
  for (const NamedPlane& p : hr) out.push_back(degrade(p.plane, scale));
  return out;
}

MeanMetrics mean_metrics(const std::vector<NamedPlane>& hr, int scale, int shave,
                         const std::function<ImagePlane(const ImagePlane&)>& predict) {
  MeanMetrics m;
  int finite = 0;
  for (const NamedPlane& p : hr) {
    const ImagePlane pred = quantize_8bit(predict(degrade(p.plane, scale)));
    const MetricReport r = evaluate_pair(p.plane, pred, shave);
    if (r.psnr.is_infinite()) {
      ++m.infinite;
    } else {
      m.psnr += r.psnr.db();
      ++finite;
    }
    m.ssim += r.ssim;
  }
  if (finite > 0) m.psnr /= finite;
  m.ssim /= static_cast<double>(hr.size());
  return m;
}

}  // namespace iqlut::cli
