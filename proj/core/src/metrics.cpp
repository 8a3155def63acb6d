#include "iqlut/metrics.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "iqlut/error.hpp"

namespace iqlut {
namespace {

void require_same_shape(const ImagePlane& a, const ImagePlane& b) {
  if (!a.same_shape(b)) {
    throw ConfigError(fmt::format("metric inputs differ in shape: {}x{} vs {}x{}", a.height(),
                                  a.width(), b.height(), b.width()));
  }
}

std::vector<double> gaussian_taps(int size, double sigma) {
  std::vector<double> g(size);
  const double centre = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - centre;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// 'valid' separable filtering: output is (h - n + 1) x (w - n + 1).
ImagePlane filter_valid(const ImagePlane& in, const std::vector<double>& taps) {
  const int n = static_cast<int>(taps.size());
  const int oh = in.height() - n + 1;
  const int ow = in.width() - n + 1;
  ImagePlane rows(oh, in.width());
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < in.width(); ++x) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += taps[k] * in(y + k, x);
      rows(y, x) = acc;
    }
  }
  ImagePlane out(oh, ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += taps[k] * rows(y, x + k);
      out(y, x) = acc;
    }
  }
  return out;
}

ImagePlane product(const ImagePlane& a, const ImagePlane& b) {
  ImagePlane out(a.height(), a.width());
  auto av = a.values(), bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  return out;
}

}  // namespace

std::string Psnr::to_string() const {
  return infinite_ ? std::string("inf") : fmt::format("{:.4f}", db_);
}

double mean_squared_error(const ImagePlane& a, const ImagePlane& b) {
  require_same_shape(a, b);
  if (a.empty()) throw ConfigError("metric inputs are empty");
  double acc = 0.0;
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    acc += d * d;
  }
  return acc / static_cast<double>(av.size());
}

Psnr psnr(const ImagePlane& a, const ImagePlane& b, double peak) {
  if (!(peak > 0.0)) throw ConfigError("psnr peak must be positive");
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return Psnr::infinite();
  return Psnr::finite(10.0 * std::log10(peak * peak / mse));
}

double ssim(const ImagePlane& a, const ImagePlane& b, const SsimOptions& options) {
  require_same_shape(a, b);
  if (options.window < 1 || !(options.sigma > 0.0)) throw ConfigError("invalid SSIM window");
  if (a.height() < options.window || a.width() < options.window) {
    throw ConfigError(fmt::format("SSIM needs at least {0}x{0} pixels, got {1}x{2}",
                                  options.window, a.height(), a.width()));
  }
  const auto taps = gaussian_taps(options.window, options.sigma);
  const double c1 = std::pow(0.01 * options.dynamic_range, 2);
  const double c2 = std::pow(0.03 * options.dynamic_range, 2);

  const ImagePlane mu_a = filter_valid(a, taps);
  const ImagePlane mu_b = filter_valid(b, taps);
  const ImagePlane aa = filter_valid(product(a, a), taps);
  const ImagePlane bb = filter_valid(product(b, b), taps);
  const ImagePlane ab = filter_valid(product(a, b), taps);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a.values()[i];
    const double mb = mu_b.values()[i];
    const double va = aa.values()[i] - ma * ma;
    const double vb = bb.values()[i] - mb * mb;
    const double cov = ab.values()[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

MetricReport evaluate_pair(const ImagePlane& reference, const ImagePlane& prediction, int border) {
  require_same_shape(reference, prediction);
  const ImagePlane ref = border > 0 ? shave(reference, border) : reference;
  const ImagePlane pred = border > 0 ? shave(prediction, border) : prediction;
  MetricReport report;
  report.psnr = psnr(ref, pred, 1.0);
  report.ssim = ssim(ref, pred);
  return report;
}

}  // namespace iqlut
