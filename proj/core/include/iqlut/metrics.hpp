#pragma once

#include <compare>
#include <string>

#include "iqlut/image.hpp"

namespace iqlut {

/// Peak signal-to-noise ratio in decibels. Identical inputs have infinite
/// PSNR, which is represented explicitly instead of as a floating-point inf.
class Psnr {
 public:
  static Psnr finite(double db) { return Psnr(db, false); }
  static Psnr infinite() { return Psnr(0.0, true); }

  bool is_infinite() const noexcept { return infinite_; }
  /// Decibels; only meaningful when !is_infinite().
  double db() const noexcept { return db_; }

  std::string to_string() const;

  friend std::partial_ordering operator<=>(const Psnr& a, const Psnr& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ <=> b.infinite_;
    return a.db_ <=> b.db_;
  }
  friend bool operator==(const Psnr& a, const Psnr& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.db_ == b.db_);
  }

 private:
  Psnr(double db, bool infinite) : db_(db), infinite_(infinite) {}
  double db_;
  bool infinite_;
};

double mean_squared_error(const ImagePlane& a, const ImagePlane& b);

/// 10 log10(peak^2 / MSE).
Psnr psnr(const ImagePlane& a, const ImagePlane& b, double peak = 1.0);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double dynamic_range = 1.0;  // L in C1 = (0.01 L)^2, C2 = (0.03 L)^2
};

/// Mean SSIM over all fully-contained windows (Gaussian weighting).
double ssim(const ImagePlane& a, const ImagePlane& b, const SsimOptions& options = {});

struct MetricReport {
  Psnr psnr = Psnr::infinite();
  double ssim = 1.0;
  std::string channel = "Y";
};

/// PSNR and SSIM of `prediction` against `reference` after removing `border`
/// pixels from every side.
MetricReport evaluate_pair(const ImagePlane& reference, const ImagePlane& prediction, int border);

}  // namespace iqlut
