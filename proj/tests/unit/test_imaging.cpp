#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "iqlut/color.hpp"
#include "iqlut/error.hpp"
#include "iqlut/image_io.hpp"
#include "iqlut/metrics.hpp"
#include "iqlut/resize.hpp"
#include "synthetic.hpp"

namespace iqlut {
namespace {

void write_pgm(const std::filesystem::path& p, int w, int h, const std::vector<unsigned char>& px) {
  std::ofstream out(p, std::ios::binary);
  out << "P5\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

TEST(LoadImage, RangeEndpoints) {
  testing::TempDir dir("io");
  write_pgm(dir.path() / "white.pgm", 1, 1, {255});
  write_pgm(dir.path() / "black.pgm", 1, 1, {0});
  const auto white = load_image(dir.path() / "white.pgm");
  const auto black = load_image(dir.path() / "black.pgm");
  ASSERT_EQ(white.size(), 1u);
  EXPECT_EQ(white[0](0, 0), 1.0);
  EXPECT_EQ(black[0](0, 0), 0.0);
}

TEST(LoadImage, DividesBy255) {
  testing::TempDir dir("io");
  write_pgm(dir.path() / "g.pgm", 2, 2, {128, 128, 128, 128});
  const auto p = load_image(dir.path() / "g.pgm");
  EXPECT_EQ(p[0].height(), 2);
  EXPECT_EQ(p[0].width(), 2);
  for (double v : p[0].values()) EXPECT_NEAR(v, 0.50196, 1e-5);
  EXPECT_EQ(p[0](1, 1), 128.0 / 255.0);
}

TEST(LoadImage, Errors) {
  testing::TempDir dir("io");
  EXPECT_THROW(load_image(dir.path() / "missing.png"), DataError);
  write_pgm(dir.path() / "empty.pgm", 0, 0, {});
  EXPECT_THROW(load_image(dir.path() / "empty.pgm"), DataError);
  std::ofstream(dir.path() / "x.bmp") << "BM";
  EXPECT_THROW(load_image(dir.path() / "x.bmp"), DataError);
  std::ofstream(dir.path() / "bad.png") << "not a png";
  EXPECT_THROW(load_image(dir.path() / "bad.png"), DataError);
}

TEST(SaveImage, PngRoundTripIsExactOn8BitValues) {
  testing::TempDir dir("io");
  ImagePlane r = quantize_8bit(testing::random_plane(1, 7, 5));
  ImagePlane g = quantize_8bit(testing::random_plane(2, 7, 5));
  ImagePlane b = quantize_8bit(testing::random_plane(3, 7, 5));
  save_image(dir.path() / "c.png", {r, g, b});
  const auto back = load_image(dir.path() / "c.png");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0], r);
  EXPECT_EQ(back[1], g);
  EXPECT_EQ(back[2], b);
  save_image(dir.path() / "g.pgm", {r});
  EXPECT_EQ(load_image(dir.path() / "g.pgm")[0], r);
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "c.png.tmp"));
}

TEST(Color, AchromaticInputs) {
  const ImagePlane one(1, 1, 1.0), zero(1, 1, 0.0), half(1, 1, 0.5);
  const auto w = rgb_to_ycbcr(one, one, one);
  EXPECT_NEAR(w.y(0, 0), 235.0 / 255.0, 1e-12);
  EXPECT_NEAR(w.cb(0, 0), 128.0 / 255.0, 1e-12);
  const auto k = rgb_to_ycbcr(zero, zero, zero);
  EXPECT_NEAR(k.y(0, 0), 16.0 / 255.0, 1e-12);
  const auto g = rgb_to_ycbcr(half, half, half);
  EXPECT_NEAR(g.cb(0, 0), 128.0 / 255.0, 1e-12);
  EXPECT_NEAR(g.cr(0, 0), 128.0 / 255.0, 1e-12);
}

TEST(Color, MatchesReferenceCoefficients) {
  // MATLAB rgb2ycbcr on (r, g, b) = (200, 100, 50) / 255.
  const ImagePlane r(1, 1, 200.0 / 255), g(1, 1, 100.0 / 255), b(1, 1, 50.0 / 255);
  const auto y = rgb_to_ycbcr(r, g, b);
  EXPECT_NEAR(y.y(0, 0) * 255, 16 + (65.481 * 200 + 128.553 * 100 + 24.966 * 50) / 255, 1e-9);
  EXPECT_NEAR(y.cb(0, 0) * 255, 128 + (-37.797 * 200 - 74.203 * 100 + 112.0 * 50) / 255, 1e-9);
  EXPECT_NEAR(y.cr(0, 0) * 255, 128 + (112.0 * 200 - 93.786 * 100 - 18.214 * 50) / 255, 1e-9);
  EXPECT_EQ(rgb_to_y(r, g, b), y.y);
}

TEST(Color, RoundTripWithinOneStep) {
  const ImagePlane r = quantize_8bit(testing::random_plane(10, 16, 16));
  const ImagePlane g = quantize_8bit(testing::random_plane(11, 16, 16));
  const ImagePlane b = quantize_8bit(testing::random_plane(12, 16, 16));
  const auto ycc = rgb_to_ycbcr(r, g, b);
  const auto back = ycbcr_to_rgb(ycc.y, ycc.cb, ycc.cr);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_LE(std::abs(quantize_8bit(back.r).values()[i] - r.values()[i]), 1.0 / 255 + 1e-12);
    EXPECT_LE(std::abs(quantize_8bit(back.g).values()[i] - g.values()[i]), 1.0 / 255 + 1e-12);
    EXPECT_LE(std::abs(quantize_8bit(back.b).values()[i] - b.values()[i]), 1.0 / 255 + 1e-12);
    EXPECT_NEAR(back.r.values()[i], r.values()[i], 1e-12);
  }
}

TEST(Color, DimensionMismatch) {
  EXPECT_THROW(rgb_to_ycbcr(ImagePlane(2, 2), ImagePlane(2, 3), ImagePlane(2, 2)), ConfigError);
}

// Independent MATLAB-style resampler for one axis: half-pixel centres,
// Keys a = -0.5 / triangle / box, kernel widened by 1/scale when shrinking,
// symmetric border, normalized weights.
double keys(double x) {
  x = std::abs(x);
  if (x <= 1) return 1.5 * x * x * x - 2.5 * x * x + 1;
  if (x < 2) return -0.5 * x * x * x + 2.5 * x * x - 4 * x + 2;
  return 0;
}
double tri(double x) { return std::max(0.0, 1 - std::abs(x)); }

std::vector<double> oracle_resize_1d(const std::vector<double>& in, double scale, ResizeKernel k) {
  const int n = static_cast<int>(in.size());
  const int m = static_cast<int>(std::lround(n * scale));
  std::vector<double> out(m);
  for (int o = 0; o < m; ++o) {
    const double u = (o + 0.5) / scale - 0.5;
    if (k == ResizeKernel::kNearest) {
      int idx = static_cast<int>(std::floor(u + 0.5));
      out[o] = in[std::clamp(idx, 0, n - 1)];
      continue;
    }
    const double shrink = scale < 1 ? scale : 1.0;
    const double support = (k == ResizeKernel::kBicubic ? 2.0 : 1.0) / shrink;
    double acc = 0, wsum = 0;
    for (int j = static_cast<int>(std::floor(u - support)); j <= static_cast<int>(std::ceil(u + support)); ++j) {
      const double d = (u - j) * shrink;
      const double w = shrink * (k == ResizeKernel::kBicubic ? keys(d) : tri(d));
      if (w == 0) continue;
      int src = j;
      while (src < 0 || src >= n) src = src < 0 ? -src - 1 : 2 * n - src - 1;
      acc += w * in[src];
      wsum += w;
    }
    out[o] = acc / wsum;
  }
  return out;
}

TEST(Resize, MatchesIndependentOneDimensionalOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (ResizeKernel k : {ResizeKernel::kBilinear, ResizeKernel::kBicubic}) {
    for (double s : {0.25, 0.5, 2.0, 3.0, 4.0}) {
      std::vector<double> row(12);
      for (double& v : row) v = u(rng);
      const ImagePlane in(1, 12, row);
      const ImagePlane out = resize(in, 1.0, s, 1, static_cast<int>(std::lround(12 * s)), k);
      const auto ref = oracle_resize_1d(row, s, k);
      ASSERT_EQ(out.width(), static_cast<int>(ref.size()));
      for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(out(0, static_cast<int>(i)), ref[i], 1e-12) << s;
    }
  }
}

TEST(Resize, ConstantPlaneStaysConstant) {
  const ImagePlane c(9, 7, 0.37);
  for (ResizeKernel k : {ResizeKernel::kNearest, ResizeKernel::kBilinear, ResizeKernel::kBicubic}) {
    for (double s : {0.25, 0.5, 1.5, 2.0, 3.0}) {
      const ImagePlane out = resize(c, s, k);
      EXPECT_EQ(out.height(), static_cast<int>(std::lround(9 * s)));
      EXPECT_EQ(out.width(), static_cast<int>(std::lround(7 * s)));
      for (double v : out.values()) EXPECT_NEAR(v, 0.37, 1e-12);
    }
  }
}

TEST(Resize, NearestReplication) {
  const ImagePlane in(1, 2, std::vector<double>{0.0, 1.0});
  const ImagePlane out = resize(in, 2.0, ResizeKernel::kNearest);
  ASSERT_EQ(out.height(), 2);
  ASSERT_EQ(out.width(), 4);
  for (int y = 0; y < 2; ++y) {
    EXPECT_EQ(out(y, 0), 0.0);
    EXPECT_EQ(out(y, 1), 0.0);
    EXPECT_EQ(out(y, 2), 1.0);
    EXPECT_EQ(out(y, 3), 1.0);
  }
}

TEST(Resize, ScaleOneIsIdentity) {
  const ImagePlane p = testing::random_plane(5, 8, 11);
  for (ResizeKernel k : {ResizeKernel::kNearest, ResizeKernel::kBilinear, ResizeKernel::kBicubic}) {
    const ImagePlane out = resize(p, 1.0, k);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(out.values()[i], p.values()[i], 1e-12);
  }
}

TEST(Resize, NonPositiveScaleRejected) {
  EXPECT_THROW(resize(ImagePlane(4, 4), 0.0, ResizeKernel::kBicubic), ConfigError);
  EXPECT_THROW(resize(ImagePlane(4, 4), -2.0, ResizeKernel::kBicubic), ConfigError);
  EXPECT_THROW(parse_resize_kernel("lanczos"), ConfigError);
}

TEST(Psnr, Examples) {
  const ImagePlane a = testing::random_plane(1, 8, 8);
  EXPECT_TRUE(psnr(a, a).is_infinite());
  EXPECT_NEAR(psnr(ImagePlane(4, 4, 0.0), ImagePlane(4, 4, 1.0)).db(), 0.0, 1e-12);
  // Every pixel off by exactly one 8-bit code.
  ImagePlane x(6, 6), y(6, 6);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x.values()[i] = static_cast<double>(100 + i) / 255.0;
    y.values()[i] = static_cast<double>(100 + i + (i % 2 ? 1 : -1)) / 255.0;
  }
  EXPECT_NEAR(psnr(x, y).db(), 20 * std::log10(255.0), 1e-9);
  EXPECT_NEAR(psnr(x, y).db(), 48.13, 0.005);
  EXPECT_NEAR(psnr(ImagePlane(2, 2, 0.0), ImagePlane(2, 2, 255.0), 255.0).db(), 0.0, 1e-12);
}

TEST(Psnr, SymmetricAndMonotoneInMse) {
  const ImagePlane a = testing::random_plane(2, 10, 10);
  const ImagePlane b = testing::random_plane(3, 10, 10);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
  Psnr prev = Psnr::infinite();
  for (double e : {0.001, 0.01, 0.05, 0.1, 0.3}) {
    ImagePlane c = a;
    for (double& v : c.values()) v += e;
    const Psnr p = psnr(a, c);
    EXPECT_LT(p, prev);
    prev = p;
  }
  EXPECT_GT(Psnr::infinite(), Psnr::finite(1e9));
}

TEST(Psnr, Errors) {
  EXPECT_THROW(psnr(ImagePlane(2, 2), ImagePlane(2, 3)), ConfigError);
  EXPECT_THROW(psnr(ImagePlane(2, 2), ImagePlane(2, 2), 0.0), ConfigError);
}

// Direct per-window SSIM: for every fully-contained 11x11 window, weighted
// means, variances and covariance with a normalized Gaussian.
double ssim_oracle(const ImagePlane& a, const ImagePlane& b) {
  const int win = 11;
  const double sigma = 1.5;
  double g[11][11];
  double gs = 0;
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) {
      const double dy = i - 5, dx = j - 5;
      g[i][j] = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
      gs += g[i][j];
    }
  }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  int count = 0;
  for (int y = 0; y + win <= a.height(); ++y) {
    for (int x = 0; x + win <= a.width(); ++x) {
      double ma = 0, mb = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          ma += g[i][j] / gs * a(y + i, x + j);
          mb += g[i][j] / gs * b(y + i, x + j);
        }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          const double w = g[i][j] / gs;
          va += w * (a(y + i, x + j) - ma) * (a(y + i, x + j) - ma);
          vb += w * (b(y + i, x + j) - mb) * (b(y + i, x + j) - mb);
          cov += w * (a(y + i, x + j) - ma) * (b(y + i, x + j) - mb);
        }
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / count;
}

TEST(Ssim, MatchesDirectImplementation) {
  const ImagePlane a = testing::random_plane(7, 16, 16);
  ImagePlane b = a;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 0.1);
  for (double& v : b.values()) v = std::clamp(v + n(rng), 0.0, 1.0);
  EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-10);
  const ImagePlane s = testing::synthetic_image(3, 24, 20);
  const ImagePlane t = testing::synthetic_image(4, 24, 20);
  EXPECT_NEAR(ssim(s, t), ssim_oracle(s, t), 1e-10);
}

TEST(Ssim, SelfSimilarityAndDistortion) {
  for (int seed = 0; seed < 5; ++seed) {
    const ImagePlane a = testing::synthetic_image(seed, 11 + seed, 13 + 2 * seed);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  }
  const ImagePlane a = testing::synthetic_image(9, 32, 32);
  double mean = 0;
  for (double v : a.values()) mean += v;
  mean /= static_cast<double>(a.size());
  ImagePlane neg = a;
  for (double& v : neg.values()) v = 2 * mean - v;
  EXPECT_LT(ssim(a, neg), 1.0);
}

TEST(Ssim, Errors) {
  EXPECT_THROW(ssim(ImagePlane(16, 16), ImagePlane(16, 15)), ConfigError);
  EXPECT_THROW(ssim(ImagePlane(10, 16), ImagePlane(10, 16)), ConfigError);
}

TEST(EvaluatePair, ShavesBorder) {
  ImagePlane ref(20, 20, 0.5);
  ImagePlane pred = ref;
  pred(0, 0) = 0.0;  // inside the shaved border
  const MetricReport r = evaluate_pair(ref, pred, 4);
  EXPECT_TRUE(r.psnr.is_infinite());
  EXPECT_NEAR(r.ssim, 1.0, 1e-12);
  EXPECT_EQ(r.channel, "Y");
  EXPECT_FALSE(evaluate_pair(ref, pred, 0).psnr.is_infinite());
}

}  // namespace
}  // namespace iqlut
