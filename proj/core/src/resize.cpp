#include "iqlut/resize.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "iqlut/error.hpp"

namespace iqlut {
namespace {

double cubic(double x) {
  const double ax = std::abs(x);
  const double ax2 = ax * ax;
  const double ax3 = ax2 * ax;
  if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
  if (ax <= 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
  return 0.0;
}

double triangle(double x) {
  const double ax = std::abs(x);
  return ax <= 1.0 ? 1.0 - ax : 0.0;
}

double box(double x) { return (x >= -0.5 && x < 0.5) ? 1.0 : 0.0; }

double base_width(ResizeKernel kernel) {
  switch (kernel) {
    case ResizeKernel::kNearest:
      return 1.0;
    case ResizeKernel::kBilinear:
      return 2.0;
    case ResizeKernel::kBicubic:
      return 4.0;
  }
  return 0.0;
}

double evaluate(ResizeKernel kernel, double x) {
  switch (kernel) {
    case ResizeKernel::kNearest:
      return box(x);
    case ResizeKernel::kBilinear:
      return triangle(x);
    case ResizeKernel::kBicubic:
      return cubic(x);
  }
  return 0.0;
}

int mirror(int idx, int length) {
  const int period = 2 * length;
  idx %= period;
  if (idx < 0) idx += period;
  return idx < length ? idx : period - 1 - idx;
}

struct Tap {
  int index;
  double weight;
};

// For each output position, the input taps and normalized weights.
std::vector<std::vector<Tap>> contributions(int in_length, int out_length, double scale,
                                            ResizeKernel kernel) {
  const bool antialias = scale < 1.0 && kernel != ResizeKernel::kNearest;
  const double width = antialias ? base_width(kernel) / scale : base_width(kernel);
  const int taps = static_cast<int>(std::ceil(width)) + 2;

  std::vector<std::vector<Tap>> out(out_length);
  for (int o = 0; o < out_length; ++o) {
    const double u = (o + 0.5) / scale - 0.5;
    const int left = static_cast<int>(std::floor(u - width / 2.0));
    std::vector<Tap> row;
    double total = 0.0;
    for (int p = 0; p < taps; ++p) {
      const int idx = left + p;
      const double d = u - idx;
      const double w = antialias ? scale * evaluate(kernel, scale * d) : evaluate(kernel, d);
      if (w == 0.0) continue;
      row.push_back({idx, w});
      total += w;
    }
    for (Tap& t : row) {
      t.weight /= total;
      t.index = mirror(t.index, in_length);
    }
    out[o] = std::move(row);
  }
  return out;
}

ImagePlane resize_rows(const ImagePlane& in, int out_height, double scale, ResizeKernel kernel) {
  const auto weights = contributions(in.height(), out_height, scale, kernel);
  ImagePlane out(out_height, in.width());
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < in.width(); ++x) {
      double acc = 0.0;
      for (const Tap& t : weights[y]) acc += t.weight * in(t.index, x);
      out(y, x) = acc;
    }
  }
  return out;
}

ImagePlane resize_cols(const ImagePlane& in, int out_width, double scale, ResizeKernel kernel) {
  const auto weights = contributions(in.width(), out_width, scale, kernel);
  ImagePlane out(in.height(), out_width);
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < out_width; ++x) {
      double acc = 0.0;
      for (const Tap& t : weights[x]) acc += t.weight * in(y, t.index);
      out(y, x) = acc;
    }
  }
  return out;
}

}  // namespace

ResizeKernel parse_resize_kernel(std::string_view name) {
  if (name == "nearest") return ResizeKernel::kNearest;
  if (name == "bilinear") return ResizeKernel::kBilinear;
  if (name == "bicubic") return ResizeKernel::kBicubic;
  throw ConfigError("unknown resize kernel '" + std::string(name) + "'");
}

std::string_view to_string(ResizeKernel kernel) {
  switch (kernel) {
    case ResizeKernel::kNearest:
      return "nearest";
    case ResizeKernel::kBilinear:
      return "bilinear";
    case ResizeKernel::kBicubic:
      return "bicubic";
  }
  return "?";
}

ImagePlane resize(const ImagePlane& plane, double scale_y, double scale_x, int out_height,
                  int out_width, ResizeKernel kernel) {
  if (!(scale_y > 0.0) || !(scale_x > 0.0)) throw ConfigError("resize scale must be positive");
  if (out_height < 1 || out_width < 1) throw ConfigError("resize output would be empty");
  if (plane.empty()) throw ConfigError("cannot resize an empty plane");
  // The axis with the smaller scale goes first; rows first on ties.
  if (scale_x < scale_y) {
    return resize_rows(resize_cols(plane, out_width, scale_x, kernel), out_height, scale_y,
                       kernel);
  }
  return resize_cols(resize_rows(plane, out_height, scale_y, kernel), out_width, scale_x, kernel);
}

ImagePlane resize(const ImagePlane& plane, double scale, ResizeKernel kernel) {
  if (!(scale > 0.0)) throw ConfigError("resize scale must be positive");
  const int out_h = static_cast<int>(std::lround(plane.height() * scale));
  const int out_w = static_cast<int>(std::lround(plane.width() * scale));
  return resize(plane, scale, scale, out_h, out_w, kernel);
}

}  // namespace iqlut
