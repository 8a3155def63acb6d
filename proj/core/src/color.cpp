#include "iqlut/color.hpp"

#include <array>

#include "iqlut/error.hpp"

namespace iqlut {
namespace {

// Forward matrix in 8-bit units for unit-normalized RGB.
constexpr double kY[3] = {65.481, 128.553, 24.966};
constexpr double kCb[3] = {-37.797, -74.203, 112.0};
constexpr double kCr[3] = {112.0, -93.786, -18.214};

void check_shapes(const ImagePlane& a, const ImagePlane& b, const ImagePlane& c) {
  if (!a.same_shape(b) || !a.same_shape(c)) throw ConfigError("colour planes differ in shape");
}

}  // namespace

YCbCrPlanes rgb_to_ycbcr(const ImagePlane& r, const ImagePlane& g, const ImagePlane& b) {
  check_shapes(r, g, b);
  YCbCrPlanes out{ImagePlane(r.height(), r.width()), ImagePlane(r.height(), r.width()),
                  ImagePlane(r.height(), r.width())};
  auto rv = r.values(), gv = g.values(), bv = b.values();
  auto y = out.y.values(), cb = out.cb.values(), cr = out.cr.values();
  for (std::size_t i = 0; i < rv.size(); ++i) {
    y[i] = (16.0 + kY[0] * rv[i] + kY[1] * gv[i] + kY[2] * bv[i]) / 255.0;
    cb[i] = (128.0 + kCb[0] * rv[i] + kCb[1] * gv[i] + kCb[2] * bv[i]) / 255.0;
    cr[i] = (128.0 + kCr[0] * rv[i] + kCr[1] * gv[i] + kCr[2] * bv[i]) / 255.0;
  }
  return out;
}

ImagePlane rgb_to_y(const ImagePlane& r, const ImagePlane& g, const ImagePlane& b) {
  check_shapes(r, g, b);
  ImagePlane y(r.height(), r.width());
  auto rv = r.values(), gv = g.values(), bv = b.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < rv.size(); ++i) {
    yv[i] = (16.0 + kY[0] * rv[i] + kY[1] * gv[i] + kY[2] * bv[i]) / 255.0;
  }
  return y;
}

RgbPlanes ycbcr_to_rgb(const ImagePlane& y, const ImagePlane& cb, const ImagePlane& cr) {
  check_shapes(y, cb, cr);
  // Inverse of the forward matrix, solved once by Cramer's rule.
  static const auto inverse = [] {
    const double m[3][3] = {{kY[0], kY[1], kY[2]}, {kCb[0], kCb[1], kCb[2]},
                            {kCr[0], kCr[1], kCr[2]}};
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    std::array<std::array<double, 3>, 3> inv{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
        const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
        inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
      }
    }
    return inv;
  }();
  RgbPlanes out{ImagePlane(y.height(), y.width()), ImagePlane(y.height(), y.width()),
                ImagePlane(y.height(), y.width())};
  auto yv = y.values(), cbv = cb.values(), crv = cr.values();
  auto rv = out.r.values(), gv = out.g.values(), bv = out.b.values();
  for (std::size_t i = 0; i < yv.size(); ++i) {
    const double dy = yv[i] * 255.0 - 16.0;
    const double dcb = cbv[i] * 255.0 - 128.0;
    const double dcr = crv[i] * 255.0 - 128.0;
    rv[i] = inverse[0][0] * dy + inverse[0][1] * dcb + inverse[0][2] * dcr;
    gv[i] = inverse[1][0] * dy + inverse[1][1] * dcb + inverse[1][2] * dcr;
    bv[i] = inverse[2][0] * dy + inverse[2][1] * dcb + inverse[2][2] * dcr;
  }
  return out;
}

}  // namespace iqlut
