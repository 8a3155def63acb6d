#include "iqlut/quantizer.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "iqlut/error.hpp"

namespace iqlut {
namespace {

// T_{a,b} on |x| in [0, 1]; callers restore the sign.
double companding_magnitude(double a, double b, double x) noexcept {
  if (x < a) return (b / a) * x;
  return b + ((1.0 - b) / (1.0 - a)) * (x - a);
}

double odd_companding(double a, double b, double x) noexcept {
  x = std::clamp(x, -1.0, 1.0);
  if (a == b) return x;
  if (x == 1.0 || x == -1.0) return x;
  const double m = companding_magnitude(a, b, std::abs(x));
  return x < 0.0 ? -m : m;
}

}  // namespace

LevelGrid::LevelGrid(int bits) : bits_(bits), half_span_(0) {
  if (bits < 2 || bits > 16) throw ConfigError(fmt::format("bit-depth {} outside [2, 16]", bits));
  half_span_ = (1 << (bits - 1)) - 1;
}

GridPosition bracket_on_grid(const LevelGrid& grid, double x_trans) {
  const int m = grid.half_span();
  x_trans = std::clamp(x_trans, -1.0, 1.0);
  const double scaled = x_trans * m;
  const double nearest = std::round(scaled);
  GridPosition pos;
  pos.x_trans = x_trans;
  if (std::abs(scaled - nearest) <= kOnGridTolerance) {
    pos.floor_index = pos.ceil_index = static_cast<int>(nearest) + m;
    return pos;
  }
  const int lower = static_cast<int>(std::floor(scaled));
  pos.floor_index = std::clamp(lower, -m, m) + m;
  pos.ceil_index = std::clamp(lower + 1, -m, m) + m;
  return pos;
}

NonUniformQuantizer::NonUniformQuantizer(double a, double b, int bits) : a_(a), b_(b), grid_(bits) {
  if (!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0)) {
    throw ConfigError(fmt::format("quantizer breakpoints need 0 < a, b < 1 (got {}, {})", a, b));
  }
}

double NonUniformQuantizer::transform(double x) const noexcept { return odd_companding(a_, b_, x); }

double NonUniformQuantizer::inverse_transform(double y) const noexcept {
  return odd_companding(b_, a_, y);
}

GridPosition NonUniformQuantizer::quantize_bidirectional(double x) const noexcept {
  return bracket_on_grid(grid_, transform(x));
}

UniformQuantizer::UniformQuantizer(int bits) : grid_(bits) {}

double UniformQuantizer::transform(double x) const noexcept { return std::clamp(x, -1.0, 1.0); }

double UniformQuantizer::inverse_transform(double y) const noexcept {
  return std::clamp(y, -1.0, 1.0);
}

GridPosition UniformQuantizer::quantize_bidirectional(double x) const noexcept {
  return bracket_on_grid(grid_, transform(x));
}

double ActivationRange::normalize(double x) const noexcept {
  const double u = 2.0 * (x - lo) / (hi - lo) - 1.0;
  return std::clamp(u, -1.0, 1.0);
}

double ActivationRange::denormalize(double u) const noexcept {
  return lo + (u + 1.0) * 0.5 * (hi - lo);
}

namespace {

std::variant<NonUniformQuantizer, UniformQuantizer> make_quantizer(const BlockQuant& p,
                                                                    QuantScheme scheme) {
  if (scheme == QuantScheme::kUniform) return UniformQuantizer(p.bits);
  return NonUniformQuantizer(p.a, p.b, p.bits);
}

}  // namespace

BlockQuantizer::BlockQuantizer(const BlockQuant& params, QuantScheme scheme)
    : range_{params.range_lo, params.range_hi}, quantizer_(make_quantizer(params, scheme)) {
  if (!(params.range_hi > params.range_lo)) throw ConfigError("activation range is empty");
}

const LevelGrid& BlockQuantizer::grid() const noexcept {
  return std::visit([](const auto& q) -> const LevelGrid& { return q.grid(); }, quantizer_);
}

GridPosition BlockQuantizer::quantize_normalized(double u) const noexcept {
  return std::visit([u](const auto& q) { return q.quantize_bidirectional(u); }, quantizer_);
}

double BlockQuantizer::preimage(int index) const noexcept {
  const double level = grid().level_value(index);
  const double u = std::visit([level](const auto& q) { return q.inverse_transform(level); }, quantizer_);
  return range_.denormalize(u);
}

}  // namespace iqlut
