#pragma once

#include <variant>

#include "iqlut/model.hpp"

namespace iqlut {

/// Symmetric signed level grid on [-1, 1]: levels k / m for integer
/// k in [-m, m], m = 2^(bits-1) - 1, i.e. 2^bits - 1 levels. Level indices
/// run 0 .. levels()-1 from -1 to +1.
class LevelGrid {
 public:
  explicit LevelGrid(int bits);

  int bits() const noexcept { return bits_; }
  int half_span() const noexcept { return half_span_; }  // m
  int levels() const noexcept { return 2 * half_span_ + 1; }
  double spacing() const noexcept { return 1.0 / half_span_; }
  double level_value(int index) const noexcept {
    return static_cast<double>(index - half_span_) / half_span_;
  }

 private:
  int bits_;
  int half_span_;
};

/// Result of rounding a transformed value both down and up onto the grid.
struct GridPosition {
  int floor_index = 0;
  int ceil_index = 0;
  double x_trans = 0.0;

  bool on_grid() const noexcept { return floor_index == ceil_index; }
};

/// Transformed values within this distance (in units of the grid spacing) of
/// a level are treated as lying on it.
inline constexpr double kOnGridTolerance = 1e-9;

/// Rounds x_trans onto `grid`, returning the bracketing level indices.
GridPosition bracket_on_grid(const LevelGrid& grid, double x_trans);

/// The piecewise-linear companding map T_{a,b} on [-1, 1]:
///   T(x) = -1 + s_o (x + 1)   for x <= -a
///   T(x) = s_m x              for |x| < a
///   T(x) = b + s_o (x - a)    for x >= a
/// with s_m = b / a and s_o = (1 - b) / (1 - a). It is odd, strictly
/// increasing, fixes -1, 0, 1 and maps a to b. Its inverse is T_{b,a}.
class NonUniformQuantizer {
 public:
  /// Requires 0 < a < 1, 0 < b < 1 and bits >= 2 (ConfigError otherwise).
  NonUniformQuantizer(double a, double b, int bits);

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  int bits() const noexcept { return grid_.bits(); }
  double middle_slope() const noexcept { return b_ / a_; }
  double outer_slope() const noexcept { return (1.0 - b_) / (1.0 - a_); }
  const LevelGrid& grid() const noexcept { return grid_; }

  /// Inputs outside [-1, 1] are clamped first.
  double transform(double x) const noexcept;
  double inverse_transform(double y) const noexcept;

  GridPosition quantize_bidirectional(double x) const noexcept;

 private:
  double a_;
  double b_;
  LevelGrid grid_;
};

/// Plain uniform quantization on the same grid (no companding).
class UniformQuantizer {
 public:
  explicit UniformQuantizer(int bits);

  int bits() const noexcept { return grid_.bits(); }
  const LevelGrid& grid() const noexcept { return grid_; }
  double transform(double x) const noexcept;
  double inverse_transform(double y) const noexcept;
  GridPosition quantize_bidirectional(double x) const noexcept;

 private:
  LevelGrid grid_;
};

enum class QuantScheme { kNonUniform, kUniform };

/// Affine map of a calibrated activation range [lo, hi] onto [-1, 1].
struct ActivationRange {
  double lo = -1.0;
  double hi = 1.0;

  double normalize(double x) const noexcept;    // clamped to [-1, 1]
  double denormalize(double u) const noexcept;
};

/// Everything a block needs to quantize raw activations: range
/// normalization followed by the (non-)uniform quantizer.
class BlockQuantizer {
 public:
  BlockQuantizer(const BlockQuant& params, QuantScheme scheme = QuantScheme::kNonUniform);

  int bits() const noexcept { return grid().bits(); }
  int levels() const noexcept { return grid().levels(); }
  const LevelGrid& grid() const noexcept;
  const ActivationRange& range() const noexcept { return range_; }

  /// Normalized-domain view (input already in [-1, 1]).
  GridPosition quantize_normalized(double u) const noexcept;
  /// Raw activation in.
  GridPosition position(double x) const noexcept { return quantize_normalized(range_.normalize(x)); }

  /// The raw activation whose transformed value is exactly level `index`.
  double preimage(int index) const noexcept;

 private:
  ActivationRange range_;
  std::variant<NonUniformQuantizer, UniformQuantizer> quantizer_;
};

}  // namespace iqlut
