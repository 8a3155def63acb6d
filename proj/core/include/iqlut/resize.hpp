#pragma once

#include <string_view>

#include "iqlut/image.hpp"

namespace iqlut {

enum class ResizeKernel { kNearest, kBilinear, kBicubic };

/// Parses "nearest" | "bilinear" | "bicubic"; throws ConfigError otherwise.
ResizeKernel parse_resize_kernel(std::string_view name);
std::string_view to_string(ResizeKernel kernel);

/// Separable resampling with the conventions of MATLAB's imresize, which the
/// SR benchmarks are defined against:
///  - half-pixel centres: output sample o maps to input (o + 0.5) / scale - 0.5;
///  - bicubic uses the Keys kernel with a = -0.5;
///  - when shrinking, bilinear and bicubic kernels are widened by 1/scale
///    (antialiasing); nearest is never widened;
///  - taps beyond the border are mirrored (symmetric padding);
///  - weights are renormalized to sum to one.
/// Output dimensions are round(input * scale). No clamping is applied.
ImagePlane resize(const ImagePlane& plane, double scale, ResizeKernel kernel);

/// Same kernel conventions with explicit per-axis scales.
ImagePlane resize(const ImagePlane& plane, double scale_y, double scale_x, int out_height,
                  int out_width, ResizeKernel kernel);

}  // namespace iqlut
