#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace iqlut {

/// One channel of an image, row-major. Values are unit-normalized ([0, 1])
/// everywhere inside the library; 8-bit integers only exist at file boundaries.
class ImagePlane {
 public:
  ImagePlane() = default;
  ImagePlane(int height, int width, double fill = 0.0);
  ImagePlane(int height, int width, std::vector<double> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double operator()(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const ImagePlane& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// Clamps every value into [0, 1].
ImagePlane clamp_unit(ImagePlane plane);

/// Rounds every value to the nearest 8-bit level k/255 (after clamping).
ImagePlane quantize_8bit(ImagePlane plane);

/// Crops the plane so both dimensions are multiples of `factor` (top-left anchored).
ImagePlane modcrop(const ImagePlane& plane, int factor);

/// Removes `border` pixels from every side.
ImagePlane shave(const ImagePlane& plane, int border);

ImagePlane crop(const ImagePlane& plane, int top, int left, int height, int width);

}  // namespace iqlut
