#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iqlut/image.hpp"

namespace iqlut {

/// Channel-major (C, H, W) feature map.
class FeatureTensor {
 public:
  FeatureTensor() = default;
  FeatureTensor(int channels, int height, int width, double fill = 0.0);

  static FeatureTensor from_plane(const ImagePlane& plane);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(int c, int y, int x) { return data_[(c * plane_size()) + static_cast<std::size_t>(y) * width_ + x]; }
  double at(int c, int y, int x) const {
    return data_[(c * plane_size()) + static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<double> channel(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> channel(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const FeatureTensor& o) const noexcept {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }

  friend bool operator==(const FeatureTensor&, const FeatureTensor&) = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

}  // namespace iqlut
