#include "iqlut/tensor.hpp"

#include <algorithm>

#include "iqlut/error.hpp"

namespace iqlut {

FeatureTensor::FeatureTensor(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 0 || height < 0 || width < 0) throw ConfigError("negative tensor dimensions");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

FeatureTensor FeatureTensor::from_plane(const ImagePlane& plane) {
  FeatureTensor t(1, plane.height(), plane.width());
  std::copy(plane.values().begin(), plane.values().end(), t.data_.begin());
  return t;
}

}  // namespace iqlut
