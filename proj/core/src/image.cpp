#include "iqlut/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iqlut/error.hpp"

namespace iqlut {

ImagePlane::ImagePlane(int height, int width, double fill)
    : height_(height), width_(width) {
  if (height < 0 || width < 0) throw ConfigError("negative image dimensions");
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

ImagePlane::ImagePlane(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 0 || width < 0) throw ConfigError("negative image dimensions");
  if (data_.size() != static_cast<std::size_t>(height) * width) {
    throw ConfigError("plane data length " + std::to_string(data_.size()) + " does not match " +
                      std::to_string(height) + "x" + std::to_string(width));
  }
}

ImagePlane clamp_unit(ImagePlane plane) {
  for (double& v : plane.values()) v = std::clamp(v, 0.0, 1.0);
  return plane;
}

ImagePlane quantize_8bit(ImagePlane plane) {
  for (double& v : plane.values()) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return plane;
}

ImagePlane crop(const ImagePlane& plane, int top, int left, int height, int width) {
  if (top < 0 || left < 0 || height < 0 || width < 0 || top + height > plane.height() ||
      left + width > plane.width()) {
    throw ConfigError("crop window outside the plane");
  }
  ImagePlane out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out(y, x) = plane(top + y, left + x);
  }
  return out;
}

ImagePlane modcrop(const ImagePlane& plane, int factor) {
  if (factor < 1) throw ConfigError("modcrop factor must be >= 1");
  return crop(plane, 0, 0, plane.height() - plane.height() % factor,
              plane.width() - plane.width() % factor);
}

ImagePlane shave(const ImagePlane& plane, int border) {
  if (border < 0) throw ConfigError("shave border must be >= 0");
  if (2 * border >= plane.height() || 2 * border >= plane.width()) {
    throw ConfigError("shave border consumes the whole plane");
  }
  return crop(plane, border, border, plane.height() - 2 * border, plane.width() - 2 * border);
}

}  // namespace iqlut
