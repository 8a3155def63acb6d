#include "iqlut/dataset.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "iqlut/color.hpp"
#include "iqlut/error.hpp"
#include "iqlut/image_io.hpp"
#include "iqlut/resize.hpp"

namespace iqlut {

namespace fs = std::filesystem;

std::vector<fs::path> list_images(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw DataError(fmt::format("not a directory: {}", dir.string()));
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_supported_image(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

ImagePlane load_luma(const fs::path& path) {
  const auto planes = load_image(path);
  if (planes.size() == 1) return quantize_8bit(rgb_to_y(planes[0], planes[0], planes[0]));
  return quantize_8bit(rgb_to_y(planes[0], planes[1], planes[2]));
}

ImagePlane degrade(const ImagePlane& hr, int scale) {
  if (hr.height() % scale != 0 || hr.width() % scale != 0) {
    throw ConfigError("HR plane is not divisible by the scale");
  }
  return quantize_8bit(resize(hr, 1.0 / scale, ResizeKernel::kBicubic));
}

ImagePlane dihedral(const ImagePlane& plane, int k) {
  const bool transpose = (k & 4) != 0;
  const int h = transpose ? plane.width() : plane.height();
  const int w = transpose ? plane.height() : plane.width();
  ImagePlane out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sy0 = (k & 2) ? h - 1 - y : y;
      const int sx0 = (k & 1) ? w - 1 - x : x;
      out(y, x) = transpose ? plane(sx0, sy0) : plane(sy0, sx0);
    }
  }
  return out;
}

BatchStream::BatchStream(std::vector<ImagePlane> hr_images, const DatasetOptions& options)
    : options_(options), hr_(std::move(hr_images)), rng_(options.seed) {
  if (hr_.empty()) throw DataError("dataset contains no images");
  if (options_.scale < 1) throw ConfigError("scale must be >= 1");
  if (options_.crop < options_.scale || options_.crop % options_.scale != 0) {
    throw ConfigError(fmt::format("crop {} is not a positive multiple of scale {}", options_.crop,
                                  options_.scale));
  }
  for (std::size_t i = 0; i < hr_.size(); ++i) {
    hr_[i] = modcrop(hr_[i], options_.scale);
    if (hr_[i].height() < options_.crop || hr_[i].width() < options_.crop) {
      throw ConfigError(fmt::format("crop {} exceeds image {} ({}x{})", options_.crop, i,
                                    hr_[i].width(), hr_[i].height()));
    }
    lr_.push_back(degrade(hr_[i], options_.scale));
  }
}

std::uint64_t BatchStream::draw(std::uint64_t bound) { return rng_() % bound; }

TrainingSample BatchStream::next() {
  const int s = options_.scale;
  const int lc = options_.crop / s;
  const auto idx = static_cast<std::size_t>(draw(hr_.size()));
  const ImagePlane& lr = lr_[idx];
  const int ly = static_cast<int>(draw(static_cast<std::uint64_t>(lr.height() - lc + 1)));
  const int lx = static_cast<int>(draw(static_cast<std::uint64_t>(lr.width() - lc + 1)));
  TrainingSample sample{crop(lr, ly, lx, lc, lc), crop(hr_[idx], ly * s, lx * s, options_.crop, options_.crop)};
  if (options_.augment) {
    const int k = static_cast<int>(draw(8));
    sample.lr = dihedral(sample.lr, k);
    sample.hr = dihedral(sample.hr, k);
  }
  return sample;
}

std::vector<TrainingSample> BatchStream::next_batch(int count) {
  std::vector<TrainingSample> batch;
  batch.reserve(count);
  for (int i = 0; i < count; ++i) batch.push_back(next());
  return batch;
}

std::string BatchStream::rng_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void BatchStream::set_rng_state(const std::string& state) {
  std::istringstream is(state);
  std::mt19937_64 rng;
  is >> rng;
  if (is.fail()) throw IntegrityError("invalid generator state");
  rng_ = rng;
}

BatchStream ingest_dataset(const fs::path& dir, const DatasetOptions& options) {
  const auto files = list_images(dir);
  if (files.empty()) throw DataError(fmt::format("no images in {}", dir.string()));
  std::vector<ImagePlane> planes;
  planes.reserve(files.size());
  for (const auto& f : files) planes.push_back(load_luma(f));
  return BatchStream(std::move(planes), options);
}

}  // namespace iqlut
