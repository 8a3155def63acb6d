#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "iqlut/image.hpp"

namespace iqlut {

/// Supported images of a directory, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Luma plane of an image file, rounded to 8-bit codes like an integer
/// rgb2ycbcr. Grayscale files are treated as R = G = B.
ImagePlane load_luma(const std::filesystem::path& path);

/// Bicubic downscale by `scale`, rounded to 8-bit codes (the usual LR
/// degradation). `hr` must be divisible by `scale`.
ImagePlane degrade(const ImagePlane& hr, int scale);

struct TrainingSample {
  ImagePlane lr;
  ImagePlane hr;
};

struct DatasetOptions {
  int scale = 4;
  int crop = 48;  // HR crop side, a multiple of scale
  std::uint64_t seed = 1;
  bool augment = true;  // random flips and 90-degree rotations
};

/// Endless, seeded stream of aligned (LR, HR) crops drawn from a fixed set
/// of HR luma planes.
class BatchStream {
 public:
  /// Throws DataError for an empty set and ConfigError when the crop does
  /// not fit into the smallest image or is not a multiple of the scale.
  BatchStream(std::vector<ImagePlane> hr_images, const DatasetOptions& options);

  TrainingSample next();
  std::vector<TrainingSample> next_batch(int count);

  int image_count() const noexcept { return static_cast<int>(hr_.size()); }
  const DatasetOptions& options() const noexcept { return options_; }
  const std::vector<ImagePlane>& lr_images() const noexcept { return lr_; }

  /// Serialized generator state, for checkpoints.
  std::string rng_state() const;
  void set_rng_state(const std::string& state);

 private:
  std::uint64_t draw(std::uint64_t bound);

  DatasetOptions options_;
  std::vector<ImagePlane> hr_;
  std::vector<ImagePlane> lr_;
  std::mt19937_64 rng_;
};

/// Loads every image of `dir` as luma, modcrops it to the scale and wraps
/// it in a stream.
BatchStream ingest_dataset(const std::filesystem::path& dir, const DatasetOptions& options);

/// One of the 8 symmetries of the square: bit 0 flips columns, bit 1 flips
/// rows, bit 2 transposes first.
ImagePlane dihedral(const ImagePlane& plane, int k);

}  // namespace iqlut
