#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iqlut/image.hpp"
#include "iqlut/model.hpp"

namespace iqlut::testing {

// Procedural luma image: smooth gradient, a few sinusoid gratings and
// hard-edged shapes, so that bilinear upscaling leaves detail to recover.
ImagePlane synthetic_image(std::uint64_t seed, int height, int width);

std::vector<ImagePlane> synthetic_set(std::uint64_t seed, int count, int height, int width);

// Writes the planes as 8-bit grayscale PNGs named img_000.png, ...
void write_pngs(const std::filesystem::path& dir, const std::vector<ImagePlane>& planes);

class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Random spec with small geometry; `max_layers`, `max_channels` bound the draw.
ModelSpec random_spec(std::uint64_t seed, int max_layers = 3, int max_channels = 4);

// Model with parameters drawn from N(0, scale^2), alphas from N(0, 1) and
// calibrated ranges / (a, b) drawn at random.
Model random_model(const ModelSpec& spec, std::uint64_t seed, double scale = 0.5);

// Uniform [0, 1] plane.
ImagePlane random_plane(std::uint64_t seed, int height, int width);

}  // namespace iqlut::testing
