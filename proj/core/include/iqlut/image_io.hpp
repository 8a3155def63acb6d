#pragma once

#include <filesystem>
#include <vector>

#include "iqlut/image.hpp"

namespace iqlut {

/// Reads an 8-bit lossless raster (PNG, binary PGM/PPM) into one plane per
/// channel: 1 plane for grayscale, 3 (R, G, B) for colour. Values are code/255.
/// Throws DataError for unreadable files, unsupported formats and empty images.
std::vector<ImagePlane> load_image(const std::filesystem::path& path);

/// Writes 1 or 3 planes as an 8-bit image; the format follows the extension
/// (.png, .pgm, .ppm). Values are clamped and rounded to the nearest code.
/// The file is written to a temporary sibling first and renamed into place.
void save_image(const std::filesystem::path& path, const std::vector<ImagePlane>& channels);

/// True for extensions load_image understands.
bool is_supported_image(const std::filesystem::path& path);

}  // namespace iqlut
