#include "iqlut/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "iqlut/atomic_file.hpp"
#include "iqlut/error.hpp"

namespace iqlut {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::uint8_t to_code(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::vector<ImagePlane> planes_from_interleaved(const std::uint8_t* pixels, int height, int width,
                                                int channels) {
  std::vector<ImagePlane> planes(channels, ImagePlane(height, width));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint8_t* px = pixels + (static_cast<std::size_t>(y) * width + x) * channels;
      for (int c = 0; c < channels; ++c) planes[c](y, x) = px[c] / 255.0;
    }
  }
  return planes;
}

std::vector<std::uint8_t> interleave(const std::vector<ImagePlane>& planes) {
  const int h = planes[0].height();
  const int w = planes[0].width();
  const int n = static_cast<int>(planes.size());
  std::vector<std::uint8_t> out(static_cast<std::size_t>(h) * w * n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < n; ++c) {
        out[(static_cast<std::size_t>(y) * w + x) * n + c] = to_code(planes[c](y, x));
      }
    }
  }
  return out;
}

std::vector<ImagePlane> load_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw DataError("unsupported PNG (16-bit samples): " + path.string());
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw DataError("zero-dimension image: " + path.string());
  }
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return planes_from_interleaved(buffer.data(), static_cast<int>(image.height),
                                 static_cast<int>(image.width), color ? 3 : 1);
}

// Binary netpbm: P5 (gray) and P6 (RGB) with maxval 255.
std::vector<ImagePlane> load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  auto next_token = [&in]() {
    std::string token;
    int c;
    while ((c = in.get()) != EOF) {
      if (c == '#') {
        while ((c = in.get()) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!token.empty()) break;
        continue;
      }
      token.push_back(static_cast<char>(c));
    }
    return token;
  };
  const std::string magic = next_token();
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw DataError("unsupported netpbm variant '" + magic + "': " + path.string());
  }
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw DataError("malformed netpbm header: " + path.string());
  }
  if (maxval != 255) throw DataError("unsupported netpbm maxval (only 255): " + path.string());
  if (width <= 0 || height <= 0) throw DataError("zero-dimension image: " + path.string());
  std::vector<std::uint8_t> buffer(static_cast<std::size_t>(width) * height * channels);
  in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
  if (in.gcount() != static_cast<std::streamsize>(buffer.size())) {
    throw DataError("truncated netpbm payload: " + path.string());
  }
  return planes_from_interleaved(buffer.data(), height, width, channels);
}

}  // namespace

bool is_supported_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

std::vector<ImagePlane> load_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw DataError("not a readable file: " + path.string());
  }
  const std::string ext = lower_extension(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return load_pnm(path);
  throw DataError("unsupported image format: " + path.string());
}

void save_image(const std::filesystem::path& path, const std::vector<ImagePlane>& channels) {
  if (channels.size() != 1 && channels.size() != 3) {
    throw ConfigError("save_image expects 1 or 3 planes");
  }
  for (const auto& p : channels) {
    if (!p.same_shape(channels[0])) throw ConfigError("save_image planes differ in shape");
  }
  if (channels[0].empty()) throw ConfigError("cannot save an empty image");
  const int h = channels[0].height();
  const int w = channels[0].width();
  const std::vector<std::uint8_t> pixels = interleave(channels);
  const std::string ext = lower_extension(path);

  if (ext == ".png") {
    write_atomically(path, [&](const std::filesystem::path& tmp) {
      png_image image;
      std::memset(&image, 0, sizeof(image));
      image.version = PNG_IMAGE_VERSION;
      image.width = static_cast<png_uint_32>(w);
      image.height = static_cast<png_uint_32>(h);
      image.format = channels.size() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
      if (!png_image_write_to_file(&image, tmp.c_str(), 0, pixels.data(), 0, nullptr)) {
        throw DataError("cannot write PNG " + path.string() + ": " + image.message);
      }
    });
    return;
  }
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    if ((ext == ".pgm" && channels.size() != 1) || (ext == ".ppm" && channels.size() != 3)) {
      throw ConfigError("channel count does not match " + ext);
    }
    std::string header = (channels.size() == 1 ? "P5\n" : "P6\n") + std::to_string(w) + " " +
                         std::to_string(h) + "\n255\n";
    std::string bytes = header;
    bytes.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    write_file_atomically(path, bytes);
    return;
  }
  throw ConfigError("unsupported output image format: " + path.string());
}

}  // namespace iqlut
