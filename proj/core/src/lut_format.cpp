#include "iqlut/lut_format.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "iqlut/atomic_file.hpp"
#include "iqlut/error.hpp"
#include "lut_layout.hpp"

namespace iqlut {

namespace detail {

std::uint32_t crc32(std::span<const std::uint8_t> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t pos = 0;
  while (pos < data.size()) {
    const std::size_t n = std::min<std::size_t>(data.size() - pos, 1u << 30);
    crc = ::crc32(crc, data.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace detail

TableRegion table_region(const LutModel& model) {
  TableRegion r;
  r.offset = layout::kPreambleBytes;
  for (const LutBlock& b : model.blocks) {
    r.offset += layout::kBlockHeaderBytes + b.tables.size() * layout::kTableHeaderBytes;
    for (const LutTable& t : b.tables) {
      r.length += static_cast<std::uint64_t>(t.codes.size()) * code_bytes(model.output_bits);
    }
  }
  return r;
}

std::vector<std::uint8_t> serialize(const LutModel& model) {
  model.validate();
  detail::ByteWriter w;
  w.put_raw(std::string_view(layout::kMagic, sizeof(layout::kMagic)));
  w.put<std::uint16_t>(layout::kVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(model.layers));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(model.channels));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(model.upscale));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(model.kernel.height));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(model.kernel.width));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(model.output_bits));

  for (const LutBlock& b : model.blocks) {
    w.put<float>(static_cast<float>(b.quant.a));
    w.put<float>(static_cast<float>(b.quant.b));
    w.put<float>(b.alpha);
    w.put<float>(static_cast<float>(b.quant.range_lo));
    w.put<float>(static_cast<float>(b.quant.range_hi));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(b.quant.bits));
    for (const LutTable& t : b.tables) {
      w.put<float>(t.out_scale);
      w.put<float>(t.out_offset);
    }
  }
  const int width = code_bytes(model.output_bits);
  for (const LutBlock& b : model.blocks) {
    for (const LutTable& t : b.tables) {
      for (std::uint16_t c : t.codes) {
        if (width == 1) {
          w.put<std::uint8_t>(static_cast<std::uint8_t>(c));
        } else {
          w.put<std::uint16_t>(c);
        }
      }
    }
  }
  w.put<std::uint32_t>(detail::crc32(w.bytes()));
  return w.take();
}

LutModel deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(layout::kMagic) ||
      !std::equal(std::begin(layout::kMagic), std::end(layout::kMagic), bytes.begin(),
                  [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
    throw IntegrityError("not an IQLUT file (wrong magic)");
  }
  detail::ByteReader r(bytes);
  r.get_bytes(sizeof(layout::kMagic));
  const auto version = r.get<std::uint16_t>();
  if (version != layout::kVersion) {
    throw IntegrityError(fmt::format("unsupported IQLUT version {} (expected {})", version, layout::kVersion));
  }
  if (bytes.size() < layout::kFixedBytes) throw IntegrityError("IQLUT payload truncated");
  const auto body = bytes.first(bytes.size() - layout::kChecksumBytes);
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof(stored));
  if (detail::crc32(body) != stored) throw IntegrityError("IQLUT checksum mismatch");

  detail::ByteReader in(body);
  in.get_bytes(sizeof(layout::kMagic) + sizeof(std::uint16_t));
  LutModel m;
  m.layers = in.get<std::uint16_t>();
  m.channels = in.get<std::uint16_t>();
  m.upscale = in.get<std::uint16_t>();
  m.kernel.height = in.get<std::uint16_t>();
  m.kernel.width = in.get<std::uint16_t>();
  m.output_bits = in.get<std::uint8_t>();
  if (m.layers < 1 || m.channels < 1 || m.upscale < 1 || m.kernel.height < 1 || m.kernel.width < 1 ||
      m.output_bits < 2 || m.output_bits > 16) {
    throw IntegrityError("IQLUT header declares an invalid architecture");
  }
  ModelSpec geometry;
  geometry.layers = m.layers;
  geometry.channels = m.channels;
  geometry.upscale = m.upscale;
  geometry.kernel = m.kernel;

  for (int b = 0; b <= m.layers; ++b) {
    LutBlock block;
    block.quant.a = in.get<float>();
    block.quant.b = in.get<float>();
    block.alpha = in.get<float>();
    block.quant.range_lo = in.get<float>();
    block.quant.range_hi = in.get<float>();
    block.quant.bits = in.get<std::uint8_t>();
    block.quant.calibrated = true;
    if (block.quant.bits < 2 || block.quant.bits > 16) {
      throw IntegrityError(fmt::format("block {} declares an invalid bit-depth", b));
    }
    const int levels = (1 << block.quant.bits) - 1;
    for (int c = 0; c < geometry.input_channels(b); ++c) {
      LutTable t;
      t.levels = levels;
      t.entry_width = geometry.entry_width(b);
      t.out_bits = m.output_bits;
      t.out_scale = in.get<float>();
      t.out_offset = in.get<float>();
      block.tables.push_back(std::move(t));
    }
    m.blocks.push_back(std::move(block));
  }
  const int width = code_bytes(m.output_bits);
  for (LutBlock& block : m.blocks) {
    for (LutTable& t : block.tables) {
      const std::size_t n = static_cast<std::size_t>(t.levels) * t.entry_width;
      if (in.remaining() < n * width) throw IntegrityError("IQLUT table region truncated");
      t.codes.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        t.codes[i] = width == 1 ? in.get<std::uint8_t>() : in.get<std::uint16_t>();
      }
    }
  }
  if (in.remaining() != 0) throw IntegrityError("IQLUT payload has trailing bytes");
  m.validate();
  return m;
}

void save_lut_model(const std::filesystem::path& path, const LutModel& model) {
  const auto bytes = serialize(model);
  write_file_atomically(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

LutModel load_lut_model(const std::filesystem::path& path) {
  return deserialize(detail::read_file(path.string()));
}

}  // namespace iqlut
