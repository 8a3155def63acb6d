#include "iqlut/lut.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "iqlut/error.hpp"
#include "iqlut/subnet.hpp"
#include "lut_layout.hpp"

namespace iqlut {

void LutTable::fetch(int level, std::span<double> out) const {
  const std::uint16_t* row = codes.data() + static_cast<std::size_t>(level) * entry_width;
  for (int i = 0; i < entry_width; ++i) out[i] = dequantize(row[i]);
}

LutTable quantize_table(const DenseTable& table, int out_bits) {
  if (out_bits < 2 || out_bits > 16) throw ConfigError("output bit-depth must be in [2, 16]");
  LutTable lut;
  lut.levels = table.levels();
  lut.entry_width = table.entry_width();
  lut.out_bits = out_bits;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : table.values()) {
    if (!std::isfinite(v)) throw NumericalError("non-finite value while building a LUT");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (table.values().empty()) lo = hi = 0.0;
  const double max_code = static_cast<double>(lut.max_code());
  // Offset rounds down and the scale rounds up, so every value lies inside
  // [offset, offset + scale * max_code] and decodes within half a step.
  lut.out_offset = static_cast<float>(lo);
  if (static_cast<double>(lut.out_offset) > lo) {
    lut.out_offset = std::nextafter(lut.out_offset, -std::numeric_limits<float>::infinity());
  }
  lut.out_scale = static_cast<float>((hi - static_cast<double>(lut.out_offset)) / max_code);
  while (static_cast<double>(lut.out_offset) + static_cast<double>(lut.out_scale) * max_code < hi) {
    lut.out_scale = std::nextafter(lut.out_scale, std::numeric_limits<float>::infinity());
  }

  const double offset = lut.out_offset;
  const double scale = lut.out_scale;
  lut.codes.resize(table.values().size());
  for (std::size_t i = 0; i < lut.codes.size(); ++i) {
    double code = scale > 0.0 ? std::round((table.values()[i] - offset) / scale) : 0.0;
    code = std::clamp(code, 0.0, max_code);
    lut.codes[i] = static_cast<std::uint16_t>(code);
  }
  return lut;
}

LutTable build_lut(const SubnetParams& params, const BlockQuantizer& quantizer, int out_bits) {
  return quantize_table(tabulate(params, quantizer), out_bits);
}

DenseTable dequantize(const LutTable& table) {
  DenseTable dense(table.levels, table.entry_width);
  for (int k = 0; k < table.levels; ++k) table.fetch(k, dense.entry(k));
  return dense;
}

std::vector<double> dpfi_eval(const LutTable& table, const NonUniformQuantizer& quantizer, double x) {
  if (table.levels != quantizer.grid().levels()) {
    throw IntegrityError(fmt::format("table has {} levels, quantizer grid has {}", table.levels,
                                     quantizer.grid().levels()));
  }
  const GridPosition pos = quantizer.quantize_bidirectional(x);
  std::vector<double> lo(table.entry_width);
  std::vector<double> out(table.entry_width);
  table.fetch(pos.floor_index, lo);
  if (pos.on_grid()) return lo;
  std::vector<double> hi(table.entry_width);
  table.fetch(pos.ceil_index, hi);
  fuse(lo, hi, fusion_weight(pos, quantizer.grid()), out);
  return out;
}

ModelSpec LutModel::spec() const {
  ModelSpec s;
  s.layers = layers;
  s.channels = channels;
  s.upscale = upscale;
  s.kernel = kernel;
  s.output_bits = output_bits;
  for (const LutBlock& b : blocks) s.quant.push_back(b.quant);
  return s;
}

void LutModel::validate() const {
  const ModelSpec s = spec();
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw IntegrityError(std::string("inconsistent LUT model: ") + e.what());
  }
  for (int b = 0; b < s.block_count(); ++b) {
    const LutBlock& block = blocks[b];
    if (static_cast<int>(block.tables.size()) != s.input_channels(b)) {
      throw IntegrityError(fmt::format("block {} has {} tables, expected {}", b, block.tables.size(),
                                       s.input_channels(b)));
    }
    const int levels = LevelGrid(block.quant.bits).levels();
    for (const LutTable& t : block.tables) {
      if (t.levels != levels || t.entry_width != s.entry_width(b) || t.out_bits != output_bits ||
          t.codes.size() != static_cast<std::size_t>(levels) * t.entry_width) {
        throw IntegrityError(fmt::format("block {} table does not match the declared geometry", b));
      }
      if (!std::isfinite(t.out_scale) || !std::isfinite(t.out_offset) || t.out_scale < 0.0f) {
        throw IntegrityError(fmt::format("block {} table has an invalid dequantization affine", b));
      }
      for (std::uint16_t c : t.codes) {
        if (c > t.max_code()) throw IntegrityError(fmt::format("block {} code exceeds bit-depth", b));
      }
    }
  }
}

LutModel build_lut_model(const Model& source, int out_bits) {
  validate_model(source);
  const Model model = round_to_export_precision(source);
  LutModel lut;
  lut.layers = model.spec.layers;
  lut.channels = model.spec.channels;
  lut.upscale = model.spec.upscale;
  lut.kernel = model.spec.kernel;
  lut.output_bits = out_bits;
  for (int b = 0; b < model.spec.block_count(); ++b) {
    const BlockQuant& q = model.spec.quant[b];
    if (!q.calibrated) throw ConfigError(fmt::format("block {} quantizer is not calibrated", b));
    const BlockQuantizer quantizer(q);
    LutBlock block;
    block.quant = q;
    block.alpha = model.spec.is_upsample(b) ? 0.0f : static_cast<float>(model.blocks[b].alpha);
    for (const SubnetParams& p : model.blocks[b].subnets) {
      block.tables.push_back(build_lut(p, quantizer, out_bits));
    }
    lut.blocks.push_back(std::move(block));
  }
  lut.validate();
  return lut;
}

int code_bytes(int out_bits) { return (out_bits + 7) / 8; }

std::vector<TableGeometry> table_geometry(const ModelSpec& spec) {
  std::vector<TableGeometry> g;
  for (int b = 0; b < spec.block_count(); ++b) {
    g.push_back({spec.input_channels(b), spec.quant[b].bits, spec.entry_width(b)});
  }
  return g;
}

SizeReport lut_size_bytes(std::span<const TableGeometry> blocks, int out_bits) {
  SizeReport r;
  r.fixed_bytes = layout::kFixedBytes;
  for (const TableGeometry& g : blocks) {
    const std::uint64_t levels = (1ull << g.bits) - 1ull;
    const std::uint64_t bytes = static_cast<std::uint64_t>(g.input_channels) * levels *
                                static_cast<std::uint64_t>(g.entry_width) * code_bytes(out_bits);
    r.block_table_bytes.push_back(bytes);
    r.table_bytes += bytes;
    r.metadata_bytes += layout::kBlockHeaderBytes +
                        static_cast<std::uint64_t>(g.input_channels) * layout::kTableHeaderBytes;
  }
  return r;
}

SizeReport lut_size_bytes(const ModelSpec& spec) {
  spec.validate();
  const auto g = table_geometry(spec);
  return lut_size_bytes(g, spec.output_bits);
}

}  // namespace iqlut
