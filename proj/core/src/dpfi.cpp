#include "iqlut/dpfi.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "iqlut/subnet.hpp"

namespace iqlut {

SubnetFunctions::SubnetFunctions(std::span<const SubnetParams> subnets) : subnets_(subnets) {}

void SubnetFunctions::evaluate(int channel, double x, std::span<double> out) const {
  subnet_forward(subnets_[channel], x, out);
}

FusionWeight fusion_weight(double x_trans, double floor_level_value, int bits) {
  const LevelGrid grid(bits);
  const double t = (x_trans - floor_level_value) * grid.half_span();
  if (t < -kOnGridTolerance) {
    throw ConfigError(fmt::format("floor level {} lies above x_trans {}", floor_level_value, x_trans));
  }
  return {std::clamp(t, 0.0, 1.0)};
}

FusionWeight fusion_weight(const GridPosition& pos, const LevelGrid& grid) {
  if (pos.on_grid()) return {0.0};
  return fusion_weight(pos.x_trans, grid.level_value(pos.floor_index), grid.bits());
}

void fuse(std::span<const double> floor_out, std::span<const double> ceil_out, FusionWeight t,
          std::span<double> out) {
  if (floor_out.size() != ceil_out.size() || out.size() != floor_out.size()) {
    throw ConfigError("fuse inputs differ in length");
  }
  const double w = t.t;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::lerp(floor_out[i], ceil_out[i], w);
  }
}

std::vector<double> fuse(std::span<const double> floor_out, std::span<const double> ceil_out,
                         FusionWeight t) {
  std::vector<double> out(floor_out.size());
  fuse(floor_out, ceil_out, t, out);
  return out;
}

DenseTable::DenseTable(int levels, int width)
    : levels_(levels), width_(width), values_(static_cast<std::size_t>(levels) * width, 0.0) {}

DenseTable tabulate(const SubnetParams& params, const BlockQuantizer& quantizer) {
  DenseTable table(quantizer.levels(), params.output_width());
  for (int k = 0; k < table.levels(); ++k) {
    const auto values = subnet_forward(params, quantizer.preimage(k));
    std::copy(values.begin(), values.end(), table.entry(k).begin());
  }
  return table;
}

TableFunctions::TableFunctions(std::vector<DenseTable> tables, BlockQuantizer quantizer)
    : tables_(std::move(tables)), quantizer_(std::move(quantizer)) {
  for (const DenseTable& t : tables_) {
    if (t.levels() != quantizer_.levels()) {
      throw IntegrityError(fmt::format("table has {} levels but the quantizer has {}", t.levels(),
                                       quantizer_.levels()));
    }
    if (t.entry_width() != tables_[0].entry_width()) {
      throw IntegrityError("tables of one block differ in entry width");
    }
  }
}

void TableFunctions::evaluate(int channel, double x, std::span<double> out) const {
  dpfi_lookup(tables_[channel], quantizer_.grid(), quantizer_.position(x), out);
}

TableFunctions tabulate_block(const Block& block, const BlockQuantizer& quantizer) {
  std::vector<DenseTable> tables;
  tables.reserve(block.subnets.size());
  for (const SubnetParams& p : block.subnets) tables.push_back(tabulate(p, quantizer));
  return TableFunctions(std::move(tables), quantizer);
}

}  // namespace iqlut
