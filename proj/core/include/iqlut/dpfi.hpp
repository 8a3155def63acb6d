#pragma once

#include <span>
#include <vector>

#include "iqlut/channel_functions.hpp"
#include "iqlut/error.hpp"
#include "iqlut/quantizer.hpp"

namespace iqlut {

/// Interpolation weight between the floor and ceil table entries.
struct FusionWeight {
  double t = 0.0;  // in [0, 1]; exactly 0 on-grid
};

/// t = (x_trans - floor_level_value) * (2^(bits-1) - 1), clamped to [0, 1].
/// Throws ConfigError if the floor level lies above x_trans by more than the
/// on-grid tolerance.
FusionWeight fusion_weight(double x_trans, double floor_level_value, int bits);

/// Weight for a bracketed position: 0 when on-grid or clamped at the top level.
FusionWeight fusion_weight(const GridPosition& pos, const LevelGrid& grid);

/// (1 - t) * floor_out + t * ceil_out, element-wise.
void fuse(std::span<const double> floor_out, std::span<const double> ceil_out, FusionWeight t,
          std::span<double> out);
std::vector<double> fuse(std::span<const double> floor_out, std::span<const double> ceil_out,
                         FusionWeight t);

/// Real-valued table: `levels` rows of `width` entries.
class DenseTable {
 public:
  DenseTable() = default;
  DenseTable(int levels, int width);

  int levels() const noexcept { return levels_; }
  int entry_width() const noexcept { return width_; }
  std::span<double> entry(int level) {
    return {values_.data() + static_cast<std::size_t>(level) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const double> entry(int level) const {
    return {values_.data() + static_cast<std::size_t>(level) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const DenseTable&, const DenseTable&) = default;

 private:
  int levels_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

/// Evaluates the subnet at the preimage of every quantizer level.
DenseTable tabulate(const SubnetParams& params, const BlockQuantizer& quantizer);

/// Table lookup with dual-path fused interpolation: brackets the position,
/// fetches both entries and blends them. `table` needs levels() and
/// entry(level) -> span<const double>.
template <typename Table>
void dpfi_lookup(const Table& table, const LevelGrid& grid, const GridPosition& pos,
                 std::span<double> out) {
  if (pos.floor_index < 0 || pos.ceil_index >= table.levels()) {
    throw IntegrityError("table index outside the table; quantizer and table disagree");
  }
  const auto lo = table.entry(pos.floor_index);
  if (pos.on_grid()) {
    std::copy(lo.begin(), lo.end(), out.begin());
    return;
  }
  fuse(lo, table.entry(pos.ceil_index), fusion_weight(pos, grid), out);
}

/// Per-channel interpolated tables behind the ChannelFunctions interface.
class TableFunctions final : public ChannelFunctions {
 public:
  TableFunctions(std::vector<DenseTable> tables, BlockQuantizer quantizer);

  int channels() const override { return static_cast<int>(tables_.size()); }
  int entry_width() const override { return tables_.empty() ? 0 : tables_[0].entry_width(); }
  void evaluate(int channel, double x, std::span<double> out) const override;

  const BlockQuantizer& quantizer() const noexcept { return quantizer_; }
  const std::vector<DenseTable>& tables() const noexcept { return tables_; }

 private:
  std::vector<DenseTable> tables_;
  BlockQuantizer quantizer_;
};

/// Tables for every subnet of a block under `quantizer`.
TableFunctions tabulate_block(const Block& block, const BlockQuantizer& quantizer);

}  // namespace iqlut
