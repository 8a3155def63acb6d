#pragma once

#include <span>
#include <vector>

#include "iqlut/model.hpp"

namespace iqlut {

/// The per-pixel scalar -> vector maps of one block, one per input channel.
/// Implemented by exact subnetworks (float path) and by interpolated tables
/// (quantized and LUT paths); the convolution machinery is shared.
class ChannelFunctions {
 public:
  virtual ~ChannelFunctions() = default;

  virtual int channels() const = 0;
  virtual int entry_width() const = 0;
  /// Writes entry_width() values for input `x` of channel `channel`.
  virtual void evaluate(int channel, double x, std::span<double> out) const = 0;
};

class SubnetFunctions final : public ChannelFunctions {
 public:
  explicit SubnetFunctions(std::span<const SubnetParams> subnets);

  int channels() const override { return static_cast<int>(subnets_.size()); }
  int entry_width() const override { return subnets_.empty() ? 0 : subnets_[0].output_width(); }
  void evaluate(int channel, double x, std::span<double> out) const override;

 private:
  std::span<const SubnetParams> subnets_;
};

}  // namespace iqlut
