#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace iqlut {

struct KernelShape {
  int height = 2;
  int width = 2;

  int taps() const noexcept { return height * width; }
  friend bool operator==(const KernelShape&, const KernelShape&) = default;
};

/// Quantizer settings of one block: index bit-depth, the (a, b) breakpoints
/// of the piecewise-linear companding map, and the calibrated activation
/// range that is mapped affinely onto [-1, 1].
struct BlockQuant {
  int bits = 3;
  double a = 0.5;
  double b = 0.5;
  double range_lo = -1.0;
  double range_hi = 1.0;
  bool calibrated = false;

  friend bool operator==(const BlockQuant&, const BlockQuant&) = default;
};

/// Global architecture. Blocks 0..layers-1 are residual blocks; block
/// `layers` is the upsampling layer whose outputs feed the pixel shuffle.
/// Block 0 reads the single luma plane; all others read `channels` planes.
struct ModelSpec {
  int layers = 2;
  int channels = 4;
  int upscale = 4;
  KernelShape kernel;
  int output_bits = 8;
  std::vector<BlockQuant> quant;  // layers + 1 entries

  int block_count() const noexcept { return layers + 1; }
  bool is_upsample(int block) const noexcept { return block == layers; }
  int input_channels(int block) const noexcept { return block == 0 ? 1 : channels; }
  int output_channels(int block) const noexcept {
    return is_upsample(block) ? upscale * upscale : channels;
  }
  /// Values produced per pixel by one subnetwork: C_out * k_h * k_w.
  int entry_width(int block) const noexcept { return output_channels(block) * kernel.taps(); }

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// {4, 3, 3, ...}: 4-bit index for the first block, 3-bit for the rest
/// (including the upsampling layer). Length layers + 1.
std::vector<int> default_input_bits(int layers);

ModelSpec make_model_spec(int layers, int channels, int upscale, KernelShape kernel,
                          const std::vector<int>& input_bits, int output_bits = 8);

/// "IQ-L<layers>C<channels>".
std::string model_name(const ModelSpec& spec);

/// Parses "IQ-L2C4" / "L2C4" into (layers, channels).
std::pair<int, int> parse_model_name(const std::string& name);

/// Dense 1x1 convolution: out = W x + b with W stored row-major (out x in).
struct DenseLayer {
  int out_features = 0;
  int in_features = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Scalar -> vector subnetwork: dense(1->C), ReLU, dense(C->C), ReLU,
/// dense(C -> entry_width).
struct SubnetParams {
  std::array<DenseLayer, 3> stages;

  int hidden() const noexcept { return stages[0].out_features; }
  int output_width() const noexcept { return stages[2].out_features; }

  friend bool operator==(const SubnetParams&, const SubnetParams&) = default;
};

SubnetParams make_subnet(int hidden, int output_width);

struct Block {
  std::vector<SubnetParams> subnets;  // one per input channel
  double alpha = 0.0;                 // residual logit; unused by the upsampling layer

  friend bool operator==(const Block&, const Block&) = default;
};

struct Model {
  ModelSpec spec;
  std::vector<Block> blocks;

  friend bool operator==(const Model&, const Model&) = default;
};

/// Model with every parameter zero.
Model make_model(const ModelSpec& spec);

/// He-style random initialization. The last stage of every subnet is scaled
/// down so a fresh model starts close to the bilinear baseline.
void initialize_model(Model& model, std::uint64_t seed);

/// Checks shapes against the spec and that all parameters are finite.
void validate_model(const Model& model);

struct ParamTensor {
  std::string name;
  std::span<double> values;
};

struct ConstParamTensor {
  std::string name;
  std::span<const double> values;
};

/// Every trainable tensor in a fixed order (weights, biases, alphas).
std::vector<ParamTensor> parameter_tensors(Model& model);
std::vector<ConstParamTensor> parameter_tensors(const Model& model);
std::size_t parameter_count(const Model& model);

/// Copies parameters into / out of one flat vector in parameter_tensors order.
std::vector<double> flatten_parameters(const Model& model);
void assign_parameters(Model& model, std::span<const double> flat);

/// FNV-1a over the raw bytes of every parameter.
std::uint64_t parameter_hash(const Model& model);

/// Rounds alpha and every quantizer field to the nearest float, so a model
/// agrees exactly with what a LUT file can carry.
Model round_to_export_precision(Model model);

}  // namespace iqlut
