#include "iqlut/model.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <regex>

#include <fmt/format.h>

#include "iqlut/error.hpp"

namespace iqlut {

void ModelSpec::validate() const {
  if (layers < 1) throw ConfigError("model needs at least one layer");
  if (channels < 1) throw ConfigError("model needs at least one channel");
  if (upscale < 1) throw ConfigError("upscale factor must be >= 1");
  if (kernel.height < 1 || kernel.width < 1) throw ConfigError("kernel dimensions must be >= 1");
  if (output_bits < 2 || output_bits > 16) throw ConfigError("output bit-depth must be in [2, 16]");
  if (static_cast<int>(quant.size()) != block_count()) {
    throw ConfigError(fmt::format("expected {} quantizer entries, got {}", block_count(),
                                  quant.size()));
  }
  for (std::size_t i = 0; i < quant.size(); ++i) {
    const BlockQuant& q = quant[i];
    if (q.bits < 2 || q.bits > 16) {
      throw ConfigError(fmt::format("block {} input bit-depth {} outside [2, 16]", i, q.bits));
    }
    if (!(q.a > 0.0 && q.a < 1.0 && q.b > 0.0 && q.b < 1.0)) {
      throw ConfigError(fmt::format("block {} quantizer needs 0 < a, b < 1 (got a={}, b={})", i,
                                    q.a, q.b));
    }
    if (!(std::isfinite(q.range_lo) && std::isfinite(q.range_hi) && q.range_hi > q.range_lo)) {
      throw ConfigError(fmt::format("block {} activation range is empty", i));
    }
  }
}

std::vector<int> default_input_bits(int layers) {
  std::vector<int> bits(static_cast<std::size_t>(std::max(layers, 0)) + 1, 3);
  bits[0] = 4;
  return bits;
}

ModelSpec make_model_spec(int layers, int channels, int upscale, KernelShape kernel,
                          const std::vector<int>& input_bits, int output_bits) {
  ModelSpec spec;
  spec.layers = layers;
  spec.channels = channels;
  spec.upscale = upscale;
  spec.kernel = kernel;
  spec.output_bits = output_bits;
  if (static_cast<int>(input_bits.size()) != layers + 1) {
    throw ConfigError(fmt::format("need {} input bit-depths (one per block plus the upsampler), got {}",
                                  layers + 1, input_bits.size()));
  }
  spec.quant.resize(input_bits.size());
  for (std::size_t i = 0; i < input_bits.size(); ++i) spec.quant[i].bits = input_bits[i];
  spec.validate();
  return spec;
}

std::string model_name(const ModelSpec& spec) {
  return fmt::format("IQ-L{}C{}", spec.layers, spec.channels);
}

std::pair<int, int> parse_model_name(const std::string& name) {
  static const std::regex pattern(R"((?:IQ-)?L(\d+)C(\d+))", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(name, m, pattern)) {
    throw ConfigError("model name must look like IQ-L2C4, got '" + name + "'");
  }
  return {std::stoi(m[1]), std::stoi(m[2])};
}

SubnetParams make_subnet(int hidden, int output_width) {
  SubnetParams p;
  const int in[3] = {1, hidden, hidden};
  const int out[3] = {hidden, hidden, output_width};
  for (int s = 0; s < 3; ++s) {
    p.stages[s].in_features = in[s];
    p.stages[s].out_features = out[s];
    p.stages[s].weight.assign(static_cast<std::size_t>(in[s]) * out[s], 0.0);
    p.stages[s].bias.assign(static_cast<std::size_t>(out[s]), 0.0);
  }
  return p;
}

Model make_model(const ModelSpec& spec) {
  spec.validate();
  Model model;
  model.spec = spec;
  model.blocks.resize(spec.block_count());
  for (int b = 0; b < spec.block_count(); ++b) {
    model.blocks[b].subnets.assign(spec.input_channels(b),
                                   make_subnet(spec.channels, spec.entry_width(b)));
  }
  return model;
}

void initialize_model(Model& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Block& block : model.blocks) {
    block.alpha = 0.0;
    for (SubnetParams& p : block.subnets) {
      for (int s = 0; s < 3; ++s) {
        DenseLayer& layer = p.stages[s];
        double stddev = std::sqrt(2.0 / layer.in_features);
        if (s == 2) stddev *= 0.1;
        for (double& w : layer.weight) w = stddev * normal(rng);
        for (double& b : layer.bias) b = s == 0 ? 0.1 * normal(rng) : 0.0;
      }
    }
  }
}

void validate_model(const Model& model) {
  model.spec.validate();
  const ModelSpec& spec = model.spec;
  if (static_cast<int>(model.blocks.size()) != spec.block_count()) {
    throw IntegrityError(fmt::format("model has {} blocks, spec declares {}", model.blocks.size(),
                                     spec.block_count()));
  }
  for (int b = 0; b < spec.block_count(); ++b) {
    const Block& block = model.blocks[b];
    if (static_cast<int>(block.subnets.size()) != spec.input_channels(b)) {
      throw IntegrityError(fmt::format("block {} has {} subnets, expected {}", b,
                                       block.subnets.size(), spec.input_channels(b)));
    }
    if (!std::isfinite(block.alpha)) throw NumericalError(fmt::format("block {} alpha is not finite", b));
    for (const SubnetParams& p : block.subnets) {
      const int in[3] = {1, spec.channels, spec.channels};
      const int out[3] = {spec.channels, spec.channels, spec.entry_width(b)};
      for (int s = 0; s < 3; ++s) {
        const DenseLayer& layer = p.stages[s];
        if (layer.in_features != in[s] || layer.out_features != out[s] ||
            layer.weight.size() != static_cast<std::size_t>(in[s]) * out[s] ||
            layer.bias.size() != static_cast<std::size_t>(out[s])) {
          throw IntegrityError(fmt::format("block {} stage {} has the wrong shape", b, s));
        }
        for (double v : layer.weight) {
          if (!std::isfinite(v)) throw NumericalError(fmt::format("block {} has non-finite weights", b));
        }
        for (double v : layer.bias) {
          if (!std::isfinite(v)) throw NumericalError(fmt::format("block {} has non-finite biases", b));
        }
      }
    }
  }
}

namespace {

template <typename ModelT, typename Tensor, typename Span>
std::vector<Tensor> collect(ModelT& model) {
  std::vector<Tensor> out;
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    auto& block = model.blocks[b];
    for (std::size_t c = 0; c < block.subnets.size(); ++c) {
      for (int s = 0; s < 3; ++s) {
        auto& layer = block.subnets[c].stages[s];
        out.push_back({fmt::format("block{}.ch{}.stage{}.weight", b, c, s), Span(layer.weight)});
        out.push_back({fmt::format("block{}.ch{}.stage{}.bias", b, c, s), Span(layer.bias)});
      }
    }
    if (!model.spec.is_upsample(static_cast<int>(b))) {
      out.push_back({fmt::format("block{}.alpha", b), Span(&block.alpha, 1)});
    }
  }
  return out;
}

}  // namespace

std::vector<ParamTensor> parameter_tensors(Model& model) {
  return collect<Model, ParamTensor, std::span<double>>(model);
}

std::vector<ConstParamTensor> parameter_tensors(const Model& model) {
  return collect<const Model, ConstParamTensor, std::span<const double>>(model);
}

std::size_t parameter_count(const Model& model) {
  std::size_t n = 0;
  for (const auto& t : parameter_tensors(model)) n += t.values.size();
  return n;
}

std::vector<double> flatten_parameters(const Model& model) {
  std::vector<double> flat;
  flat.reserve(parameter_count(model));
  for (const auto& t : parameter_tensors(model)) flat.insert(flat.end(), t.values.begin(), t.values.end());
  return flat;
}

void assign_parameters(Model& model, std::span<const double> flat) {
  if (flat.size() != parameter_count(model)) throw ConfigError("flat parameter length mismatch");
  std::size_t offset = 0;
  for (auto& t : parameter_tensors(model)) {
    std::copy(flat.begin() + offset, flat.begin() + offset + t.values.size(), t.values.begin());
    offset += t.values.size();
  }
}

std::uint64_t parameter_hash(const Model& model) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& t : parameter_tensors(model)) {
    for (double v : t.values) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

Model round_to_export_precision(Model model) {
  auto to_float = [](double v) { return static_cast<double>(static_cast<float>(v)); };
  for (Block& block : model.blocks) block.alpha = to_float(block.alpha);
  for (BlockQuant& q : model.spec.quant) {
    q.a = to_float(q.a);
    q.b = to_float(q.b);
    q.range_lo = to_float(q.range_lo);
    q.range_hi = to_float(q.range_hi);
  }
  return model;
}

}  // namespace iqlut
