#include "iqlut/checkpoint.hpp"

#include <fmt/format.h>

#include "binary_io.hpp"
#include "iqlut/atomic_file.hpp"
#include "iqlut/error.hpp"

namespace iqlut {

namespace {

constexpr std::string_view kMagic = "IQCKPT";

void put_doubles(detail::ByteWriter& w, std::span<const double> values) {
  w.put<std::uint64_t>(values.size());
  for (double v : values) w.put<double>(v);
}

std::vector<double> get_doubles(detail::ByteReader& r) {
  const auto n = r.get<std::uint64_t>();
  if (n > r.remaining() / sizeof(double)) throw IntegrityError("checkpoint array length is corrupt");
  std::vector<double> out(n);
  for (auto& v : out) v = r.get<double>();
  return out;
}

}  // namespace

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt) {
  const ModelSpec& spec = ckpt.state.model.spec;
  detail::ByteWriter w;
  w.put_raw(kMagic);
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::int32_t>(spec.layers);
  w.put<std::int32_t>(spec.channels);
  w.put<std::int32_t>(spec.upscale);
  w.put<std::int32_t>(spec.kernel.height);
  w.put<std::int32_t>(spec.kernel.width);
  w.put<std::int32_t>(spec.output_bits);
  for (const BlockQuant& q : spec.quant) {
    w.put<std::int32_t>(q.bits);
    w.put<double>(q.a);
    w.put<double>(q.b);
    w.put<double>(q.range_lo);
    w.put<double>(q.range_hi);
    w.put<std::uint8_t>(q.calibrated ? 1 : 0);
  }
  w.put<std::uint8_t>(ckpt.stage == TrainStage::kFinetune ? 1 : 0);
  put_doubles(w, flatten_parameters(ckpt.state.model));
  put_doubles(w, ckpt.state.adam.m);
  put_doubles(w, ckpt.state.adam.v);
  w.put<std::int64_t>(ckpt.state.adam.step);
  w.put<std::int64_t>(ckpt.state.iteration);
  w.put_string(ckpt.rng_state);
  w.put<std::uint32_t>(detail::crc32(w.bytes()));
  return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() + 6 ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kMagic.size()) != kMagic) {
    throw IntegrityError("not a checkpoint (wrong magic)");
  }
  const auto body = bytes.first(bytes.size() - 4);
  detail::ByteReader tail(bytes.last(4));
  if (tail.get<std::uint32_t>() != detail::crc32(body)) throw IntegrityError("checkpoint checksum mismatch");

  detail::ByteReader r(body);
  r.get_bytes(kMagic.size());
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw IntegrityError(fmt::format("unsupported checkpoint version {}", version));
  }
  ModelSpec spec;
  spec.layers = r.get<std::int32_t>();
  spec.channels = r.get<std::int32_t>();
  spec.upscale = r.get<std::int32_t>();
  spec.kernel.height = r.get<std::int32_t>();
  spec.kernel.width = r.get<std::int32_t>();
  spec.output_bits = r.get<std::int32_t>();
  if (spec.layers < 1 || spec.layers > 4096) throw IntegrityError("checkpoint layer count is corrupt");
  spec.quant.resize(spec.block_count());
  for (BlockQuant& q : spec.quant) {
    q.bits = r.get<std::int32_t>();
    q.a = r.get<double>();
    q.b = r.get<double>();
    q.range_lo = r.get<double>();
    q.range_hi = r.get<double>();
    q.calibrated = r.get<std::uint8_t>() != 0;
  }
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw IntegrityError(fmt::format("checkpoint spec is invalid: {}", e.what()));
  }

  Checkpoint ckpt;
  ckpt.stage = r.get<std::uint8_t>() ? TrainStage::kFinetune : TrainStage::kPretrain;
  ckpt.state.model = make_model(spec);
  const auto params = get_doubles(r);
  if (params.size() != parameter_count(ckpt.state.model)) {
    throw IntegrityError("checkpoint parameter count does not match its spec");
  }
  assign_parameters(ckpt.state.model, params);
  ckpt.state.adam.m = get_doubles(r);
  ckpt.state.adam.v = get_doubles(r);
  if (ckpt.state.adam.m.size() != ckpt.state.adam.v.size() ||
      (!ckpt.state.adam.m.empty() && ckpt.state.adam.m.size() != params.size())) {
    throw IntegrityError("checkpoint optimizer state does not match the model");
  }
  ckpt.state.adam.step = r.get<std::int64_t>();
  ckpt.state.iteration = r.get<std::int64_t>();
  ckpt.rng_state = r.get_string();
  if (r.remaining() != 0) throw IntegrityError("trailing bytes after checkpoint payload");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize(ckpt);
  write_file_atomically(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(detail::read_file(path.string()));
}

}  // namespace iqlut
