#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "iqlut/trainer.hpp"

namespace iqlut {

/// Everything needed to resume training bit-identically.
struct Checkpoint {
  TrainState state;
  TrainStage stage = TrainStage::kPretrain;
  std::string rng_state;  // data stream generator, empty if none

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt);
/// Throws IntegrityError on a bad magic, version, checksum or layout.
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace iqlut
