#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "noisyst/model.hpp"

namespace noisyst {

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  // Free-form origin note (run name, stage, config hash).
  std::string provenance;

  bool operator==(const Checkpoint&) const = default;
};

// Binary little-endian container: magic, version, seed, provenance, model
// config, then named arrays with their shapes. Doubles are stored by bit
// pattern, so save/load round-trips exactly.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

}  // namespace noisyst
