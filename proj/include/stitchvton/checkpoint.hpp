#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stitchvton/parameters.hpp"

namespace stitchvton {

// Layout (all integers little-endian u32):
//   "SVTN" | version | json length | json bytes
//   { name length | name | rank | dims... | f32 payload }*
//   crc32 of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_json;
  nn::ParameterSet params;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);

/// Throws IoError on bad magic, version, truncation or CRC mismatch.
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Creates missing parent directories.
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace stitchvton
