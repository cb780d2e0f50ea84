// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/model.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace glossplat {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  std::uint64_t seed = 0;
  std::string config_json = "{}";  // echo of the training configuration
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Little-endian container: 8-byte magic, u32 version, u32 record count, then
/// (name, dtype, shape, payload) records.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace glossplat
