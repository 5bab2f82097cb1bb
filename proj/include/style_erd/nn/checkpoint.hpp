#pragma once

#include "style_erd/nn/params.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace style_erd::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary container: magic "SERDCKPT", u32 version, u64-length JSON header,
// u32 entry count, then per entry (u32 name length, name, u32 rank, i32 dims,
// row-major little-endian float64 values).
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  nlohmann::json header;
  std::vector<std::pair<std::string, Tensor>> entries;

  const Tensor* find(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const nlohmann::json& header,
                      const std::vector<const ParamStore*>& stores,
                      const std::vector<std::string>& prefixes);
void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& header,
                     const ParamStore& store);
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies every parameter of `store` from the checkpoint entries named
// prefix + name. Missing names or shape mismatches throw.
void restore_params(const Checkpoint& ckpt, ParamStore& store, const std::string& prefix = "");

}  // namespace style_erd::nn
