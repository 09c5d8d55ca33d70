#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "atsalign/toylm/model.hpp"

namespace atsalign::toylm {

/// "<prefix>-<instances>", e.g. checkpoint_id("toylm-SFT", 2800) == "toylm-SFT-2800".
std::string checkpoint_id(const std::string& prefix, std::size_t instances);

/// Trailing instance count of a checkpoint id; nullopt when absent.
std::optional<std::size_t> checkpoint_instances(const std::string& id);

// File layout (little-endian):
//   magic "ATSLMCK1", u32 version,
//   u64 embed, hidden, local_context, context_window,
//   u64 vocab count, then per token u32 length + bytes,
//   u64 parameter count, parameters as IEEE-754 doubles,
//   u32 CRC-32 of every preceding byte.
void save_checkpoint(const PolicyModel& model, const std::filesystem::path& path);
std::string serialize_checkpoint(const PolicyModel& model);

/// Throws DataError on a bad magic, version, checksum or shape.
PolicyModel load_checkpoint(const std::filesystem::path& path);
PolicyModel deserialize_checkpoint(const std::string& bytes);

/// Loads and additionally requires the stored dimensions to equal `expected`.
PolicyModel load_checkpoint(const std::filesystem::path& path, const Dims& expected);

}  // namespace atsalign::toylm
