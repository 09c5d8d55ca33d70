#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "atsalign/rng.hpp"
#include "atsalign/toylm/model.hpp"
#include "atsalign/toylm/train.hpp"

namespace fixtures {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("atsalign-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::filesystem::path source_dir() { return ATSALIGN_SOURCE_DIR; }

// Vocabulary a..j plus the reserved tokens.
inline atsalign::toylm::Vocabulary letters(std::size_t n = 10) {
  std::vector<std::string> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back(std::string(1, static_cast<char>('a' + i)));
  return atsalign::toylm::Vocabulary(t);
}

inline atsalign::toylm::PolicyModel tiny_model(std::uint64_t seed, std::size_t context = 2) {
  atsalign::toylm::Dims d;
  d.embed = 4;
  d.hidden = 6;
  d.local_context = context;
  d.context_window = 40;
  return atsalign::toylm::PolicyModel::random(letters(), d, seed, {0.5, false});
}

inline std::vector<int> random_ids(atsalign::Rng& rng, std::size_t vocab, std::size_t len) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < len; ++i) ids.push_back(4 + static_cast<int>(rng.index(vocab - 4)));
  return ids;
}

}  // namespace fixtures
