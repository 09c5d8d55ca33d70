#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "atsalign/toylm/model.hpp"

namespace atsalign::toylm {

enum class Decode { greedy, top_p };

std::string_view to_string(Decode d);
Decode parse_decode(std::string_view s);

struct DecodeConfig {
  Decode mode = Decode::greedy;
  double temperature = 1.0;  // <= 0 falls back to greedy
  double top_p = 0.9;
  std::size_t max_tokens = 40;
  std::uint64_t seed = 0;
};

/// Smallest set of highest-probability tokens whose mass reaches p
/// (ties broken by lower id), renormalized. Input is a probability vector.
std::vector<std::pair<int, double>> nucleus(std::span<const double> probs, double p);

/// Generates a completion for `prompt`. Stops at the end token (not
/// included in the result), at max_tokens, or at the context window.
/// Reserved tokens other than the end token are never emitted.
std::vector<int> generate(const PolicyModel& model, std::span<const int> prompt, const DecodeConfig& cfg);

}  // namespace atsalign::toylm
