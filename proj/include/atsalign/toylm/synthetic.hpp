#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atsalign/corpus.hpp"

namespace atsalign::toylm {

/// Templated German-like sentences with rule-based simplifications.
///
/// A complex sentence is a main clause with optional time, manner and place
/// adjuncts plus an optional causal clause. Its simplification deletes the
/// adjuncts and, when there is a causal clause, either drops it or splits
/// it off as a second main-clause sentence (one_to_many).
struct SyntheticConfig {
  std::size_t pairs = 600;
  std::size_t pool = 300;            // extra complex sentences for inference
  double planted_bad_alignment = 0.03;
  double planted_long_simple = 0.02;
  double planted_copy = 0.02;        // simple == complex (fails the overlap filter)
  std::uint64_t seed = 7;
};

struct SyntheticSentence {
  std::string complex;
  std::string simple;
  bool split = false;
  /// Distinct simplification candidates of increasing length.
  std::vector<std::string> variants;
};

SyntheticSentence synthetic_sentence(std::uint64_t seed, bool longer = false);

struct SyntheticCorpus {
  std::vector<corpus::ComplexSimplePair> sft;   // deplain-like sources
  std::vector<corpus::ComplexSimplePair> pool;  // deplain leftovers, then longer apa_lha sentences
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg);

}  // namespace atsalign::toylm
