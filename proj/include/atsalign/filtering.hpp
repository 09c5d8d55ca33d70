#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "atsalign/corpus.hpp"
#include "atsalign/text.hpp"

namespace atsalign::filtering {

using corpus::ComplexSimplePair;

struct Partition {
  std::vector<ComplexSimplePair> kept;
  std::vector<ComplexSimplePair> removed;
};

/// Per-stage removal counts of the four-step filter.
struct FilterReport {
  std::size_t input_count = 0;
  std::size_t removed_by_alignment = 0;
  std::size_t removed_by_entailment = 0;
  std::size_t removed_by_overlap = 0;
  std::size_t removed_by_length = 0;
  std::vector<std::string> surviving_ids;

  std::size_t removed_total() const {
    return removed_by_alignment + removed_by_entailment + removed_by_overlap + removed_by_length;
  }
};

/// u.v / (|u||v|), clamped to [-1, 1]. Throws DomainError for zero vectors
/// or mismatched dimensions.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Cosine over lowercase word-unigram count vectors. Texts with no tokens
/// score 0.
double lexical_similarity(std::string_view a, std::string_view b);

/// Complex/simple similarity provider: precomputed sentence embeddings
/// keyed by pair id, or the lexical fallback.
class SimilaritySource {
 public:
  enum class Kind { sidecar_embeddings, lexical_fallback };

  static SimilaritySource lexical();
  /// Sidecar file: one {pair_id, complex_vec, simple_vec} object per line.
  static SimilaritySource from_sidecar(const std::filesystem::path& path);
  static SimilaritySource from_vectors(
      std::unordered_map<std::string, std::pair<std::vector<double>, std::vector<double>>> vectors);

  Kind kind() const { return kind_; }
  std::size_t dimension() const { return dimension_; }

  /// Throws DataError when a sidecar source has no vector for the pair.
  double similarity(const ComplexSimplePair& p) const;

 private:
  Kind kind_ = Kind::lexical_fallback;
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::pair<std::vector<double>, std::vector<double>>> vectors_;
};

enum class RougeVariant { r1, r2, rL };

/// ROUGE F1. r1/r2 use clipped n-gram counts, rL the longest common
/// subsequence. Both sides without any unit of the variant score 1,
/// exactly one side empty scores 0.
double rouge_f1(const text::Tokens& candidate, const text::Tokens& reference, RougeVariant variant);

/// How the three ROUGE F1 scores combine against the overlap threshold.
enum class OverlapRule { mean, any };

struct FilterConfig {
  double entailment_threshold = 0.5;
  double overlap_threshold = 0.8;
  std::size_t max_words = 30;
  OverlapRule overlap_rule = OverlapRule::mean;
};

/// Absolute slack on threshold comparisons so values that equal the
/// threshold in exact arithmetic are not flipped by rounding.
inline constexpr double kThresholdSlack = 1e-12;

/// Keeps one_to_one and one_to_many alignments.
Partition filter_alignment(const std::vector<ComplexSimplePair>& pairs);
/// Removes pairs with similarity strictly below the threshold.
Partition filter_entailment_proxy(const std::vector<ComplexSimplePair>& pairs,
                                  const SimilaritySource& sim, double threshold = 0.5);
/// Score used by filter_overlap (simple as candidate, complex as reference).
double overlap_score(const ComplexSimplePair& p, OverlapRule rule = OverlapRule::mean);
/// Removes pairs whose overlap score strictly exceeds the threshold.
Partition filter_overlap(const std::vector<ComplexSimplePair>& pairs, double threshold = 0.8,
                         OverlapRule rule = OverlapRule::mean);
/// Removes pairs whose simplification has more than max_words tokens.
Partition filter_length(const std::vector<ComplexSimplePair>& pairs, std::size_t max_words = 30);

struct FilterOutcome {
  FilterReport report;
  std::vector<ComplexSimplePair> kept;
};

/// alignment -> entailment -> overlap -> length; each stage sees only the
/// survivors of the previous one.
FilterOutcome run_filter_pipeline(const std::vector<ComplexSimplePair>& pairs,
                                  const SimilaritySource& sim, const FilterConfig& config = {});

nlohmann::ordered_json report_to_json(const FilterReport& r);

}  // namespace atsalign::filtering
