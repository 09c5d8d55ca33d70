#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "atsalign/corpus.hpp"
#include "atsalign/text.hpp"

namespace atsalign::metrics {

/// German syllable estimate. Each vowel (a e i o u ä ö ü y) starts a
/// nucleus; the digraphs aa ee oo ie ei ai au eu äu ey ay count as one.
/// Returns at least 1. Throws DomainError for an empty word.
int count_syllables_de(std::string_view word);

struct ReadabilityStats {
  double ms = 0.0;   // % of words with more than three syllables
  double sl = 0.0;   // words per sentence
  double asw = 0.0;  // syllables per word
  double wstf4 = 0.0;
  double flesch_de = 0.0;
  std::size_t words = 0;
  std::size_t sentences = 0;
};

/// Fourth Vienna formula from its two inputs.
constexpr double wstf4_formula(double ms, double sl) { return 0.2744 * ms + 0.2656 * sl - 1.693; }
/// Amstad's German Flesch reading ease.
constexpr double flesch_de_formula(double sl, double asw) { return 180.0 - sl - 58.5 * asw; }

/// Throws DomainError when the text holds no word.
ReadabilityStats readability(std::string_view text);
double wstf4(std::string_view text);
double flesch_de(std::string_view text);

/// Per-order SARI components, exposed for inspection and tests.
struct SariComponents {
  double keep_f[4] = {0, 0, 0, 0};
  double del_p[4] = {0, 0, 0, 0};
  double add_f[4] = {0, 0, 0, 0};
  double score = 0.0;  // 0..100
};

/// SARI over n = 1..4 with reference-replicated counts:
///   keep F1 of (src&cand) against (src&refs), deletion precision of
///   (src - cand) against refs, addition F1 of n-gram types new relative to
///   src. An empty operation set gives precision 1 (no wrong operation) and
///   an empty reference-side set gives recall 1. Score is
///   100 * (mean keep F1 + mean deletion P + mean addition F1) / 3.
SariComponents sari_components(const text::Tokens& source, const text::Tokens& candidate,
                               const std::vector<text::Tokens>& references);
double sari(const text::Tokens& source, const text::Tokens& candidate,
            const std::vector<text::Tokens>& references);
/// String form tokenizes with text::tokenize; requires non-empty source and
/// candidate and at least one reference.
double sari(std::string_view source, std::string_view candidate, const std::vector<std::string>& references);

/// Sentence BLEU in [0,1]: uniform geometric mean of clipped precisions over
/// orders 1..min(max_n, |candidate|), brevity penalty against the closest
/// reference length (ties to the shorter). Any zero precision gives 0; an
/// empty candidate gives 0.
double bleu(const text::Tokens& candidate, const std::vector<text::Tokens>& references, std::size_t max_n = 4);
double bleu(std::string_view candidate, const std::vector<std::string>& references, std::size_t max_n = 4);

/// Fraction of outputs whose lowercase alphabetic projection equals the
/// source's. Throws DomainError on length mismatch or empty input.
double mirror_rate(const std::vector<std::string>& sources, const std::vector<std::string>& outputs);

struct EvalReport {
  std::size_t rows = 0;
  double sari = 0.0;
  double bleu = 0.0;
  std::optional<double> bertscore;
  double wstf4 = 0.0;
  double flesch_de = 0.0;
  double avg_word_count = 0.0;
  double mirror_rate = 0.0;
  std::optional<double> cross_entropy;
};

nlohmann::ordered_json to_json(const EvalReport& r);

/// row_id -> externally computed BERTScore F1.
using SidecarScores = std::unordered_map<std::string, double>;
SidecarScores load_sidecar_scores(const std::filesystem::path& path);

struct EvalOptions {
  const SidecarScores* sidecar = nullptr;
  bool require_bertscore = false;
  std::optional<double> cross_entropy;
};

/// Scores outputs[i] against corpus_slice[i] (source = complex, single
/// reference = simple). Readability averages skip outputs without words.
EvalReport evaluate_checkpoint(const std::vector<std::string>& outputs,
                               const std::vector<corpus::ComplexSimplePair>& corpus_slice,
                               const EvalOptions& options = {});

}  // namespace atsalign::metrics
