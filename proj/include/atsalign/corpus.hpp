#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace atsalign::corpus {

enum class Alignment { one_to_one, one_to_many, many_to_one, many_to_many };
enum class Source { deplain_apa, deplain_web, apa_lha, synthetic };
enum class Split { train, dev, test };
enum class Candidate { a, b };
enum class Group { target, expert };
enum class SanityKind { none, repeated, shared };

std::string_view to_string(Alignment v);
std::string_view to_string(Source v);
std::string_view to_string(Split v);
std::string_view to_string(Candidate v);
std::string_view to_string(Group v);
std::string_view to_string(SanityKind v);

Alignment parse_alignment(std::string_view s);
Source parse_source(std::string_view s);
Split parse_split(std::string_view s);
Candidate parse_candidate(std::string_view s);
Group parse_group(std::string_view s);
SanityKind parse_sanity_kind(std::string_view s);

inline Candidate other(Candidate c) { return c == Candidate::a ? Candidate::b : Candidate::a; }

/// Aligned complex -> simple sentence pair (SFT data).
struct ComplexSimplePair {
  std::string id;
  std::string complex;
  std::string simple;
  Alignment alignment = Alignment::one_to_one;
  Source source = Source::synthetic;
  std::optional<Split> split;

  bool operator==(const ComplexSimplePair&) const = default;
};

/// Two candidate simplifications of one complex sentence, produced by the
/// same generator checkpoint.
struct PreferencePair {
  std::string id;
  std::string complex;
  std::string sim_a;
  std::string sim_b;
  std::string generator_checkpoint;
  bool equal_information = false;
  std::string creator_id;

  const std::string& text(Candidate c) const { return c == Candidate::a ? sim_a : sim_b; }
  bool operator==(const PreferencePair&) const = default;
};

/// One annotator's choice on one displayed pair. `chosen` and
/// `displayed_left` are canonical candidate ids, never screen sides.
struct AnnotationRecord {
  std::string pair_id;
  std::string annotator_id;
  Group annotator_group = Group::target;
  Candidate chosen = Candidate::a;
  Candidate displayed_left = Candidate::a;
  SanityKind sanity_kind = SanityKind::none;
  std::int64_t timestamp = 0;

  bool operator==(const AnnotationRecord&) const = default;
};

/// (x, y_w, y_l) triple after applying one annotation to its pair.
struct ResolvedPreference {
  std::string pair_id;
  std::string complex;
  std::string preferred;
  std::string dispreferred;
  Group annotator_group = Group::target;
  std::string annotator_id;

  bool operator==(const ResolvedPreference&) const = default;
};

// JSON mapping. from_json validates field presence, types and enum values
// and throws DataError.
void to_json(nlohmann::ordered_json& j, const ComplexSimplePair& p);
void to_json(nlohmann::ordered_json& j, const PreferencePair& p);
void to_json(nlohmann::ordered_json& j, const AnnotationRecord& r);
void to_json(nlohmann::ordered_json& j, const ResolvedPreference& r);
ComplexSimplePair pair_from_json(const nlohmann::ordered_json& j);
PreferencePair preference_pair_from_json(const nlohmann::ordered_json& j);
AnnotationRecord annotation_from_json(const nlohmann::ordered_json& j);
ResolvedPreference resolved_from_json(const nlohmann::ordered_json& j);

enum class CorpusKind { pairs, preference_pairs, annotations, resolved };

struct LoadOptions {
  /// Name of a boolean field marking whether an annotation belongs to the
  /// curated set; records with false are dropped. Unset keeps every record.
  std::optional<std::string> inclusion_field;
};

using Corpus = std::variant<std::vector<ComplexSimplePair>, std::vector<PreferencePair>,
                            std::vector<AnnotationRecord>, std::vector<ResolvedPreference>>;

/// Reads one JSON object per line. Any malformed record, duplicate id or
/// empty text rejects the whole file with a DataError citing the line.
Corpus load_corpus(const std::filesystem::path& path, CorpusKind kind, const LoadOptions& opts = {});

std::vector<ComplexSimplePair> load_pairs(const std::filesystem::path& path);
std::vector<PreferencePair> load_preference_pairs(const std::filesystem::path& path);
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path,
                                               const LoadOptions& opts = {});
std::vector<ResolvedPreference> load_resolved(const std::filesystem::path& path);

std::string to_jsonl_line(const ComplexSimplePair& p);
std::string to_jsonl_line(const PreferencePair& p);
std::string to_jsonl_line(const AnnotationRecord& r);
std::string to_jsonl_line(const ResolvedPreference& r);

template <class T>
std::string to_jsonl(const std::vector<T>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_jsonl_line(r);
    out += '\n';
  }
  return out;
}

/// Writes text atomically (temp file + rename).
void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

template <class T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
  write_file(path, to_jsonl(records));
}

using Fractions = std::array<double, 3>;  // train, dev, test

/// Target sizes: dev = floor(n*f_dev), test = floor(n*f_test), train takes
/// the rest (remainder rows go to train).
std::array<std::size_t, 3> split_sizes(std::size_t n, const Fractions& fractions);

using StratumKey = std::function<std::string(const ComplexSimplePair&)>;

/// Default stratum: source plus complex-length bucket of five words.
std::string default_stratum(const ComplexSimplePair& p);

/// Tags every record with a split. Records are shuffled within strata
/// (seeded), strata are laid out in key order, and rows are dealt to the
/// split with the largest deficit against its target share, so each
/// stratum is represented proportionally and totals match split_sizes
/// exactly. Output keeps input order.
std::vector<ComplexSimplePair> stratified_split(std::vector<ComplexSimplePair> pairs,
                                                const Fractions& fractions, std::uint64_t seed,
                                                const StratumKey& key = default_stratum);

/// Generic variant for any record type: same dealing, caller-supplied key.
std::vector<Split> assign_splits(std::size_t n, const std::vector<std::string>& strata,
                                 const Fractions& fractions, std::uint64_t seed);

/// Applies annotations to pairs. Repeated annotations of the same
/// (pair, annotator) collapse to the latest by timestamp; equal timestamps
/// resolve to the later record in input order.
std::vector<ResolvedPreference> resolve_preferences(const std::vector<PreferencePair>& pairs,
                                                    const std::vector<AnnotationRecord>& annotations);

}  // namespace atsalign::corpus
