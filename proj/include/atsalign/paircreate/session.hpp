#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "atsalign/corpus.hpp"

namespace atsalign::paircreate {

struct Inference {
  std::string text;
  std::string decode;  // "greedy" or "top_p"
  double temperature = 1.0;
  double top_p = 1.0;
  std::uint64_t seed = 0;
};

/// Candidate simplifications of one complex sentence from one checkpoint.
struct InferenceSet {
  std::string complex_id;
  std::string complex;
  std::string generator_checkpoint;
  std::vector<Inference> inferences;
};

constexpr std::size_t kInferencesPerSet = 20;

nlohmann::ordered_json to_json(const InferenceSet& s);
InferenceSet inference_set_from_json(const nlohmann::ordered_json& j, std::size_t expected = kInferencesPerSet);

/// One record per line. Every set must hold `expected` inferences and share
/// its complex text with the other sets of the same complex_id.
std::vector<InferenceSet> load_inference_sets(const std::filesystem::path& path,
                                              std::size_t expected = kInferencesPerSet);
void write_inference_sets(const std::filesystem::path& path, const std::vector<InferenceSet>& sets);

/// What the creator sees. Never carries the checkpoint identity.
struct Presentation {
  std::uint64_t presentation_id = 0;
  std::string complex_id;
  std::string complex;
  std::vector<std::string> inferences;
  std::size_t set_number = 0;  // 1-based within the sentence
  std::size_t sets_total = 0;
};

/// A creator's walk over complex sentences. Sentence order and the
/// per-sentence checkpoint order are drawn from the session seed. A
/// sentence retires once a pair is made from it or all its sets are skipped.
class PairSession {
 public:
  PairSession(std::string creator_id, std::vector<InferenceSet> sets, std::uint64_t seed);

  /// Restores a session from state_json() output over the same sets.
  static PairSession resume(const nlohmann::ordered_json& state, std::vector<InferenceSet> sets);

  bool exhausted() const { return cursor_ >= order_.size(); }
  /// Throws DomainError when the queue is exhausted.
  Presentation current() const;

  /// Indices are 0-based positions in the current presentation. Throws
  /// DomainError for identical or out-of-range indices, a stale
  /// presentation id or an exhausted queue.
  corpus::PreferencePair create_pair(std::uint64_t presentation_id, std::size_t first, std::size_t second,
                                     bool equal_information);

  /// Marks the displayed set skipped. Throws DomainError when exhausted.
  void skip_set();

  const std::string& creator_id() const { return creator_; }
  const std::vector<corpus::PreferencePair>& created() const { return created_; }
  std::size_t remaining_sentences() const { return order_.size() - std::min(cursor_, order_.size()); }
  std::size_t sets_remaining_for_current() const;

  nlohmann::ordered_json state_json() const;
  /// Writes state and the creator's pair file atomically.
  void persist(const std::filesystem::path& state_path, const std::filesystem::path& pairs_path) const;

 private:
  const InferenceSet& displayed() const;
  void advance_sentence();

  std::string creator_;
  std::uint64_t seed_;
  std::vector<InferenceSet> sets_;
  std::vector<std::string> order_;                                  // complex ids
  std::map<std::string, std::vector<std::size_t>> checkpoint_order_;  // complex id -> indices into sets_
  std::size_t cursor_ = 0;
  std::size_t set_cursor_ = 0;
  std::uint64_t presentation_ = 1;
  std::vector<corpus::PreferencePair> created_;
  std::vector<std::string> skipped_;  // "<complex_id>#<set_number>"
};

/// Line-oriented terminal loop over a session. Commands:
///   pair I J eq|neq   (1-based inference numbers)
///   skip
///   quit
/// State is persisted after each accepted action. Returns pairs created.
std::size_t run_terminal(PairSession& session, std::istream& in, std::ostream& out,
                         const std::filesystem::path& state_path, const std::filesystem::path& pairs_path);

}  // namespace atsalign::paircreate
