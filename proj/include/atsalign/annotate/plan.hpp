#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "atsalign/corpus.hpp"

namespace atsalign::annotate {

struct AnnotatorProfile {
  std::string annotator_id;
  corpus::Group group = corpus::Group::target;
  bool show_original = false;
  std::string login_id;
  /// Pair ids this annotator labels; empty means "every non-shared pair".
  std::vector<std::string> pool;

  /// Throws ConfigError when show_original is set for a non-expert.
  void validate() const;
};

AnnotatorProfile profile_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const AnnotatorProfile& p);

struct Assignment {
  std::string pair_id;
  corpus::Candidate display_left = corpus::Candidate::a;
  corpus::SanityKind sanity_kind = corpus::SanityKind::none;

  bool operator==(const Assignment&) const = default;
};

struct SessionPlan {
  std::vector<Assignment> queue;
  std::uint64_t seed = 0;
  std::size_t repeated = 0;
  std::size_t shared = 0;
};

/// Sanity counts for a session with `own` base pairs: at least 400 pairs
/// draw each count independently from [40, 45]; smaller sessions use
/// floor(own / 10) for both.
std::pair<std::size_t, std::size_t> sanity_counts(std::size_t own, std::uint64_t seed);

/// Queue of the annotator's own pairs, the first `shared` entries of the
/// shared pool and `repeated` second showings of own pairs. Base entries
/// are shuffled; each repeat is inserted at a random position after its
/// first showing. Every entry draws its own display side. Throws DomainError
/// when a pool is too small for the drawn counts.
SessionPlan plan_session(const std::vector<std::string>& own_pairs, const std::vector<std::string>& shared_pool,
                         std::uint64_t seed);

}  // namespace atsalign::annotate
