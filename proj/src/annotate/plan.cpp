#include "atsalign/annotate/plan.hpp"

#include <algorithm>
#include <set>

#include "atsalign/errors.hpp"
#include "atsalign/rng.hpp"

namespace atsalign::annotate {

void AnnotatorProfile::validate() const {
  if (annotator_id.empty() || login_id.empty()) throw ConfigError("annotator_id and login_id are required");
  if (show_original && group != corpus::Group::expert)
    throw ConfigError("show_original is only allowed for expert annotators (" + annotator_id + ")");
}

AnnotatorProfile profile_from_json(const nlohmann::ordered_json& j) {
  try {
    AnnotatorProfile p;
    p.annotator_id = j.at("annotator_id").get<std::string>();
    p.group = corpus::parse_group(j.at("group").get<std::string>());
    p.show_original = j.value("show_original", false);
    p.login_id = j.at("login_id").get<std::string>();
    if (j.contains("pool")) p.pool = j.at("pool").get<std::vector<std::string>>();
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("annotator profile: ") + e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("annotator profile: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const AnnotatorProfile& p) {
  nlohmann::ordered_json j{{"annotator_id", p.annotator_id},
                           {"group", corpus::to_string(p.group)},
                           {"show_original", p.show_original},
                           {"login_id", p.login_id}};
  if (!p.pool.empty()) j["pool"] = p.pool;
  return j;
}

std::pair<std::size_t, std::size_t> sanity_counts(std::size_t own, std::uint64_t seed) {
  if (own >= 400) {
    Rng rng(Rng::mix(seed, 0x5a17));
    const std::size_t r = 40 + rng.index(6);
    const std::size_t s = 40 + rng.index(6);
    return {r, s};
  }
  return {own / 10, own / 10};
}

SessionPlan plan_session(const std::vector<std::string>& own_pairs, const std::vector<std::string>& shared_pool,
                         std::uint64_t seed) {
  if (own_pairs.empty()) throw DomainError("annotator has no pairs to label");
  const std::set<std::string> own_set(own_pairs.begin(), own_pairs.end());
  if (own_set.size() != own_pairs.size()) throw DomainError("duplicate pair in annotator pool");
  for (const auto& s : shared_pool)
    if (own_set.contains(s)) throw DomainError("pair " + s + " is both own and shared");

  SessionPlan plan;
  plan.seed = seed;
  std::tie(plan.repeated, plan.shared) = sanity_counts(own_pairs.size(), seed);
  if (plan.shared > shared_pool.size())
    throw DomainError("shared pool holds " + std::to_string(shared_pool.size()) + " pairs but " +
                      std::to_string(plan.shared) + " are needed");
  if (plan.repeated > own_pairs.size()) throw DomainError("too few own pairs for the repeated checks");

  Rng rng(seed);
  std::vector<std::string> base(own_pairs);
  std::vector<std::string> repeats(own_pairs);
  rng.shuffle(std::span<std::string>(repeats));
  repeats.resize(plan.repeated);

  std::vector<Assignment> q;
  for (const auto& id : base) q.push_back({id, corpus::Candidate::a, corpus::SanityKind::none});
  for (std::size_t i = 0; i < plan.shared; ++i) q.push_back({shared_pool[i], corpus::Candidate::a, corpus::SanityKind::shared});
  rng.shuffle(std::span<Assignment>(q));

  for (const auto& id : repeats) {
    const auto first = static_cast<std::size_t>(
        std::find_if(q.begin(), q.end(), [&](const Assignment& a) { return a.pair_id == id; }) - q.begin());
    // Insert anywhere strictly after the first showing (including the end).
    const std::size_t pos = first + 1 + rng.index(q.size() - first);
    q.insert(q.begin() + static_cast<std::ptrdiff_t>(pos), Assignment{id, corpus::Candidate::a, corpus::SanityKind::repeated});
  }
  for (auto& a : q) a.display_left = rng.coin() ? corpus::Candidate::a : corpus::Candidate::b;
  plan.queue = std::move(q);
  return plan;
}

}  // namespace atsalign::annotate
