#include "atsalign/pipeline/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "atsalign/errors.hpp"
#include "atsalign/text.hpp"
#include "atsalign/toylm/prompts.hpp"

namespace atsalign::pipeline {

using nlohmann::ordered_json;

corpus::Candidate shorter_candidate(const corpus::PreferencePair& p) {
  return text::word_count(p.sim_b) < text::word_count(p.sim_a) ? corpus::Candidate::b : corpus::Candidate::a;
}

std::set<std::string> flipped_pairs(std::vector<std::string> ids, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("label noise must lie in [0, 1]");
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  Rng rng(seed);
  rng.shuffle(std::span(ids));
  const auto n = static_cast<std::size_t>(std::llround(rate * static_cast<double>(ids.size())));
  return {ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n)};
}

CreatorChoice simulated_creator_choice(const paircreate::Presentation& p, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> options;
  for (std::size_t i = 0; i < p.inferences.size(); ++i)
    for (std::size_t j = i + 1; j < p.inferences.size(); ++j) {
      const auto& a = p.inferences[i];
      const auto& b = p.inferences[j];
      if (a.empty() || b.empty() || a == b) continue;
      if (text::word_count(a) == 0 || text::word_count(b) == 0) continue;
      if (text::word_count(a) != text::word_count(b)) options.emplace_back(i, j);
    }
  CreatorChoice c;
  if (options.empty()) return c;
  auto [i, j] = options[rng.index(options.size())];
  if (rng.coin()) std::swap(i, j);
  const auto wi = text::word_count(p.inferences[i]), wj = text::word_count(p.inferences[j]);
  c.skip = false;
  c.first = i;
  c.second = j;
  c.equal_information = (wi > wj ? wi - wj : wj - wi) <= 2;
  return c;
}

std::vector<corpus::PreferencePair> simulate_pair_creation(paircreate::PairSession& session, std::uint64_t seed) {
  Rng rng(seed);
  while (!session.exhausted()) {
    const auto p = session.current();
    const auto c = simulated_creator_choice(p, rng);
    if (c.skip)
      session.skip_set();
    else
      session.create_pair(p.presentation_id, c.first, c.second, c.equal_information);
  }
  return session.created();
}

namespace {

void expect(const annotate::Response& r, const char* what) {
  if (r.status >= 300) throw DataError(std::string(what) + " failed: " + r.body.dump());
}

}  // namespace

void simulate_annotation(annotate::AnnotationService& service, const std::vector<annotate::AnnotatorProfile>& annotators,
                         const std::vector<corpus::PreferencePair>& pairs, const AnnotatorSimulation& sim) {
  std::map<std::string, const corpus::PreferencePair*> by_id;
  std::vector<std::string> ids;
  for (const auto& p : pairs) {
    by_id.emplace(p.id, &p);
    ids.push_back(p.id);
  }
  const auto flipped = flipped_pairs(ids, sim.label_noise, Rng::mix(sim.seed, 0xf11bULL));

  for (const auto& a : annotators) {
    const double noise = sim.annotator_noise.contains(a.group) ? sim.annotator_noise.at(a.group) : 0.0;
    Rng rng(Rng::mix(sim.seed, toylm::string_key(a.annotator_id)));
    auto created = service.create_session({{"login_id", a.login_id}, {"request_id", "login"}});
    expect(created, "session");
    const std::string sid = created.body.at("session_id").get<std::string>();
    const auto& plan = service.plan(sid);
    ordered_json view = created.body.at("view");
    std::size_t step = 0;
    while (true) {
      const auto idx = view.at("index").get<std::size_t>();
      const auto& as = plan.queue.at(idx);
      const auto& pair = *by_id.at(as.pair_id);
      auto preferred = shorter_candidate(pair);
      if (flipped.contains(pair.id)) preferred = corpus::other(preferred);
      if (rng.uniform() < noise) preferred = corpus::other(preferred);
      const char* side = preferred == as.display_left ? "left" : "right";
      const auto rid = "c" + std::to_string(step);
      expect(service.choice(sid, {{"view_id", view.at("view_id")}, {"side", side}, {"request_id", rid}}), "choice");
      if (view.at("at_end").get<bool>()) break;
      auto moved = service.next(sid, {{"request_id", "n" + std::to_string(step)}});
      expect(moved, "next");
      view = moved.body;
      ++step;
    }
    expect(service.submit(sid, {{"request_id", "submit"}}), "submit");
  }
}

align::Preferred simulated_evaluation(const std::string& dpo_output, const std::string& sft_output, double noise,
                                      Rng& rng) {
  const auto wd = text::word_count(dpo_output), ws = text::word_count(sft_output);
  align::Preferred v;
  if (dpo_output == sft_output || wd == ws)
    v = rng.coin() ? align::Preferred::dpo : align::Preferred::sft;
  else
    v = wd < ws ? align::Preferred::dpo : align::Preferred::sft;
  if (rng.uniform() < noise) v = v == align::Preferred::dpo ? align::Preferred::sft : align::Preferred::dpo;
  return v;
}

}  // namespace atsalign::pipeline
