#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "atsalign/corpus.hpp"
#include "atsalign/errors.hpp"
#include "atsalign/paircreate/session.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace atsalign;
using namespace atsalign::paircreate;

namespace {

const std::map<std::string, std::string> kCheckpoints{
    {"alpha", "toylm-SFT-400"}, {"beta", "toylm-SFT-800"}, {"gamma", "toylm-SFT-1200"}};

// `sentences` complex ids, three checkpoints each, twenty inferences per set.
std::vector<InferenceSet> make_sets(std::size_t sentences) {
  std::vector<InferenceSet> out;
  for (std::size_t s = 0; s < sentences; ++s)
    for (const auto& [code, ck] : kCheckpoints) {
      InferenceSet set;
      set.complex_id = "c" + std::to_string(s);
      set.complex = "Komplexer Satz Nummer " + std::to_string(s) + ".";
      set.generator_checkpoint = ck;
      for (std::size_t i = 0; i < kInferencesPerSet; ++i)
        set.inferences.push_back({code + " variante " + std::to_string(i), "top_p", 1.0, 0.9, i});
      out.push_back(set);
    }
  return out;
}

std::string checkpoint_of(const Presentation& p) {
  // the presentation hides the checkpoint; recover it from the test texts
  return kCheckpoints.at(p.inferences.front().substr(0, p.inferences.front().find(' ')));
}

}  // namespace

TEST_CASE("inference files round-trip and are validated") {
  const auto dir = fixtures::temp_dir("paircreate-io");
  const auto sets = make_sets(2);
  write_inference_sets(dir / "inf.jsonl", sets);
  const auto back = load_inference_sets(dir / "inf.jsonl");
  REQUIRE(back.size() == sets.size());
  CHECK(back[3].inferences[7].text == sets[3].inferences[7].text);
  CHECK(back[3].generator_checkpoint == sets[3].generator_checkpoint);

  auto short_set = sets;
  short_set[0].inferences.pop_back();
  write_inference_sets(dir / "short.jsonl", short_set);
  CHECK_THROWS_AS(load_inference_sets(dir / "short.jsonl"), DataError);

  auto mismatch = sets;
  mismatch[1].complex = "Ein anderer Satz.";
  write_inference_sets(dir / "mismatch.jsonl", mismatch);
  CHECK_THROWS_AS(load_inference_sets(dir / "mismatch.jsonl"), DataError);
}

TEST_CASE("presentation order is seeded and never reveals the checkpoint") {
  const auto sets = make_sets(6);
  PairSession a("pc01", sets, 1), a2("pc01", sets, 1), b("pc01", sets, 2);
  CHECK(a.current().complex_id == a2.current().complex_id);
  // walk every set by skipping and record the order seen
  auto walk = [](PairSession s) {
    std::vector<std::string> seen;
    while (!s.exhausted()) {
      seen.push_back(s.current().complex_id + "/" + checkpoint_of(s.current()));
      s.skip_set();
    }
    return seen;
  };
  const auto wa = walk(a), wb = walk(b);
  CHECK(wa.size() == 18);
  CHECK(wa == walk(a2));
  CHECK(wa != wb);
  const auto j = a.current();
  CHECK(j.inferences.size() == kInferencesPerSet);
  CHECK(j.sets_total == 3);
  CHECK(j.set_number == 1);
}

TEST_CASE("creating a pair retires the sentence; skipping all sets retires it too") {
  const auto sets = make_sets(3);
  PairSession s("pc02", sets, 5);
  const auto first = s.current();
  const auto pair = s.create_pair(first.presentation_id, 2, 6, true);
  CHECK(pair.equal_information);
  CHECK(pair.creator_id == "pc02");
  CHECK(pair.sim_a == first.inferences[2]);
  CHECK(pair.sim_b == first.inferences[6]);
  CHECK(pair.generator_checkpoint == checkpoint_of(first));
  CHECK(s.current().complex_id != first.complex_id);
  CHECK(s.remaining_sentences() == 2);

  const auto second = s.current();
  CHECK(s.sets_remaining_for_current() == 3);
  s.skip_set();
  CHECK(s.sets_remaining_for_current() == 2);
  CHECK(s.current().complex_id == second.complex_id);
  s.skip_set();
  s.skip_set();
  CHECK(s.current().complex_id != second.complex_id);
  CHECK(s.remaining_sentences() == 1);

  std::set<std::string> sentences;
  for (const auto& p : s.created()) CHECK(sentences.insert(p.complex).second);
}

TEST_CASE("invalid selections are rejected") {
  PairSession s("pc01", make_sets(1), 3);
  const auto p = s.current();
  CHECK_THROWS_AS(s.create_pair(p.presentation_id, 3, 3, false), DomainError);
  CHECK_THROWS_AS(s.create_pair(p.presentation_id, 1, 20, false), DomainError);
  CHECK_THROWS_AS(s.create_pair(p.presentation_id + 1, 1, 2, false), DomainError);
  s.skip_set();
  CHECK_THROWS_AS(s.create_pair(p.presentation_id, 1, 2, false), DomainError);  // stale
  s.skip_set();
  s.skip_set();
  CHECK(s.exhausted());
  CHECK_THROWS_AS(s.current(), DomainError);
  CHECK_THROWS_AS(s.skip_set(), DomainError);
}

TEST_CASE("sessions resume losslessly from persisted state") {
  const auto dir = fixtures::temp_dir("paircreate-resume");
  const auto sets = make_sets(4);
  PairSession s("pc01", sets, 11);
  s.create_pair(s.current().presentation_id, 0, 1, false);
  s.skip_set();
  s.persist(dir / "state.json", dir / "pairs.jsonl");
  auto r = PairSession::resume(nlohmann::ordered_json::parse(corpus::read_file(dir / "state.json")), sets);
  CHECK(r.current().complex_id == s.current().complex_id);
  CHECK(r.current().presentation_id == s.current().presentation_id);
  CHECK(r.created() == s.created());
  CHECK(corpus::load_preference_pairs(dir / "pairs.jsonl") == s.created());
  const auto pa = s.create_pair(s.current().presentation_id, 4, 5, true);
  const auto pb = r.create_pair(r.current().presentation_id, 4, 5, true);
  CHECK(pa == pb);
}

TEST_CASE("terminal loop") {
  const auto dir = fixtures::temp_dir("paircreate-terminal");
  PairSession s("pc01", make_sets(3), 2);
  std::istringstream in("pair 1 1 eq\npair 3 7 eq\nskip\nbogus\npair 2 4 neq\nquit\n");
  std::ostringstream out;
  const auto n = run_terminal(s, in, out, dir / "state.json", dir / "pairs.jsonl");
  CHECK(n == 2);
  CHECK(s.created().size() == 2);
  CHECK(s.created()[0].equal_information);
  CHECK_FALSE(s.created()[1].equal_information);
  CHECK(out.str().find("toylm-SFT") == std::string::npos);
  CHECK(corpus::load_preference_pairs(dir / "pairs.jsonl").size() == 2);
}
