#include <filesystem>
#include <string>
#include <vector>

#include "atsalign/corpus.hpp"
#include "atsalign/errors.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace atsalign;
using namespace atsalign::corpus;

namespace {

std::vector<ComplexSimplePair> make_pairs(std::size_t n) {
  std::vector<ComplexSimplePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    ComplexSimplePair p;
    p.id = "s" + std::to_string(i);
    p.complex = std::string(1 + i % 17, 'x') + " wort";
    for (std::size_t w = 0; w < i % 23; ++w) p.complex += " noch";
    p.simple = "kurz";
    p.source = i % 3 == 0 ? Source::deplain_apa : Source::deplain_web;
    out.push_back(p);
  }
  return out;
}

PreferencePair pref(const std::string& id) {
  PreferencePair p;
  p.id = id;
  p.complex = "Komplex " + id;
  p.sim_a = "A " + id;
  p.sim_b = "B " + id;
  p.generator_checkpoint = "toylm-SFT-400";
  p.creator_id = "pc01";
  return p;
}

}  // namespace

TEST_CASE("split sizes use floor arithmetic with the remainder in train") {
  CHECK(split_sizes(100, {0.7, 0.15, 0.15}) == std::array<std::size_t, 3>{70, 15, 15});
  CHECK(split_sizes(5200, {3600.0 / 5200, 800.0 / 5200, 800.0 / 5200}) == std::array<std::size_t, 3>{3600, 800, 800});
  CHECK(split_sizes(7, {0.8, 0.1, 0.1}) == std::array<std::size_t, 3>{7, 0, 0});
}

TEST_CASE("stratified split hits the targets and keeps every stratum spread") {
  const auto pairs = make_pairs(100);
  const auto split = stratified_split(pairs, {0.7, 0.15, 0.15}, 9);
  std::array<std::size_t, 3> counts{0, 0, 0};
  std::map<std::string, std::array<std::size_t, 3>> by_stratum;
  for (std::size_t i = 0; i < split.size(); ++i) {
    REQUIRE(split[i].split.has_value());
    CHECK(split[i].id == pairs[i].id);
    ++counts[static_cast<std::size_t>(*split[i].split)];
    ++by_stratum[default_stratum(split[i])][static_cast<std::size_t>(*split[i].split)];
  }
  CHECK(counts == std::array<std::size_t, 3>{70, 15, 15});
  for (const auto& [key, c] : by_stratum) {
    const double n = double(c[0] + c[1] + c[2]);
    CHECK(std::abs(double(c[0]) - 0.7 * n) <= 2.0);
  }
  CHECK(stratified_split(pairs, {0.7, 0.15, 0.15}, 9) == split);
  CHECK_FALSE(stratified_split(pairs, {0.7, 0.15, 0.15}, 10) == split);
  CHECK_THROWS_AS(assign_splits(0, {}, {0.7, 0.15, 0.15}, 1), DataError);
}

TEST_CASE("JSONL round trip for every record kind") {
  const auto dir = fixtures::temp_dir("corpus-roundtrip");
  auto pairs = make_pairs(5);
  pairs[1].split = Split::dev;
  pairs[2].alignment = Alignment::one_to_many;
  write_jsonl(dir / "pairs.jsonl", pairs);
  CHECK(load_pairs(dir / "pairs.jsonl") == pairs);

  std::vector<PreferencePair> prefs{pref("p1"), pref("p2")};
  prefs[1].equal_information = true;
  write_jsonl(dir / "prefs.jsonl", prefs);
  CHECK(load_preference_pairs(dir / "prefs.jsonl") == prefs);

  AnnotationRecord a;
  a.pair_id = "p1";
  a.annotator_id = "ea02";
  a.annotator_group = Group::expert;
  a.chosen = Candidate::b;
  a.displayed_left = Candidate::b;
  a.sanity_kind = SanityKind::shared;
  a.timestamp = 1700000000123;
  write_jsonl(dir / "ann.jsonl", std::vector<AnnotationRecord>{a});
  CHECK(load_annotations(dir / "ann.jsonl").front() == a);

  const auto resolved = resolve_preferences(prefs, {a});
  write_jsonl(dir / "res.jsonl", resolved);
  CHECK(load_resolved(dir / "res.jsonl") == resolved);
  CHECK(std::get<std::vector<ResolvedPreference>>(load_corpus(dir / "res.jsonl", CorpusKind::resolved)) == resolved);
}

TEST_CASE("loader rejects damaged files and names the line") {
  const auto dir = fixtures::temp_dir("corpus-bad");
  const auto good = to_jsonl_line(make_pairs(1).front());
  auto expect_error = [&](const std::string& body, const std::string& needle) {
    write_file(dir / "f.jsonl", body);
    try {
      load_pairs(dir / "f.jsonl");
      FAIL("expected a DataError");
    } catch (const DataError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };
  expect_error(good + "\n\n" + good + "\n", ":3: duplicate id 's0'");
  expect_error(good + "\n{not json\n", ":2:");
  expect_error(R"({"id":"x","complex":"a","simple":"","alignment":"one_to_one","source":"synthetic"})", "empty");
  expect_error(R"({"id":"x","complex":"a","simple":"b","alignment":"sideways","source":"synthetic"})", "sideways");
  expect_error(R"({"id":"x","complex":"a","alignment":"one_to_one","source":"synthetic"})", "missing field 'simple'");
  expect_error(R"({"schema":"other/9","id":"x","complex":"a","simple":"b","alignment":"one_to_one","source":"synthetic"})",
               "schema");
  CHECK_THROWS_AS(load_pairs(dir / "absent.jsonl"), DataError);
}

TEST_CASE("inclusion field drops uncurated annotations") {
  const auto dir = fixtures::temp_dir("corpus-include");
  write_file(dir / "a.jsonl",
             R"({"pair_id":"p1","annotator_id":"ta01","annotator_group":"target","chosen":"a","displayed_left":"a","sanity_kind":"none","timestamp":1,"keep":true})"
             "\n"
             R"({"pair_id":"p2","annotator_id":"ta01","annotator_group":"target","chosen":"a","displayed_left":"a","sanity_kind":"none","timestamp":2,"keep":false})"
             "\n");
  CHECK(load_annotations(dir / "a.jsonl").size() == 2);
  LoadOptions opts;
  opts.inclusion_field = "keep";
  const auto kept = load_annotations(dir / "a.jsonl", opts);
  REQUIRE(kept.size() == 1);
  CHECK(kept.front().pair_id == "p1");
}

TEST_CASE("latest annotation wins when resolving preferences") {
  const std::vector<PreferencePair> prefs{pref("p1"), pref("p2")};
  auto ann = [](const std::string& pair, const std::string& who, Candidate c, std::int64_t ts) {
    AnnotationRecord r;
    r.pair_id = pair;
    r.annotator_id = who;
    r.chosen = c;
    r.timestamp = ts;
    return r;
  };
  const auto res = resolve_preferences(prefs, {
                                                  ann("p1", "ta01", Candidate::a, 5),
                                                  ann("p1", "ta01", Candidate::b, 9),
                                                  ann("p1", "ta02", Candidate::a, 3),
                                                  ann("p2", "ta01", Candidate::a, 4),
                                                  ann("p2", "ta01", Candidate::b, 4),  // same time: later record wins
                                              });
  REQUIRE(res.size() == 3);
  // output follows the input position of each surviving record
  CHECK(res[0].annotator_id == "ta01");
  CHECK(res[0].preferred == "B p1");
  CHECK(res[0].dispreferred == "A p1");
  CHECK(res[1].annotator_id == "ta02");
  CHECK(res[1].preferred == "A p1");
  CHECK(res[2].preferred == "B p2");
  CHECK_THROWS_AS(resolve_preferences(prefs, {ann("zz", "ta01", Candidate::a, 1)}), DataError);
}
