#include <cmath>
#include <string>
#include <vector>

#include "atsalign/corpus.hpp"
#include "atsalign/errors.hpp"
#include "atsalign/filtering.hpp"
#include "doctest.h"
#include "filter_fixture.hpp"
#include "fixtures.hpp"

using namespace atsalign;
using namespace atsalign::filtering;
using corpus::Alignment;

namespace {

ComplexSimplePair pair(const std::string& id, const std::string& complex, const std::string& simple,
                       Alignment a = Alignment::one_to_one) {
  ComplexSimplePair p;
  p.id = id;
  p.complex = complex;
  p.simple = simple;
  p.alignment = a;
  return p;
}

using Vec = std::vector<double>;

}  // namespace

TEST_CASE("cosine similarity") {
  CHECK(cosine_similarity(Vec{1, 1}, Vec{1, 0}) == doctest::Approx(0.70710678).epsilon(1e-8));
  CHECK(cosine_similarity(Vec{2, 3}, Vec{2, 3}) == doctest::Approx(1.0));
  CHECK(cosine_similarity(Vec{1, 0}, Vec{0, 4}) == 0.0);
  CHECK_THROWS_AS(cosine_similarity(Vec{0, 0}, Vec{1, 0}), DomainError);
  CHECK_THROWS_AS(cosine_similarity(Vec{1}, Vec{1, 0}), DomainError);
}

TEST_CASE("ROUGE hand values") {
  const text::Tokens abc{"a", "b", "c"}, ac{"a", "c"};
  CHECK(rouge_f1(abc, ac, RougeVariant::r1) == doctest::Approx(0.8));
  CHECK(rouge_f1({"a", "b"}, {"c", "d"}, RougeVariant::r2) == 0.0);
  for (auto v : {RougeVariant::r1, RougeVariant::r2, RougeVariant::rL}) {
    CHECK(rouge_f1(abc, abc, v) == 1.0);
    CHECK(rouge_f1({}, {}, v) == 1.0);
    CHECK(rouge_f1({}, abc, v) == 0.0);
  }
}

TEST_CASE("individual stages") {
  const std::vector<ComplexSimplePair> ps{
      pair("1", "a", "b", Alignment::one_to_one), pair("2", "a", "b", Alignment::one_to_many),
      pair("3", "a", "b", Alignment::many_to_one), pair("4", "a", "b", Alignment::many_to_many)};
  const auto al = filter_alignment(ps);
  CHECK(al.kept.size() == 2);
  CHECK(al.removed.size() == 2);
  CHECK(al.removed[0].id == "3");
  CHECK(filter_alignment({}).kept.empty());

  const auto sim = SimilaritySource::from_vectors({{"a", {Vec{1, 0, 0, 0}, Vec{1, 1, 1, 1}}},      // exactly 0.5
                                                   {"b", {Vec{1, 0, 0, 0}, Vec{0.98, 1, 1, 1}}}});  // about 0.49
  const auto ent = filter_entailment_proxy({pair("a", "x", "y"), pair("b", "x", "y")}, sim);
  REQUIRE(ent.kept.size() == 1);
  CHECK(ent.kept[0].id == "a");
  CHECK_THROWS_AS(filter_entailment_proxy({pair("zz", "x", "y")}, sim), DataError);
  CHECK(SimilaritySource::lexical().similarity(pair("i", "Der Hund.", "der hund")) == doctest::Approx(1.0));

  const auto boundary = pair("o", "Hund Katze Katze Katze Hund.", "Katze Katze Hund Katze Katze.");
  CHECK(overlap_score(boundary) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(filter_overlap({boundary}).kept.size() == 1);
  CHECK(filter_overlap({pair("s", "Ganz gleich.", "Ganz gleich.")}).removed.size() == 1);
  CHECK(filter_overlap({pair("d", "a b c", "x y z")}).kept.size() == 1);
  CHECK(overlap_score(pair("d", "a b c", "a x y"), OverlapRule::any) >= overlap_score(pair("d", "a b c", "a x y")));

  CHECK(filter_length({pair("30", "kurz", fixtures::numbered_words(30))}).kept.size() == 1);
  CHECK(filter_length({pair("31", "kurz", fixtures::numbered_words(31))}).removed.size() == 1);
}

TEST_CASE("ten-pair fixture: one planted violation per stage, boundaries kept") {
  const auto fx = fixtures::ten_pair_filter_fixture();
  CHECK(fx.similarity.kind() == SimilaritySource::Kind::sidecar_embeddings);
  CHECK(fx.similarity.dimension() == 4);

  const auto out = run_filter_pipeline(fx.pairs, fx.similarity);
  CHECK(out.report.input_count == 10);
  CHECK(out.report.removed_by_alignment == 1);
  CHECK(out.report.removed_by_entailment == 1);
  CHECK(out.report.removed_by_overlap == 1);
  CHECK(out.report.removed_by_length == 1);
  CHECK(out.kept.size() == 6);
  CHECK(out.report.surviving_ids == fx.expected_survivors);
  CHECK(out.report.input_count == out.kept.size() + out.report.removed_total());

  std::vector<ComplexSimplePair> clean(fx.pairs.begin() + 4, fx.pairs.end());
  CHECK(run_filter_pipeline(clean, fx.similarity).report.removed_total() == 0);

  const auto j = report_to_json(out.report);
  CHECK(j.at("removed_by_overlap") == 1);
}

TEST_CASE("sidecar embeddings file") {
  const auto dir = fixtures::temp_dir("sidecar");
  corpus::write_file(dir / "emb.jsonl",
                     "{\"pair_id\":\"p1\",\"complex_vec\":[1,0],\"simple_vec\":[1,1]}\n"
                     "{\"pair_id\":\"p2\",\"complex_vec\":[0,1],\"simple_vec\":[0,2]}\n");
  const auto sim = SimilaritySource::from_sidecar(dir / "emb.jsonl");
  CHECK(sim.dimension() == 2);
  CHECK(sim.similarity(pair("p1", "a", "b")) == doctest::Approx(0.70710678));
  corpus::write_file(dir / "bad.jsonl",
                     "{\"pair_id\":\"p1\",\"complex_vec\":[1,0],\"simple_vec\":[1,1]}\n"
                     "{\"pair_id\":\"p2\",\"complex_vec\":[0,1,3],\"simple_vec\":[0,2,1]}\n");
  CHECK_THROWS_AS(SimilaritySource::from_sidecar(dir / "bad.jsonl"), DataError);
}
