#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "atsalign/agreement.hpp"
#include "atsalign/errors.hpp"
#include "atsalign/rng.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace atsalign;
using namespace atsalign::agreement;
using corpus::Candidate;
using corpus::SanityKind;

namespace {

// Enumerates every items x coders matrix whose cells take a value in
// [0, values); value 0 means "not rated" when allow_missing is set.
// Returns the largest |library - oracle| and counts defined/undefined cases.
struct Sweep {
  double worst = 0;
  std::size_t defined = 0;
  std::size_t undefined = 0;
  std::size_t mismatched_definedness = 0;
};

void sweep(std::size_t items, std::size_t coders, int values, bool allow_missing, Sweep& out) {
  const std::size_t cells = items * coders;
  std::size_t total = 1;
  for (std::size_t i = 0; i < cells; ++i) total *= static_cast<std::size_t>(values);
  static const char* cats[] = {"a", "b", "c"};
  std::vector<int> v(cells);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (auto& x : v) {
      x = static_cast<int>(c % static_cast<std::size_t>(values));
      c /= static_cast<std::size_t>(values);
    }
    RatingMatrix m;
    std::vector<std::vector<int>> units(items);
    for (std::size_t i = 0; i < items; ++i)
      for (std::size_t k = 0; k < coders; ++k) {
        int cat = v[i * coders + k];
        if (allow_missing) {
          if (cat == 0) continue;
          --cat;
        }
        m.rate("u" + std::to_string(i), "c" + std::to_string(k), cats[cat]);
        units[i].push_back(cat);
      }
    const double want = oracle::alpha(units, 3);
    bool threw = false;
    double got = 0;
    try {
      got = krippendorff_alpha(m);
    } catch (const DomainError&) {
      threw = true;
    }
    if (std::isnan(want) != threw) {
      ++out.mismatched_definedness;
    } else if (threw) {
      ++out.undefined;
    } else {
      ++out.defined;
      out.worst = std::max(out.worst, std::abs(got - want));
    }
  }
}

corpus::AnnotationRecord rec(const std::string& pair, const std::string& who, Candidate chosen,
                             SanityKind kind = SanityKind::none, std::int64_t ts = 0,
                             corpus::Group g = corpus::Group::target, Candidate left = Candidate::a) {
  corpus::AnnotationRecord r;
  r.pair_id = pair;
  r.annotator_id = who;
  r.annotator_group = g;
  r.chosen = chosen;
  r.displayed_left = left;
  r.sanity_kind = kind;
  r.timestamp = ts;
  return r;
}

}  // namespace

TEST_CASE("kappa on the balanced fourteen-of-twenty fixture") {
  std::vector<std::string> first, second;
  for (int i = 0; i < 10; ++i) {
    first.push_back("a");
    second.push_back(i < 7 ? "a" : "b");
  }
  for (int i = 0; i < 10; ++i) {
    first.push_back("b");
    second.push_back(i < 7 ? "b" : "a");
  }
  const auto k = cohen_kappa(first, second);
  CHECK(k.value == doctest::Approx(0.4).epsilon(1e-12));
  CHECK_FALSE(k.degenerate);
}

TEST_CASE("kappa edge cases") {
  const auto same = cohen_kappa({"a", "a", "a"}, {"a", "a", "a"});
  CHECK(same.value == 1.0);
  CHECK(same.degenerate);
  CHECK(cohen_kappa({"a", "b"}, {"a", "b"}).value == doctest::Approx(1.0));
  CHECK(cohen_kappa({"a", "b"}, {"b", "a"}).value == doctest::Approx(-1.0));
  CHECK_THROWS_AS(cohen_kappa({"a"}, {"a", "b"}), DomainError);
  CHECK_THROWS_AS(cohen_kappa({}, {}), DomainError);
}

TEST_CASE("alpha matches the coincidence-matrix oracle on every small matrix") {
  Sweep s;
  // partial binary ratings, all shapes up to nine cells
  for (std::size_t items = 1; items <= 4; ++items)
    for (std::size_t coders = 2; coders <= 4; ++coders)
      if (items * coders <= 9) sweep(items, coders, 3, true, s);
  // complete binary ratings up to 4 x 4
  for (std::size_t items = 1; items <= 4; ++items)
    for (std::size_t coders = 2; coders <= 4; ++coders) sweep(items, coders, 2, false, s);
  // complete three-category ratings up to nine cells
  for (std::size_t items = 1; items <= 4; ++items)
    for (std::size_t coders = 2; coders <= 4; ++coders)
      if (items * coders <= 9) sweep(items, coders, 3, false, s);
  CHECK(s.mismatched_definedness == 0);
  CHECK(s.defined > 10000);
  CHECK(s.undefined > 0);
  CHECK(s.worst < 1e-9);
}

TEST_CASE("alpha on a hand-worked two-coder matrix") {
  // units: (a,a) (a,b) (b,b) (b,b): o_aa=2 o_ab=o_ba=1 o_bb=4, n_a=3 n_b=5, n=8
  // D_o = 2/8, D_e = 2*3*5/(8*7) -> alpha = 1 - (2/8)/(30/56) = 1 - 56/120
  RatingMatrix m;
  m.rate("1", "x", "a"), m.rate("1", "y", "a");
  m.rate("2", "x", "a"), m.rate("2", "y", "b");
  m.rate("3", "x", "b"), m.rate("3", "y", "b");
  m.rate("4", "x", "b"), m.rate("4", "y", "b");
  CHECK(krippendorff_alpha(m) == doctest::Approx(1.0 - 56.0 / 120.0).epsilon(1e-12));
}

TEST_CASE("alpha is near zero for independent uniform ratings") {
  Rng rng(2024);
  RatingMatrix m;
  for (int i = 0; i < 100000; ++i)
    for (const char* c : {"x", "y"}) m.rate(std::to_string(i), c, rng.coin() ? "a" : "b");
  CHECK(std::abs(krippendorff_alpha(m)) < 0.05);
}

TEST_CASE("alpha errors") {
  RatingMatrix lone;
  lone.rate("1", "x", "a");
  CHECK_THROWS_AS(krippendorff_alpha(lone), DomainError);
  RatingMatrix flat;
  flat.rate("1", "x", "a"), flat.rate("1", "y", "a");
  CHECK_THROWS_AS(krippendorff_alpha(flat), DomainError);
}

TEST_CASE("intra passes take the latest record of each kind") {
  std::vector<corpus::AnnotationRecord> a{
      rec("p1", "ta01", Candidate::a, SanityKind::none, 1),
      rec("p1", "ta01", Candidate::b, SanityKind::none, 5),  // revised first pass
      rec("p1", "ta01", Candidate::b, SanityKind::repeated, 9),
      rec("p2", "ta01", Candidate::a, SanityKind::none, 2),
      rec("p3", "ta01", Candidate::a, SanityKind::none, 3),
      rec("p3", "ta01", Candidate::b, SanityKind::repeated, 4),
      rec("p1", "ta02", Candidate::a, SanityKind::none, 1),
  };
  const auto passes = intra_passes(a, "ta01");
  CHECK(passes.pair_ids == std::vector<std::string>{"p1", "p3"});
  CHECK(passes.first == std::vector<std::string>{"b", "a"});
  CHECK(passes.second == std::vector<std::string>{"b", "b"});
  const auto ks = annotator_kappas(a);
  CHECK(ks.at("ta01").has_value());
  CHECK_FALSE(ks.at("ta02").has_value());
}

TEST_CASE("group matrix, contributions and left preference") {
  std::vector<corpus::PreferencePair> pairs;
  for (int i = 0; i < 4; ++i) {
    corpus::PreferencePair p;
    p.id = "p" + std::to_string(i);
    p.complex = "c";
    p.sim_a = "a";
    p.sim_b = "b";
    p.generator_checkpoint = i < 2 ? "toylm-SFT-1" : "toylm-SFT-2";
    p.creator_id = "pc01";
    p.equal_information = i % 2 == 0;
    pairs.push_back(p);
  }
  std::vector<corpus::AnnotationRecord> a;
  for (int i = 0; i < 4; ++i) {
    const auto id = "p" + std::to_string(i);
    const Candidate x = i < 2 ? Candidate::a : Candidate::b;
    a.push_back(rec(id, "ea01", x, SanityKind::none, 1, corpus::Group::expert, Candidate::a));
    a.push_back(rec(id, "ea02", x, SanityKind::none, 1, corpus::Group::expert, Candidate::b));
    a.push_back(rec(id, "ea03", corpus::other(x), SanityKind::none, 1, corpus::Group::expert, Candidate::a));
    a.push_back(rec(id, "ta01", x, SanityKind::none, 1, corpus::Group::target));
  }
  // ea03 flips its own earlier vote on p0 later on
  a.push_back(rec("p0", "ea03", Candidate::a, SanityKind::none, 7, corpus::Group::expert, Candidate::a));

  const auto m = group_matrix(pairs, a, corpus::Group::expert);
  CHECK(m.coders.size() == 3);
  CHECK(m.ratings.at({"p0", "ea03"}) == "a");
  const auto sub = group_matrix(pairs, a, corpus::Group::expert, std::string("toylm-SFT-2"));
  CHECK(sub.items.size() == 2);

  const auto contrib = alpha_contributions(m);
  // the dissenting coder lowers agreement, so removing it raises alpha
  CHECK(contrib.at("ea03").value() < 0);
  CHECK(contrib.at("ea01").value() > contrib.at("ea03").value());

  std::vector<corpus::AnnotationRecord> bad{rec("nope", "ea01", Candidate::a, SanityKind::none, 0, corpus::Group::expert)};
  CHECK_THROWS_AS(group_matrix(pairs, bad, corpus::Group::expert), DataError);

  CHECK(left_preference_rate({}) == 0.0);
  std::vector<corpus::AnnotationRecord> ea02;
  for (const auto& r : a)
    if (r.annotator_id == "ea02") ea02.push_back(r);
  CHECK(left_preference_rate(ea02) == 0.5);

  const auto bundle = annotation_reports(pairs, a);
  CHECK(bundle.overall_info_equality == 0.5);
  CHECK(bundle.checkpoint_counts.at("pc01").at("toylm-SFT-1") == 2);
  CHECK(bundle.left_rates.at("ea01").left == 2);
  const auto dir = fixtures::temp_dir("bundle");
  write_report_bundle(bundle, dir);
  CHECK(std::filesystem::exists(dir / "checkpoint_prevalence.tsv"));
  CHECK(std::filesystem::exists(dir / "info_equality.tsv"));
  CHECK(std::filesystem::exists(dir / "left_preference.tsv"));
}
