#pragma once

// Ten pairs with exactly one planted violation per filter stage, plus one
// pair sitting on each threshold boundary.

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "atsalign/filtering.hpp"

namespace fixtures {

inline std::string numbered_words(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i);
  return s + ".";
}

struct FilterFixture {
  std::vector<atsalign::corpus::ComplexSimplePair> pairs;
  atsalign::filtering::SimilaritySource similarity;
  std::vector<std::string> expected_survivors;
};

inline FilterFixture ten_pair_filter_fixture() {
  using atsalign::corpus::Alignment;
  using Vec = std::vector<double>;
  auto pair = [](const std::string& id, const std::string& complex, const std::string& simple,
                 Alignment a = Alignment::one_to_one) {
    atsalign::corpus::ComplexSimplePair p;
    p.id = id;
    p.complex = complex;
    p.simple = simple;
    p.alignment = a;
    return p;
  };
  const std::string plain_c = "Der große Hund bellte gestern Abend sehr laut im Garten.";
  const std::string plain_s = "Ein Hund bellt.";
  std::vector<atsalign::corpus::ComplexSimplePair> ps{
      pair("align", plain_c, plain_s, Alignment::many_to_one),
      pair("entail", plain_c, plain_s),
      pair("overlap", plain_c, plain_c),
      pair("length", "Kurz.", numbered_words(31)),
      pair("one_to_many", plain_c, plain_s, Alignment::one_to_many),
      // cosine exactly 0.5
      pair("cos_boundary", plain_c, plain_s),
      // ROUGE-1 0.8, ROUGE-2 1.0, ROUGE-L 0.6: mean exactly 0.8
      pair("rouge_boundary", "Hund Katze Katze Katze Hund.", "Katze Katze Hund Katze Katze."),
      pair("len_boundary", "Kurz.", numbered_words(30)),
      pair("clean1", plain_c, "Der Hund war laut."),
      pair("clean2", "Die Stadt hat im letzten Jahr eine neue Brücke gebaut.", "Die Stadt baut eine Brücke."),
  };
  std::unordered_map<std::string, std::pair<Vec, Vec>> vecs;
  for (const auto& p : ps) vecs[p.id] = {Vec{1, 0, 0, 0}, Vec{1, 0.2, 0, 0}};
  vecs["entail"] = {Vec{1, 0, 0, 0}, Vec{0.98, 1, 1, 1}};  // about 0.49
  vecs["cos_boundary"] = {Vec{1, 0, 0, 0}, Vec{1, 1, 1, 1}};
  return {ps, atsalign::filtering::SimilaritySource::from_vectors(vecs),
          {"one_to_many", "cos_boundary", "rouge_boundary", "len_boundary", "clean1", "clean2"}};
}

}  // namespace fixtures
