#include "atsalign/toylm/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "atsalign/rng.hpp"
#include "atsalign/text.hpp"

namespace atsalign::toylm {
namespace {


constexpr std::array kSubjects{"der Lehrer", "die Ärztin", "das Kind", "der Bürgermeister", "die Familie",
                               "der Nachbar", "die Firma", "das Team", "die Gemeinde", "der Verein",
                               "die Schülerin", "der Koch"};
constexpr std::array kVerbs{"kauft", "besucht", "repariert", "sucht", "findet", "liest",
                            "schreibt", "plant", "öffnet", "braucht", "verkauft", "bestellt"};
constexpr std::array kObjects{"das Auto", "den Brief", "das Haus", "die Wohnung", "den Bericht", "das Buch",
                              "die Schule", "den Garten", "das Fahrrad", "die Zeitung", "den Antrag", "das Essen"};
constexpr std::array kTime{"am Montag", "jeden Morgen", "im Sommer", "nach der Arbeit", "seit einigen Wochen",
                           "am Wochenende", "im nächsten Jahr"};
constexpr std::array kManner{"sehr sorgfältig", "ohne fremde Hilfe", "mit großer Freude", "gemeinsam mit Freunden",
                             "trotz der hohen Kosten", "aus reiner Gewohnheit"};
constexpr std::array kPlace{"in der Stadt", "im Zentrum", "auf dem Land", "in Wien", "in der Nähe des Bahnhofs",
                            "im Bezirk"};
constexpr std::array kReason{"weil", "obwohl", "nachdem"};

template <class A>
const char* pick(Rng& rng, const A& a) {
  return a[rng.index(a.size())];
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string sentence(const std::vector<std::string>& parts) { return capitalize(text::join(parts)) + " ."; }

}  // namespace

SyntheticSentence synthetic_sentence(std::uint64_t seed, bool longer) {
  Rng rng(seed);
  const std::string s = pick(rng, kSubjects), v = pick(rng, kVerbs), o = pick(rng, kObjects);
  const double p_adj = longer ? 0.8 : 0.55;
  const bool has_t = rng.uniform() < p_adj, has_m = rng.uniform() < p_adj, has_p = rng.uniform() < p_adj;
  const std::string t = pick(rng, kTime), m = pick(rng, kManner), pl = pick(rng, kPlace);
  const bool has_c = rng.uniform() < (longer ? 0.7 : 0.5);
  const std::string conj = pick(rng, kReason), s2 = pick(rng, kSubjects), v2 = pick(rng, kVerbs),
                    o2 = pick(rng, kObjects);

  std::vector<std::string> main{s, v};
  if (has_t) main.push_back(t);
  main.push_back(o);
  if (has_m) main.push_back(m);
  if (has_p) main.push_back(pl);
  std::string complex = capitalize(text::join(main));
  if (has_c) complex += " , " + conj + " " + s2 + " " + o2 + " " + v2;
  complex += " .";

  SyntheticSentence out;
  out.complex = complex;
  const std::string core = sentence({s, v, o});
  const std::string second = sentence({s2, v2, o2});
  out.split = has_c && rng.uniform() < 0.6;
  out.simple = out.split ? core + " " + second : core;

  // Candidates from shortest to longest; each adds back one element.
  std::vector<std::string> v_list{core};
  if (has_t) v_list.push_back(sentence({s, v, t, o}));
  if (has_p) v_list.push_back(sentence({s, v, o, pl}));
  if (has_c) v_list.push_back(core + " " + second);
  if (has_t && has_c) v_list.push_back(sentence({s, v, t, o}) + " " + second);
  if (has_m) v_list.push_back(sentence({s, v, o, m}));
  std::stable_sort(v_list.begin(), v_list.end(),
                   [](const auto& a, const auto& b) { return text::word_count(a) < text::word_count(b); });
  v_list.erase(std::unique(v_list.begin(), v_list.end()), v_list.end());
  out.variants = std::move(v_list);
  return out;
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg) {
  SyntheticCorpus out;
  Rng rng(cfg.seed);
  char id[32];
  for (std::size_t i = 0; i < cfg.pairs; ++i) {
    const auto sent = synthetic_sentence(Rng::mix(cfg.seed, 2 * i));
    corpus::ComplexSimplePair p;
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    p.id = id;
    p.complex = sent.complex;
    p.simple = sent.simple;
    p.alignment = sent.split ? corpus::Alignment::one_to_many : corpus::Alignment::one_to_one;
    p.source = rng.coin() ? corpus::Source::deplain_apa : corpus::Source::deplain_web;
    const double u = rng.uniform();
    if (u < cfg.planted_bad_alignment) {
      p.alignment = rng.coin() ? corpus::Alignment::many_to_one : corpus::Alignment::many_to_many;
    } else if (u < cfg.planted_bad_alignment + cfg.planted_long_simple) {
      std::string longer = p.simple;
      while (text::word_count(longer) <= 30) longer += " " + synthetic_sentence(rng.next()).simple;
      p.simple = longer;
    } else if (u < cfg.planted_bad_alignment + cfg.planted_long_simple + cfg.planted_copy) {
      p.simple = p.complex;
    }
    out.sft.push_back(std::move(p));
  }
  // Pool: leftover deplain-like sentences (40%) and longer apa_lha-like ones.
  const std::size_t n_dep = cfg.pool * 2 / 5;
  for (std::size_t i = 0; i < cfg.pool; ++i) {
    const bool lha = i >= n_dep;
    const auto sent = synthetic_sentence(Rng::mix(cfg.seed, 2 * i + 1), lha);
    corpus::ComplexSimplePair p;
    std::snprintf(id, sizeof id, lha ? "lha-%05zu" : "dep-%05zu", lha ? i - n_dep : i);
    p.id = id;
    p.complex = sent.complex;
    p.simple = sent.simple;
    p.alignment = sent.split ? corpus::Alignment::one_to_many : corpus::Alignment::one_to_one;
    p.source = lha ? corpus::Source::apa_lha : corpus::Source::deplain_apa;
    out.pool.push_back(std::move(p));
  }
  return out;
}

}  // namespace atsalign::toylm
