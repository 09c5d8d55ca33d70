#include "atsalign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "atsalign/errors.hpp"
#include "atsalign/ngram.hpp"

namespace atsalign::metrics {

using nlohmann::ordered_json;

namespace {

bool is_vowel(char32_t c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
    case 0xE4: case 0xF6: case 0xFC:  // ä ö ü
      return true;
    default:
      return false;
  }
}

bool is_digraph(char32_t a, char32_t b) {
  static const std::set<std::pair<char32_t, char32_t>> kDigraphs{
      {'a', 'a'}, {'e', 'e'}, {'o', 'o'}, {'i', 'e'}, {'e', 'i'}, {'a', 'i'},
      {'a', 'u'}, {'e', 'u'}, {0xE4, 'u'}, {'e', 'y'}, {'a', 'y'}};
  return kDigraphs.contains({a, b});
}

}  // namespace

int count_syllables_de(std::string_view word) {
  if (word.empty()) throw DomainError("count_syllables_de: empty word");
  const std::string lower = text::to_lower(word);
  std::vector<char32_t> cps;
  for (std::size_t i = 0; i < lower.size();) cps.push_back(text::next_codepoint(lower, i));
  int count = 0;
  for (std::size_t i = 0; i < cps.size();) {
    if (!is_vowel(cps[i])) {
      ++i;
      continue;
    }
    ++count;
    i += (i + 1 < cps.size() && is_digraph(cps[i], cps[i + 1])) ? 2 : 1;
  }
  return std::max(count, 1);
}

ReadabilityStats readability(std::string_view input) {
  ReadabilityStats s;
  std::size_t long_words = 0, syllables = 0;
  for (const auto& sentence : text::split_sentences(input)) {
    const auto toks = text::tokenize(sentence);
    if (toks.empty()) continue;
    ++s.sentences;
    for (const auto& w : toks) {
      const int syl = count_syllables_de(w);
      syllables += static_cast<std::size_t>(syl);
      if (syl > 3) ++long_words;
      ++s.words;
    }
  }
  if (s.words == 0) throw DomainError("readability: text has no words");
  const double words = static_cast<double>(s.words);
  s.ms = 100.0 * static_cast<double>(long_words) / words;
  s.sl = words / static_cast<double>(s.sentences);
  s.asw = static_cast<double>(syllables) / words;
  s.wstf4 = wstf4_formula(s.ms, s.sl);
  s.flesch_de = flesch_de_formula(s.sl, s.asw);
  return s;
}

double wstf4(std::string_view t) { return readability(t).wstf4; }
double flesch_de(std::string_view t) { return readability(t).flesch_de; }

namespace {

using ngram::Counts;

Counts scaled(Counts c, long long k) {
  for (auto& [g, v] : c) v *= k;
  return c;
}

Counts intersect(const Counts& a, const Counts& b) {
  Counts out;
  for (const auto& [g, va] : a)
    if (auto it = b.find(g); it != b.end()) out[g] = std::min(va, it->second);
  return out;
}

Counts subtract(const Counts& a, const Counts& b) {
  Counts out;
  for (const auto& [g, va] : a) {
    auto it = b.find(g);
    const long long v = va - (it == b.end() ? 0 : it->second);
    if (v > 0) out[g] = v;
  }
  return out;
}

long long at(const Counts& c, const ngram::Gram& g) {
  auto it = c.find(g);
  return it == c.end() ? 0 : it->second;
}

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

SariComponents sari_components(const text::Tokens& source, const text::Tokens& candidate,
                               const std::vector<text::Tokens>& references) {
  if (references.empty()) throw DomainError("sari: empty reference set");
  const auto m = static_cast<long long>(references.size());
  SariComponents out;
  double keep = 0.0, del = 0.0, add = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const Counts s = scaled(ngram::count(source, n), m);
    const Counts c = scaled(ngram::count(candidate, n), m);
    Counts r;
    for (const auto& ref : references)
      for (const auto& [g, k] : ngram::count(ref, n)) r[g] += k;

    const Counts k_all = intersect(s, c);
    const Counts k_good = intersect(k_all, r);
    const Counts k_ref = intersect(s, r);
    double kp = 1.0, kr = 1.0;
    if (!k_all.empty()) {
      double acc = 0.0;
      for (const auto& [g, v] : k_all) acc += static_cast<double>(at(k_good, g)) / static_cast<double>(v);
      kp = acc / static_cast<double>(k_all.size());
    }
    if (!k_ref.empty()) {
      double acc = 0.0;
      for (const auto& [g, v] : k_ref) acc += static_cast<double>(at(k_good, g)) / static_cast<double>(v);
      kr = acc / static_cast<double>(k_ref.size());
    }

    const Counts d_all = subtract(s, c);
    const Counts d_good = subtract(d_all, r);
    double dp = 1.0;
    if (!d_all.empty()) {
      double acc = 0.0;
      for (const auto& [g, v] : d_all) acc += static_cast<double>(at(d_good, g)) / static_cast<double>(v);
      dp = acc / static_cast<double>(d_all.size());
    }

    std::size_t a_all = 0, a_good = 0, a_ref = 0;
    for (const auto& [g, v] : c) {
      if (s.contains(g)) continue;
      ++a_all;
      if (r.contains(g)) ++a_good;
    }
    for (const auto& [g, v] : r)
      if (!s.contains(g)) ++a_ref;
    const double ap = a_all ? static_cast<double>(a_good) / static_cast<double>(a_all) : 1.0;
    const double ar = a_ref ? static_cast<double>(a_good) / static_cast<double>(a_ref) : 1.0;

    out.keep_f[n - 1] = f1(kp, kr);
    out.del_p[n - 1] = dp;
    out.add_f[n - 1] = f1(ap, ar);
    keep += out.keep_f[n - 1];
    del += dp;
    add += out.add_f[n - 1];
  }
  out.score = 100.0 * (keep / 4.0 + del / 4.0 + add / 4.0) / 3.0;
  return out;
}

double sari(const text::Tokens& source, const text::Tokens& candidate,
            const std::vector<text::Tokens>& references) {
  return sari_components(source, candidate, references).score;
}

double sari(std::string_view source, std::string_view candidate, const std::vector<std::string>& references) {
  auto src = text::tokenize(source);
  auto cand = text::tokenize(candidate);
  if (src.empty() || cand.empty()) throw DomainError("sari: empty source or candidate");
  std::vector<text::Tokens> refs;
  for (const auto& r : references) refs.push_back(text::tokenize(r));
  return sari(src, cand, refs);
}

double bleu(const text::Tokens& candidate, const std::vector<text::Tokens>& references, std::size_t max_n) {
  if (references.empty()) throw DomainError("bleu: empty reference set");
  if (candidate.empty() || max_n == 0) return 0.0;
  const std::size_t orders = std::min(max_n, candidate.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const Counts c = ngram::count(candidate, n);
    Counts max_ref;
    for (const auto& ref : references)
      for (const auto& [g, k] : ngram::count(ref, n)) max_ref[g] = std::max(max_ref[g], k);
    const long long clipped = ngram::clipped_overlap(c, max_ref);
    if (clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(candidate.size() - n + 1));
  }
  const auto c_len = static_cast<long long>(candidate.size());
  long long r_len = static_cast<long long>(references.front().size());
  for (const auto& ref : references) {
    const auto len = static_cast<long long>(ref.size());
    const long long d_new = std::llabs(len - c_len), d_old = std::llabs(r_len - c_len);
    if (d_new < d_old || (d_new == d_old && len < r_len)) r_len = len;
  }
  const double bp = c_len > r_len ? 1.0 : std::exp(1.0 - static_cast<double>(r_len) / static_cast<double>(c_len));
  return bp * std::exp(log_sum / static_cast<double>(orders));
}

double bleu(std::string_view candidate, const std::vector<std::string>& references, std::size_t max_n) {
  std::vector<text::Tokens> refs;
  for (const auto& r : references) refs.push_back(text::tokenize(r));
  return bleu(text::tokenize(candidate), refs, max_n);
}

double mirror_rate(const std::vector<std::string>& sources, const std::vector<std::string>& outputs) {
  if (sources.size() != outputs.size()) throw DomainError("mirror_rate: length mismatch");
  if (sources.empty()) throw DomainError("mirror_rate: empty input");
  std::size_t same = 0;
  for (std::size_t i = 0; i < sources.size(); ++i)
    if (text::alpha_projection(sources[i]) == text::alpha_projection(outputs[i])) ++same;
  return static_cast<double>(same) / static_cast<double>(sources.size());
}

ordered_json to_json(const EvalReport& r) {
  ordered_json j{{"rows", r.rows},
                 {"sari", r.sari},
                 {"bleu", r.bleu},
                 {"bertscore", nullptr},
                 {"wstf4", r.wstf4},
                 {"flesch_de", r.flesch_de},
                 {"avg_word_count", r.avg_word_count},
                 {"mirror_rate", r.mirror_rate},
                 {"cross_entropy", nullptr}};
  if (r.bertscore) j["bertscore"] = *r.bertscore;
  if (r.cross_entropy) j["cross_entropy"] = *r.cross_entropy;
  return j;
}

SidecarScores load_sidecar_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  SidecarScores out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::normalize_whitespace(line).empty()) continue;
    try {
      auto j = ordered_json::parse(line);
      auto id = j.at("row_id").get<std::string>();
      auto v = j.at("bertscore_f1").get<double>();
      if (!std::isfinite(v)) throw DataError("non-finite bertscore_f1");
      if (!out.emplace(id, v).second) throw DataError("duplicate row_id '" + id + "'");
    } catch (const ordered_json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

EvalReport evaluate_checkpoint(const std::vector<std::string>& outputs,
                               const std::vector<corpus::ComplexSimplePair>& slice,
                               const EvalOptions& options) {
  if (outputs.size() != slice.size()) throw DomainError("evaluate_checkpoint: outputs not aligned to corpus rows");
  if (slice.empty()) throw DomainError("evaluate_checkpoint: empty corpus slice");
  if (options.require_bertscore && options.sidecar == nullptr)
    throw DataError("evaluate_checkpoint: bertscore requested but no sidecar supplied");

  EvalReport r;
  r.rows = slice.size();
  std::vector<std::string> sources;
  double sari_sum = 0.0, bleu_sum = 0.0, words = 0.0, wstf = 0.0, flesch = 0.0, bert = 0.0;
  std::size_t readable = 0;
  for (std::size_t i = 0; i < slice.size(); ++i) {
    const auto src = text::tokenize(slice[i].complex);
    const auto cand = text::tokenize(outputs[i]);
    const std::vector<text::Tokens> refs{text::tokenize(slice[i].simple)};
    sari_sum += sari(src, cand, refs);
    bleu_sum += bleu(cand, refs);
    words += static_cast<double>(cand.size());
    if (!cand.empty()) {
      const auto rs = readability(outputs[i]);
      wstf += rs.wstf4;
      flesch += rs.flesch_de;
      ++readable;
    }
    if (options.sidecar) {
      auto it = options.sidecar->find(slice[i].id);
      if (it == options.sidecar->end()) throw DataError("sidecar has no score for row '" + slice[i].id + "'");
      bert += it->second;
    }
    sources.push_back(slice[i].complex);
  }
  const double n = static_cast<double>(slice.size());
  r.sari = sari_sum / n;
  r.bleu = bleu_sum / n;
  r.avg_word_count = words / n;
  if (readable) {
    r.wstf4 = wstf / static_cast<double>(readable);
    r.flesch_de = flesch / static_cast<double>(readable);
  }
  r.mirror_rate = mirror_rate(sources, outputs);
  if (options.sidecar) r.bertscore = bert / n;
  r.cross_entropy = options.cross_entropy;
  return r;
}

}  // namespace atsalign::metrics
