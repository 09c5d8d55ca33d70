#include "atsalign/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "atsalign/errors.hpp"
#include "atsalign/ngram.hpp"

namespace atsalign::filtering {

using corpus::Alignment;
using nlohmann::ordered_json;

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DomainError("cosine_similarity: dimension mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw DomainError("cosine_similarity: zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

double lexical_similarity(std::string_view a, std::string_view b) {
  const auto ca = ngram::count(text::tokenize(a), 1);
  const auto cb = ngram::count(text::tokenize(b), 1);
  if (ca.empty() || cb.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [g, k] : ca) {
    na += static_cast<double>(k * k);
    if (auto it = cb.find(g); it != cb.end()) dot += static_cast<double>(k * it->second);
  }
  for (const auto& [g, k] : cb) nb += static_cast<double>(k * k);
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

SimilaritySource SimilaritySource::lexical() { return {}; }

SimilaritySource SimilaritySource::from_vectors(
    std::unordered_map<std::string, std::pair<std::vector<double>, std::vector<double>>> vectors) {
  SimilaritySource s;
  s.kind_ = Kind::sidecar_embeddings;
  for (const auto& [id, uv] : vectors) {
    if (uv.first.size() != uv.second.size() || uv.first.empty())
      throw DataError("sidecar vectors for '" + id + "' have inconsistent dimension");
    if (s.dimension_ == 0) s.dimension_ = uv.first.size();
    if (uv.first.size() != s.dimension_)
      throw DataError("sidecar vectors for '" + id + "' differ in dimension from earlier records");
  }
  s.vectors_ = std::move(vectors);
  return s;
}

SimilaritySource SimilaritySource::from_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::unordered_map<std::string, std::pair<std::vector<double>, std::vector<double>>> vectors;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::normalize_whitespace(line).empty()) continue;
    try {
      auto j = ordered_json::parse(line);
      auto id = j.at("pair_id").get<std::string>();
      auto cv = j.at("complex_vec").get<std::vector<double>>();
      auto sv = j.at("simple_vec").get<std::vector<double>>();
      if (!vectors.emplace(id, std::make_pair(std::move(cv), std::move(sv))).second)
        throw DataError("duplicate pair_id '" + id + "'");
    } catch (const ordered_json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return from_vectors(std::move(vectors));
}

double SimilaritySource::similarity(const ComplexSimplePair& p) const {
  if (kind_ == Kind::lexical_fallback) return lexical_similarity(p.complex, p.simple);
  auto it = vectors_.find(p.id);
  if (it == vectors_.end()) throw DataError("no sidecar embedding for pair '" + p.id + "'");
  return cosine_similarity(it->second.first, it->second.second);
}

namespace {

std::size_t lcs_length(const text::Tokens& a, const text::Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double f1(double match, double cand_total, double ref_total) {
  if (cand_total == 0.0 && ref_total == 0.0) return 1.0;
  if (cand_total == 0.0 || ref_total == 0.0 || match == 0.0) return 0.0;
  const double p = match / cand_total;
  const double r = match / ref_total;
  return 2.0 * p * r / (p + r);
}

template <class Pred>
Partition partition(const std::vector<ComplexSimplePair>& pairs, Pred keep) {
  Partition out;
  for (const auto& p : pairs) (keep(p) ? out.kept : out.removed).push_back(p);
  return out;
}

}  // namespace

double rouge_f1(const text::Tokens& candidate, const text::Tokens& reference, RougeVariant variant) {
  if (variant == RougeVariant::rL) {
    return f1(static_cast<double>(lcs_length(candidate, reference)),
              static_cast<double>(candidate.size()), static_cast<double>(reference.size()));
  }
  const std::size_t n = variant == RougeVariant::r1 ? 1 : 2;
  const auto cc = ngram::count(candidate, n);
  const auto rc = ngram::count(reference, n);
  return f1(static_cast<double>(ngram::clipped_overlap(cc, rc)), static_cast<double>(ngram::total(cc)),
            static_cast<double>(ngram::total(rc)));
}

Partition filter_alignment(const std::vector<ComplexSimplePair>& pairs) {
  return partition(pairs, [](const ComplexSimplePair& p) {
    return p.alignment == Alignment::one_to_one || p.alignment == Alignment::one_to_many;
  });
}

Partition filter_entailment_proxy(const std::vector<ComplexSimplePair>& pairs,
                                  const SimilaritySource& sim, double threshold) {
  return partition(pairs, [&](const ComplexSimplePair& p) {
    return sim.similarity(p) >= threshold - kThresholdSlack;
  });
}

double overlap_score(const ComplexSimplePair& p, OverlapRule rule) {
  const auto cand = text::tokenize(p.simple);
  const auto ref = text::tokenize(p.complex);
  const double r1 = rouge_f1(cand, ref, RougeVariant::r1);
  const double r2 = rouge_f1(cand, ref, RougeVariant::r2);
  const double rl = rouge_f1(cand, ref, RougeVariant::rL);
  return rule == OverlapRule::mean ? (r1 + r2 + rl) / 3.0 : std::max({r1, r2, rl});
}

Partition filter_overlap(const std::vector<ComplexSimplePair>& pairs, double threshold,
                         OverlapRule rule) {
  return partition(pairs, [&](const ComplexSimplePair& p) {
    return overlap_score(p, rule) <= threshold + kThresholdSlack;
  });
}

Partition filter_length(const std::vector<ComplexSimplePair>& pairs, std::size_t max_words) {
  return partition(pairs, [&](const ComplexSimplePair& p) { return text::word_count(p.simple) <= max_words; });
}

FilterOutcome run_filter_pipeline(const std::vector<ComplexSimplePair>& pairs,
                                  const SimilaritySource& sim, const FilterConfig& config) {
  FilterOutcome out;
  out.report.input_count = pairs.size();
  auto s1 = filter_alignment(pairs);
  out.report.removed_by_alignment = s1.removed.size();
  auto s2 = filter_entailment_proxy(s1.kept, sim, config.entailment_threshold);
  out.report.removed_by_entailment = s2.removed.size();
  auto s3 = filter_overlap(s2.kept, config.overlap_threshold, config.overlap_rule);
  out.report.removed_by_overlap = s3.removed.size();
  auto s4 = filter_length(s3.kept, config.max_words);
  out.report.removed_by_length = s4.removed.size();
  for (const auto& p : s4.kept) out.report.surviving_ids.push_back(p.id);
  out.kept = std::move(s4.kept);
  return out;
}

ordered_json report_to_json(const FilterReport& r) {
  return ordered_json{{"input_count", r.input_count},
                      {"removed_by_alignment", r.removed_by_alignment},
                      {"removed_by_entailment", r.removed_by_entailment},
                      {"removed_by_overlap", r.removed_by_overlap},
                      {"removed_by_length", r.removed_by_length},
                      {"surviving_count", r.surviving_ids.size()},
                      {"surviving_ids", r.surviving_ids}};
}

}  // namespace atsalign::filtering
