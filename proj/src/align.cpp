#include "atsalign/align.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>
#include <unordered_set>

#include "atsalign/errors.hpp"
#include "atsalign/rng.hpp"

namespace atsalign::align {

using nlohmann::ordered_json;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double bt_probability(double reward_w, double reward_l) { return sigmoid(reward_w - reward_l); }

double reward_margin(const LogprobQuad& q, double beta) {
  return beta * ((q.lp_policy_w - q.lp_ref_w) - (q.lp_policy_l - q.lp_ref_l));
}

double dpo_loss(const LogprobQuad& q, double beta) { return softplus(-reward_margin(q, beta)); }

double dpo_loss_margin_grad(double margin) { return -sigmoid(-margin); }

double win_rate(const std::vector<double>& margins) {
  if (margins.empty()) throw DomainError("win_rate: no margins");
  const auto wins = std::count_if(margins.begin(), margins.end(), [](double m) { return m > 0.0; });
  return static_cast<double>(wins) / static_cast<double>(margins.size());
}

AlignmentScores score_margins(std::vector<double> margins) {
  AlignmentScores s;
  s.win_rate = win_rate(margins);
  double sum = 0.0;
  for (double m : margins) sum += m;
  s.mean_margin = sum / static_cast<double>(margins.size());
  s.margins = std::move(margins);
  return s;
}

double supremacy_score(const std::vector<Preferred>& evaluations) {
  if (evaluations.empty()) throw DomainError("supremacy_score: no evaluations");
  const auto dpo = std::count(evaluations.begin(), evaluations.end(), Preferred::dpo);
  return static_cast<double>(dpo) / static_cast<double>(evaluations.size());
}

std::vector<Preferred> majority_vote(const std::vector<std::vector<Preferred>>& per_pair, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Preferred> out;
  out.reserve(per_pair.size());
  for (const auto& votes : per_pair) {
    if (votes.empty()) throw DomainError("majority_vote: pair without evaluators");
    const auto dpo = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), Preferred::dpo));
    const std::size_t sft = votes.size() - dpo;
    if (dpo != sft) {
      out.push_back(dpo > sft ? Preferred::dpo : Preferred::sft);
    } else {
      out.push_back(rng.coin() ? Preferred::dpo : Preferred::sft);
    }
  }
  return out;
}

double binomial_test_one_sided(std::size_t k, std::size_t n, double p0) {
  if (n == 0 || k > n) throw DomainError("binomial_test_one_sided: need 0 <= k <= n and n >= 1");
  if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("binomial_test_one_sided: p0 must lie in (0, 1)");
  if (k == 0) return 1.0;
  const double log2_p = std::log2(p0);
  const double log2_q = std::log2(1.0 - p0);
  const double ln2 = std::numbers::ln2;
  const double lg_n = std::lgamma(static_cast<double>(n) + 1.0);
  std::vector<double> terms;
  terms.reserve(n - k + 1);
  for (std::size_t i = k; i <= n; ++i) {
    const double log2_choose =
        (lg_n - std::lgamma(static_cast<double>(i) + 1.0) - std::lgamma(static_cast<double>(n - i) + 1.0)) / ln2;
    terms.push_back(log2_choose + static_cast<double>(i) * log2_p + static_cast<double>(n - i) * log2_q);
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += std::exp2(t - top);
  return std::min(1.0, std::exp2(top) * sum);
}

std::vector<std::string> top_annotators(const std::map<std::string, double>& scores, std::size_t k) {
  std::vector<std::pair<std::string, double>> ranked(scores.begin(), scores.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(ranked[i].first);
  return out;
}

Subsets build_training_subsets(const std::vector<corpus::PreferencePair>& pairs,
                               const std::vector<corpus::AnnotationRecord>& annotations,
                               const std::map<std::string, double>& intra_scores,
                               const std::map<std::string, double>& inter_scores, const SubsetConfig& config) {
  if (!config.known_checkpoints.empty() &&
      std::find(config.known_checkpoints.begin(), config.known_checkpoints.end(), config.trained_checkpoint) ==
          config.known_checkpoints.end())
    throw ConfigError("unknown checkpoint id '" + config.trained_checkpoint + "'");

  std::vector<corpus::AnnotationRecord> group_annotations;
  for (const auto& a : annotations)
    if (a.annotator_group == config.group) group_annotations.push_back(a);
  const auto resolved = corpus::resolve_preferences(pairs, group_annotations);

  std::unordered_map<std::string, const corpus::PreferencePair*> by_id;
  for (const auto& p : pairs) by_id.emplace(p.id, &p);

  const std::size_t k = config.top_k ? config.top_k : (config.group == corpus::Group::target ? 4 : 2);
  Subsets out;
  auto filter = [&](auto pred) {
    std::vector<corpus::ResolvedPreference> v;
    for (const auto& r : resolved)
      if (pred(r)) v.push_back(r);
    return v;
  };
  auto by_annotators = [&](const std::vector<std::string>& ids) {
    std::unordered_set<std::string> keep(ids.begin(), ids.end());
    return filter([&](const corpus::ResolvedPreference& r) { return keep.contains(r.annotator_id); });
  };
  auto eligible = [&](const std::map<std::string, double>& scores) {
    std::map<std::string, double> s;
    std::unordered_set<std::string> in_group;
    for (const auto& a : group_annotations) in_group.insert(a.annotator_id);
    for (const auto& [id, v] : scores)
      if (in_group.contains(id)) s.emplace(id, v);
    return s;
  };

  out.sets["all"] = resolved;
  out.sets["all_eq"] = filter([&](const corpus::ResolvedPreference& r) { return by_id.at(r.pair_id)->equal_information; });
  out.sets["llm_eq"] = filter([&](const corpus::ResolvedPreference& r) {
    return by_id.at(r.pair_id)->generator_checkpoint == config.trained_checkpoint;
  });
  if (out.sets["llm_eq"].empty())
    out.warnings.push_back("no pairs generated by checkpoint '" + config.trained_checkpoint + "'; llm_eq is empty");

  out.selected_annotators["max_intra"] = top_annotators(eligible(intra_scores), k);
  out.selected_annotators["max_inter"] = top_annotators(eligible(inter_scores), k);
  out.sets["max_intra"] = by_annotators(out.selected_annotators["max_intra"]);
  out.sets["max_inter"] = by_annotators(out.selected_annotators["max_inter"]);
  for (const char* name : {"max_intra", "max_inter"})
    if (out.selected_annotators[name].size() < k)
      out.warnings.push_back(std::string(name) + ": only " + std::to_string(out.selected_annotators[name].size()) +
                             " annotators have scores");
  return out;
}

std::string margins_to_jsonl(const std::vector<std::string>& pair_ids, const AlignmentScores& scores) {
  if (pair_ids.size() != scores.margins.size()) throw DomainError("margins_to_jsonl: size mismatch");
  std::string out;
  for (std::size_t i = 0; i < pair_ids.size(); ++i) {
    out += ordered_json{{"pair_id", pair_ids[i]}, {"margin", scores.margins[i]}, {"win", scores.margins[i] > 0.0}}
               .dump();
    out += '\n';
  }
  return out;
}

ordered_json summary_json(const AlignmentScores& scores) {
  return ordered_json{{"pairs", scores.margins.size()}, {"win_rate", scores.win_rate}, {"mean_margin", scores.mean_margin}};
}

}  // namespace atsalign::align
