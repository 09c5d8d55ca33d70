#include "atsalign/agreement.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "atsalign/errors.hpp"

namespace atsalign::agreement {

using nlohmann::ordered_json;

KappaResult cohen_kappa(const std::vector<std::string>& first, const std::vector<std::string>& second) {
  if (first.size() != second.size()) throw DomainError("cohen_kappa: length mismatch");
  if (first.empty()) throw DomainError("cohen_kappa: no items");
  const double n = static_cast<double>(first.size());
  std::map<std::string, std::pair<double, double>> marginals;
  double agree = 0.0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    marginals[first[i]].first += 1.0;
    marginals[second[i]].second += 1.0;
    if (first[i] == second[i]) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [c, m] : marginals) p_e += (m.first / n) * (m.second / n);
  if (p_e >= 1.0) {
    if (p_o >= 1.0) return {1.0, true};
    throw DomainError("cohen_kappa: undefined (chance agreement is 1)");
  }
  return {(p_o - p_e) / (1.0 - p_e), false};
}

void RatingMatrix::rate(const std::string& item, const std::string& coder, const std::string& category) {
  if (std::find(items.begin(), items.end(), item) == items.end()) items.push_back(item);
  if (std::find(coders.begin(), coders.end(), coder) == coders.end()) coders.push_back(coder);
  ratings[{item, coder}] = category;
}

double krippendorff_alpha(const RatingMatrix& matrix, std::size_t min_coders) {
  if (min_coders < 2) min_coders = 2;
  // per-item category counts
  std::map<std::string, std::map<std::string, double>> units;
  for (const auto& [key, cat] : matrix.ratings) units[key.first][cat] += 1.0;

  std::map<std::string, double> n_c;
  double disagree = 0.0;
  double n = 0.0;
  std::size_t used = 0;
  for (const auto& [item, counts] : units) {
    double m = 0.0;
    for (const auto& [c, k] : counts) m += k;
    if (m < static_cast<double>(min_coders)) continue;
    ++used;
    n += m;
    for (const auto& [c, k] : counts) n_c[c] += k;
    // sum over ordered pairs of distinct categories of n_uc * n_uk / (m - 1)
    double same = 0.0;
    for (const auto& [c, k] : counts) same += k * k;
    disagree += (m * m - same) / (m - 1.0);
  }
  if (used == 0) throw DomainError("krippendorff_alpha: no item has enough coders");
  double sum_sq = 0.0;
  for (const auto& [c, k] : n_c) sum_sq += k * k;
  const double expected = (n * n - sum_sq) / (n - 1.0);
  if (expected <= 0.0) throw DomainError("krippendorff_alpha: zero expected disagreement");
  return 1.0 - disagree / expected;
}

double left_preference_rate(const std::vector<AnnotationRecord>& annotations) {
  if (annotations.empty()) return 0.0;
  std::size_t left = 0;
  for (const auto& a : annotations)
    if (a.chosen == a.displayed_left) ++left;
  return static_cast<double>(left) / static_cast<double>(annotations.size());
}

IntraPasses intra_passes(const std::vector<AnnotationRecord>& annotations, const std::string& annotator_id) {
  // pair -> (latest first-pass index, latest repeated index)
  std::map<std::string, std::pair<std::optional<std::size_t>, std::optional<std::size_t>>> by_pair;
  auto newer = [&](const std::optional<std::size_t>& cur, std::size_t i) {
    return !cur || annotations[*cur].timestamp <= annotations[i].timestamp;
  };
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& a = annotations[i];
    if (a.annotator_id != annotator_id) continue;
    auto& slot = by_pair[a.pair_id];
    if (a.sanity_kind == corpus::SanityKind::repeated) {
      if (newer(slot.second, i)) slot.second = i;
    } else if (a.sanity_kind == corpus::SanityKind::none) {
      if (newer(slot.first, i)) slot.first = i;
    }
  }
  IntraPasses out;
  for (const auto& [pair, slot] : by_pair) {
    if (!slot.first || !slot.second) continue;
    out.pair_ids.push_back(pair);
    out.first.emplace_back(corpus::to_string(annotations[*slot.first].chosen));
    out.second.emplace_back(corpus::to_string(annotations[*slot.second].chosen));
  }
  return out;
}

std::map<std::string, std::optional<KappaResult>> annotator_kappas(const std::vector<AnnotationRecord>& annotations) {
  std::map<std::string, std::optional<KappaResult>> out;
  for (const auto& a : annotations) out.emplace(a.annotator_id, std::nullopt);
  for (auto& [id, slot] : out) {
    const auto passes = intra_passes(annotations, id);
    if (!passes.first.empty()) slot = cohen_kappa(passes.first, passes.second);
  }
  return out;
}

RatingMatrix group_matrix(const std::vector<PreferencePair>& pairs, const std::vector<AnnotationRecord>& annotations,
                          Group group, const std::optional<std::string>& checkpoint) {
  std::unordered_map<std::string, const PreferencePair*> by_id;
  for (const auto& p : pairs) by_id.emplace(p.id, &p);
  std::map<std::pair<std::string, std::string>, std::size_t> latest;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& a = annotations[i];
    if (a.annotator_group != group) continue;
    auto it = by_id.find(a.pair_id);
    if (it == by_id.end()) throw DataError("annotation references unknown pair '" + a.pair_id + "'");
    if (checkpoint && it->second->generator_checkpoint != *checkpoint) continue;
    auto [slot, inserted] = latest.emplace(std::make_pair(a.pair_id, a.annotator_id), i);
    if (!inserted && annotations[slot->second].timestamp <= a.timestamp) slot->second = i;
  }
  RatingMatrix m;
  for (const auto& [key, idx] : latest)
    m.rate(key.first, key.second, std::string(corpus::to_string(annotations[idx].chosen)));
  return m;
}

std::map<std::string, std::optional<double>> alpha_contributions(const RatingMatrix& matrix, std::size_t min_coders) {
  std::map<std::string, std::optional<double>> out;
  const double full = krippendorff_alpha(matrix, min_coders);
  for (const auto& coder : matrix.coders) {
    RatingMatrix without;
    for (const auto& [key, cat] : matrix.ratings)
      if (key.second != coder) without.rate(key.first, key.second, cat);
    try {
      out[coder] = full - krippendorff_alpha(without, min_coders);
    } catch (const DomainError&) {
      out[coder] = std::nullopt;
    }
  }
  return out;
}

ReportBundle annotation_reports(const std::vector<PreferencePair>& pairs,
                                const std::vector<AnnotationRecord>& annotations) {
  ReportBundle b;
  std::size_t equal = 0;
  for (const auto& p : pairs) {
    ++b.checkpoint_counts[p.creator_id][p.generator_checkpoint];
    auto& ie = b.info_equality[p.creator_id];
    ie.second += 1;
    if (p.equal_information) {
      ie.first += 1;
      ++equal;
    }
  }
  b.overall_info_equality = pairs.empty() ? 0.0 : static_cast<double>(equal) / static_cast<double>(pairs.size());
  for (const auto& a : annotations) {
    auto& row = b.left_rates[a.annotator_id];
    row.group = a.annotator_group;
    row.total += 1;
    if (a.chosen == a.displayed_left) row.left += 1;
  }
  return b;
}

namespace {
std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
}  // namespace

void write_report_bundle(const ReportBundle& b, const std::filesystem::path& dir) {
  std::string prevalence = "creator_id\tcheckpoint\tpairs\tshare\n";
  std::string prevalence_series;
  for (const auto& [creator, counts] : b.checkpoint_counts) {
    std::size_t total = 0;
    for (const auto& [ck, n] : counts) total += n;
    for (const auto& [ck, n] : counts) {
      const double share = static_cast<double>(n) / static_cast<double>(total);
      prevalence += creator + "\t" + ck + "\t" + std::to_string(n) + "\t" + fmt6(share) + "\n";
      prevalence_series += ordered_json{{"label", creator + "/" + ck}, {"value", share}}.dump() + "\n";
    }
  }
  std::string info = "creator_id\tequal\tpairs\tshare\n";
  std::string info_series;
  for (const auto& [creator, ie] : b.info_equality) {
    const double share = static_cast<double>(ie.first) / static_cast<double>(ie.second);
    info += creator + "\t" + std::to_string(ie.first) + "\t" + std::to_string(ie.second) + "\t" + fmt6(share) + "\n";
    info_series += ordered_json{{"label", creator}, {"value", share}}.dump() + "\n";
  }
  info_series += ordered_json{{"label", "overall"}, {"value", b.overall_info_equality}}.dump() + "\n";
  std::string left = "annotator_id\tgroup\tleft\tannotations\tleft_rate\n";
  std::string left_series;
  for (const auto& [user, row] : b.left_rates) {
    const double rate = static_cast<double>(row.left) / static_cast<double>(row.total);
    left += user + "\t" + std::string(corpus::to_string(row.group)) + "\t" + std::to_string(row.left) + "\t" +
            std::to_string(row.total) + "\t" + fmt6(rate) + "\n";
    left_series += ordered_json{{"label", user}, {"value", rate}}.dump() + "\n";
  }
  corpus::write_file(dir / "checkpoint_prevalence.tsv", prevalence);
  corpus::write_file(dir / "info_equality.tsv", info);
  corpus::write_file(dir / "left_preference.tsv", left);
  corpus::write_file(dir / "series_checkpoint_prevalence.jsonl", prevalence_series);
  corpus::write_file(dir / "series_info_equality.jsonl", info_series);
  corpus::write_file(dir / "series_left_preference.jsonl", left_series);
}

}  // namespace atsalign::agreement
