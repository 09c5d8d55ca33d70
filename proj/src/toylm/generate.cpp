#include "atsalign/toylm/generate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "atsalign/errors.hpp"
#include "atsalign/rng.hpp"

namespace atsalign::toylm {

std::string_view to_string(Decode d) { return d == Decode::greedy ? "greedy" : "top_p"; }

Decode parse_decode(std::string_view s) {
  if (s == "greedy") return Decode::greedy;
  if (s == "top_p") return Decode::top_p;
  throw ConfigError("unknown decode mode '" + std::string(s) + "'");
}

std::vector<std::pair<int, double>> nucleus(std::span<const double> probs, double p) {
  std::vector<std::pair<int, double>> items;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] > 0.0) items.emplace_back(static_cast<int>(i), probs[i]);
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (p < 1.0) {
    double cum = 0.0;
    std::size_t keep = 0;
    while (keep < items.size()) {
      cum += items[keep++].second;
      if (cum >= p) break;
    }
    items.resize(keep);
  }
  double total = 0.0;
  for (const auto& it : items) total += it.second;
  for (auto& it : items) it.second /= total;
  return items;
}

std::vector<int> generate(const PolicyModel& model, std::span<const int> prompt, const DecodeConfig& cfg) {
  std::vector<int> seq = model.sequence(prompt, {});
  const bool greedy = cfg.mode == Decode::greedy || cfg.temperature <= 0.0;
  if (!greedy && !(cfg.top_p > 0.0 && cfg.top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
  Rng rng(cfg.seed);
  std::vector<int> out;
  const double ninf = -std::numeric_limits<double>::infinity();
  while (out.size() < cfg.max_tokens && seq.size() < model.dims().context_window) {
    auto lp = model.next_logprobs(seq);
    lp[Vocabulary::kPad] = lp[Vocabulary::kUnk] = lp[Vocabulary::kBos] = ninf;
    int next = 0;
    if (greedy) {
      next = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    } else {
      const double m = *std::max_element(lp.begin(), lp.end());
      std::vector<double> probs(lp.size());
      double z = 0.0;
      for (std::size_t i = 0; i < lp.size(); ++i) z += probs[i] = std::exp((lp[i] - m) / cfg.temperature);
      for (auto& v : probs) v /= z;
      const auto pool = nucleus(probs, cfg.top_p);
      double u = rng.uniform();
      next = pool.back().first;
      for (const auto& [id, pr] : pool) {
        if (u < pr) {
          next = id;
          break;
        }
        u -= pr;
      }
    }
    if (next == Vocabulary::kEos) break;
    out.push_back(next);
    seq.push_back(next);
  }
  return out;
}

}  // namespace atsalign::toylm
