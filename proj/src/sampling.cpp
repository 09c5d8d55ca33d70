#include "atsalign/sampling.hpp"

#include <cmath>
#include <numeric>

#include "atsalign/errors.hpp"
#include "atsalign/rng.hpp"

namespace atsalign::sampling {

double gaussian_weight(std::size_t word_count, const GaussianWeightSpec& spec) {
  if (!(spec.sigma > 0.0)) throw DomainError("gaussian_weight: sigma must be positive");
  if (word_count < 1) throw DomainError("gaussian_weight: word count must be at least 1");
  const double d = static_cast<double>(word_count) - spec.center;
  return std::exp(-(d * d) / (2.0 * spec.sigma * spec.sigma));
}

double source_share(std::size_t n_deplain, std::size_t n_lha) {
  if (n_deplain + n_lha == 0) throw DomainError("source_share: both shares are zero");
  return static_cast<double>(n_lha) / static_cast<double>(n_lha + n_deplain);
}

namespace {
double mean_of(std::span<const std::size_t> xs) {
  if (xs.empty()) throw DomainError("inference_weights: empty corpus has no mean length");
  double s = 0.0;
  for (auto x : xs) s += static_cast<double>(x);
  return s / static_cast<double>(xs.size());
}
}  // namespace

InferenceWeights inference_weights(std::span<const std::size_t> deplain_leftover_counts,
                                   std::span<const std::size_t> lha_counts, std::size_t n_deplain,
                                   std::size_t n_lha, double sigma) {
  InferenceWeights w;
  w.mu_deplain = mean_of(deplain_leftover_counts);
  w.mu_lha = mean_of(lha_counts);
  w.eta = source_share(n_deplain, n_lha);
  w.lha_center = w.mu_lha + w.eta * (w.mu_lha - w.mu_deplain);
  const GaussianWeightSpec dspec{w.mu_deplain, sigma};
  const GaussianWeightSpec lspec{w.lha_center, sigma};
  for (auto c : deplain_leftover_counts) w.deplain.push_back(gaussian_weight(c, dspec));
  for (auto c : lha_counts) w.lha.push_back(gaussian_weight(c, lspec));
  return w;
}

std::vector<std::size_t> weighted_sample(std::span<const double> weights, std::size_t k, std::uint64_t seed,
                                         bool replacement) {
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weighted_sample: weights must be finite and >= 0");
  if (!replacement && k > weights.size()) throw DomainError("weighted_sample: k exceeds population size");

  std::vector<double> remaining(weights.begin(), weights.end());
  Rng rng(seed);
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t draw = 0; draw < k; ++draw) {
    const double total = std::accumulate(remaining.begin(), remaining.end(), 0.0);
    if (!(total > 0.0)) throw DomainError("weighted_sample: all remaining weights are zero");
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = remaining.size();
    std::size_t last_positive = remaining.size();
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (remaining[i] <= 0.0) continue;
      last_positive = i;
      acc += remaining[i];
      if (target < acc) {
        pick = i;
        break;
      }
    }
    if (pick == remaining.size()) pick = last_positive;  // rounding at the upper end
    out.push_back(pick);
    if (!replacement) remaining[pick] = 0.0;
  }
  return out;
}

}  // namespace atsalign::sampling
