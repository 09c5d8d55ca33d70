#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace atsalign::sampling {

/// Length-centred Gaussian weight: exp(-(|x| - center)^2 / (2 sigma^2)).
struct GaussianWeightSpec {
  double center = 15.0;
  double sigma = 3.0;
};

double gaussian_weight(std::size_t word_count, const GaussianWeightSpec& spec = {});

/// Weights for the two-source inference set. Leftover-corpus sentences are
/// centred on their own mean length; the second source is centred on its
/// mean pushed away from the first mean by eta = n_lha / (n_lha + n_deplain).
struct InferenceWeights {
  double mu_deplain = 0.0;
  double mu_lha = 0.0;
  double eta = 0.0;
  double lha_center = 0.0;
  std::vector<double> deplain;
  std::vector<double> lha;
};

double source_share(std::size_t n_deplain, std::size_t n_lha);

InferenceWeights inference_weights(std::span<const std::size_t> deplain_leftover_counts,
                                   std::span<const std::size_t> lha_counts, std::size_t n_deplain = 3200,
                                   std::size_t n_lha = 4800, double sigma = 3.0);

/// Draws k indices proportionally to weights. Without replacement, each
/// draw takes u = uniform() * (sum of remaining weights) and walks the
/// remaining items in index order, then removes the pick. Reproducible for a
/// fixed seed (see Rng for the stream definition).
std::vector<std::size_t> weighted_sample(std::span<const double> weights, std::size_t k, std::uint64_t seed,
                                         bool replacement = false);

template <class T>
std::vector<T> weighted_sample_items(const std::vector<T>& items, std::span<const double> weights,
                                     std::size_t k, std::uint64_t seed, bool replacement = false) {
  std::vector<T> out;
  out.reserve(k);
  for (std::size_t i : weighted_sample(weights, k, seed, replacement)) out.push_back(items[i]);
  return out;
}

}  // namespace atsalign::sampling
