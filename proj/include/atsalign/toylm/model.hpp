#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "atsalign/toylm/vocab.hpp"

namespace atsalign::toylm {

struct Dims {
  std::size_t embed = 16;           // width of each token embedding
  std::size_t hidden = 48;          // width of the tanh layer
  std::size_t local_context = 3;    // previous tokens fed individually
  std::size_t context_window = 300; // longest scored sequence, BOS included

  bool operator==(const Dims&) const = default;
};

struct InitOptions {
  double embed_scale = 0.1;
  /// A zero output layer makes every next-token distribution uniform.
  bool zero_output = true;
};

/// Next-token model over a word vocabulary.
///
/// For the token at position k of [BOS, x_1, x_2, ...]:
///   z      = [E[x_{k-c}]; ...; E[x_{k-1}]; mean_{j<k} G[x_j]]   (BOS-padded)
///   h      = tanh(W z + b)
///   logits = U h + u
/// All parameters live in one flat vector so optimizers and checkpoints
/// treat them uniformly.
class PolicyModel {
 public:
  struct Layout {
    std::size_t E, G, W, b, U, u, total;
  };

  PolicyModel(Vocabulary vocab, Dims dims);
  static PolicyModel random(Vocabulary vocab, Dims dims, std::uint64_t seed, const InitOptions& init = {});

  const Vocabulary& vocab() const { return vocab_; }
  const Dims& dims() const { return dims_; }
  const Layout& layout() const { return layout_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  std::size_t input_width() const { return dims_.embed * (dims_.local_context + 1); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// Sum of log p(completion_i | BOS, prompt, completion_<i). Prompt
  /// positions are conditioning only. Throws DomainError on an id outside
  /// the vocabulary or when 1 + |prompt| + |completion| exceeds the window.
  double logprob_sequence(std::span<const int> prompt, std::span<const int> completion) const;

  /// Scores seq[first..] given seq[..k) for each k >= first, where seq
  /// starts with BOS. When `grad` is non-empty, adds coef * d(sum)/d(params)
  /// into it. Returns the summed log-probability.
  double score(std::span<const int> seq, std::size_t first, double coef, std::span<double> grad) const;

  /// Log-distribution of the token following `seq` (which starts with BOS).
  std::vector<double> next_logprobs(std::span<const int> seq) const;

  /// Builds [BOS, prompt..., completion...] after validating ids and length.
  std::vector<int> sequence(std::span<const int> prompt, std::span<const int> completion) const;

  /// CRC-32 of the raw parameter bytes.
  std::uint32_t hash() const;

 private:
  void check_ids(std::span<const int> ids) const;

  Vocabulary vocab_;
  Dims dims_;
  Layout layout_{};
  std::vector<double> params_;
};

/// log(sum exp(x)).
double logsumexp(std::span<const double> x);

}  // namespace atsalign::toylm
