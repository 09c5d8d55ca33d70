#include "atsalign/toylm/model.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "atsalign/errors.hpp"
#include "atsalign/rng.hpp"
#include "atsalign/simd/kernels.hpp"

namespace atsalign::toylm {

double logsumexp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

PolicyModel::PolicyModel(Vocabulary vocab, Dims dims) : vocab_(std::move(vocab)), dims_(dims) {
  if (dims_.embed == 0 || dims_.hidden == 0 || dims_.local_context == 0 || dims_.context_window < 2)
    throw ConfigError("model dimensions must be positive and the window at least 2");
  const std::size_t V = vocab_.size(), d = dims_.embed, H = dims_.hidden, in = input_width();
  layout_.E = 0;
  layout_.G = layout_.E + V * d;
  layout_.W = layout_.G + V * d;
  layout_.b = layout_.W + H * in;
  layout_.U = layout_.b + H;
  layout_.u = layout_.U + V * H;
  layout_.total = layout_.u + V;
  params_.assign(layout_.total, 0.0);
}

PolicyModel PolicyModel::random(Vocabulary vocab, Dims dims, std::uint64_t seed, const InitOptions& init) {
  PolicyModel m(std::move(vocab), dims);
  Rng rng(seed);
  auto& p = m.params_;
  const auto& L = m.layout_;
  for (std::size_t i = L.E; i < L.W; ++i) p[i] = init.embed_scale * rng.normal();
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(m.input_width()));
  for (std::size_t i = L.W; i < L.b; ++i) p[i] = w_scale * rng.normal();
  if (!init.zero_output) {
    const double u_scale = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
    for (std::size_t i = L.b; i < L.U; ++i) p[i] = 0.1 * rng.normal();
    for (std::size_t i = L.U; i < L.total; ++i) p[i] = u_scale * rng.normal();
  }
  return m;
}

void PolicyModel::check_ids(std::span<const int> ids) const {
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size())
      throw DomainError("token id " + std::to_string(id) + " outside the vocabulary");
}

std::vector<int> PolicyModel::sequence(std::span<const int> prompt, std::span<const int> completion) const {
  check_ids(prompt);
  check_ids(completion);
  const std::size_t n = 1 + prompt.size() + completion.size();
  if (n > dims_.context_window)
    throw DomainError("sequence of " + std::to_string(n) + " tokens exceeds the context window of " +
                      std::to_string(dims_.context_window));
  std::vector<int> seq;
  seq.reserve(n);
  seq.push_back(Vocabulary::kBos);
  seq.insert(seq.end(), prompt.begin(), prompt.end());
  seq.insert(seq.end(), completion.begin(), completion.end());
  return seq;
}

double PolicyModel::logprob_sequence(std::span<const int> prompt, std::span<const int> completion) const {
  const auto seq = sequence(prompt, completion);
  return score(seq, 1 + prompt.size(), 0.0, {});
}

namespace {

// Fills z for position k (predicting seq[k]); `bag_sum` holds sum_{j<k} G[seq[j]].
void build_input(const double* E, std::size_t d, std::size_t c, std::span<const int> seq, std::size_t k,
                 const std::vector<double>& bag_sum, std::vector<double>& z) {
  for (std::size_t i = 0; i < c; ++i) {
    // slot i holds token k - c + i
    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(c) + static_cast<std::ptrdiff_t>(i);
    const int tok = pos < 0 ? Vocabulary::kBos : seq[static_cast<std::size_t>(pos)];
    std::copy_n(E + static_cast<std::size_t>(tok) * d, d, z.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  const double inv = 1.0 / static_cast<double>(k);
  for (std::size_t j = 0; j < d; ++j) z[c * d + j] = bag_sum[j] * inv;
}

}  // namespace

double PolicyModel::score(std::span<const int> seq, std::size_t first, double coef, std::span<double> grad) const {
  if (seq.empty() || seq[0] != Vocabulary::kBos) throw DomainError("scored sequences start with the BOS token");
  check_ids(seq);
  if (seq.size() > dims_.context_window) throw DomainError("sequence exceeds the context window");
  if (first == 0) first = 1;
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != params_.size()) throw DomainError("gradient buffer has the wrong size");

  const auto& K = simd::active();
  const std::size_t V = vocab_.size(), d = dims_.embed, H = dims_.hidden, c = dims_.local_context, in = input_width();
  const double* P = params_.data();
  const double *E = P + layout_.E, *G = P + layout_.G, *W = P + layout_.W, *b = P + layout_.b, *U = P + layout_.U,
               *u = P + layout_.u;

  std::vector<double> bag_sum(d, 0.0), z(in), h(H), logits(V), dlogits(V), dh(H), dz(in);
  std::vector<double> dbag;  // per target position, d values each
  if (want_grad) dbag.assign((seq.size() - std::min(first, seq.size())) * d, 0.0);

  double total = 0.0;
  for (std::size_t k = 1; k < seq.size(); ++k) {
    K.axpy(1.0, G + static_cast<std::size_t>(seq[k - 1]) * d, bag_sum.data(), d);
    if (k < first) continue;
    build_input(E, d, c, seq, k, bag_sum, z);
    K.gemv(W, H, in, z.data(), b, h.data());
    for (auto& v : h) v = std::tanh(v);
    K.gemv(U, V, H, h.data(), u, logits.data());
    const double lse = logsumexp(logits);
    const int y = seq[k];
    total += logits[static_cast<std::size_t>(y)] - lse;

    if (!want_grad || coef == 0.0) continue;
    double* g = grad.data();
    for (std::size_t i = 0; i < V; ++i) dlogits[i] = -coef * std::exp(logits[i] - lse);
    dlogits[static_cast<std::size_t>(y)] += coef;
    K.ger(g + layout_.U, V, H, 1.0, dlogits.data(), h.data());
    K.axpy(1.0, dlogits.data(), g + layout_.u, V);
    std::fill(dh.begin(), dh.end(), 0.0);
    K.gemv_t_acc(U, V, H, dlogits.data(), dh.data());
    for (std::size_t i = 0; i < H; ++i) dh[i] *= 1.0 - h[i] * h[i];
    K.ger(g + layout_.W, H, in, 1.0, dh.data(), z.data());
    K.axpy(1.0, dh.data(), g + layout_.b, H);
    std::fill(dz.begin(), dz.end(), 0.0);
    K.gemv_t_acc(W, H, in, dh.data(), dz.data());
    for (std::size_t i = 0; i < c; ++i) {
      const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(c) + static_cast<std::ptrdiff_t>(i);
      const int tok = pos < 0 ? Vocabulary::kBos : seq[static_cast<std::size_t>(pos)];
      K.axpy(1.0, dz.data() + i * d, g + layout_.E + static_cast<std::size_t>(tok) * d, d);
    }
    K.axpy(1.0 / static_cast<double>(k), dz.data() + c * d, dbag.data() + (k - first) * d, d);
  }

  if (want_grad && coef != 0.0 && first < seq.size()) {
    // G[seq[j]] receives sum_{k>j} dbag_k / k; walk k downwards keeping a running sum.
    std::vector<double> running(d, 0.0);
    for (std::size_t k = seq.size() - 1; k >= 1; --k) {
      if (k >= first) K.axpy(1.0, dbag.data() + (k - first) * d, running.data(), d);
      K.axpy(1.0, running.data(), grad.data() + layout_.G + static_cast<std::size_t>(seq[k - 1]) * d, d);
    }
  }
  return total;
}

std::vector<double> PolicyModel::next_logprobs(std::span<const int> seq) const {
  if (seq.empty() || seq[0] != Vocabulary::kBos) throw DomainError("sequences start with the BOS token");
  check_ids(seq);
  const auto& K = simd::active();
  const std::size_t V = vocab_.size(), d = dims_.embed, H = dims_.hidden, c = dims_.local_context, in = input_width();
  const double* P = params_.data();
  std::vector<double> bag_sum(d, 0.0), z(in), h(H), logits(V);
  for (int tok : seq) K.axpy(1.0, P + layout_.G + static_cast<std::size_t>(tok) * d, bag_sum.data(), d);
  // Position k = seq.size() predicts the token after the last one.
  build_input(P + layout_.E, d, c, seq, seq.size(), bag_sum, z);
  K.gemv(P + layout_.W, H, in, z.data(), P + layout_.b, h.data());
  for (auto& v : h) v = std::tanh(v);
  K.gemv(P + layout_.U, V, H, h.data(), P + layout_.u, logits.data());
  const double lse = logsumexp(logits);
  for (auto& v : logits) v -= lse;
  return logits;
}

std::uint32_t PolicyModel::hash() const {
  const auto* bytes = reinterpret_cast<const Bytef*>(params_.data());
  std::size_t left = params_.size() * sizeof(double);
  uLong crc = crc32(0L, Z_NULL, 0);
  while (left > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = crc32(crc, bytes, chunk);
    bytes += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace atsalign::toylm
