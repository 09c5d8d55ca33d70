#include "atsalign/ngram.hpp"

#include <algorithm>

namespace atsalign::ngram {

std::vector<Gram> grams(const text::Tokens& toks, std::size_t n) {
  std::vector<Gram> out;
  if (n == 0 || toks.size() < n) return out;
  out.reserve(toks.size() - n + 1);
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    Gram g = toks[i];
    for (std::size_t k = 1; k < n; ++k) {
      g.push_back('\x01');
      g += toks[i + k];
    }
    out.push_back(std::move(g));
  }
  return out;
}

Counts count(const text::Tokens& toks, std::size_t n) {
  Counts c;
  for (auto& g : grams(toks, n)) ++c[g];
  return c;
}

std::set<Gram> distinct(const text::Tokens& toks, std::size_t n) {
  auto g = grams(toks, n);
  return {g.begin(), g.end()};
}

long long clipped_overlap(const Counts& a, const Counts& b) {
  long long s = 0;
  for (const auto& [g, ca] : a) {
    auto it = b.find(g);
    if (it != b.end()) s += std::min(ca, it->second);
  }
  return s;
}

long long total(const Counts& c) {
  long long s = 0;
  for (const auto& [g, k] : c) s += k;
  return s;
}

}  // namespace atsalign::ngram
