#pragma once

// Deliberately naive reference implementations used only by the tests. They
// share no code with the library: n-grams are token vectors, multisets are
// flat lists searched linearly, and every quantity is recomputed from scratch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Seq = std::vector<std::string>;
using Gram = std::vector<std::string>;
using Bag = std::vector<std::pair<Gram, long long>>;  // multiset as (gram, count)

inline long long get(const Bag& b, const Gram& g) {
  for (const auto& [k, v] : b)
    if (k == g) return v;
  return 0;
}

inline void bump(Bag& b, const Gram& g, long long by = 1) {
  for (auto& [k, v] : b)
    if (k == g) {
      v += by;
      return;
    }
  b.emplace_back(g, by);
}

inline std::vector<Gram> grams(const Seq& s, std::size_t n) {
  std::vector<Gram> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) out.emplace_back(s.begin() + i, s.begin() + i + n);
  return out;
}

inline Bag bag(const std::vector<Gram>& gs, long long times = 1) {
  Bag b;
  for (const auto& g : gs) bump(b, g, times);
  return b;
}

// Multiset algebra with Counter semantics: & takes minima, - drops non-positive.
inline Bag band(const Bag& a, const Bag& b) {
  Bag out;
  for (const auto& [g, v] : a) {
    const long long m = std::min(v, get(b, g));
    if (m > 0) out.emplace_back(g, m);
  }
  return out;
}

inline Bag bminus(const Bag& a, const Bag& b) {
  Bag out;
  for (const auto& [g, v] : a) {
    const long long m = v - get(b, g);
    if (m > 0) out.emplace_back(g, m);
  }
  return out;
}

inline double f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

// SARI as in the original add/keep/delete formulation with reference-count
// replication; empty operation sets score 1.
inline double sari(const Seq& src, const Seq& cand, const std::vector<Seq>& refs) {
  const long long m = static_cast<long long>(refs.size());
  double keep_sum = 0, del_sum = 0, add_sum = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const Bag s = bag(grams(src, n), m);
    const Bag c = bag(grams(cand, n), m);
    Bag r;
    for (const auto& ref : refs)
      for (const auto& g : grams(ref, n)) bump(r, g);

    const Bag keep = band(s, c);
    const Bag keep_good = band(keep, r);
    const Bag keep_all = band(s, r);
    double p1 = 0, p2 = 0;
    for (const auto& [g, v] : keep) p1 += double(get(keep_good, g)) / double(v);
    for (const auto& [g, v] : keep_all) p2 += double(get(keep_good, g)) / double(v);
    const double kp = keep.empty() ? 1.0 : p1 / double(keep.size());
    const double kr = keep_all.empty() ? 1.0 : p2 / double(keep_all.size());

    const Bag del = bminus(s, c);
    const Bag del_good = bminus(del, r);
    double d1 = 0;
    for (const auto& [g, v] : del) d1 += double(get(del_good, g)) / double(v);
    const double dp = del.empty() ? 1.0 : d1 / double(del.size());

    // additions are judged on distinct n-grams
    std::vector<Gram> added, added_good, added_all;
    const auto sg = grams(src, n);
    auto in = [](const std::vector<Gram>& v, const Gram& g) { return std::find(v.begin(), v.end(), g) != v.end(); };
    std::vector<Gram> rg;
    for (const auto& ref : refs)
      for (const auto& g : grams(ref, n)) rg.push_back(g);
    for (const auto& g : grams(cand, n))
      if (!in(sg, g) && !in(added, g)) {
        added.push_back(g);
        if (in(rg, g)) added_good.push_back(g);
      }
    for (const auto& g : rg)
      if (!in(sg, g) && !in(added_all, g)) added_all.push_back(g);
    const double ap = added.empty() ? 1.0 : double(added_good.size()) / double(added.size());
    const double ar = added_all.empty() ? 1.0 : double(added_good.size()) / double(added_all.size());

    keep_sum += f1(kp, kr);
    del_sum += dp;
    add_sum += f1(ap, ar);
  }
  return 100.0 * (keep_sum / 4 + del_sum / 4 + add_sum / 4) / 3;
}

// Sentence BLEU: clipped precisions up to min(max_n, |cand|), geometric mean,
// closest reference length with ties to the shorter one.
inline double bleu(const Seq& cand, const std::vector<Seq>& refs, std::size_t max_n = 4) {
  if (cand.empty()) return 0.0;
  const std::size_t orders = std::min(max_n, cand.size());
  double logs = 0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const auto cg = grams(cand, n);
    long long clipped = 0;
    std::vector<Gram> seen;
    for (const auto& g : cg) {
      if (std::find(seen.begin(), seen.end(), g) != seen.end()) continue;
      seen.push_back(g);
      const long long in_cand = std::count(cg.begin(), cg.end(), g);
      long long best = 0;
      for (const auto& r : refs) {
        const auto rg = grams(r, n);
        best = std::max<long long>(best, std::count(rg.begin(), rg.end(), g));
      }
      clipped += std::min(in_cand, best);
    }
    if (clipped == 0) return 0.0;
    logs += std::log(double(clipped) / double(cg.size()));
  }
  std::size_t best_len = refs.front().size();
  for (const auto& r : refs) {
    const auto d = [&](std::size_t len) { return len > cand.size() ? len - cand.size() : cand.size() - len; };
    if (d(r.size()) < d(best_len) || (d(r.size()) == d(best_len) && r.size() < best_len)) best_len = r.size();
  }
  const double bp = cand.size() > best_len ? 1.0 : std::exp(1.0 - double(best_len) / double(cand.size()));
  return bp * std::exp(logs / double(orders));
}

// Longest common subsequence by trying every subsequence of `a`.
inline std::size_t lcs_bruteforce(const Seq& a, const Seq& b) {
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    const auto k = static_cast<std::size_t>(__builtin_popcount(mask));
    if (k <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else ++j;
    }
    if (ok) best = k;
  }
  return best;
}

inline double rouge_f(double match, double cand_total, double ref_total) {
  if (cand_total == 0 && ref_total == 0) return 1.0;
  if (cand_total == 0 || ref_total == 0 || match == 0) return 0.0;
  return f1(match / cand_total, match / ref_total);
}

inline double rouge_n(const Seq& cand, const Seq& ref, std::size_t n) {
  const auto cg = grams(cand, n), rg = grams(ref, n);
  std::vector<bool> used(rg.size(), false);
  long long match = 0;
  for (const auto& g : cg)
    for (std::size_t j = 0; j < rg.size(); ++j)
      if (!used[j] && rg[j] == g) {
        used[j] = true;
        ++match;
        break;
      }
  return rouge_f(double(match), double(cg.size()), double(rg.size()));
}

inline double rouge_l(const Seq& cand, const Seq& ref) {
  return rouge_f(double(lcs_bruteforce(cand, ref)), double(cand.size()), double(ref.size()));
}

// Nominal Krippendorff alpha from an explicit coincidence matrix built by
// walking every ordered pair of ratings inside each unit.
// units[u] lists the categories assigned to unit u (missing ratings omitted).
// Returns NaN where alpha is undefined.
inline double alpha(const std::vector<std::vector<int>>& units, int categories) {
  std::vector<std::vector<double>> o(categories, std::vector<double>(categories, 0.0));
  for (const auto& u : units) {
    if (u.size() < 2) continue;
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < u.size(); ++j)
        if (i != j) o[u[i]][u[j]] += 1.0 / double(u.size() - 1);
  }
  std::vector<double> nc(categories, 0.0);
  double n = 0;
  for (int c = 0; c < categories; ++c)
    for (int k = 0; k < categories; ++k) {
      nc[c] += o[c][k];
      n += o[c][k];
    }
  double d_o = 0, d_e = 0;
  for (int c = 0; c < categories; ++c)
    for (int k = 0; k < categories; ++k)
      if (c != k) {
        d_o += o[c][k];
        d_e += nc[c] * nc[k];
      }
  if (n == 0 || d_e == 0) return std::nan("");  // undefined
  d_o /= n;
  d_e /= n * (n - 1);
  return 1.0 - d_o / d_e;
}

// P(X >= k) for X ~ Binomial(n, 1/2) using exact integer binomial coefficients
// (unsigned __int128 is exact up to n = 127).
inline double binomial_upper_tail_half(unsigned k, unsigned n) {
  unsigned __int128 num = 0, c = 1;  // c = C(n, i)
  for (unsigned i = 0; i <= n; ++i) {
    if (i >= k) num += c;
    c = c * (n - i) / (i + 1);
  }
  return static_cast<double>(num) / std::ldexp(1.0, static_cast<int>(n));
}

// Every sequence over `alphabet` with length in [min_len, max_len].
inline std::vector<Seq> all_sequences(std::size_t min_len, std::size_t max_len,
                                      const Seq& alphabet = {"a", "b", "c"}) {
  std::vector<Seq> out;
  std::vector<Seq> layer{Seq{}};
  for (std::size_t len = 0; len <= max_len; ++len) {
    if (len >= min_len) out.insert(out.end(), layer.begin(), layer.end());
    std::vector<Seq> next;
    for (const auto& s : layer)
      for (const auto& sym : alphabet) {
        next.push_back(s);
        next.back().push_back(sym);
      }
    layer = std::move(next);
  }
  return out;
}

}  // namespace oracle
