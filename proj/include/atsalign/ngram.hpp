#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "atsalign/text.hpp"

namespace atsalign::ngram {

/// An n-gram is its tokens joined by U+0001, which never survives tokenization.
using Gram = std::string;
using Counts = std::map<Gram, long long>;

std::vector<Gram> grams(const text::Tokens& toks, std::size_t n);
Counts count(const text::Tokens& toks, std::size_t n);
std::set<Gram> distinct(const text::Tokens& toks, std::size_t n);

/// Sum over g of min(a[g], b[g]).
long long clipped_overlap(const Counts& a, const Counts& b);
long long total(const Counts& c);

}  // namespace atsalign::ngram
