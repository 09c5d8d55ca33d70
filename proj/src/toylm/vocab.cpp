#include "atsalign/toylm/vocab.hpp"

#include <algorithm>
#include <map>

#include "atsalign/errors.hpp"
#include "atsalign/text.hpp"

namespace atsalign::toylm {
namespace {

bool is_split_punct(char c) {
  switch (c) {
    case '.': case ',': case ':': case ';': case '!': case '?':
    case '(': case ')': case '"': case '\'':
      return true;
    default:
      return false;
  }
}

const std::vector<std::string>& reserved() {
  static const std::vector<std::string> r{"<pad>", "<unk>", "<bos>", "<eos>"};
  return r;
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& word : text::split_ws(text)) {
    std::size_t lo = 0, hi = word.size();
    std::vector<std::string> tail;
    while (lo < hi && is_split_punct(word[lo])) out.emplace_back(1, word[lo++]);
    while (hi > lo && is_split_punct(word[hi - 1])) tail.emplace_back(1, word[--hi]);
    if (hi > lo) out.emplace_back(word.substr(lo, hi - lo));
    out.insert(out.end(), tail.rbegin(), tail.rend());
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  const auto& r = reserved();
  if (tokens.size() < r.size() || !std::equal(r.begin(), r.end(), tokens.begin())) tokens.insert(tokens.begin(), r.begin(), r.end());
  tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
  }
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t min_count) {
  std::map<std::string, std::size_t> freq;
  for (const auto& t : texts)
    for (auto& w : split_words(t)) ++freq[std::move(w)];
  std::vector<std::pair<std::string, std::size_t>> items;
  for (auto& [w, n] : freq)
    if (n >= min_count && std::find(reserved().begin(), reserved().end(), w) == reserved().end()) items.emplace_back(w, n);
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens(reserved());
  for (auto& [w, n] : items) tokens.push_back(w);
  return Vocabulary(std::move(tokens));
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) throw DomainError("token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

int Vocabulary::id(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view word) const { return index_.contains(std::string(word)); }

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& w : split_words(text)) ids.push_back(id(w));
  return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kUnk || id == kBos) continue;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

std::vector<int> pad_right(std::vector<int> ids, std::size_t length) {
  ids.resize(length, Vocabulary::kPad);
  return ids;
}

}  // namespace atsalign::toylm
