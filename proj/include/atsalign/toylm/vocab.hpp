#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace atsalign::toylm {

/// Word-level tokens: whitespace separated, with ASCII punctuation at either
/// end of a word split off into its own token.
std::vector<std::string> split_words(std::string_view text);

/// Token inventory with four reserved ids.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);

  /// Collects every word seen at least `min_count` times, ordered by
  /// descending frequency then byte order.
  static Vocabulary build(const std::vector<std::string>& texts, std::size_t min_count = 1);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int id) const;

  /// Unknown words map to kUnk.
  int id(std::string_view word) const;
  bool contains(std::string_view word) const;

  std::vector<int> encode(std::string_view text) const;
  /// Joins tokens with single spaces; reserved tokens are dropped and
  /// decoding stops at the first end token.
  std::string decode(const std::vector<int>& ids) const;

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Right-pads (or truncates) to `length` with kPad.
std::vector<int> pad_right(std::vector<int> ids, std::size_t length);

}  // namespace atsalign::toylm
