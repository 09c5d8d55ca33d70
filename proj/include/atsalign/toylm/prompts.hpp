#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace atsalign::toylm {

struct PromptTemplate {
  int id = 0;
  std::vector<std::string> phases;  // "sft", "dpo"
  int shots = 0;                    // worked examples the template expects
  std::string text;                 // contains <complex_sentence>

  bool used_in(std::string_view phase) const;
};

using Shot = std::pair<std::string, std::string>;  // complex, simple

class PromptBank {
 public:
  static constexpr std::string_view kPlaceholder = "<complex_sentence>";

  explicit PromptBank(std::vector<PromptTemplate> prompts);
  static PromptBank load(const std::filesystem::path& path);

  const std::vector<PromptTemplate>& prompts() const { return prompts_; }
  const PromptTemplate& get(int id) const;

  /// Template ids usable in a phase, optionally restricted to `allowed`.
  std::vector<int> ids_for(std::string_view phase, const std::vector<int>& allowed = {}) const;

  /// Substitutes the sentence and any worked examples. Throws ConfigError
  /// when fewer shots are supplied than the template needs.
  std::string render(int id, std::string_view complex, const std::vector<Shot>& shots = {}) const;

 private:
  std::vector<PromptTemplate> prompts_;
};

/// Uniform draw from `ids`, keyed on the sentence id so each sentence keeps
/// its prompt regardless of processing order.
int assign_prompt(const std::vector<int>& ids, std::string_view sentence_id, std::uint64_t seed);

/// CRC-32 of a string; a portable key for per-item seeds.
std::uint32_t string_key(std::string_view s);

}  // namespace atsalign::toylm
