#include "atsalign/toylm/prompts.hpp"

#include <zlib.h>

#include <algorithm>

#include "atsalign/corpus.hpp"
#include "atsalign/errors.hpp"
#include "atsalign/rng.hpp"

namespace atsalign::toylm {
namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Drops trailing sentence punctuation so "<complex_sentence>." renders once.
std::string_view strip_final_period(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '.')) s.remove_suffix(1);
  return s;
}

}  // namespace

bool PromptTemplate::used_in(std::string_view phase) const {
  return std::find(phases.begin(), phases.end(), phase) != phases.end();
}

PromptBank::PromptBank(std::vector<PromptTemplate> prompts) : prompts_(std::move(prompts)) {
  if (prompts_.empty()) throw ConfigError("prompt bank is empty");
  for (const auto& p : prompts_) {
    if (p.text.find(kPlaceholder) == std::string::npos)
      throw ConfigError("prompt " + std::to_string(p.id) + " lacks the <complex_sentence> placeholder");
    if (std::count_if(prompts_.begin(), prompts_.end(), [&](const auto& q) { return q.id == p.id; }) > 1)
      throw ConfigError("duplicate prompt id " + std::to_string(p.id));
  }
}

PromptBank PromptBank::load(const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(corpus::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("prompt bank " + path.string() + ": " + e.what());
  }
  std::vector<PromptTemplate> out;
  try {
    for (const auto& p : j.at("prompts")) {
      PromptTemplate t;
      t.id = p.at("id").get<int>();
      t.phases = p.at("phases").get<std::vector<std::string>>();
      t.shots = p.value("shots", 0);
      t.text = p.at("template").get<std::string>();
      out.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("prompt bank " + path.string() + ": " + e.what());
  }
  return PromptBank(std::move(out));
}

const PromptTemplate& PromptBank::get(int id) const {
  for (const auto& p : prompts_)
    if (p.id == id) return p;
  throw ConfigError("unknown prompt id " + std::to_string(id));
}

std::vector<int> PromptBank::ids_for(std::string_view phase, const std::vector<int>& allowed) const {
  std::vector<int> ids;
  for (const auto& p : prompts_)
    if (p.used_in(phase) && (allowed.empty() || std::find(allowed.begin(), allowed.end(), p.id) != allowed.end()))
      ids.push_back(p.id);
  if (ids.empty()) throw ConfigError("no prompt available for phase '" + std::string(phase) + "'");
  return ids;
}

std::string PromptBank::render(int id, std::string_view complex, const std::vector<Shot>& shots) const {
  const auto& t = get(id);
  if (static_cast<int>(shots.size()) < t.shots)
    throw ConfigError("prompt " + std::to_string(id) + " needs " + std::to_string(t.shots) + " examples");
  std::string s = t.text;
  for (int i = 0; i < t.shots; ++i) {
    const auto n = std::to_string(i + 1);
    replace_all(s, "<complex_sentence" + n + ">", strip_final_period(shots[static_cast<std::size_t>(i)].first));
    replace_all(s, "<simple_sentence" + n + ">", strip_final_period(shots[static_cast<std::size_t>(i)].second));
  }
  replace_all(s, kPlaceholder, strip_final_period(complex));
  return s;
}

std::uint32_t string_key(std::string_view s) {
  return static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

int assign_prompt(const std::vector<int>& ids, std::string_view sentence_id, std::uint64_t seed) {
  if (ids.empty()) throw ConfigError("no prompts to assign");
  Rng rng(Rng::mix(seed, string_key(sentence_id)));
  return ids[rng.index(ids.size())];
}

}  // namespace atsalign::toylm
