#include "atsalign/paircreate/session.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include "atsalign/errors.hpp"
#include "atsalign/rng.hpp"
#include "atsalign/toylm/prompts.hpp"

namespace atsalign::paircreate {

using nlohmann::ordered_json;

ordered_json to_json(const InferenceSet& s) {
  ordered_json inf = ordered_json::array();
  for (const auto& i : s.inferences)
    inf.push_back({{"text", i.text}, {"decode", i.decode}, {"temperature", i.temperature}, {"top_p", i.top_p},
                   {"seed", i.seed}});
  return {{"schema", "inference_sets/1"},
          {"complex_id", s.complex_id},
          {"complex", s.complex},
          {"generator_checkpoint", s.generator_checkpoint},
          {"inferences", inf}};
}

InferenceSet inference_set_from_json(const ordered_json& j, std::size_t expected) {
  try {
    if (j.contains("schema") && j.at("schema") != "inference_sets/1") throw DataError("wrong schema tag");
    InferenceSet s;
    s.complex_id = j.at("complex_id").get<std::string>();
    s.complex = j.at("complex").get<std::string>();
    s.generator_checkpoint = j.at("generator_checkpoint").get<std::string>();
    for (const auto& i : j.at("inferences")) {
      Inference inf;
      if (i.is_string()) {
        inf.text = i.get<std::string>();
      } else {
        inf.text = i.at("text").get<std::string>();
        inf.decode = i.value("decode", "");
        inf.temperature = i.value("temperature", 1.0);
        inf.top_p = i.value("top_p", 1.0);
        inf.seed = i.value("seed", std::uint64_t{0});
      }
      s.inferences.push_back(std::move(inf));
    }
    if (s.complex_id.empty() || s.generator_checkpoint.empty()) throw DataError("empty complex_id or checkpoint");
    if (s.inferences.size() != expected)
      throw DataError("expected " + std::to_string(expected) + " inferences, found " +
                      std::to_string(s.inferences.size()));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(e.what());
  }
}

std::vector<InferenceSet> load_inference_sets(const std::filesystem::path& path, std::size_t expected) {
  std::istringstream in(corpus::read_file(path));
  std::vector<InferenceSet> out;
  std::map<std::string, std::string> complex_of;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto s = inference_set_from_json(ordered_json::parse(line), expected);
      if (!seen.emplace(s.complex_id, s.generator_checkpoint).second) throw DataError("duplicate set");
      const auto [it, fresh] = complex_of.emplace(s.complex_id, s.complex);
      if (!fresh && it->second != s.complex) throw DataError("complex text differs between sets");
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_inference_sets(const std::filesystem::path& path, const std::vector<InferenceSet>& sets) {
  std::string out;
  for (const auto& s : sets) out += to_json(s).dump() + "\n";
  corpus::write_file(path, out);
}

PairSession::PairSession(std::string creator_id, std::vector<InferenceSet> sets, std::uint64_t seed)
    : creator_(std::move(creator_id)), seed_(seed), sets_(std::move(sets)) {
  if (creator_.empty()) throw ConfigError("creator id must not be empty");
  // Canonical order first so the shuffle does not depend on file order.
  std::stable_sort(sets_.begin(), sets_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.complex_id, a.generator_checkpoint) < std::tie(b.complex_id, b.generator_checkpoint);
  });
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    auto& v = checkpoint_order_[sets_[i].complex_id];
    if (v.empty()) order_.push_back(sets_[i].complex_id);
    v.push_back(i);
  }
  Rng rng(seed_);
  rng.shuffle(std::span<std::string>(order_));
  for (auto& [cid, idx] : checkpoint_order_) {
    Rng r(Rng::mix(seed_, toylm::string_key(cid)));
    r.shuffle(std::span<std::size_t>(idx));
  }
}

PairSession PairSession::resume(const ordered_json& state, std::vector<InferenceSet> sets) {
  try {
    PairSession s(state.at("creator_id").get<std::string>(), std::move(sets), state.at("seed").get<std::uint64_t>());
    if (state.at("sentence_order").get<std::vector<std::string>>() != s.order_)
      throw DataError("saved session does not match the inference sets");
    s.cursor_ = state.at("cursor").get<std::size_t>();
    s.set_cursor_ = state.at("set_cursor").get<std::size_t>();
    s.presentation_ = state.at("presentation").get<std::uint64_t>();
    s.skipped_ = state.at("skipped").get<std::vector<std::string>>();
    for (const auto& p : state.at("created")) s.created_.push_back(corpus::preference_pair_from_json(p));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("session state: ") + e.what());
  }
}

const InferenceSet& PairSession::displayed() const {
  if (exhausted()) throw DomainError("pair-creation queue is exhausted");
  return sets_[checkpoint_order_.at(order_[cursor_])[set_cursor_]];
}

Presentation PairSession::current() const {
  const auto& s = displayed();
  Presentation p;
  p.presentation_id = presentation_;
  p.complex_id = s.complex_id;
  p.complex = s.complex;
  for (const auto& i : s.inferences) p.inferences.push_back(i.text);
  p.set_number = set_cursor_ + 1;
  p.sets_total = checkpoint_order_.at(s.complex_id).size();
  return p;
}

std::size_t PairSession::sets_remaining_for_current() const {
  if (exhausted()) return 0;
  return checkpoint_order_.at(order_[cursor_]).size() - set_cursor_;
}

void PairSession::advance_sentence() {
  ++cursor_;
  set_cursor_ = 0;
}

corpus::PreferencePair PairSession::create_pair(std::uint64_t presentation_id, std::size_t first, std::size_t second,
                                                bool equal_information) {
  const auto& s = displayed();
  if (presentation_id != presentation_) throw DomainError("stale presentation");
  if (first == second) throw DomainError("a pair needs two different inferences");
  if (first >= s.inferences.size() || second >= s.inferences.size()) throw DomainError("inference index out of range");
  if (s.inferences[first].text == s.inferences[second].text)
    throw DomainError("the selected inferences have identical text");
  corpus::PreferencePair p;
  p.id = creator_ + "-" + s.complex_id;
  p.complex = s.complex;
  p.sim_a = s.inferences[first].text;
  p.sim_b = s.inferences[second].text;
  p.generator_checkpoint = s.generator_checkpoint;
  p.equal_information = equal_information;
  p.creator_id = creator_;
  created_.push_back(p);
  ++presentation_;
  advance_sentence();
  return p;
}

void PairSession::skip_set() {
  const auto& s = displayed();
  skipped_.push_back(s.complex_id + "#" + std::to_string(set_cursor_ + 1));
  ++presentation_;
  if (++set_cursor_ >= checkpoint_order_.at(s.complex_id).size()) advance_sentence();
}

ordered_json PairSession::state_json() const {
  ordered_json created = ordered_json::array();
  for (const auto& p : created_) created.push_back(p);
  return {{"schema", "paircreate_session/1"},
          {"creator_id", creator_},
          {"seed", seed_},
          {"sentence_order", order_},
          {"cursor", cursor_},
          {"set_cursor", set_cursor_},
          {"presentation", presentation_},
          {"skipped", skipped_},
          {"created", created}};
}

void PairSession::persist(const std::filesystem::path& state_path, const std::filesystem::path& pairs_path) const {
  corpus::write_jsonl(pairs_path, created_);
  corpus::write_file(state_path, state_json().dump(2) + "\n");
}

namespace {

void show(const Presentation& p, std::ostream& out) {
  out << "\n=== Satz " << p.complex_id << "  (Set " << p.set_number << "/" << p.sets_total << ") ===\n"
      << "Komplex: " << p.complex << "\n\n";
  for (std::size_t i = 0; i < p.inferences.size(); ++i) out << "  [" << (i + 1) << "] " << p.inferences[i] << "\n";
  out << "\nCheckliste: Entailment | gleicher Informationsgehalt | Qualität | Vielfalt\n"
      << "Befehle: pair I J eq|neq   skip   quit\n> " << std::flush;
}

}  // namespace

std::size_t run_terminal(PairSession& session, std::istream& in, std::ostream& out,
                         const std::filesystem::path& state_path, const std::filesystem::path& pairs_path) {
  std::size_t made = 0;
  while (!session.exhausted()) {
    const auto p = session.current();
    show(p, out);
    std::string line;
    if (!std::getline(in, line)) break;
    std::istringstream cmd(line);
    std::string verb;
    cmd >> verb;
    try {
      if (verb == "quit") break;
      if (verb == "skip") {
        session.skip_set();
      } else if (verb == "pair") {
        std::size_t i = 0, j = 0;
        std::string eq;
        if (!(cmd >> i >> j >> eq) || (eq != "eq" && eq != "neq") || i == 0 || j == 0) {
          out << "usage: pair I J eq|neq\n";
          continue;
        }
        session.create_pair(p.presentation_id, i - 1, j - 1, eq == "eq");
        ++made;
      } else {
        out << "unknown command\n";
        continue;
      }
      session.persist(state_path, pairs_path);
    } catch (const DomainError& e) {
      out << "rejected: " << e.what() << "\n";
    }
  }
  if (session.exhausted()) out << "\nAlle Sätze bearbeitet.\n";
  session.persist(state_path, pairs_path);
  return made;
}

}  // namespace atsalign::paircreate
