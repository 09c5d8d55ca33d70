#include "atsalign/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "atsalign/errors.hpp"
#include "atsalign/rng.hpp"
#include "atsalign/text.hpp"

namespace atsalign::corpus {

using nlohmann::ordered_json;

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  throw DataError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<std::string_view, 4> kAlignment{"one_to_one", "one_to_many", "many_to_one",
                                                     "many_to_many"};
constexpr std::array<std::string_view, 4> kSource{"deplain_apa", "deplain_web", "apa_lha", "synthetic"};
constexpr std::array<std::string_view, 3> kSplit{"train", "dev", "test"};
constexpr std::array<std::string_view, 2> kCandidate{"a", "b"};
constexpr std::array<std::string_view, 2> kGroup{"target", "expert"};
constexpr std::array<std::string_view, 3> kSanity{"none", "repeated", "shared"};

constexpr std::string_view kPairsSchema = "pairs/1";
constexpr std::string_view kPrefSchema = "preference_pairs/1";
constexpr std::string_view kAnnSchema = "annotations/1";
constexpr std::string_view kResolvedSchema = "resolved/1";

const ordered_json& field(const ordered_json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw DataError(std::string("missing field '") + name + "'");
  return *it;
}

std::string str_field(const ordered_json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) throw DataError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

std::string text_field(const ordered_json& j, const char* name) {
  std::string s = str_field(j, name);
  if (text::normalize_whitespace(s).empty())
    throw DataError(std::string("field '") + name + "' is empty");
  return s;
}

bool bool_field(const ordered_json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_boolean()) throw DataError(std::string("field '") + name + "' must be a boolean");
  return v.get<bool>();
}

void check_schema(const ordered_json& j, std::string_view expected) {
  auto it = j.find("schema");
  if (it == j.end()) return;
  if (!it->is_string() || it->get<std::string>() != expected)
    throw DataError("schema mismatch: expected '" + std::string(expected) + "'");
}

template <class T, class Parse>
std::vector<T> load_lines(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::normalize_whitespace(line).empty()) continue;
    try {
      auto j = ordered_json::parse(line);
      if (!j.is_object()) throw DataError("record is not an object");
      if (auto rec = parse(j)) out.push_back(std::move(*rec));
    } catch (const ordered_json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template <class T>
void check_unique_ids(const std::vector<T>& records, const std::filesystem::path& path) {
  // Blank lines are skipped by the reader, so re-scan for line numbers.
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!seen.insert(records[i].id).second) {
      std::ifstream in(path);
      std::string line;
      std::size_t lineno = 0, record = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (text::normalize_whitespace(line).empty()) continue;
        if (record++ == i) break;
      }
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": duplicate id '" +
                      records[i].id + "'");
    }
  }
}

}  // namespace

std::string_view to_string(Alignment v) { return kAlignment[static_cast<std::size_t>(v)]; }
std::string_view to_string(Source v) { return kSource[static_cast<std::size_t>(v)]; }
std::string_view to_string(Split v) { return kSplit[static_cast<std::size_t>(v)]; }
std::string_view to_string(Candidate v) { return kCandidate[static_cast<std::size_t>(v)]; }
std::string_view to_string(Group v) { return kGroup[static_cast<std::size_t>(v)]; }
std::string_view to_string(SanityKind v) { return kSanity[static_cast<std::size_t>(v)]; }

Alignment parse_alignment(std::string_view s) { return parse_enum<Alignment>(s, kAlignment, "alignment"); }
Source parse_source(std::string_view s) { return parse_enum<Source>(s, kSource, "source"); }
Split parse_split(std::string_view s) { return parse_enum<Split>(s, kSplit, "split"); }
Candidate parse_candidate(std::string_view s) { return parse_enum<Candidate>(s, kCandidate, "candidate"); }
Group parse_group(std::string_view s) { return parse_enum<Group>(s, kGroup, "group"); }
SanityKind parse_sanity_kind(std::string_view s) { return parse_enum<SanityKind>(s, kSanity, "sanity kind"); }

void to_json(ordered_json& j, const ComplexSimplePair& p) {
  j = ordered_json{{"schema", kPairsSchema},
                   {"id", p.id},
                   {"complex", p.complex},
                   {"simple", p.simple},
                   {"alignment", to_string(p.alignment)},
                   {"source", to_string(p.source)}};
  if (p.split) j["split"] = to_string(*p.split);
}

void to_json(ordered_json& j, const PreferencePair& p) {
  j = ordered_json{{"schema", kPrefSchema},
                   {"id", p.id},
                   {"complex", p.complex},
                   {"sim_a", p.sim_a},
                   {"sim_b", p.sim_b},
                   {"generator_checkpoint", p.generator_checkpoint},
                   {"equal_information", p.equal_information},
                   {"creator_id", p.creator_id}};
}

void to_json(ordered_json& j, const AnnotationRecord& r) {
  j = ordered_json{{"schema", kAnnSchema},
                   {"pair_id", r.pair_id},
                   {"annotator_id", r.annotator_id},
                   {"annotator_group", to_string(r.annotator_group)},
                   {"chosen", to_string(r.chosen)},
                   {"displayed_left", to_string(r.displayed_left)},
                   {"sanity_kind", to_string(r.sanity_kind)},
                   {"timestamp", r.timestamp}};
}

void to_json(ordered_json& j, const ResolvedPreference& r) {
  j = ordered_json{{"schema", kResolvedSchema},
                   {"pair_id", r.pair_id},
                   {"complex", r.complex},
                   {"preferred", r.preferred},
                   {"dispreferred", r.dispreferred},
                   {"annotator_group", to_string(r.annotator_group)},
                   {"annotator_id", r.annotator_id}};
}

ComplexSimplePair pair_from_json(const ordered_json& j) {
  check_schema(j, kPairsSchema);
  ComplexSimplePair p;
  p.id = str_field(j, "id");
  if (p.id.empty()) throw DataError("empty id");
  p.complex = text_field(j, "complex");
  p.simple = text_field(j, "simple");
  p.alignment = parse_alignment(str_field(j, "alignment"));
  p.source = parse_source(str_field(j, "source"));
  if (j.contains("split")) p.split = parse_split(str_field(j, "split"));
  return p;
}

PreferencePair preference_pair_from_json(const ordered_json& j) {
  check_schema(j, kPrefSchema);
  PreferencePair p;
  p.id = str_field(j, "id");
  if (p.id.empty()) throw DataError("empty id");
  p.complex = text_field(j, "complex");
  p.sim_a = text_field(j, "sim_a");
  p.sim_b = text_field(j, "sim_b");
  if (p.sim_a == p.sim_b) throw DataError("sim_a and sim_b are identical");
  p.generator_checkpoint = str_field(j, "generator_checkpoint");
  p.equal_information = bool_field(j, "equal_information");
  p.creator_id = str_field(j, "creator_id");
  return p;
}

AnnotationRecord annotation_from_json(const ordered_json& j) {
  check_schema(j, kAnnSchema);
  AnnotationRecord r;
  r.pair_id = str_field(j, "pair_id");
  r.annotator_id = str_field(j, "annotator_id");
  r.annotator_group = parse_group(str_field(j, "annotator_group"));
  r.chosen = parse_candidate(str_field(j, "chosen"));
  r.displayed_left = parse_candidate(str_field(j, "displayed_left"));
  r.sanity_kind = parse_sanity_kind(str_field(j, "sanity_kind"));
  const auto& ts = field(j, "timestamp");
  if (!ts.is_number_integer()) throw DataError("field 'timestamp' must be an integer");
  r.timestamp = ts.get<std::int64_t>();
  return r;
}

ResolvedPreference resolved_from_json(const ordered_json& j) {
  check_schema(j, kResolvedSchema);
  ResolvedPreference r;
  r.pair_id = str_field(j, "pair_id");
  r.complex = text_field(j, "complex");
  r.preferred = text_field(j, "preferred");
  r.dispreferred = text_field(j, "dispreferred");
  if (r.preferred == r.dispreferred) throw DataError("preferred equals dispreferred");
  r.annotator_group = parse_group(str_field(j, "annotator_group"));
  r.annotator_id = str_field(j, "annotator_id");
  return r;
}

std::vector<ComplexSimplePair> load_pairs(const std::filesystem::path& path) {
  auto out = load_lines<ComplexSimplePair>(
      path, [](const ordered_json& j) { return std::optional(pair_from_json(j)); });
  check_unique_ids(out, path);
  return out;
}

std::vector<PreferencePair> load_preference_pairs(const std::filesystem::path& path) {
  auto out = load_lines<PreferencePair>(
      path, [](const ordered_json& j) { return std::optional(preference_pair_from_json(j)); });
  check_unique_ids(out, path);
  return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path,
                                               const LoadOptions& opts) {
  return load_lines<AnnotationRecord>(path, [&](const ordered_json& j) -> std::optional<AnnotationRecord> {
    auto rec = annotation_from_json(j);
    if (opts.inclusion_field && !bool_field(j, opts.inclusion_field->c_str())) return std::nullopt;
    return rec;
  });
}

std::vector<ResolvedPreference> load_resolved(const std::filesystem::path& path) {
  return load_lines<ResolvedPreference>(
      path, [](const ordered_json& j) { return std::optional(resolved_from_json(j)); });
}

Corpus load_corpus(const std::filesystem::path& path, CorpusKind kind, const LoadOptions& opts) {
  switch (kind) {
    case CorpusKind::pairs: return load_pairs(path);
    case CorpusKind::preference_pairs: return load_preference_pairs(path);
    case CorpusKind::annotations: return load_annotations(path, opts);
    case CorpusKind::resolved: return load_resolved(path);
  }
  throw ConfigError("unknown corpus kind");
}

namespace {
template <class T>
std::string line_of(const T& rec) {
  ordered_json j;
  to_json(j, rec);
  return j.dump(-1, ' ', false, ordered_json::error_handler_t::strict);
}
}  // namespace

std::string to_jsonl_line(const ComplexSimplePair& p) { return line_of(p); }
std::string to_jsonl_line(const PreferencePair& p) { return line_of(p); }
std::string to_jsonl_line(const AnnotationRecord& r) { return line_of(r); }
std::string to_jsonl_line(const ResolvedPreference& r) { return line_of(r); }

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const Fractions& f) {
  const double sum = f[0] + f[1] + f[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  for (double x : f)
    if (x < 0.0) throw ConfigError("split fractions must be non-negative");
  // The epsilon absorbs representation error in ratios such as 800/5200.
  auto floor_of = [n](double frac) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
  };
  const std::size_t dev = floor_of(f[1]);
  const std::size_t test = floor_of(f[2]);
  return {n - dev - test, dev, test};
}

std::string default_stratum(const ComplexSimplePair& p) {
  const std::size_t bucket = text::word_count(p.complex) / 5;
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04zu", bucket);
  return std::string(to_string(p.source)) + "/" + buf;
}

std::vector<Split> assign_splits(std::size_t n, const std::vector<std::string>& strata,
                                 const Fractions& fractions, std::uint64_t seed) {
  if (n == 0) throw DataError("cannot split an empty collection");
  if (strata.size() != n) throw ConfigError("strata size mismatch");
  const auto sizes = split_sizes(n, fractions);

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[strata[i]].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (auto& [key, idx] : groups) {
    rng.shuffle(std::span(idx));
    order.insert(order.end(), idx.begin(), idx.end());
  }

  // Integer deficit: compare sizes[s]*(k+1) - assigned[s]*n, ties to the lower split.
  std::vector<Split> out(n, Split::train);
  std::array<std::size_t, 3> assigned{0, 0, 0};
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = 3;
    long double best_deficit = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      if (assigned[s] >= sizes[s]) continue;
      const long double deficit = static_cast<long double>(sizes[s]) * (k + 1) -
                                  static_cast<long double>(assigned[s]) * n;
      if (best == 3 || deficit > best_deficit) {
        best = s;
        best_deficit = deficit;
      }
    }
    out[order[k]] = static_cast<Split>(best);
    ++assigned[best];
  }
  return out;
}

std::vector<ComplexSimplePair> stratified_split(std::vector<ComplexSimplePair> pairs,
                                                const Fractions& fractions, std::uint64_t seed,
                                                const StratumKey& key) {
  std::vector<std::string> strata;
  strata.reserve(pairs.size());
  for (const auto& p : pairs) strata.push_back(key(p));
  const auto splits = assign_splits(pairs.size(), strata, fractions, seed);
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].split = splits[i];
  return pairs;
}

std::vector<ResolvedPreference> resolve_preferences(const std::vector<PreferencePair>& pairs,
                                                    const std::vector<AnnotationRecord>& annotations) {
  std::unordered_map<std::string, const PreferencePair*> by_id;
  for (const auto& p : pairs) by_id.emplace(p.id, &p);

  std::map<std::pair<std::string, std::string>, std::size_t> latest;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& a = annotations[i];
    if (!by_id.contains(a.pair_id)) throw DataError("annotation references unknown pair '" + a.pair_id + "'");
    auto key = std::make_pair(a.pair_id, a.annotator_id);
    auto [it, inserted] = latest.emplace(key, i);
    if (!inserted && annotations[it->second].timestamp <= a.timestamp) it->second = i;
  }

  std::vector<std::size_t> kept;
  kept.reserve(latest.size());
  for (const auto& [key, idx] : latest) kept.push_back(idx);
  std::sort(kept.begin(), kept.end());

  std::vector<ResolvedPreference> out;
  out.reserve(kept.size());
  for (std::size_t idx : kept) {
    const auto& a = annotations[idx];
    const auto& p = *by_id.at(a.pair_id);
    out.push_back({p.id, p.complex, p.text(a.chosen), p.text(other(a.chosen)), a.annotator_group,
                   a.annotator_id});
  }
  return out;
}

}  // namespace atsalign::corpus
