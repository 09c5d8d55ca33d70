#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "atsalign/corpus.hpp"
#include "atsalign/errors.hpp"
#include "atsalign/pipeline/config.hpp"
#include "atsalign/pipeline/pipeline.hpp"
#include "atsalign/pipeline/simulate.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace atsalign;
using namespace atsalign::pipeline;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

static ordered_json with_out(ordered_json j, const fs::path& out) {
  j["out_dir"] = out.string();
  return j;
}

// A configuration small enough to run every stage in a few seconds.
static ordered_json tiny(const fs::path& out) {
  return with_out(ordered_json::parse(R"({
    "schema": "pipeline/1",
    "seed": 3,
    "synthetic": {"pairs": 300, "pool": 120, "seed": 3},
    "sample": {"sentences": 30},
    "model": {"embed": 8, "hidden": 16, "local_context": 2, "context_window": 300},
    "sft": {"epochs": 2, "eval_every": 200, "top_checkpoints": 2, "max_tokens": 20},
    "infer": {"max_tokens": 20},
    "dpo": {"max_instances": 120, "eval_every": 60, "seeds": [1]},
    "supremacy": {"sentences": 10}
  })"),
                  out);
}

static std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = corpus::read_file(e.path());
  return files;
}

TEST_CASE("stage graph") {
  const auto& g = stage_graph();
  std::vector<std::string> names;
  for (const auto& s : g) names.push_back(s.name);
  CHECK(names == std::vector<std::string>{"synth", "filter", "sample", "sft-train", "infer", "paircreate", "serve",
                                          "subsets", "dpo-train", "eval", "winrate", "supremacy", "agreement",
                                          "report"});
  CHECK(graph_is_topological(g));
  auto reversed = g;
  std::reverse(reversed.begin(), reversed.end());
  CHECK_FALSE(graph_is_topological(reversed));
}

TEST_CASE("SFT checkpoint ranking") {
  const auto r = rank_sft_checkpoints({
      {"toylm-SFT-400", 400, 40.0, 8.0},
      {"toylm-SFT-800", 800, 45.0, 6.0},   // dominates 400 and 1600
      {"toylm-SFT-1200", 1200, 47.0, 9.0},  // higher SARI, worse WSTF4: not dominated
      {"toylm-SFT-1600", 1600, 44.0, 7.0},
      {"toylm-SFT-2000", 2000, 45.0, 6.0},  // tie with 800, more instances
  });
  std::vector<std::string> order;
  for (const auto& c : r) order.push_back(c.checkpoint);
  CHECK(order == std::vector<std::string>{"toylm-SFT-1200", "toylm-SFT-800", "toylm-SFT-2000", "toylm-SFT-1600",
                                          "toylm-SFT-400"});
  CHECK_FALSE(r[0].dominated);
  CHECK(r.back().dominated);
}

TEST_CASE("DPO checkpoint selection keeps the best and earliest") {
  CHECK(select_dpo_checkpoint({{"a", 0, 0.5, 0}, {"b", 120, 0.8, 0}, {"c", 240, 0.8, 1}, {"d", 360, 0.7, 2}}) == 1);
  CHECK_THROWS(select_dpo_checkpoint({}));
}

TEST_CASE("config loading and validation") {
  const fs::path base = fixtures::source_dir() / "config";
  const auto bundled = load_config(base / "pipeline.json");
  CHECK(bundled.seed == 7);
  CHECK(bundled.sft.eval_every > 0);
  CHECK(bundled.dpo.eval_every == 120);
  CHECK(config_from_json(to_json(bundled), base).dpo.seeds == bundled.dpo.seeds);

  auto bad = [&](ordered_json j) { CHECK_THROWS_AS(config_from_json(j, base), ConfigError); };
  bad({{"schema", "pipeline/1"}, {"surprise", 1}});
  bad({{"schema", "pipeline/0"}});
  bad({{"schema", "pipeline/1"}, {"dpo", {{"subset", "favourites"}}}});
  bad({{"schema", "pipeline/1"}, {"dpo", {{"eval_every", 0}}}});
  bad({{"schema", "pipeline/1"}, {"sft", {{"eval_every", 0}}}});
  bad({{"schema", "pipeline/1"}, {"sft_split", {0.5, 0.5}}});
  bad({{"schema", "pipeline/1"}, {"seed", "seven"}});
  CHECK_THROWS_AS(load_config(base / "absent.json"), ConfigError);
}

TEST_CASE("stages refuse to run without their inputs") {
  const auto dir = fixtures::temp_dir("pipeline-missing");
  std::ostringstream log;
  Pipeline p(config_from_json(tiny(dir / "run"), fixtures::source_dir() / "config"), log);
  try {
    p.run_stage("filter");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("missing upstream artifact") != std::string::npos);
  }
  CHECK_THROWS_AS(p.run_stage("dpo-train"), DataError);
  CHECK_THROWS_AS(p.run_stage("launch"), ConfigError);
}

TEST_CASE("simulated human roles") {
  corpus::PreferencePair p;
  p.sim_a = "eins zwei drei";
  p.sim_b = "eins zwei";
  CHECK(shorter_candidate(p) == corpus::Candidate::b);
  p.sim_b = "vier fünf sechs";
  CHECK(shorter_candidate(p) == corpus::Candidate::a);

  std::vector<std::string> ids;
  for (int i = 0; i < 40; ++i) ids.push_back("p" + std::to_string(i));
  const auto f = flipped_pairs(ids, 0.3, 5);
  CHECK(f.size() == 12);
  CHECK(flipped_pairs(ids, 0.3, 5) == f);
  auto shuffled = ids;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(flipped_pairs(shuffled, 0.3, 5) == f);
  CHECK(flipped_pairs(ids, 0.0, 5).empty());

  Rng rng(1);
  CHECK(simulated_evaluation("kurz", "etwas länger hier", 0.0, rng) == align::Preferred::dpo);
  CHECK(simulated_evaluation("etwas länger hier", "kurz", 0.0, rng) == align::Preferred::sft);
  CHECK(simulated_evaluation("kurz", "etwas länger hier", 1.0, rng) == align::Preferred::sft);
}

TEST_CASE("tiny end-to-end run is complete and reproducible") {
  const auto dir = fixtures::temp_dir("pipeline-e2e");
  const fs::path base = fixtures::source_dir() / "config";
  std::ostringstream log1, log2;
  Pipeline a(config_from_json(tiny(dir / "a"), base), log1);
  const auto summary = a.run_all();
  for (const auto& s : stage_graph()) CHECK(fs::exists(dir / "a" / "reports" / ("stage_" + s.name + ".json")));
  for (const char* f : {"data/sft_split.jsonl", "data/inference_sets.jsonl", "data/pairs.jsonl",
                        "data/annotations.jsonl", "reports/winrate.json", "reports/supremacy.json",
                        "reports/agreement.json", "reports/dpo_selection.json", "reports/summary.json"})
    CHECK_MESSAGE(fs::exists(dir / "a" / f), f);

  const auto wr = ordered_json::parse(corpus::read_file(dir / "a" / "reports" / "winrate.json"));
  CHECK(wr.contains("win_rate"));
  const double w = wr.at("win_rate").get<double>();
  CHECK(w >= 0.0);
  CHECK(w <= 1.0);

  // stage reports list their outputs with sizes and checksums
  const auto st = ordered_json::parse(corpus::read_file(dir / "a" / "reports" / "stage_filter.json"));
  CHECK(st.at("stage") == "filter");
  CHECK_FALSE(st.at("outputs").empty());
  CHECK(st.at("outputs")[0].contains("crc32"));

  Pipeline b(config_from_json(tiny(dir / "b"), base), log2);
  b.run_all();
  const auto ta = read_tree(dir / "a"), tb = read_tree(dir / "b");
  CHECK(ta.size() == tb.size());
  std::size_t differing = 0;
  for (const auto& [name, content] : ta) {
    const auto it = tb.find(name);
    if (it == tb.end() || it->second != content) {
      ++differing;
      MESSAGE("differs: " << name);
    }
  }
  CHECK(differing == 0);

  // rerunning one stage over existing inputs reproduces its outputs
  const auto before = corpus::read_file(dir / "a" / "data" / "sft_split.jsonl");
  a.run_stage("filter");
  CHECK(corpus::read_file(dir / "a" / "data" / "sft_split.jsonl") == before);
}

TEST_CASE("command-line exit codes") {
  const auto dir = fixtures::temp_dir("pipeline-cli");
  const std::string bin = ATSALIGN_CLI;
  auto run = [&](const std::string& args) {
    const int rc = std::system((bin + " " + args + " >" + (dir / "out.txt").string() + " 2>" + (dir / "err.txt").string()).c_str());
    return WEXITSTATUS(rc);
  };
  CHECK(run("--help") == 0);
  CHECK(run("--no-such-flag") == 2);
  corpus::write_file(dir / "bad.json", R"({"schema":"pipeline/1","bogus":true})");
  CHECK(run("--config " + (dir / "bad.json").string() + " synth") == 2);
  corpus::write_file(dir / "tiny.json", tiny(dir / "run").dump());
  fs::copy_file(fixtures::source_dir() / "config" / "prompts.json", dir / "prompts.json");
  CHECK(run("--config " + (dir / "tiny.json").string() + " filter") == 3);
  CHECK(corpus::read_file(dir / "err.txt").find("missing upstream artifact") != std::string::npos);
  CHECK(run("--config " + (dir / "tiny.json").string() + " synth") == 0);
  CHECK(ordered_json::parse(corpus::read_file(dir / "out.txt")).at("stage") == "synth");
}
