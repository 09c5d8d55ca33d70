#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "atsalign/pipeline/config.hpp"
#include "json.hpp"

namespace atsalign::pipeline {

struct StageInfo {
  std::string name;
  std::vector<std::string> after;  // upstream stages
};

/// All stages in a valid execution order.
const std::vector<StageInfo>& stage_graph();

/// True when every stage only depends on stages listed before it.
bool graph_is_topological(const std::vector<StageInfo>& graph);

struct StageOptions {
  bool simulate = true;          // scripted creators and annotators
  std::string creator;           // interactive pair creation: which creator
  std::string host = "127.0.0.1";
  int port = 8080;
  std::istream* in = nullptr;
  std::ostream* out = nullptr;
};

// SFT checkpoint ranking: checkpoints not dominated on (SARI up, WSTF4 down)
// come first, then higher SARI, lower WSTF4, fewer instances.
struct SftCandidate {
  std::string checkpoint;
  std::size_t instances = 0;
  double sari = 0.0;
  double wstf4 = 0.0;
  bool dominated = false;
};
std::vector<SftCandidate> rank_sft_checkpoints(std::vector<SftCandidate> candidates);

// DPO checkpoint choice: highest dev win rate, earliest on ties.
struct DpoCandidate {
  std::string checkpoint;
  std::size_t instances = 0;
  double win_rate = 0.0;
  double mean_margin = 0.0;
};
std::size_t select_dpo_checkpoint(const std::vector<DpoCandidate>& candidates);

class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::ostream& log);

  const PipelineConfig& config() const { return cfg_; }
  const std::filesystem::path& out_dir() const { return out_; }

  /// Runs one stage and returns its report (also written to
  /// reports/stage_<name>.json). Unknown names are a ConfigError, missing
  /// inputs a DataError.
  nlohmann::ordered_json run_stage(const std::string& name, const StageOptions& opts = {});

  /// Runs every stage in graph order.
  nlohmann::ordered_json run_all(const StageOptions& opts = {});

 private:
  PipelineConfig cfg_;
  std::ostream& log_;
  std::filesystem::path out_;
};

}  // namespace atsalign::pipeline
