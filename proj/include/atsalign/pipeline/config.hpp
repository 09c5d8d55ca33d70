#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atsalign/align.hpp"
#include "atsalign/annotate/plan.hpp"
#include "atsalign/filtering.hpp"
#include "atsalign/toylm/model.hpp"
#include "atsalign/toylm/synthetic.hpp"
#include "atsalign/toylm/train.hpp"

namespace atsalign::pipeline {

namespace fs = std::filesystem;

struct PipelineConfig {
  fs::path base_dir;  // relative paths resolve against this
  std::uint64_t seed = 7;
  fs::path out_dir = "runs/default";

  struct Paths {
    fs::path prompts = "prompts.json";
    std::optional<fs::path> sft_corpus;          // pairs file; synthetic when absent
    std::optional<fs::path> pool;                // inference candidates; synthetic when absent
    std::optional<fs::path> similarity_sidecar;  // lexical fallback when absent
    std::optional<fs::path> bertscore_dir;       // holds <checkpoint>.jsonl score files
  } paths;

  toylm::SyntheticConfig synthetic;
  filtering::FilterConfig filter;
  corpus::Fractions sft_split{0.70, 0.15, 0.15};

  struct Sample {
    std::size_t sentences = 200;
    double sigma = 3.0;
    std::size_t n_deplain = 3200;  // source sizes behind eta
    std::size_t n_lha = 4800;
  } sample;

  toylm::Dims model;

  struct Sft {
    toylm::TrainConfig train;
    std::size_t epochs = 3;
    std::size_t eval_every = 400;
    std::vector<int> prompt_ids;  // empty: every SFT prompt
    std::size_t top_checkpoints = 3;
    std::size_t max_tokens = 40;
  } sft;

  struct Infer {
    std::size_t per_set = 20;
    std::vector<double> temperatures{0.7, 1.0, 1.3};
    std::vector<double> top_ps{0.8, 0.9, 1.0};
    std::size_t max_tokens = 40;
    std::vector<int> prompt_ids;  // empty: every DPO prompt
  } infer;

  struct PairCreate {
    std::vector<std::string> creators{"pc01", "pc02"};
  } paircreate;

  struct Annotate {
    std::vector<annotate::AnnotatorProfile> annotators;
    std::size_t max_shared = 45;
    double label_noise = 0.0;
    std::map<corpus::Group, double> annotator_noise;
  } annotate;

  struct Dpo {
    align::DpoConfig dpo;
    toylm::TrainConfig train;
    std::size_t max_instances = 2000;
    std::size_t eval_every = 120;
    std::vector<std::uint64_t> seeds{1};
    corpus::Group group = corpus::Group::expert;
    std::string subset = "all";
    corpus::Fractions split{0.8, 0.1, 0.1};
  } dpo;

  struct Supremacy {
    std::size_t sentences = 50;
    std::size_t evaluators = 4;
    double evaluator_noise = 0.1;
  } supremacy;

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }
  void validate() const;
};

/// Default annotators: four target (ta01..ta04) and two expert (ea01, ea02;
/// ea02 sees the original text).
std::vector<annotate::AnnotatorProfile> default_annotators();

/// Reads a JSON config; missing keys keep their defaults and unknown keys
/// are a ConfigError.
PipelineConfig load_config(const fs::path& path);
PipelineConfig config_from_json(const nlohmann::ordered_json& j, const fs::path& base_dir);
nlohmann::ordered_json to_json(const PipelineConfig& c);

}  // namespace atsalign::pipeline
