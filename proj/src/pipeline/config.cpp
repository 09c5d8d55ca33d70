#include "atsalign/pipeline/config.hpp"

#include <set>

#include "atsalign/errors.hpp"

namespace atsalign::pipeline {

using nlohmann::ordered_json;

namespace {

void check_keys(const ordered_json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.contains(k)) throw ConfigError("unknown key '" + where + "." + k + "'");
}

template <class T>
void read(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_path(const ordered_json& j, const char* key, std::optional<fs::path>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<std::string>();
}

corpus::Fractions fractions(const ordered_json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw ConfigError("split fractions need three values");
  return {v[0], v[1], v[2]};
}

toylm::TrainConfig train_config(const ordered_json& j, toylm::TrainConfig t, const std::string& where) {
  check_keys(j, where,
             {"learning_rate", "weight_decay", "cosine_schedule", "grad_clip_norm", "batch_size", "max_seq_len",
              "loss_mode", "optimizer", "adam_beta1", "adam_beta2", "adam_eps"});
  read(j, "learning_rate", t.learning_rate);
  read(j, "weight_decay", t.weight_decay);
  read(j, "cosine_schedule", t.cosine_schedule);
  read(j, "grad_clip_norm", t.grad_clip_norm);
  read(j, "batch_size", t.batch_size);
  read(j, "max_seq_len", t.max_seq_len);
  if (j.contains("loss_mode")) t.loss_mode = toylm::parse_loss_mode(j.at("loss_mode").get<std::string>());
  if (j.contains("optimizer")) t.optimizer = toylm::parse_optimizer(j.at("optimizer").get<std::string>());
  read(j, "adam_beta1", t.adam_beta1);
  read(j, "adam_beta2", t.adam_beta2);
  read(j, "adam_eps", t.adam_eps);
  return t;
}

ordered_json train_json(const toylm::TrainConfig& t) {
  return {{"learning_rate", t.learning_rate},   {"weight_decay", t.weight_decay},
          {"cosine_schedule", t.cosine_schedule}, {"grad_clip_norm", t.grad_clip_norm},
          {"batch_size", t.batch_size},         {"max_seq_len", t.max_seq_len},
          {"loss_mode", toylm::to_string(t.loss_mode)}, {"optimizer", toylm::to_string(t.optimizer)},
          {"adam_beta1", t.adam_beta1},         {"adam_beta2", t.adam_beta2},
          {"adam_eps", t.adam_eps}};
}

}  // namespace

std::vector<annotate::AnnotatorProfile> default_annotators() {
  std::vector<annotate::AnnotatorProfile> out;
  for (const char* id : {"ta01", "ta02", "ta03", "ta04"}) out.push_back({id, corpus::Group::target, false, "login-" + std::string(id), {}});
  out.push_back({"ea01", corpus::Group::expert, false, "login-ea01", {}});
  out.push_back({"ea02", corpus::Group::expert, true, "login-ea02", {}});
  return out;
}

void PipelineConfig::validate() const {
  sft.train.validate();
  dpo.train.validate();
  if (sft.eval_every == 0 || dpo.eval_every == 0) throw ConfigError("evaluation cadences must be positive");
  if (sft.epochs == 0 || sft.top_checkpoints == 0) throw ConfigError("sft.epochs and sft.top_checkpoints must be positive");
  if (!(dpo.dpo.beta > 0.0)) throw ConfigError("dpo.beta must be > 0");
  if (dpo.dpo.batch_size == 0 || dpo.max_instances == 0) throw ConfigError("dpo batch size and budget must be positive");
  if (dpo.seeds.empty()) throw ConfigError("dpo.seeds must not be empty");
  if (infer.per_set < 2 || infer.temperatures.empty() || infer.top_ps.empty())
    throw ConfigError("infer needs at least two inferences per set and non-empty decode grids");
  if (paircreate.creators.empty()) throw ConfigError("paircreate.creators must not be empty");
  if (!(annotate.label_noise >= 0.0 && annotate.label_noise <= 1.0)) throw ConfigError("annotate.label_noise must lie in [0, 1]");
  for (const auto& [g, v] : annotate.annotator_noise)
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("annotator noise must lie in [0, 1]");
  for (const auto& a : annotate.annotators) a.validate();
  if (sample.sentences == 0 || !(sample.sigma > 0.0)) throw ConfigError("sample.sentences and sample.sigma must be positive");
  if (supremacy.sentences == 0 || supremacy.evaluators == 0) throw ConfigError("supremacy sizes must be positive");
}

PipelineConfig config_from_json(const ordered_json& j, const fs::path& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  c.annotate.annotators = default_annotators();
  c.sft.train.learning_rate = 3e-3;
  c.sft.train.optimizer = toylm::OptimizerKind::adamw;
  c.dpo.train = c.sft.train;
  c.dpo.train.batch_size = 8;
  try {
    check_keys(j, "config", {"schema", "seed", "out_dir", "paths", "synthetic", "filter", "sft_split", "sample", "model",
                             "sft", "infer", "paircreate", "annotate", "dpo", "supremacy"});
    if (j.contains("schema") && j.at("schema") != "pipeline/1") throw ConfigError("config schema must be pipeline/1");
    read(j, "seed", c.seed);
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      check_keys(p, "paths", {"prompts", "sft_corpus", "pool", "similarity_sidecar", "bertscore_dir"});
      if (p.contains("prompts")) c.paths.prompts = p.at("prompts").get<std::string>();
      read_path(p, "sft_corpus", c.paths.sft_corpus);
      read_path(p, "pool", c.paths.pool);
      read_path(p, "similarity_sidecar", c.paths.similarity_sidecar);
      read_path(p, "bertscore_dir", c.paths.bertscore_dir);
    }
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      check_keys(s, "synthetic", {"pairs", "pool", "planted_bad_alignment", "planted_long_simple", "planted_copy", "seed"});
      read(s, "pairs", c.synthetic.pairs);
      read(s, "pool", c.synthetic.pool);
      read(s, "planted_bad_alignment", c.synthetic.planted_bad_alignment);
      read(s, "planted_long_simple", c.synthetic.planted_long_simple);
      read(s, "planted_copy", c.synthetic.planted_copy);
      read(s, "seed", c.synthetic.seed);
    }
    if (j.contains("filter")) {
      const auto& f = j.at("filter");
      check_keys(f, "filter", {"entailment_threshold", "overlap_threshold", "max_words", "overlap_rule"});
      read(f, "entailment_threshold", c.filter.entailment_threshold);
      read(f, "overlap_threshold", c.filter.overlap_threshold);
      read(f, "max_words", c.filter.max_words);
      if (f.contains("overlap_rule")) {
        const auto r = f.at("overlap_rule").get<std::string>();
        if (r != "mean" && r != "any") throw ConfigError("filter.overlap_rule must be mean or any");
        c.filter.overlap_rule = r == "mean" ? filtering::OverlapRule::mean : filtering::OverlapRule::any;
      }
    }
    if (j.contains("sft_split")) c.sft_split = fractions(j.at("sft_split"));
    if (j.contains("sample")) {
      const auto& s = j.at("sample");
      check_keys(s, "sample", {"sentences", "sigma", "n_deplain", "n_lha"});
      read(s, "sentences", c.sample.sentences);
      read(s, "sigma", c.sample.sigma);
      read(s, "n_deplain", c.sample.n_deplain);
      read(s, "n_lha", c.sample.n_lha);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, "model", {"embed", "hidden", "local_context", "context_window"});
      read(m, "embed", c.model.embed);
      read(m, "hidden", c.model.hidden);
      read(m, "local_context", c.model.local_context);
      read(m, "context_window", c.model.context_window);
    }
    if (j.contains("sft")) {
      const auto& s = j.at("sft");
      check_keys(s, "sft", {"train", "epochs", "eval_every", "prompt_ids", "top_checkpoints", "max_tokens"});
      if (s.contains("train")) c.sft.train = train_config(s.at("train"), c.sft.train, "sft.train");
      read(s, "epochs", c.sft.epochs);
      read(s, "eval_every", c.sft.eval_every);
      read(s, "prompt_ids", c.sft.prompt_ids);
      read(s, "top_checkpoints", c.sft.top_checkpoints);
      read(s, "max_tokens", c.sft.max_tokens);
    }
    if (j.contains("infer")) {
      const auto& s = j.at("infer");
      check_keys(s, "infer", {"per_set", "temperatures", "top_ps", "max_tokens", "prompt_ids"});
      read(s, "per_set", c.infer.per_set);
      read(s, "temperatures", c.infer.temperatures);
      read(s, "top_ps", c.infer.top_ps);
      read(s, "max_tokens", c.infer.max_tokens);
      read(s, "prompt_ids", c.infer.prompt_ids);
    }
    if (j.contains("paircreate")) {
      check_keys(j.at("paircreate"), "paircreate", {"creators"});
      read(j.at("paircreate"), "creators", c.paircreate.creators);
    }
    if (j.contains("annotate")) {
      const auto& a = j.at("annotate");
      check_keys(a, "annotate", {"annotators", "max_shared", "label_noise", "annotator_noise"});
      if (a.contains("annotators")) {
        c.annotate.annotators.clear();
        for (const auto& p : a.at("annotators")) c.annotate.annotators.push_back(annotate::profile_from_json(p));
      }
      read(a, "max_shared", c.annotate.max_shared);
      read(a, "label_noise", c.annotate.label_noise);
      if (a.contains("annotator_noise"))
        for (const auto& [g, v] : a.at("annotator_noise").items()) c.annotate.annotator_noise[corpus::parse_group(g)] = v.get<double>();
    }
    if (j.contains("dpo")) {
      const auto& d = j.at("dpo");
      check_keys(d, "dpo", {"beta", "batch_size", "train", "max_instances", "eval_every", "seeds", "group", "subset", "split"});
      if (d.contains("train")) c.dpo.train = train_config(d.at("train"), c.dpo.train, "dpo.train");
      read(d, "beta", c.dpo.dpo.beta);
      if (d.contains("batch_size")) c.dpo.dpo.batch_size = c.dpo.train.batch_size = d.at("batch_size").get<std::size_t>();
      c.dpo.dpo.batch_size = c.dpo.train.batch_size;
      read(d, "max_instances", c.dpo.max_instances);
      read(d, "eval_every", c.dpo.eval_every);
      read(d, "seeds", c.dpo.seeds);
      if (d.contains("group")) c.dpo.group = corpus::parse_group(d.at("group").get<std::string>());
      read(d, "subset", c.dpo.subset);
      if (d.contains("split")) c.dpo.split = fractions(d.at("split"));
    }
    if (j.contains("supremacy")) {
      const auto& s = j.at("supremacy");
      check_keys(s, "supremacy", {"sentences", "evaluators", "evaluator_noise"});
      read(s, "sentences", c.supremacy.sentences);
      read(s, "evaluators", c.supremacy.evaluators);
      read(s, "evaluator_noise", c.supremacy.evaluator_noise);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  static const std::set<std::string> subsets{"all", "all_eq", "llm_eq", "max_intra", "max_inter"};
  if (!subsets.contains(c.dpo.subset)) throw ConfigError("unknown dpo.subset '" + c.dpo.subset + "'");
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(corpus::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(j, path.parent_path());
}

ordered_json to_json(const PipelineConfig& c) {
  auto opt = [](const std::optional<fs::path>& p) { return p ? ordered_json(p->string()) : ordered_json(nullptr); };
  ordered_json annotators = ordered_json::array();
  for (const auto& a : c.annotate.annotators) annotators.push_back(annotate::to_json(a));
  ordered_json noise = ordered_json::object();
  for (const auto& [g, v] : c.annotate.annotator_noise) noise[std::string(corpus::to_string(g))] = v;
  return {
      {"schema", "pipeline/1"},
      {"seed", c.seed},
      {"paths",
       {{"prompts", c.paths.prompts.string()},
        {"sft_corpus", opt(c.paths.sft_corpus)},
        {"pool", opt(c.paths.pool)},
        {"similarity_sidecar", opt(c.paths.similarity_sidecar)},
        {"bertscore_dir", opt(c.paths.bertscore_dir)}}},
      {"synthetic",
       {{"pairs", c.synthetic.pairs},
        {"pool", c.synthetic.pool},
        {"planted_bad_alignment", c.synthetic.planted_bad_alignment},
        {"planted_long_simple", c.synthetic.planted_long_simple},
        {"planted_copy", c.synthetic.planted_copy},
        {"seed", c.synthetic.seed}}},
      {"filter",
       {{"entailment_threshold", c.filter.entailment_threshold},
        {"overlap_threshold", c.filter.overlap_threshold},
        {"max_words", c.filter.max_words},
        {"overlap_rule", c.filter.overlap_rule == filtering::OverlapRule::mean ? "mean" : "any"}}},
      {"sft_split", c.sft_split},
      {"sample", {{"sentences", c.sample.sentences}, {"sigma", c.sample.sigma}, {"n_deplain", c.sample.n_deplain}, {"n_lha", c.sample.n_lha}}},
      {"model",
       {{"embed", c.model.embed},
        {"hidden", c.model.hidden},
        {"local_context", c.model.local_context},
        {"context_window", c.model.context_window}}},
      {"sft",
       {{"train", train_json(c.sft.train)},
        {"epochs", c.sft.epochs},
        {"eval_every", c.sft.eval_every},
        {"prompt_ids", c.sft.prompt_ids},
        {"top_checkpoints", c.sft.top_checkpoints},
        {"max_tokens", c.sft.max_tokens}}},
      {"infer",
       {{"per_set", c.infer.per_set},
        {"temperatures", c.infer.temperatures},
        {"top_ps", c.infer.top_ps},
        {"max_tokens", c.infer.max_tokens},
        {"prompt_ids", c.infer.prompt_ids}}},
      {"paircreate", {{"creators", c.paircreate.creators}}},
      {"annotate",
       {{"annotators", annotators}, {"max_shared", c.annotate.max_shared}, {"label_noise", c.annotate.label_noise}, {"annotator_noise", noise}}},
      {"dpo",
       {{"beta", c.dpo.dpo.beta},
        {"batch_size", c.dpo.dpo.batch_size},
        {"train", train_json(c.dpo.train)},
        {"max_instances", c.dpo.max_instances},
        {"eval_every", c.dpo.eval_every},
        {"seeds", c.dpo.seeds},
        {"group", corpus::to_string(c.dpo.group)},
        {"subset", c.dpo.subset},
        {"split", c.dpo.split}}},
      {"supremacy",
       {{"sentences", c.supremacy.sentences}, {"evaluators", c.supremacy.evaluators}, {"evaluator_noise", c.supremacy.evaluator_noise}}},
  };
}

}  // namespace atsalign::pipeline
