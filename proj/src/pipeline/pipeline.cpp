#include "atsalign/pipeline/pipeline.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "atsalign/agreement.hpp"
#include "atsalign/align.hpp"
#include "atsalign/annotate/http.hpp"
#include "atsalign/annotate/service.hpp"
#include "atsalign/errors.hpp"
#include "atsalign/filtering.hpp"
#include "atsalign/metrics.hpp"
#include "atsalign/paircreate/session.hpp"
#include "atsalign/pipeline/simulate.hpp"
#include "atsalign/rng.hpp"
#include "atsalign/sampling.hpp"
#include "atsalign/text.hpp"
#include "atsalign/toylm/checkpoint.hpp"
#include "atsalign/toylm/generate.hpp"
#include "atsalign/toylm/prompts.hpp"
#include "atsalign/toylm/synthetic.hpp"
#include "atsalign/toylm/train.hpp"

namespace atsalign::pipeline {

using corpus::ComplexSimplePair;
using corpus::Group;
using corpus::PreferencePair;
using corpus::ResolvedPreference;
using nlohmann::ordered_json;
using toylm::PolicyModel;
using toylm::Vocabulary;

const std::vector<StageInfo>& stage_graph() {
  static const std::vector<StageInfo> g{
      {"synth", {}},
      {"filter", {"synth"}},
      {"sample", {"synth"}},
      {"sft-train", {"filter", "sample"}},
      {"infer", {"sft-train", "sample"}},
      {"paircreate", {"infer"}},
      {"serve", {"paircreate"}},
      {"subsets", {"serve", "sft-train"}},
      {"dpo-train", {"subsets"}},
      {"eval", {"sft-train", "dpo-train"}},
      {"winrate", {"dpo-train"}},
      {"supremacy", {"dpo-train"}},
      {"agreement", {"serve"}},
      {"report", {"agreement", "eval", "winrate", "supremacy"}},
  };
  return g;
}

bool graph_is_topological(const std::vector<StageInfo>& graph) {
  std::set<std::string> seen;
  for (const auto& s : graph) {
    for (const auto& dep : s.after)
      if (!seen.contains(dep)) return false;
    if (!seen.insert(s.name).second) return false;
  }
  return true;
}

std::vector<SftCandidate> rank_sft_checkpoints(std::vector<SftCandidate> c) {
  for (auto& x : c) {
    x.dominated = false;
    for (const auto& y : c) {
      if (&x == &y) continue;
      const bool no_worse = y.sari >= x.sari && y.wstf4 <= x.wstf4;
      const bool better = y.sari > x.sari || y.wstf4 < x.wstf4;
      if (no_worse && better) {
        x.dominated = true;
        break;
      }
    }
  }
  std::stable_sort(c.begin(), c.end(), [](const SftCandidate& a, const SftCandidate& b) {
    if (a.dominated != b.dominated) return !a.dominated;
    if (a.sari != b.sari) return a.sari > b.sari;
    if (a.wstf4 != b.wstf4) return a.wstf4 < b.wstf4;
    return a.instances < b.instances;
  });
  return c;
}

std::size_t select_dpo_checkpoint(const std::vector<DpoCandidate>& c) {
  if (c.empty()) throw DomainError("no DPO checkpoints to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i].win_rate > c[best].win_rate ||
        (c[i].win_rate == c[best].win_rate && c[i].instances < c[best].instances))
      best = i;
  return best;
}

namespace {

ordered_json read_json(const fs::path& p) {
  try {
    return ordered_json::parse(corpus::read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const ordered_json& j) { corpus::write_file(p, j.dump(2) + "\n"); }

std::string write_jsonl_lines(const std::vector<ordered_json>& rows) {
  std::string s;
  for (const auto& r : rows) s += r.dump() + "\n";
  return s;
}

std::uint32_t file_crc(const fs::path& p) {
  const auto s = corpus::read_file(p);
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

std::string hex32(std::uint32_t v) {
  char buf[12];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

// Everything a stage needs: paths, config and shared helpers.
class Context {
 public:
  Context(const PipelineConfig& cfg, std::ostream& log, const fs::path& out, const StageOptions& opts)
      : cfg(cfg), log(log), out(out), opts(opts) {}

  const PipelineConfig& cfg;
  std::ostream& log;
  fs::path out;
  const StageOptions& opts;
  std::vector<fs::path> written;
  ordered_json summary = ordered_json::object();

  fs::path at(const std::string& rel) const { return out / rel; }

  fs::path need_path(const fs::path& p) const {
    if (!fs::exists(p)) throw DataError("missing upstream artifact: " + p.string());
    return p;
  }
  fs::path need(const std::string& rel) const { return need_path(at(rel)); }

  void wrote(const fs::path& p) { written.push_back(p); }
  void put_json(const std::string& rel, const ordered_json& j) {
    write_json(at(rel), j);
    wrote(at(rel));
  }
  void put_text(const std::string& rel, const std::string& s) {
    corpus::write_file(at(rel), s);
    wrote(at(rel));
  }

  fs::path sft_source() const {
    return cfg.paths.sft_corpus ? cfg.resolve(*cfg.paths.sft_corpus) : at("data/sft_raw.jsonl");
  }
  fs::path pool_source() const { return cfg.paths.pool ? cfg.resolve(*cfg.paths.pool) : at("data/pool.jsonl"); }

  const toylm::PromptBank& prompts() {
    if (!bank_) bank_ = std::make_unique<toylm::PromptBank>(toylm::PromptBank::load(cfg.resolve(cfg.paths.prompts)));
    return *bank_;
  }

  std::uint64_t salt(std::string_view tag) const { return Rng::mix(cfg.seed, toylm::string_key(tag)); }

 private:
  std::unique_ptr<toylm::PromptBank> bank_;
};

std::vector<ComplexSimplePair> with_split(const std::vector<ComplexSimplePair>& pairs, corpus::Split s) {
  std::vector<ComplexSimplePair> out;
  for (const auto& p : pairs)
    if (p.split == s) out.push_back(p);
  return out;
}

// SFT prompt for one corpus pair; few-shot templates draw worked examples
// from `shots` (never the pair itself).
std::string sft_prompt(Context& ctx, const ComplexSimplePair& p, const std::vector<ComplexSimplePair>& shots) {
  const auto& bank = ctx.prompts();
  const auto ids = bank.ids_for("sft", ctx.cfg.sft.prompt_ids);
  const int id = toylm::assign_prompt(ids, p.id, ctx.salt("sft-prompt"));
  const int need = bank.get(id).shots;
  std::vector<toylm::Shot> chosen;
  if (need > 0) {
    Rng rng(Rng::mix(ctx.salt("sft-shots"), toylm::string_key(p.id)));
    std::set<std::size_t> used;
    std::size_t guard = 0;
    while (static_cast<int>(chosen.size()) < need && guard++ < 64 * shots.size() + 64) {
      const std::size_t i = rng.index(shots.size());
      if (shots[i].id == p.id || !used.insert(i).second) continue;
      chosen.emplace_back(shots[i].complex, shots[i].simple);
    }
  }
  return bank.render(id, p.complex, chosen);
}

std::string dpo_prompt(Context& ctx, const std::string& complex_id, const std::string& complex) {
  const auto& bank = ctx.prompts();
  const int id = toylm::assign_prompt(bank.ids_for("dpo", ctx.cfg.infer.prompt_ids), complex_id, ctx.salt("dpo-prompt"));
  return bank.render(id, complex);
}

std::vector<int> completion_ids(const Vocabulary& v, const std::string& s) {
  auto ids = v.encode(s);
  ids.push_back(Vocabulary::kEos);
  return ids;
}

bool fits(const PolicyModel& m, const std::vector<int>& prompt, const std::vector<int>& completion) {
  return 1 + prompt.size() + completion.size() <= m.dims().context_window;
}

std::string greedy_output(const PolicyModel& m, const std::string& prompt, std::size_t max_tokens) {
  toylm::DecodeConfig dc;
  dc.mode = toylm::Decode::greedy;
  dc.max_tokens = max_tokens;
  auto p = m.vocab().encode(prompt);
  const std::size_t room = m.dims().context_window > p.size() + 1 ? m.dims().context_window - p.size() - 1 : 0;
  dc.max_tokens = std::min(dc.max_tokens, room);
  return m.vocab().decode(toylm::generate(m, p, dc));
}

fs::path checkpoint_path(Context& ctx, const std::string& id) { return ctx.at("checkpoints/" + id + ".ckpt"); }

PolicyModel load_model(Context& ctx, const std::string& id) {
  return toylm::load_checkpoint(ctx.need_path(checkpoint_path(ctx, id)), ctx.cfg.model);
}

std::optional<metrics::SidecarScores> bertscore_for(Context& ctx, const std::string& checkpoint) {
  if (!ctx.cfg.paths.bertscore_dir) return std::nullopt;
  const auto p = ctx.cfg.resolve(*ctx.cfg.paths.bertscore_dir) / (checkpoint + ".jsonl");
  if (!fs::exists(p)) return std::nullopt;
  return metrics::load_sidecar_scores(p);
}

// Scores a checkpoint on a corpus slice with greedy decoding.
metrics::EvalReport evaluate_model(Context& ctx, const PolicyModel& m, const std::string& checkpoint,
                                   const std::vector<ComplexSimplePair>& slice,
                                   const std::vector<ComplexSimplePair>& shots, std::vector<std::string>* outputs_out) {
  std::vector<std::string> outputs;
  std::vector<toylm::SequenceExample> ce;
  for (const auto& p : slice) {
    const auto prompt = sft_prompt(ctx, p, shots);
    outputs.push_back(greedy_output(m, prompt, ctx.cfg.sft.max_tokens));
    toylm::SequenceExample ex{m.vocab().encode(prompt), completion_ids(m.vocab(), p.simple)};
    if (fits(m, ex.prompt, ex.completion)) ce.push_back(std::move(ex));
  }
  metrics::EvalOptions eo;
  const auto sidecar = bertscore_for(ctx, checkpoint);
  if (sidecar) eo.sidecar = &*sidecar;
  if (!ce.empty()) eo.cross_entropy = toylm::sft_eval_loss(m, ce, ctx.cfg.sft.train.loss_mode);
  auto r = metrics::evaluate_checkpoint(outputs, slice, eo);
  if (outputs_out) *outputs_out = std::move(outputs);
  return r;
}

// --- synth -------------------------------------------------------------------

void stage_synth(Context& ctx) {
  if (ctx.cfg.paths.sft_corpus && ctx.cfg.paths.pool) {
    ctx.summary["skipped"] = "external corpora configured";
    return;
  }
  const auto syn = toylm::generate_synthetic(ctx.cfg.synthetic);
  ctx.put_text("data/sft_raw.jsonl", corpus::to_jsonl(syn.sft));
  ctx.put_text("data/pool.jsonl", corpus::to_jsonl(syn.pool));
  ctx.summary["sft_pairs"] = syn.sft.size();
  ctx.summary["pool_sentences"] = syn.pool.size();
}

// --- filter ------------------------------------------------------------------

void stage_filter(Context& ctx) {
  const auto raw = corpus::load_pairs(ctx.need_path(ctx.sft_source()));
  const auto sim = ctx.cfg.paths.similarity_sidecar
                       ? filtering::SimilaritySource::from_sidecar(ctx.cfg.resolve(*ctx.cfg.paths.similarity_sidecar))
                       : filtering::SimilaritySource::lexical();
  const auto outcome = filtering::run_filter_pipeline(raw, sim, ctx.cfg.filter);
  auto split = corpus::stratified_split(outcome.kept, ctx.cfg.sft_split, ctx.salt("sft-split"));
  ctx.put_text("data/sft_split.jsonl", corpus::to_jsonl(split));
  auto rep = filtering::report_to_json(outcome.report);
  rep["similarity"] = sim.kind() == filtering::SimilaritySource::Kind::lexical_fallback ? "lexical" : "sidecar";
  ctx.put_json("reports/filter.json", rep);
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& p : split) ++counts[static_cast<int>(*p.split)];
  ctx.summary["input"] = raw.size();
  ctx.summary["kept"] = outcome.kept.size();
  ctx.summary["removed"] = outcome.report.removed_total();
  ctx.summary["train"] = counts[0];
  ctx.summary["dev"] = counts[1];
  ctx.summary["test"] = counts[2];
}

// --- sample ------------------------------------------------------------------

void stage_sample(Context& ctx) {
  const auto pool = corpus::load_pairs(ctx.need_path(ctx.pool_source()));
  std::vector<ComplexSimplePair> dep, lha;
  for (const auto& p : pool) (p.source == corpus::Source::apa_lha ? lha : dep).push_back(p);
  auto counts = [](const std::vector<ComplexSimplePair>& v) {
    std::vector<std::size_t> c;
    for (const auto& p : v) c.push_back(text::word_count(p.complex));
    return c;
  };
  const auto dc = counts(dep), lc = counts(lha);
  const auto& sc = ctx.cfg.sample;
  const auto w = sampling::inference_weights(dc, lc, sc.n_deplain, sc.n_lha, sc.sigma);
  const std::size_t k = std::min(sc.sentences, pool.size());
  std::size_t k_lha = static_cast<std::size_t>(std::llround(w.eta * static_cast<double>(k)));
  k_lha = std::min(k_lha, lha.size());
  std::size_t k_dep = std::min(k - k_lha, dep.size());
  if (k_dep + k_lha < k) k_lha = std::min(lha.size(), k - k_dep);
  std::vector<ComplexSimplePair> chosen;
  for (auto i : sampling::weighted_sample(w.deplain, k_dep, ctx.salt("sample-deplain"))) chosen.push_back(dep[i]);
  for (auto i : sampling::weighted_sample(w.lha, k_lha, ctx.salt("sample-lha"))) chosen.push_back(lha[i]);
  ctx.put_text("data/inference_sentences.jsonl", corpus::to_jsonl(chosen));
  ctx.summary = {{"eta", w.eta},           {"mu_deplain", w.mu_deplain}, {"mu_lha", w.mu_lha},
                 {"lha_center", w.lha_center}, {"deplain", k_dep},          {"apa_lha", k_lha},
                 {"requested", sc.sentences}};
  ctx.put_json("reports/sample.json", ctx.summary);
}

// --- sft-train ---------------------------------------------------------------

Vocabulary build_vocabulary(Context& ctx, const std::vector<ComplexSimplePair>& split,
                            const std::vector<ComplexSimplePair>& pool) {
  std::vector<std::string> texts;
  for (const auto& t : ctx.prompts().prompts()) {
    std::string s = t.text;
    // drop placeholder markers such as <complex_sentence2>
    for (std::size_t a = s.find('<'); a != std::string::npos; a = s.find('<', a)) {
      const auto b = s.find('>', a);
      if (b == std::string::npos) break;
      s.replace(a, b - a + 1, " ");
    }
    texts.push_back(s);
  }
  for (const auto& p : split) {
    texts.push_back(p.complex);
    texts.push_back(p.simple);
  }
  for (const auto& p : pool) texts.push_back(p.complex);
  return Vocabulary::build(texts);
}

void stage_sft_train(Context& ctx) {
  const auto split = corpus::load_pairs(ctx.need("data/sft_split.jsonl"));
  const auto pool = corpus::load_pairs(ctx.need_path(ctx.pool_source()));
  const auto train = with_split(split, corpus::Split::train);
  const auto dev = with_split(split, corpus::Split::dev);
  if (train.empty() || dev.empty()) throw DataError("sft-train needs non-empty train and dev splits");
  const auto& sc = ctx.cfg.sft;

  auto model = PolicyModel::random(build_vocabulary(ctx, split, pool), ctx.cfg.model, ctx.salt("sft-init"));
  std::vector<toylm::SequenceExample> examples;
  std::size_t overlong = 0;
  for (const auto& p : train) {
    toylm::SequenceExample ex{model.vocab().encode(sft_prompt(ctx, p, train)), completion_ids(model.vocab(), p.simple)};
    if (!fits(model, ex.prompt, ex.completion) || 1 + ex.prompt.size() + ex.completion.size() > sc.train.max_seq_len) {
      ++overlong;
      continue;
    }
    examples.push_back(std::move(ex));
  }
  if (examples.empty()) throw DataError("no SFT example fits the context window");

  toylm::TrainConfig tc = sc.train;
  tc.seed = ctx.salt("sft-train");
  const std::size_t total_instances = sc.epochs * examples.size();
  tc.total_steps = (total_instances + tc.batch_size - 1) / tc.batch_size;
  toylm::OptimizerState state;
  Rng order_rng(tc.seed);

  std::vector<SftCandidate> candidates;
  std::vector<ordered_json> eval_rows;
  std::size_t instances = 0, next_eval = sc.eval_every, last_saved = 0;
  double loss_sum = 0.0;
  std::size_t loss_batches = 0;

  auto checkpoint = [&]() {
    const auto id = toylm::checkpoint_id("toylm-SFT", instances);
    toylm::save_checkpoint(model, checkpoint_path(ctx, id));
    ctx.wrote(checkpoint_path(ctx, id));
    const auto r = evaluate_model(ctx, model, id, dev, train, nullptr);
    candidates.push_back({id, instances, r.sari, r.wstf4, false});
    eval_rows.push_back({{"checkpoint", id},
                         {"instances", instances},
                         {"train_loss", loss_batches ? loss_sum / static_cast<double>(loss_batches) : 0.0},
                         {"dev", metrics::to_json(r)}});
    ctx.log << "  " << id << " train_loss=" << (loss_batches ? loss_sum / loss_batches : 0.0) << " dev_sari=" << r.sari
            << " dev_wstf4=" << r.wstf4 << "\n";
    loss_sum = 0.0;
    loss_batches = 0;
    last_saved = instances;
  };

  std::vector<std::size_t> order(examples.size());
  for (std::size_t e = 0; e < sc.epochs; ++e) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(std::span(order));
    for (std::size_t s = 0; s < order.size(); s += tc.batch_size) {
      std::vector<toylm::SequenceExample> batch;
      for (std::size_t i = s; i < std::min(order.size(), s + tc.batch_size); ++i) batch.push_back(examples[order[i]]);
      const auto r = toylm::sft_step(model, state, batch, tc);
      loss_sum += r.loss;
      ++loss_batches;
      instances += batch.size();
      if (instances >= next_eval) {
        checkpoint();
        next_eval = (instances / sc.eval_every + 1) * sc.eval_every;
      }
    }
  }
  if (last_saved != instances) checkpoint();

  const auto ranked = rank_sft_checkpoints(candidates);
  ordered_json ranking = ordered_json::array();
  for (const auto& c : ranked)
    ranking.push_back({{"checkpoint", c.checkpoint},
                       {"instances", c.instances},
                       {"sari", c.sari},
                       {"wstf4", c.wstf4},
                       {"dominated", c.dominated}});
  ordered_json top = ordered_json::array();
  for (std::size_t i = 0; i < std::min(sc.top_checkpoints, ranked.size()); ++i) top.push_back(ranked[i].checkpoint);
  ordered_json all = ordered_json::array();
  for (const auto& c : candidates) all.push_back(c.checkpoint);
  ctx.put_text("reports/sft_eval.jsonl", write_jsonl_lines(eval_rows));
  ctx.put_json("reports/sft_selection.json", {{"winner", ranked.front().checkpoint},
                                              {"inference_checkpoints", top},
                                              {"checkpoints", all},
                                              {"ranking", ranking}});
  ctx.summary = {{"train_examples", examples.size()},
                 {"dropped_overlong", overlong},
                 {"instances", instances},
                 {"vocabulary", model.vocab_size()},
                 {"parameters", model.params().size()},
                 {"winner", ranked.front().checkpoint}};
}

// --- infer -------------------------------------------------------------------

void stage_infer(Context& ctx) {
  const auto sel = read_json(ctx.need("reports/sft_selection.json"));
  const auto sentences = corpus::load_pairs(ctx.need("data/inference_sentences.jsonl"));
  const auto& ic = ctx.cfg.infer;
  std::vector<std::pair<std::string, PolicyModel>> models;
  for (const auto& id : sel.at("inference_checkpoints")) models.emplace_back(id.get<std::string>(), load_model(ctx, id.get<std::string>()));

  std::vector<paircreate::InferenceSet> sets;
  std::size_t empty = 0;
  for (const auto& s : sentences) {
    const auto prompt_text = dpo_prompt(ctx, s.id, s.complex);
    for (const auto& [ckpt, m] : models) {
      const auto prompt = m.vocab().encode(prompt_text);
      if (1 + prompt.size() >= m.dims().context_window) throw DataError("inference prompt exceeds the context window: " + s.id);
      paircreate::InferenceSet set{s.id, s.complex, ckpt, {}};
      const std::uint64_t base = Rng::mix(Rng::mix(ctx.salt("infer"), toylm::string_key(s.id)), toylm::string_key(ckpt));
      for (std::size_t i = 0; i < ic.per_set; ++i) {
        toylm::DecodeConfig dc;
        dc.mode = toylm::Decode::top_p;
        dc.temperature = ic.temperatures[i % ic.temperatures.size()];
        dc.top_p = ic.top_ps[(i / ic.temperatures.size()) % ic.top_ps.size()];
        dc.max_tokens = std::min(ic.max_tokens, m.dims().context_window - prompt.size() - 1);
        dc.seed = Rng::mix(base, i);
        auto text = m.vocab().decode(toylm::generate(m, prompt, dc));
        empty += text.empty();
        set.inferences.push_back({std::move(text), "top_p", dc.temperature, dc.top_p, dc.seed});
      }
      sets.push_back(std::move(set));
    }
  }
  paircreate::write_inference_sets(ctx.at("data/inference_sets.jsonl"), sets);
  ctx.wrote(ctx.at("data/inference_sets.jsonl"));
  ctx.summary = {{"sentences", sentences.size()}, {"sets", sets.size()}, {"empty_inferences", empty}};
}

// --- paircreate --------------------------------------------------------------

void stage_paircreate(Context& ctx) {
  const auto sets = paircreate::load_inference_sets(ctx.need("data/inference_sets.jsonl"), ctx.cfg.infer.per_set);
  std::set<std::string> ids;
  for (const auto& s : sets) ids.insert(s.complex_id);
  const auto& creators = ctx.cfg.paircreate.creators;
  std::map<std::string, std::string> owner;
  std::size_t i = 0;
  for (const auto& id : ids) owner[id] = creators[i++ % creators.size()];

  auto sets_of = [&](const std::string& c) {
    std::vector<paircreate::InferenceSet> v;
    for (const auto& s : sets)
      if (owner.at(s.complex_id) == c) v.push_back(s);
    return v;
  };
  auto state_rel = [](const std::string& c) { return "sessions/" + c + ".state.json"; };
  auto pairs_rel = [](const std::string& c) { return "data/pairs_" + c + ".jsonl"; };

  if (!ctx.opts.simulate) {
    const std::string& c = ctx.opts.creator;
    if (std::find(creators.begin(), creators.end(), c) == creators.end())
      throw ConfigError("unknown creator '" + c + "' (configured: paircreate.creators)");
    const auto state = ctx.at(state_rel(c));
    auto session = fs::exists(state) ? paircreate::PairSession::resume(read_json(state), sets_of(c))
                                     : paircreate::PairSession(c, sets_of(c), ctx.salt("paircreate-" + c));
    fs::create_directories(state.parent_path());
    fs::create_directories(ctx.at("data"));
    paircreate::run_terminal(session, ctx.opts.in ? *ctx.opts.in : std::cin, ctx.opts.out ? *ctx.opts.out : std::cout,
                             state, ctx.at(pairs_rel(c)));
    ctx.wrote(state);
    ctx.wrote(ctx.at(pairs_rel(c)));
  } else {
    for (const auto& c : creators) {
      paircreate::PairSession session(c, sets_of(c), ctx.salt("paircreate-" + c));
      simulate_pair_creation(session, ctx.salt("creator-" + c));
      session.persist(ctx.at(state_rel(c)), ctx.at(pairs_rel(c)));
      ctx.wrote(ctx.at(state_rel(c)));
      ctx.wrote(ctx.at(pairs_rel(c)));
    }
  }

  std::vector<PreferencePair> merged;
  ordered_json per = ordered_json::object();
  for (const auto& c : creators) {
    const auto p = ctx.at(pairs_rel(c));
    if (!fs::exists(p)) continue;
    auto v = corpus::load_preference_pairs(p);
    per[c] = v.size();
    merged.insert(merged.end(), v.begin(), v.end());
  }
  ctx.put_text("data/pairs.jsonl", corpus::to_jsonl(merged));
  std::size_t eq = 0;
  for (const auto& p : merged) eq += p.equal_information;
  ctx.summary = {{"pairs", merged.size()}, {"per_creator", per}, {"equal_information", eq}};
}

// --- serve -------------------------------------------------------------------

annotate::ServiceConfig service_config(Context& ctx, const std::vector<PreferencePair>& pairs) {
  annotate::ServiceConfig sc;
  sc.annotators = ctx.cfg.annotate.annotators;
  sc.pairs = pairs;
  sc.seed = ctx.salt("annotate");
  std::vector<std::string> ids;
  for (const auto& p : pairs) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  Rng rng(ctx.salt("shared-pool"));
  rng.shuffle(std::span(ids));
  // own/10 sanity items must fit into the shared pool: n <= 11 * shared
  const std::size_t shared = std::min({ctx.cfg.annotate.max_shared, (ids.size() + 10) / 11, ids.size()});
  std::vector<std::string> pool(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(shared));
  std::sort(pool.begin(), pool.end());
  for (const auto& a : sc.annotators) sc.shared_pool[a.group] = pool;
  return sc;
}

void stage_serve(Context& ctx) {
  const auto pairs = corpus::load_preference_pairs(ctx.need("data/pairs.jsonl"));
  if (pairs.empty()) throw DataError("no preference pairs to annotate");
  auto sc = service_config(ctx, pairs);
  ordered_json shared = ordered_json::object();
  for (const auto& [g, v] : sc.shared_pool) shared[std::string(corpus::to_string(g))] = v;
  ordered_json annotators = ordered_json::array();
  for (const auto& a : sc.annotators) annotators.push_back(annotate::to_json(a));
  ctx.put_json("annotate/service.json", {{"annotators", annotators}, {"shared_pool", shared}, {"seed", sc.seed}});

  if (!ctx.opts.simulate) {
    sc.log_path = ctx.at("annotate/events.log");
    annotate::AnnotationService svc(std::move(sc));
    ctx.log << "serving on http://" << ctx.opts.host << ":" << ctx.opts.port << " (export via GET /export)\n";
    annotate::serve(svc, ctx.opts.host, ctx.opts.port);
    ctx.put_text("data/annotations.jsonl", svc.export_annotations(std::nullopt).text);
    return;
  }

  auto tick = std::make_shared<std::int64_t>(1'700'000'000);
  sc.clock = [tick] { return (*tick)++; };
  annotate::AnnotationService svc(std::move(sc));
  AnnotatorSimulation sim{ctx.salt("annotators"), ctx.cfg.annotate.label_noise, ctx.cfg.annotate.annotator_noise};
  simulate_annotation(svc, ctx.cfg.annotate.annotators, pairs, sim);
  const auto text = svc.export_annotations(std::nullopt).text;
  ctx.put_text("data/annotations.jsonl", text);
  const auto recs = svc.records();
  std::map<std::string, std::size_t> per;
  for (const auto& r : recs) ++per[r.annotator_id];
  ctx.summary = {{"pairs", pairs.size()},
                 {"annotations", recs.size()},
                 {"per_annotator", per},
                 {"label_noise", ctx.cfg.annotate.label_noise}};
}

// --- subsets -----------------------------------------------------------------

std::map<std::string, double> intra_scores(const std::vector<corpus::AnnotationRecord>& ann) {
  std::map<std::string, double> out;
  for (const auto& [id, k] : agreement::annotator_kappas(ann))
    if (k && !k->degenerate && std::isfinite(k->value)) out[id] = k->value;
  return out;
}

// Alpha is undefined without multiply-coded items or with a single category.
std::optional<double> safe_alpha(const agreement::RatingMatrix& m) {
  try {
    return agreement::krippendorff_alpha(m);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

std::map<std::string, std::optional<double>> safe_contributions(const agreement::RatingMatrix& m) {
  try {
    return agreement::alpha_contributions(m);
  } catch (const DomainError&) {
    return {};
  }
}

std::map<std::string, double> inter_scores(const std::vector<PreferencePair>& pairs,
                                           const std::vector<corpus::AnnotationRecord>& ann) {
  std::map<std::string, double> out;
  for (const auto g : {Group::target, Group::expert})
    for (const auto& [id, v] : safe_contributions(agreement::group_matrix(pairs, ann, g)))
      if (v && std::isfinite(*v)) out[id] = *v;
  return out;
}

void stage_subsets(Context& ctx) {
  const auto pairs = corpus::load_preference_pairs(ctx.need("data/pairs.jsonl"));
  const auto ann = corpus::load_annotations(ctx.need("data/annotations.jsonl"));
  const auto sel = read_json(ctx.need("reports/sft_selection.json"));
  const auto intra = intra_scores(ann);
  const auto inter = inter_scores(pairs, ann);

  std::vector<std::string> strata;
  for (const auto& p : pairs) strata.push_back(p.generator_checkpoint);
  const auto splits = corpus::assign_splits(pairs.size(), strata, ctx.cfg.dpo.split, ctx.salt("dpo-split"));
  std::vector<ordered_json> rows;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    rows.push_back({{"pair_id", pairs[i].id}, {"split", corpus::to_string(splits[i])}});
  ctx.put_text("data/dpo_split.jsonl", write_jsonl_lines(rows));

  align::SubsetConfig sc;
  sc.trained_checkpoint = sel.at("winner").get<std::string>();
  sc.known_checkpoints = sel.at("checkpoints").get<std::vector<std::string>>();
  for (const auto g : {Group::target, Group::expert}) {
    sc.group = g;
    const auto subsets = align::build_training_subsets(pairs, ann, intra, inter, sc);
    const std::string gname(corpus::to_string(g));
    ordered_json gs = ordered_json::object();
    for (const auto& [name, v] : subsets.sets) {
      ctx.put_text("data/subsets/" + gname + "/" + name + ".jsonl", corpus::to_jsonl(v));
      gs["sizes"][name] = v.size();
    }
    gs["selected_annotators"] = subsets.selected_annotators;
    gs["warnings"] = subsets.warnings;
    ctx.summary[gname] = gs;
  }
  ctx.summary["intra_scores"] = intra;
  ctx.summary["inter_scores"] = inter;
  ctx.put_json("reports/subsets.json", ctx.summary);
}

// --- DPO helpers -------------------------------------------------------------

std::map<std::string, corpus::Split> load_dpo_split(Context& ctx) {
  std::map<std::string, corpus::Split> out;
  std::istringstream in(corpus::read_file(ctx.need("data/dpo_split.jsonl")));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) {
      const auto j = ordered_json::parse(line);
      out[j.at("pair_id").get<std::string>()] = corpus::parse_split(j.at("split").get<std::string>());
    }
  return out;
}

// Pair ids are "<creator>-<complex id>".
std::string complex_id_of(const PreferencePair& p) {
  const std::string prefix = p.creator_id + "-";
  return p.id.rfind(prefix, 0) == 0 ? p.id.substr(prefix.size()) : p.id;
}

struct Labeled {
  std::string pair_id;
  toylm::PreferenceExample example;
};

// One label per pair: majority over the group's annotators, seeded coin on ties.
std::vector<ResolvedPreference> collapse(const std::vector<ResolvedPreference>& rs, std::uint64_t seed) {
  std::map<std::string, std::vector<const ResolvedPreference*>> by_pair;
  for (const auto& r : rs) by_pair[r.pair_id].push_back(&r);
  std::vector<ResolvedPreference> out;
  for (const auto& [id, v] : by_pair) {
    const std::string& first = v.front()->preferred;
    std::size_t agree = 0;
    for (const auto* r : v) agree += r->preferred == first;
    const std::size_t disagree = v.size() - agree;
    ResolvedPreference r = *v.front();
    bool keep_first = agree > disagree;
    if (agree == disagree) keep_first = Rng(Rng::mix(seed, toylm::string_key(id))).coin();
    if (!keep_first) std::swap(r.preferred, r.dispreferred);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Labeled> preference_examples(Context& ctx, const Vocabulary& vocab, const PolicyModel& m,
                                         const std::vector<ResolvedPreference>& rs,
                                         const std::map<std::string, const PreferencePair*>& pairs,
                                         std::size_t* dropped) {
  std::vector<Labeled> out;
  for (const auto& r : rs) {
    const auto& p = *pairs.at(r.pair_id);
    toylm::PreferenceExample ex{vocab.encode(dpo_prompt(ctx, complex_id_of(p), p.complex)),
                                completion_ids(vocab, r.preferred), completion_ids(vocab, r.dispreferred)};
    if (!fits(m, ex.prompt, ex.chosen) || !fits(m, ex.prompt, ex.rejected)) {
      if (dropped) ++*dropped;
      continue;
    }
    out.push_back({r.pair_id, std::move(ex)});
  }
  return out;
}

struct EvalSet {
  std::vector<std::string> ids;
  std::vector<toylm::PreferenceExample> examples;
  std::vector<std::pair<double, double>> ref;  // reference log-probs (chosen, rejected)
};

EvalSet eval_set(const PolicyModel& reference, std::vector<Labeled> labeled) {
  EvalSet e;
  for (auto& l : labeled) {
    e.ref.emplace_back(reference.logprob_sequence(l.example.prompt, l.example.chosen),
                       reference.logprob_sequence(l.example.prompt, l.example.rejected));
    e.ids.push_back(l.pair_id);
    e.examples.push_back(std::move(l.example));
  }
  return e;
}

align::AlignmentScores margins(const PolicyModel& policy, const EvalSet& e, double beta) {
  std::vector<double> m;
  for (std::size_t i = 0; i < e.examples.size(); ++i) {
    const auto& ex = e.examples[i];
    align::LogprobQuad q{policy.logprob_sequence(ex.prompt, ex.chosen), policy.logprob_sequence(ex.prompt, ex.rejected),
                         e.ref[i].first, e.ref[i].second};
    m.push_back(align::reward_margin(q, beta));
  }
  return align::score_margins(std::move(m));
}

struct DpoData {
  std::map<std::string, const PreferencePair*> by_id;
  std::vector<PreferencePair> pairs;
  std::map<std::string, corpus::Split> split;
};

std::vector<ResolvedPreference> in_split(const std::vector<ResolvedPreference>& rs,
                                         const std::map<std::string, corpus::Split>& split, corpus::Split s) {
  std::vector<ResolvedPreference> out;
  for (const auto& r : rs)
    if (split.at(r.pair_id) == s) out.push_back(r);
  return out;
}

std::string subset_rel(const PipelineConfig& cfg, const std::string& name) {
  return "data/subsets/" + std::string(corpus::to_string(cfg.dpo.group)) + "/" + name + ".jsonl";
}

// --- dpo-train ---------------------------------------------------------------

void stage_dpo_train(Context& ctx) {
  const auto sel = read_json(ctx.need("reports/sft_selection.json"));
  const std::string ref_id = sel.at("winner").get<std::string>();
  const auto reference = load_model(ctx, ref_id);
  const auto pairs = corpus::load_preference_pairs(ctx.need("data/pairs.jsonl"));
  std::map<std::string, const PreferencePair*> by_id;
  for (const auto& p : pairs) by_id[p.id] = &p;
  const auto split = load_dpo_split(ctx);
  const auto& dc = ctx.cfg.dpo;

  std::size_t dropped = 0;
  const auto train_rs = in_split(corpus::load_resolved(ctx.need(subset_rel(ctx.cfg, dc.subset))), split, corpus::Split::train);
  const auto all_rs = corpus::load_resolved(ctx.need(subset_rel(ctx.cfg, "all")));
  auto train = preference_examples(ctx, reference.vocab(), reference, train_rs, by_id, &dropped);
  const auto dev = eval_set(reference, preference_examples(ctx, reference.vocab(), reference,
                                                           collapse(in_split(all_rs, split, corpus::Split::dev), ctx.salt("collapse")),
                                                           by_id, &dropped));
  if (train.empty()) throw DataError("DPO training subset '" + dc.subset + "' has no training pairs");
  if (dev.examples.empty()) throw DataError("DPO dev split is empty");

  toylm::TrainConfig tc = dc.train;
  tc.batch_size = dc.dpo.batch_size;
  tc.total_steps = (dc.max_instances + tc.batch_size - 1) / tc.batch_size;

  std::vector<DpoCandidate> candidates;
  ordered_json curves = ordered_json::object();
  for (std::size_t si = 0; si < dc.seeds.size(); ++si) {
    const std::uint64_t run_seed = Rng::mix(ctx.salt("dpo-train"), dc.seeds[si]);
    const bool primary = si == 0;
    PolicyModel policy = reference;
    toylm::OptimizerState state;
    Rng rng(run_seed);
    std::vector<std::size_t> order;
    std::size_t pos = 0, instances = 0;
    double loss_sum = 0.0;
    std::size_t loss_batches = 0;
    std::vector<ordered_json> curve;
    auto evaluate = [&]() {
      const auto s = margins(policy, dev, dc.dpo.beta);
      curve.push_back({{"seed", dc.seeds[si]},
                       {"instances", instances},
                       {"dev_win_rate", s.win_rate},
                       {"dev_mean_margin", s.mean_margin},
                       {"train_loss", loss_batches ? loss_sum / static_cast<double>(loss_batches) : std::log(2.0)}});
      loss_sum = 0.0;
      loss_batches = 0;
      if (primary && instances > 0) {
        const auto id = toylm::checkpoint_id("toylm-DPO", instances);
        toylm::save_checkpoint(policy, checkpoint_path(ctx, id));
        ctx.wrote(checkpoint_path(ctx, id));
        candidates.push_back({id, instances, s.win_rate, s.mean_margin});
      }
      ctx.log << "  seed " << dc.seeds[si] << " instances=" << instances << " dev_win_rate=" << s.win_rate
              << " dev_mean_margin=" << s.mean_margin << "\n";
    };
    evaluate();
    std::size_t next_eval = dc.eval_every;
    while (instances < dc.max_instances) {
      std::vector<toylm::PreferenceExample> batch;
      const std::size_t want = std::min(tc.batch_size, dc.max_instances - instances);
      while (batch.size() < want) {
        if (pos == order.size()) {
          order.resize(train.size());
          for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
          rng.shuffle(std::span(order));
          pos = 0;
        }
        batch.push_back(train[order[pos++]].example);
      }
      const auto r = toylm::dpo_step(policy, reference, state, batch, dc.dpo, tc);
      loss_sum += r.mean_loss;
      ++loss_batches;
      instances += batch.size();
      if (instances >= next_eval || instances == dc.max_instances) {
        evaluate();
        next_eval = (instances / dc.eval_every + 1) * dc.eval_every;
      }
    }
    ctx.put_text("reports/dpo_curve_seed" + std::to_string(dc.seeds[si]) + ".jsonl", write_jsonl_lines(curve));
    curves[std::to_string(dc.seeds[si])] = curve.back();
  }

  const auto& best = candidates[select_dpo_checkpoint(candidates)];
  ctx.summary = {{"winner", best.checkpoint},
                 {"instances", best.instances},
                 {"dev_win_rate", best.win_rate},
                 {"dev_mean_margin", best.mean_margin},
                 {"reference", ref_id},
                 {"group", corpus::to_string(dc.group)},
                 {"subset", dc.subset},
                 {"train_examples", train.size()},
                 {"dev_pairs", dev.examples.size()},
                 {"dropped_overlong", dropped},
                 {"final_by_seed", curves}};
  ctx.put_json("reports/dpo_selection.json", ctx.summary);
}

// --- eval --------------------------------------------------------------------

void stage_eval(Context& ctx) {
  const auto sel = read_json(ctx.need("reports/sft_selection.json"));
  const auto split = corpus::load_pairs(ctx.need("data/sft_split.jsonl"));
  const auto test = with_split(split, corpus::Split::test);
  const auto train = with_split(split, corpus::Split::train);
  if (test.empty()) throw DataError("SFT test split is empty");
  std::vector<std::string> ids{sel.at("winner").get<std::string>()};
  const auto dpo_sel = ctx.at("reports/dpo_selection.json");
  if (fs::exists(dpo_sel)) ids.push_back(read_json(dpo_sel).at("winner").get<std::string>());
  ordered_json res = ordered_json::object();
  std::vector<std::vector<std::string>> outputs(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto m = load_model(ctx, ids[i]);
    res[ids[i]] = metrics::to_json(evaluate_model(ctx, m, ids[i], test, train, &outputs[i]));
  }
  std::vector<ordered_json> rows;
  for (std::size_t r = 0; r < test.size(); ++r) {
    ordered_json row{{"id", test[r].id}, {"complex", test[r].complex}, {"reference", test[r].simple}};
    for (std::size_t i = 0; i < ids.size(); ++i) row[ids[i]] = outputs[i][r];
    rows.push_back(std::move(row));
  }
  ctx.put_text("reports/eval_outputs.jsonl", write_jsonl_lines(rows));
  ctx.summary = {{"split", "test"}, {"rows", test.size()}, {"checkpoints", res}};
  ctx.put_json("reports/eval.json", ctx.summary);
}

// --- winrate -----------------------------------------------------------------

void stage_winrate(Context& ctx) {
  const auto sel = read_json(ctx.need("reports/dpo_selection.json"));
  const auto reference = load_model(ctx, sel.at("reference").get<std::string>());
  const auto policy = load_model(ctx, sel.at("winner").get<std::string>());
  const auto pairs = corpus::load_preference_pairs(ctx.need("data/pairs.jsonl"));
  std::map<std::string, const PreferencePair*> by_id;
  for (const auto& p : pairs) by_id[p.id] = &p;
  const auto split = load_dpo_split(ctx);
  const auto all_rs = corpus::load_resolved(ctx.need(subset_rel(ctx.cfg, "all")));
  const auto test = eval_set(reference, preference_examples(ctx, reference.vocab(), reference,
                                                            collapse(in_split(all_rs, split, corpus::Split::test), ctx.salt("collapse")),
                                                            by_id, nullptr));
  if (test.examples.empty()) throw DataError("DPO test split is empty");
  const auto s = margins(policy, test, ctx.cfg.dpo.dpo.beta);
  ctx.put_text("reports/winrate_margins.jsonl", align::margins_to_jsonl(test.ids, s));
  ctx.summary = align::summary_json(s);
  ctx.summary["checkpoint"] = sel.at("winner");
  ctx.summary["reference"] = sel.at("reference");
  ctx.summary["group"] = corpus::to_string(ctx.cfg.dpo.group);
  ctx.put_json("reports/winrate.json", ctx.summary);
}

// --- supremacy ---------------------------------------------------------------

void stage_supremacy(Context& ctx) {
  const auto sel = read_json(ctx.need("reports/dpo_selection.json"));
  const auto sft = load_model(ctx, sel.at("reference").get<std::string>());
  const auto dpo = load_model(ctx, sel.at("winner").get<std::string>());
  auto test = with_split(corpus::load_pairs(ctx.need("data/sft_split.jsonl")), corpus::Split::test);
  if (test.empty()) throw DataError("SFT test split is empty");
  Rng pick(ctx.salt("supremacy-pick"));
  pick.shuffle(std::span(test));
  test.resize(std::min(test.size(), ctx.cfg.supremacy.sentences));

  const auto& profiles = ctx.cfg.annotate.annotators;
  const std::size_t ne = std::min(ctx.cfg.supremacy.evaluators, profiles.size());
  if (ne == 0) throw ConfigError("supremacy needs at least one evaluator");
  std::vector<Rng> raters;
  for (std::size_t e = 0; e < ne; ++e) raters.emplace_back(ctx.salt("evaluator-" + profiles[e].annotator_id));

  std::vector<std::vector<align::Preferred>> choices;
  std::vector<std::vector<align::Preferred>> by_evaluator(ne);
  std::vector<ordered_json> rows;
  for (const auto& p : test) {
    const auto prompt = dpo_prompt(ctx, p.id, p.complex);
    const auto out_sft = greedy_output(sft, prompt, ctx.cfg.sft.max_tokens);
    const auto out_dpo = greedy_output(dpo, prompt, ctx.cfg.sft.max_tokens);
    std::vector<align::Preferred> row;
    ordered_json votes = ordered_json::array();
    for (std::size_t e = 0; e < ne; ++e) {
      const auto v = simulated_evaluation(out_dpo, out_sft, ctx.cfg.supremacy.evaluator_noise, raters[e]);
      row.push_back(v);
      by_evaluator[e].push_back(v);
      votes.push_back(v == align::Preferred::dpo ? "dpo" : "sft");
    }
    choices.push_back(row);
    rows.push_back({{"id", p.id}, {"sft", out_sft}, {"dpo", out_dpo}, {"votes", votes}});
  }
  const auto majority = align::majority_vote(choices, ctx.salt("supremacy-vote"));
  std::size_t k = 0;
  for (auto v : majority) k += v == align::Preferred::dpo;
  ordered_json per = ordered_json::object();
  for (std::size_t e = 0; e < ne; ++e) per[profiles[e].annotator_id] = align::supremacy_score(by_evaluator[e]);
  ctx.put_text("reports/supremacy_outputs.jsonl", write_jsonl_lines(rows));
  ctx.summary = {{"sentences", test.size()},
                 {"evaluators", ne},
                 {"supremacy", align::supremacy_score(majority)},
                 {"dpo_majorities", k},
                 {"p_value", align::binomial_test_one_sided(k, majority.size())},
                 {"per_evaluator", per},
                 {"sft_checkpoint", sel.at("reference")},
                 {"dpo_checkpoint", sel.at("winner")}};
  ctx.put_json("reports/supremacy.json", ctx.summary);
}

// --- agreement ---------------------------------------------------------------

ordered_json optional_number(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? ordered_json(*v) : ordered_json(nullptr);
}

void stage_agreement(Context& ctx) {
  const auto pairs = corpus::load_preference_pairs(ctx.need("data/pairs.jsonl"));
  const auto ann = corpus::load_annotations(ctx.need("data/annotations.jsonl"));
  ordered_json kappas = ordered_json::object();
  for (const auto& [id, k] : agreement::annotator_kappas(ann))
    kappas[id] = k ? ordered_json{{"kappa", std::isfinite(k->value) ? ordered_json(k->value) : ordered_json(nullptr)},
                                  {"degenerate", k->degenerate}}
                   : ordered_json(nullptr);
  std::set<std::string> checkpoints;
  for (const auto& p : pairs) checkpoints.insert(p.generator_checkpoint);
  ordered_json groups = ordered_json::object();
  for (const auto g : {Group::target, Group::expert}) {
    std::vector<corpus::AnnotationRecord> ga;
    for (const auto& a : ann)
      if (a.annotator_group == g) ga.push_back(a);
    if (ga.empty()) continue;
    const auto m = agreement::group_matrix(pairs, ann, g);
    ordered_json gj{{"alpha", optional_number(safe_alpha(m))},
                    {"left_preference_rate", agreement::left_preference_rate(ga)}};
    for (const auto& ck : checkpoints)
      gj["alpha_by_checkpoint"][ck] = optional_number(safe_alpha(agreement::group_matrix(pairs, ann, g, ck)));
    for (const auto& [id, v] : safe_contributions(m)) gj["alpha_contributions"][id] = optional_number(v);
    groups[std::string(corpus::to_string(g))] = gj;
  }
  ctx.summary = {{"kappa", kappas}, {"groups", groups}};
  ctx.put_json("reports/agreement.json", ctx.summary);
}

// --- report ------------------------------------------------------------------

void stage_report(Context& ctx) {
  const auto pairs = corpus::load_preference_pairs(ctx.need("data/pairs.jsonl"));
  const auto ann = corpus::load_annotations(ctx.need("data/annotations.jsonl"));
  agreement::write_report_bundle(agreement::annotation_reports(pairs, ann), ctx.at("reports/bundle"));
  for (const auto& e : fs::directory_iterator(ctx.at("reports/bundle"))) ctx.written.push_back(e.path());
  std::sort(ctx.written.begin(), ctx.written.end());
  ordered_json summary = ordered_json::object();
  for (const char* name : {"filter", "sample", "sft_selection", "dpo_selection", "winrate", "supremacy", "eval", "agreement"}) {
    const auto p = ctx.at(std::string("reports/") + name + ".json");
    if (!fs::exists(p)) continue;
    auto j = read_json(p);
    if (std::string(name) == "sft_selection") j.erase("ranking");
    summary[name] = std::move(j);
  }
  ctx.summary = {{"pairs", pairs.size()}, {"annotations", ann.size()}};
  ctx.put_json("reports/summary.json", summary);
}

using StageFn = void (*)(Context&);

const std::map<std::string, StageFn>& stage_functions() {
  static const std::map<std::string, StageFn> m{
      {"synth", stage_synth},         {"filter", stage_filter},       {"sample", stage_sample},
      {"sft-train", stage_sft_train}, {"infer", stage_infer},         {"paircreate", stage_paircreate},
      {"serve", stage_serve},         {"subsets", stage_subsets},     {"dpo-train", stage_dpo_train},
      {"eval", stage_eval},           {"winrate", stage_winrate},     {"supremacy", stage_supremacy},
      {"agreement", stage_agreement}, {"report", stage_report},
  };
  return m;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig cfg, std::ostream& log) : cfg_(std::move(cfg)), log_(log), out_(cfg_.out_dir) {
  cfg_.validate();
}

ordered_json Pipeline::run_stage(const std::string& name, const StageOptions& opts) {
  const auto& fns = stage_functions();
  const auto it = fns.find(name);
  if (it == fns.end()) throw ConfigError("unknown stage '" + name + "'");
  log_ << "[" << name << "]\n";
  Context ctx(cfg_, log_, out_, opts);
  it->second(ctx);
  ordered_json outputs = ordered_json::array();
  for (const auto& p : ctx.written)
    outputs.push_back({{"path", fs::relative(p, out_).generic_string()},
                       {"bytes", fs::file_size(p)},
                       {"crc32", hex32(file_crc(p))}});
  ordered_json report{{"stage", name}, {"seed", cfg_.seed}, {"outputs", outputs}, {"summary", ctx.summary}};
  write_json(out_ / ("reports/stage_" + name + ".json"), report);
  return report;
}

ordered_json Pipeline::run_all(const StageOptions& opts) {
  ordered_json all = ordered_json::object();
  write_json(out_ / "config.json", to_json(cfg_));
  for (const auto& s : stage_graph()) all[s.name] = run_stage(s.name, opts).at("summary");
  return all;
}

}  // namespace atsalign::pipeline
