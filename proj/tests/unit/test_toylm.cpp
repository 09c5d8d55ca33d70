#include <cmath>
#include <numbers>

#include "atsalign/errors.hpp"
#include "atsalign/text.hpp"
#include "atsalign/toylm/checkpoint.hpp"
#include "atsalign/toylm/generate.hpp"
#include "atsalign/toylm/model.hpp"
#include "atsalign/toylm/prompts.hpp"
#include "atsalign/toylm/synthetic.hpp"
#include "atsalign/toylm/train.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace atsalign;
using namespace atsalign::toylm;

namespace {

PreferenceExample random_pair(Rng& rng, std::size_t vocab) {
  PreferenceExample ex;
  ex.prompt = fixtures::random_ids(rng, vocab, 3 + rng.index(4));
  ex.chosen = fixtures::random_ids(rng, vocab, 2 + rng.index(4));
  ex.rejected = fixtures::random_ids(rng, vocab, 2 + rng.index(4));
  ex.chosen.push_back(Vocabulary::kEos);
  ex.rejected.push_back(Vocabulary::kEos);
  return ex;
}

// Policy slightly away from the reference so margins are non-zero.
PolicyModel perturbed(const PolicyModel& ref, std::uint64_t seed, double scale) {
  PolicyModel p = ref;
  Rng rng(seed);
  for (auto& v : p.params()) v += scale * rng.normal();
  return p;
}

}  // namespace

TEST_CASE("tokenizer splits edge punctuation and maps unknown words") {
  CHECK(split_words("Komplex: Der Satz.") == std::vector<std::string>{"Komplex", ":", "Der", "Satz", "."});
  CHECK(split_words("(a)") == std::vector<std::string>{"(", "a", ")"});
  const auto v = Vocabulary::build({"b a a", "c a"});
  CHECK(v.token(4) == "a");
  CHECK(v.id("zzz") == Vocabulary::kUnk);
  CHECK(v.decode(v.encode("a b c")) == "a b c");
  CHECK(pad_right({5, 6}, 4) == std::vector<int>{5, 6, Vocabulary::kPad, Vocabulary::kPad});
}

TEST_CASE("each next-token distribution normalizes") {
  const auto m = fixtures::tiny_model(3);
  Rng rng(1);
  std::vector<int> seq{Vocabulary::kBos};
  for (int i = 0; i < 12; ++i) {
    const auto lp = m.next_logprobs(seq);
    CHECK(std::abs(logsumexp(lp)) < 1e-9);
    seq.push_back(4 + static_cast<int>(rng.index(10)));
  }
}

TEST_CASE("logprob_sequence closed forms") {
  Dims d;
  d.embed = 4;
  d.hidden = 5;
  d.context_window = 20;
  const auto uniform = PolicyModel::random(fixtures::letters(12), d, 9);  // zero output layer
  const double V = static_cast<double>(uniform.vocab_size());
  CHECK(V == 16);
  const std::vector<int> prompt{4, 5}, completion{6, 7, 8};
  CHECK(uniform.logprob_sequence(prompt, completion) == doctest::Approx(3 * std::log(1.0 / V)).epsilon(1e-12));
  CHECK(uniform.logprob_sequence(prompt, {}) == 0.0);

  // A model with one dominant output bias predicts that token with probability ~1.
  auto sure = uniform;
  sure.params()[sure.layout().u + 6] = 800.0;
  CHECK(sure.logprob_sequence(prompt, std::vector<int>{6, 6}) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(uniform.logprob_sequence(prompt, std::vector<int>{99}), DomainError);
  CHECK_THROWS_AS(uniform.logprob_sequence(std::vector<int>(30, 4), {}), DomainError);
}

TEST_CASE("uniform init gives ln V per-token loss") {
  Dims d;
  d.embed = 4;
  d.hidden = 5;
  const auto m = PolicyModel::random(fixtures::letters(12), d, 2);
  std::vector<SequenceExample> data{{{4, 5, 6}, {7, 8, 3}}};
  CHECK(sft_eval_loss(m, data, LossMode::completion_only) == doctest::Approx(std::log(16.0)).epsilon(1e-12));
  CHECK(std::log(16.0) == doctest::Approx(2.7726).epsilon(1e-4));
}

TEST_CASE("full_prompt and completion_only losses differ on imperfect prompts") {
  const auto m = fixtures::tiny_model(4);
  std::vector<SequenceExample> data{{{4, 9, 5}, {6, 3}}};
  CHECK(sft_eval_loss(m, data, LossMode::full_prompt) != sft_eval_loss(m, data, LossMode::completion_only));
}

TEST_CASE("finite differences agree with the analytic DPO gradient") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ref = fixtures::tiny_model(100 + seed);
    const auto pol = perturbed(ref, 200 + seed, 0.05);
    Rng rng(300 + seed);
    const auto ex = random_pair(rng, ref.vocab_size());
    const auto r = finite_difference_check(pol, ref, ex, 0.1, 1e-4, 0, seed);
    CAPTURE(seed);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("mirrored completions give an identically zero DPO gradient") {
  auto ref = fixtures::tiny_model(5, 1);
  // Without the prefix-bag pathway, a one-token context sees only transitions,
  // and both completions contain the same multiset of transitions.
  auto& p = ref.params();
  const auto& L = ref.layout();
  for (std::size_t i = L.G; i < L.W; ++i) p[i] = 0.0;
  const std::size_t in = ref.input_width(), d = ref.dims().embed;
  for (std::size_t r = 0; r < ref.dims().hidden; ++r)
    for (std::size_t c = in - d; c < in; ++c) p[L.W + r * in + c] = 0.0;
  const auto pol = ref;
  PreferenceExample ex{{4, 5}, {4, 5, 4, 6, 4, 3}, {4, 6, 4, 5, 4, 3}};
  std::vector<double> g(pol.params().size(), 0.0);
  dpo_objective(pol, ref, std::span(&ex, 1), 0.1, g);
  double mx = 0.0;
  for (double v : g) mx = std::max(mx, std::abs(v));
  CHECK(mx < 1e-15);
  const auto r = finite_difference_check(pol, ref, ex, 0.1, 1e-4, 0, 1);
  CHECK(r.max_abs_error < 1e-10);
}

TEST_CASE("doubling beta doubles the gradient at policy = reference") {
  const auto ref = fixtures::tiny_model(8);
  Rng rng(8);
  const auto ex = random_pair(rng, ref.vocab_size());
  std::vector<double> g1(ref.params().size(), 0.0), g2(ref.params().size(), 0.0);
  const auto r1 = dpo_objective(ref, ref, std::span(&ex, 1), 0.1, g1);
  dpo_objective(ref, ref, std::span(&ex, 1), 0.2, g2);
  CHECK(r1.mean_loss == doctest::Approx(std::numbers::ln2).epsilon(1e-12));
  CHECK(r1.mean_margin == 0.0);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(2 * g1[i]).epsilon(1e-12));
}

TEST_CASE("DPO on one pair raises the margin monotonically and leaves the reference alone") {
  const auto ref = fixtures::tiny_model(11);
  auto pol = ref;
  Rng rng(12);
  const auto ex = random_pair(rng, ref.vocab_size());
  const auto ref_hash = ref.hash();
  TrainConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.optimizer = OptimizerKind::sgd;
  cfg.weight_decay = 0.0;
  OptimizerState st;
  align::DpoConfig dpo;
  double last_margin = -1.0, last_loss = 1.0;
  for (int i = 0; i < 1500; ++i) {
    const auto r = dpo_step(pol, ref, st, std::span(&ex, 1), dpo, cfg);
    if (i == 0) {
      CHECK(r.mean_loss == doctest::Approx(std::numbers::ln2).epsilon(1e-12));
      CHECK(r.mean_margin == 0.0);
    } else {
      CHECK(r.mean_margin > last_margin);
    }
    last_margin = r.mean_margin;
    last_loss = r.mean_loss;
  }
  CHECK(last_loss < 0.05);
  CHECK(ref.hash() == ref_hash);
}

TEST_CASE("a zero learning rate changes nothing") {
  const auto ref = fixtures::tiny_model(13);
  auto pol = perturbed(ref, 1, 0.05);
  const auto before = pol.params();
  Rng rng(14);
  const auto ex = random_pair(rng, ref.vocab_size());
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.optimizer = OptimizerKind::adamw;
  OptimizerState st;
  dpo_step(pol, ref, st, std::span(&ex, 1), {}, cfg);
  CHECK(pol.params() == before);
}

TEST_CASE("cosine schedule and clipping") {
  TrainConfig cfg;
  cfg.learning_rate = 1.0;
  cfg.total_steps = 10;
  CHECK(scheduled_lr(cfg, 0) == 1.0);
  CHECK(scheduled_lr(cfg, 5) == doctest::Approx(0.5));
  CHECK(scheduled_lr(cfg, 10) == doctest::Approx(0.0));
  std::vector<double> p{0.0, 0.0}, g{3.0, 4.0};
  OptimizerState st;
  cfg.weight_decay = 0.0;
  cfg.optimizer = OptimizerKind::sgd;
  const auto info = apply_update(p, g, st, cfg);
  CHECK(info.grad_norm == doctest::Approx(5.0));
  CHECK(p[0] == doctest::Approx(-0.6));
  CHECK(p[1] == doctest::Approx(-0.8));
}

TEST_CASE("a perfectly predicted batch has zero loss and only decays") {
  Dims d;
  d.embed = 4;
  d.hidden = 5;
  auto m = PolicyModel::random(fixtures::letters(), d, 1);
  m.params()[m.layout().u + 5] = 1000.0;
  std::vector<SequenceExample> batch{{{4}, {5, 5}}};
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.01;
  OptimizerState st;
  const auto before = m.params();
  const auto r = sft_step(m, st, batch, cfg);
  CHECK(r.loss == doctest::Approx(0.0).epsilon(1e-12));
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(m.params()[i] == doctest::Approx(before[i] * (1 - 0.1 * 0.01)));
}

TEST_CASE("SFT memorizes fifty synthetic pairs") {
  std::vector<std::string> texts;
  std::vector<std::pair<std::string, std::string>> rows;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto s = synthetic_sentence(1000 + i);
    rows.emplace_back(s.complex, s.simple);
    texts.push_back(s.complex);
    texts.push_back(s.simple);
  }
  Dims d;
  d.embed = 16;
  d.hidden = 64;
  d.local_context = 3;
  auto m = PolicyModel::random(Vocabulary::build(texts), d, 3);
  std::vector<SequenceExample> data;
  for (const auto& [c, s] : rows) {
    auto comp = m.vocab().encode(s);
    comp.push_back(Vocabulary::kEos);
    data.push_back({m.vocab().encode(c + " =>"), comp});
  }
  TrainConfig cfg;
  cfg.optimizer = OptimizerKind::adamw;
  cfg.learning_rate = 1e-2;
  cfg.weight_decay = 0.0;
  cfg.batch_size = 10;
  cfg.total_steps = 600;
  OptimizerState st;
  for (std::size_t step = 0; step < cfg.total_steps; ++step) {
    const std::size_t off = (step * cfg.batch_size) % data.size();
    sft_step(m, st, std::span(data).subspan(off, cfg.batch_size), cfg);
  }
  const double loss = sft_eval_loss(m, data, LossMode::completion_only);
  MESSAGE("final loss " << loss);
  CHECK(loss < 0.1);
}

TEST_CASE("generation: greedy determinism, temperature limit, top-p reproducibility") {
  const auto m = fixtures::tiny_model(21);
  const std::vector<int> prompt{4, 5, 6};
  DecodeConfig g;
  g.max_tokens = 10;
  const auto greedy = generate(m, prompt, g);
  CHECK(generate(m, prompt, g) == greedy);
  DecodeConfig cold{Decode::top_p, 0.0, 0.9, 10, 5};
  CHECK(generate(m, prompt, cold) == greedy);
  DecodeConfig s{Decode::top_p, 1.0, 0.9, 10, 77};
  CHECK(generate(m, prompt, s) == generate(m, prompt, s));
  for (int t : generate(m, prompt, s)) CHECK(t >= 3);

  const std::vector<double> probs{0.5, 0.3, 0.2};
  const auto full = nucleus(probs, 1.0);
  REQUIRE(full.size() == 3);
  CHECK(full[0].second == doctest::Approx(0.5));
  const auto top = nucleus(probs, 0.7);
  REQUIRE(top.size() == 2);
  CHECK(top[0].second == doctest::Approx(0.625));
}

TEST_CASE("checkpoints round-trip and reject damage") {
  const auto m = fixtures::tiny_model(31);
  const auto dir = fixtures::temp_dir("ckpt");
  const auto path = dir / (checkpoint_id("toylm-SFT", 2800) + ".ckpt");
  CHECK(path.filename().string() == "toylm-SFT-2800.ckpt");
  CHECK(checkpoint_instances("toylm-SFT-2800") == 2800u);
  save_checkpoint(m, path);
  const auto back = load_checkpoint(path);
  CHECK(back.params() == m.params());
  CHECK(back.vocab() == m.vocab());
  const std::vector<int> pr{4, 5}, co{6, 7};
  CHECK(back.logprob_sequence(pr, co) == m.logprob_sequence(pr, co));

  Dims other = m.dims();
  other.hidden += 1;
  CHECK_THROWS_AS(load_checkpoint(path, other), DataError);

  auto bytes = serialize_checkpoint(m);
  bytes[bytes.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(deserialize_checkpoint(bytes), DataError);
  CHECK_THROWS_AS(deserialize_checkpoint("nonsense"), DataError);
}

TEST_CASE("prompt bank renders templates") {
  const auto bank = PromptBank::load(fixtures::source_dir() / "config" / "prompts.json");
  CHECK(bank.prompts().size() == 10);
  CHECK(bank.ids_for("dpo").size() == 8);
  CHECK(bank.ids_for("sft").size() == 10);
  const auto s = bank.render(1, "Der Mann kauft Brot .");
  CHECK(s.find("Der Mann kauft Brot.") != std::string::npos);
  CHECK(s.find("Bitte gib nur eine Vereinfachung an") != std::string::npos);
  CHECK_THROWS_AS(bank.render(10, "x", {{"a", "b"}}), ConfigError);
  const auto few = bank.render(9, "X y .", {{"A b .", "A ."}});
  CHECK(few.find("Komplex: A b. Leicht: A.") != std::string::npos);
  CHECK(assign_prompt({1, 2, 3}, "s1", 4) == assign_prompt({1, 2, 3}, "s1", 4));
}

TEST_CASE("synthetic generator is deterministic and plants violations") {
  SyntheticConfig cfg;
  cfg.pairs = 200;
  cfg.pool = 20;
  const auto a = generate_synthetic(cfg), b = generate_synthetic(cfg);
  CHECK(a.sft == b.sft);
  CHECK(a.pool.size() == 20);
  for (const auto& s : a.sft) CHECK(!s.simple.empty());
  const auto sent = synthetic_sentence(5);
  for (std::size_t i = 1; i < sent.variants.size(); ++i)
    CHECK(text::word_count(sent.variants[i - 1]) <= text::word_count(sent.variants[i]));
}
