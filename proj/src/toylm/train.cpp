#include "atsalign/toylm/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "atsalign/errors.hpp"
#include "atsalign/rng.hpp"

namespace atsalign::toylm {

std::string_view to_string(LossMode m) { return m == LossMode::full_prompt ? "full_prompt" : "completion_only"; }
std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adamw"; }

LossMode parse_loss_mode(std::string_view s) {
  if (s == "full_prompt") return LossMode::full_prompt;
  if (s == "completion_only") return LossMode::completion_only;
  throw ConfigError("unknown loss_mode '" + std::string(s) + "'");
}

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adamw") return OptimizerKind::adamw;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0)) throw ConfigError("learning_rate and weight_decay must be >= 0");
  if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be > 0");
  if (max_seq_len < 2) throw ConfigError("max_seq_len must be >= 2");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0))
    throw ConfigError("invalid AdamW moments");
}

double scheduled_lr(const TrainConfig& cfg, std::size_t step) {
  if (!cfg.cosine_schedule || cfg.total_steps == 0) return cfg.learning_rate;
  const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(cfg.total_steps));
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

UpdateInfo apply_update(std::vector<double>& params, std::vector<double>& grad, OptimizerState& state,
                        const TrainConfig& cfg) {
  UpdateInfo info;
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  info.grad_norm = std::sqrt(sq);
  if (!std::isfinite(info.grad_norm)) throw DomainError("non-finite gradient");
  if (info.grad_norm > cfg.grad_clip_norm) {
    const double s = cfg.grad_clip_norm / info.grad_norm;
    for (double& g : grad) g *= s;
  }
  info.lr = scheduled_lr(cfg, state.step);
  const double lr = info.lr;
  const double decay = 1.0 - lr * cfg.weight_decay;
  if (cfg.optimizer == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] = params[i] * decay - lr * grad[i];
  } else {
    if (state.m.size() != params.size()) {
      state.m.assign(params.size(), 0.0);
      state.v.assign(params.size(), 0.0);
    }
    const double t = static_cast<double>(state.step + 1);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i] = cfg.adam_beta1 * state.m[i] + (1.0 - cfg.adam_beta1) * grad[i];
      state.v[i] = cfg.adam_beta2 * state.v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
      const double mhat = state.m[i] / bc1;
      const double vhat = state.v[i] / bc2;
      params[i] = params[i] * decay - lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
  ++state.step;
  return info;
}

double sft_objective(const PolicyModel& model, const SequenceExample& ex, LossMode mode, double coef,
                     std::span<double> grad, std::size_t* tokens) {
  const auto seq = model.sequence(ex.prompt, ex.completion);
  const std::size_t first = mode == LossMode::full_prompt ? 1 : 1 + ex.prompt.size();
  if (tokens) *tokens = seq.size() - first;
  // NLL = -sum log p, so the log-prob gradient enters with -coef.
  return -model.score(seq, first, -coef, grad);
}

SftStepResult sft_step(PolicyModel& model, OptimizerState& state, std::span<const SequenceExample> batch,
                       const TrainConfig& cfg) {
  if (batch.empty()) throw DomainError("sft_step: empty batch");
  std::size_t tokens = 0;
  for (const auto& ex : batch) {
    const std::size_t len = 1 + ex.prompt.size() + ex.completion.size();
    if (len > cfg.max_seq_len) throw DomainError("sft_step: sequence longer than max_seq_len");
    tokens += cfg.loss_mode == LossMode::full_prompt ? len - 1 : ex.completion.size();
  }
  if (tokens == 0) throw DomainError("sft_step: batch has no scored tokens");
  std::vector<double> grad(model.params().size(), 0.0);
  const double coef = 1.0 / static_cast<double>(tokens);
  double nll = 0.0;
  for (const auto& ex : batch) nll += sft_objective(model, ex, cfg.loss_mode, coef, grad);
  SftStepResult r;
  r.tokens = tokens;
  r.loss = nll / static_cast<double>(tokens);
  if (!std::isfinite(r.loss)) throw DomainError("sft_step: non-finite loss");
  r.update = apply_update(model.params(), grad, state, cfg);
  return r;
}

double sft_eval_loss(const PolicyModel& model, std::span<const SequenceExample> data, LossMode mode) {
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const auto& ex : data) {
    std::size_t n = 0;
    nll += sft_objective(model, ex, mode, 0.0, {}, &n);
    tokens += n;
  }
  if (tokens == 0) throw DomainError("sft_eval_loss: no scored tokens");
  return nll / static_cast<double>(tokens);
}

align::LogprobQuad logprob_quad(const PolicyModel& policy, const PolicyModel& reference, const PreferenceExample& ex) {
  return {policy.logprob_sequence(ex.prompt, ex.chosen), policy.logprob_sequence(ex.prompt, ex.rejected),
          reference.logprob_sequence(ex.prompt, ex.chosen), reference.logprob_sequence(ex.prompt, ex.rejected)};
}

DpoStepResult dpo_objective(const PolicyModel& policy, const PolicyModel& reference,
                            std::span<const PreferenceExample> batch, double beta, std::span<double> grad) {
  if (batch.empty()) throw DomainError("dpo: empty batch");
  if (!(beta > 0.0)) throw ConfigError("dpo: beta must be > 0");
  if (policy.params().size() != reference.params().size() || !(policy.vocab() == reference.vocab()))
    throw DomainError("dpo: policy and reference differ in shape or vocabulary");
  DpoStepResult r;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    const auto q = logprob_quad(policy, reference, ex);
    const double margin = align::reward_margin(q, beta);
    r.mean_loss += align::softplus(-margin) * inv_b;
    r.mean_margin += margin * inv_b;
    if (!grad.empty()) {
      // dL/dlp_w = -beta * sigma(-margin); dL/dlp_l is its negation.
      const double c = beta * align::dpo_loss_margin_grad(margin) * inv_b;
      const auto sw = policy.sequence(ex.prompt, ex.chosen);
      const auto sl = policy.sequence(ex.prompt, ex.rejected);
      policy.score(sw, 1 + ex.prompt.size(), c, grad);
      policy.score(sl, 1 + ex.prompt.size(), -c, grad);
    }
  }
  if (!std::isfinite(r.mean_loss)) throw DomainError("dpo: non-finite loss");
  return r;
}

DpoStepResult dpo_step(PolicyModel& policy, const PolicyModel& reference, OptimizerState& state,
                       std::span<const PreferenceExample> batch, const align::DpoConfig& dpo, const TrainConfig& cfg) {
  for (const auto& ex : batch) {
    const std::size_t longest = 1 + ex.prompt.size() + std::max(ex.chosen.size(), ex.rejected.size());
    if (longest > cfg.max_seq_len) throw DomainError("dpo_step: prompt overflow");
  }
  std::vector<double> grad(policy.params().size(), 0.0);
  auto r = dpo_objective(policy, reference, batch, dpo.beta, grad);
  r.update = apply_update(policy.params(), grad, state, cfg);
  return r;
}

GradCheckResult finite_difference_check(const PolicyModel& policy, const PolicyModel& reference,
                                        const PreferenceExample& ex, double beta, double epsilon,
                                        std::size_t coordinates, std::uint64_t seed) {
  const std::span<const PreferenceExample> one(&ex, 1);
  std::vector<double> analytic(policy.params().size(), 0.0);
  dpo_objective(policy, reference, one, beta, analytic);

  std::vector<std::size_t> idx(policy.params().size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (coordinates != 0 && coordinates < idx.size()) {
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(idx));
    idx.resize(coordinates);
  }

  PolicyModel probe = policy;
  GradCheckResult out;
  out.coordinates = idx.size();
  for (std::size_t i : idx) {
    const double orig = probe.params()[i];
    probe.params()[i] = orig + epsilon;
    const double fp = dpo_objective(probe, reference, one, beta, {}).mean_loss;
    probe.params()[i] = orig - epsilon;
    const double fm = dpo_objective(probe, reference, one, beta, {}).mean_loss;
    probe.params()[i] = orig;
    const double fd = (fp - fm) / (2.0 * epsilon);
    const double abs_err = std::abs(analytic[i] - fd);
    const double rel = abs_err / std::max(std::abs(analytic[i]) + std::abs(fd), 1e-6);
    out.max_abs_error = std::max(out.max_abs_error, abs_err);
    out.max_rel_error = std::max(out.max_rel_error, rel);
  }
  return out;
}

}  // namespace atsalign::toylm
