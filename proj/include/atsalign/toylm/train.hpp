#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "atsalign/align.hpp"
#include "atsalign/toylm/model.hpp"

namespace atsalign::toylm {

enum class LossMode { full_prompt, completion_only };
enum class OptimizerKind { sgd, adamw };

std::string_view to_string(LossMode m);
std::string_view to_string(OptimizerKind k);
LossMode parse_loss_mode(std::string_view s);
OptimizerKind parse_optimizer(std::string_view s);

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 0.01;
  bool cosine_schedule = true;
  /// Steps over which the cosine schedule decays to zero. 0 keeps the rate constant.
  std::size_t total_steps = 0;
  double grad_clip_norm = 1.0;
  std::size_t batch_size = 16;
  std::size_t max_seq_len = 300;
  LossMode loss_mode = LossMode::completion_only;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SequenceExample {
  std::vector<int> prompt;
  std::vector<int> completion;
};

struct PreferenceExample {
  std::vector<int> prompt;
  std::vector<int> chosen;
  std::vector<int> rejected;
};

/// Moment buffers and step counter carried between updates.
struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
};

/// Learning rate for a 0-based step under the configured schedule.
double scheduled_lr(const TrainConfig& cfg, std::size_t step);

struct UpdateInfo {
  double lr = 0.0;
  double grad_norm = 0.0;  // before clipping
};

/// Clips `grad` to the configured global norm and applies one optimizer
/// update with decoupled weight decay.
UpdateInfo apply_update(std::vector<double>& params, std::vector<double>& grad, OptimizerState& state,
                        const TrainConfig& cfg);

struct SftStepResult {
  double loss = 0.0;  // mean next-token cross-entropy over scored positions
  std::size_t tokens = 0;
  UpdateInfo update;
};

/// Cross-entropy and its gradient over the positions selected by `mode`.
/// Returns the summed negative log-likelihood and adds coef * gradient of
/// that sum into grad (when non-empty).
double sft_objective(const PolicyModel& model, const SequenceExample& ex, LossMode mode, double coef,
                     std::span<double> grad, std::size_t* tokens = nullptr);

SftStepResult sft_step(PolicyModel& model, OptimizerState& state, std::span<const SequenceExample> batch,
                       const TrainConfig& cfg);

/// Mean cross-entropy over a set without updating.
double sft_eval_loss(const PolicyModel& model, std::span<const SequenceExample> data, LossMode mode);

/// Sequence log-probabilities for one preference example.
align::LogprobQuad logprob_quad(const PolicyModel& policy, const PolicyModel& reference, const PreferenceExample& ex);

struct DpoStepResult {
  double mean_loss = 0.0;
  double mean_margin = 0.0;
  UpdateInfo update;
};

/// Mean DPO loss over the batch; adds its policy gradient into grad when
/// non-empty. The reference is only read.
DpoStepResult dpo_objective(const PolicyModel& policy, const PolicyModel& reference,
                            std::span<const PreferenceExample> batch, double beta, std::span<double> grad);

DpoStepResult dpo_step(PolicyModel& policy, const PolicyModel& reference, OptimizerState& state,
                       std::span<const PreferenceExample> batch, const align::DpoConfig& dpo, const TrainConfig& cfg);

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t coordinates = 0;
};

/// Compares the analytic DPO gradient on one example against central
/// differences at `coordinates` parameter indices drawn from Rng(seed)
/// (0 checks every parameter). Relative error per coordinate is
/// |a - f| / max(|a| + |f|, 1e-6).
GradCheckResult finite_difference_check(const PolicyModel& policy, const PolicyModel& reference,
                                        const PreferenceExample& ex, double beta, double epsilon,
                                        std::size_t coordinates, std::uint64_t seed);

}  // namespace atsalign::toylm
