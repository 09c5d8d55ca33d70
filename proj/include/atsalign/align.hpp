#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atsalign/corpus.hpp"

namespace atsalign::align {

/// Sequence log-probabilities of the preferred (w) and dispreferred (l)
/// completion under the policy and the frozen reference.
struct LogprobQuad {
  double lp_policy_w = 0.0;
  double lp_policy_l = 0.0;
  double lp_ref_w = 0.0;
  double lp_ref_l = 0.0;
};

struct DpoConfig {
  double beta = 0.1;
  std::size_t batch_size = 8;
};

/// Logistic function, evaluated without overflow for any finite input.
double sigmoid(double x);
/// log(1 + exp(x)), stable for large |x|.
double softplus(double x);

/// Bradley-Terry preference probability sigma(r_w - r_l).
double bt_probability(double reward_w, double reward_l);

/// beta * [(lp_policy_w - lp_ref_w) - (lp_policy_l - lp_ref_l)].
double reward_margin(const LogprobQuad& q, double beta);

/// -log sigma(margin), computed as softplus(-margin).
double dpo_loss(const LogprobQuad& q, double beta);

/// d dpo_loss / d margin = -sigma(-margin).
double dpo_loss_margin_grad(double margin);

struct AlignmentScores {
  std::vector<double> margins;
  double win_rate = 0.0;
  double mean_margin = 0.0;
};

/// Share of strictly positive margins. Throws DomainError on empty input.
double win_rate(const std::vector<double>& margins);
AlignmentScores score_margins(std::vector<double> margins);

enum class Preferred { dpo, sft };

/// Share of evaluations preferring the DPO output.
double supremacy_score(const std::vector<Preferred>& evaluations);

/// Group choice per pair: strict majority wins; exact ties are decided by a
/// fair coin from Rng(seed), drawn in pair order only when a tie occurs.
std::vector<Preferred> majority_vote(const std::vector<std::vector<Preferred>>& per_pair_choices,
                                     std::uint64_t seed);

/// Exact P(X >= k) for X ~ Binomial(n, p0); terms summed in log2 space.
double binomial_test_one_sided(std::size_t k, std::size_t n, double p0 = 0.5);

struct SubsetConfig {
  corpus::Group group = corpus::Group::target;
  /// Checkpoint being post-trained; selects llm_eq.
  std::string trained_checkpoint;
  /// When non-empty, trained_checkpoint must be listed here.
  std::vector<std::string> known_checkpoints;
  /// Annotators kept for max_intra/max_inter; 0 means 4 (target) or 2 (expert).
  std::size_t top_k = 0;
};

struct Subsets {
  std::map<std::string, std::vector<corpus::ResolvedPreference>> sets;  // all, all_eq, llm_eq, max_intra, max_inter
  std::map<std::string, std::vector<std::string>> selected_annotators;   // max_intra, max_inter
  std::vector<std::string> warnings;
};

/// Top-k coder ids by score, descending; ties by id.
std::vector<std::string> top_annotators(const std::map<std::string, double>& scores, std::size_t k);

/// Builds the named training subsets for one annotator group.
/// intra_scores: per-annotator kappa; inter_scores: per-annotator
/// leave-one-out alpha contribution. Annotators missing from a score map are
/// not eligible for that subset.
Subsets build_training_subsets(const std::vector<corpus::PreferencePair>& pairs,
                               const std::vector<corpus::AnnotationRecord>& annotations,
                               const std::map<std::string, double>& intra_scores,
                               const std::map<std::string, double>& inter_scores, const SubsetConfig& config);

/// Score dump lines: {pair_id, margin, win}.
std::string margins_to_jsonl(const std::vector<std::string>& pair_ids, const AlignmentScores& scores);
nlohmann::ordered_json summary_json(const AlignmentScores& scores);

}  // namespace atsalign::align
