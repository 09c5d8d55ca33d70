#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atsalign/corpus.hpp"

namespace atsalign::agreement {

using corpus::AnnotationRecord;
using corpus::Group;
using corpus::PreferencePair;

struct KappaResult {
  double value = 0.0;
  /// Both passes used one and the same category; value is 1 by convention.
  bool degenerate = false;
};

/// Cohen's kappa with marginal-product chance agreement.
KappaResult cohen_kappa(const std::vector<std::string>& first_pass, const std::vector<std::string>& second_pass);

/// Items x coders with a partial rating map. Categories are canonical
/// candidate ids ("a"/"b"), never display sides.
struct RatingMatrix {
  std::vector<std::string> items;
  std::vector<std::string> coders;
  std::map<std::pair<std::string, std::string>, std::string> ratings;  // (item, coder) -> category

  void rate(const std::string& item, const std::string& coder, const std::string& category);
};

/// Nominal Krippendorff's alpha from the coincidence matrix, over items
/// with at least min_coders ratings.
double krippendorff_alpha(const RatingMatrix& matrix, std::size_t min_coders_per_item = 2);

/// Fraction of annotations whose chosen candidate was shown on the left.
/// Returns 0 for an empty set.
double left_preference_rate(const std::vector<AnnotationRecord>& annotations);

/// First and second pass of one annotator over their repeated pairs, in
/// pair-id order. Each pass takes the latest record of its kind.
struct IntraPasses {
  std::vector<std::string> pair_ids;
  std::vector<std::string> first;
  std::vector<std::string> second;
};
IntraPasses intra_passes(const std::vector<AnnotationRecord>& annotations, const std::string& annotator_id);

/// Kappa per annotator; nullopt where the annotator has no repeated pairs
/// (reported as NA).
std::map<std::string, std::optional<KappaResult>> annotator_kappas(const std::vector<AnnotationRecord>& annotations);

/// Latest rating per (pair, annotator) for one group, optionally limited
/// to pairs from one generator checkpoint and/or to a coder subset.
RatingMatrix group_matrix(const std::vector<PreferencePair>& pairs, const std::vector<AnnotationRecord>& annotations,
                          Group group, const std::optional<std::string>& checkpoint = std::nullopt);

/// Leave-one-out contribution: alpha(group) - alpha(group without coder).
/// Coders whose removal leaves alpha undefined get nullopt.
std::map<std::string, std::optional<double>> alpha_contributions(const RatingMatrix& matrix,
                                                                 std::size_t min_coders_per_item = 2);

struct ReportBundle {
  /// creator -> checkpoint -> pair count
  std::map<std::string, std::map<std::string, std::size_t>> checkpoint_counts;
  /// creator -> (equal-information pairs, total pairs)
  std::map<std::string, std::pair<std::size_t, std::size_t>> info_equality;
  /// annotator -> (left picks, annotations, group)
  struct LeftRow {
    std::size_t left = 0;
    std::size_t total = 0;
    Group group = Group::target;
  };
  std::map<std::string, LeftRow> left_rates;
  double overall_info_equality = 0.0;
};

ReportBundle annotation_reports(const std::vector<PreferencePair>& pairs,
                                const std::vector<AnnotationRecord>& annotations);

/// Writes checkpoint_prevalence.tsv, info_equality.tsv, left_preference.tsv
/// and plot-ready series_*.jsonl ({label, value} per line) into dir.
void write_report_bundle(const ReportBundle& bundle, const std::filesystem::path& dir);

}  // namespace atsalign::agreement
