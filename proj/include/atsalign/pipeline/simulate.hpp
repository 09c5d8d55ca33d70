#pragma once

// Scripted stand-ins for the human roles (pair creators, annotators, evaluators)
// so the whole pipeline runs unattended and reproducibly.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "atsalign/align.hpp"
#include "atsalign/annotate/service.hpp"
#include "atsalign/corpus.hpp"
#include "atsalign/paircreate/session.hpp"
#include "atsalign/rng.hpp"

namespace atsalign::pipeline {

/// The candidate with fewer words; ties go to sim_a.
corpus::Candidate shorter_candidate(const corpus::PreferencePair& p);

/// Exactly round(rate * n) ids, drawn by a seeded shuffle of the sorted ids.
std::set<std::string> flipped_pairs(std::vector<std::string> ids, double rate, std::uint64_t seed);

struct CreatorChoice {
  bool skip = true;
  std::size_t first = 0;
  std::size_t second = 0;
  bool equal_information = false;
};

/// Picks two distinct non-empty inferences whose word counts differ, or skips.
/// Equal information is claimed when the word counts differ by at most two.
CreatorChoice simulated_creator_choice(const paircreate::Presentation& p, Rng& rng);

/// Drives a session to exhaustion and returns the pairs it created.
std::vector<corpus::PreferencePair> simulate_pair_creation(paircreate::PairSession& session, std::uint64_t seed);

struct AnnotatorSimulation {
  std::uint64_t seed = 0;
  double label_noise = 0.0;                         // shared flips, same for every annotator
  std::map<corpus::Group, double> annotator_noise;  // independent per-judgement flips
};

/// Logs in every annotator, answers every view through the service API and
/// submits. Judgements follow the shorter-candidate rule plus noise.
void simulate_annotation(annotate::AnnotationService& service, const std::vector<annotate::AnnotatorProfile>& annotators,
                         const std::vector<corpus::PreferencePair>& pairs, const AnnotatorSimulation& sim);

/// One evaluator's judgement between a DPO and an SFT output: the shorter one
/// wins, identical or equally long outputs are a coin flip, and `noise` flips
/// the verdict.
align::Preferred simulated_evaluation(const std::string& dpo_output, const std::string& sft_output, double noise,
                                      Rng& rng);

}  // namespace atsalign::pipeline
