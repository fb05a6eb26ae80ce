#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dacxai/corpus.hpp"
#include "dacxai/model.hpp"

namespace dacxai {

struct TokenAttribution {
  int report_id = 0;
  std::string task_name;
  int target_class = 0;
  TargetKind target_kind = TargetKind::top_prediction;
  std::vector<double> weights;  // one per token position; padding positions are exactly 0
};

struct WordAttribution {
  int report_id = 0;
  std::map<std::string, double> weights;  // word -> summed occurrence weight
};

// Gradient x re-centered input: weight at position p is (E_p - centroid) . g_p
// where g_p is d(target probability)/d(embedding row p) and the centroid is
// the mean of all non-padding vocabulary embedding rows.
TokenAttribution grad_input(const ScoreModel& model, const TokenizedReport& report,
                            std::size_t task, TargetKind kind);

// Per-word sums of a report's position weights; padding excluded.
WordAttribution aggregate_words(const TokenAttribution& attr, const TokenizedReport& report,
                                const Vocabulary& vocab);

// Reduced-scale perturbation oracle: random keep-half token deletions, least
// squares from word keep-indicators to the target probability.
std::map<std::string, double> perturbation_explain(const ScoreModel& model,
                                                   const TokenizedReport& report,
                                                   std::size_t task, int target_class,
                                                   const Vocabulary& vocab, int n_perturb,
                                                   std::uint64_t seed);

// Fraction of top-decile-magnitude (report, word) pairs on which the two
// explainers give the same sign. Inputs are aligned per report.
double sign_agreement(std::span<const WordAttribution> grad_side,
                      std::span<const WordAttribution> perturb_side);

// Serialization unit for attrs.jsonl.
struct AttributionRecord {
  TokenAttribution attr;
  WordAttribution words;
};

}  // namespace dacxai
