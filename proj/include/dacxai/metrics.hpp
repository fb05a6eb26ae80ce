#pragma once

#include <span>
#include <string>
#include <vector>

#include "dacxai/corpus.hpp"
#include "dacxai/dac.hpp"
#include "dacxai/model.hpp"
#include "dacxai/num_array.hpp"

namespace dacxai {

// NaN doubles mean "NA" throughout this module; CSV rendering prints them so.

struct ClassScore {
  std::string class_name;
  long truth_count = 0;
  long retained = 0;
  long correct = 0;
  long predicted = 0;  // times this class was the (non-abstain) prediction
  double ppv = 0.0;    // correct predictions / predicted, NA when never predicted
  double recall = 0.0; // correct / retained truth-count, NA when all abstained
  double abstention = 0.0;
};

struct TaskScore {
  std::string task_name;
  long retained = 0;
  long abstained = 0;
  long correct = 0;
  double retained_accuracy = 0.0;  // NA when nothing retained
  double abstention = 0.0;
  std::vector<ClassScore> per_class;
};

struct ScoreReport {
  long n_reports = 0;
  std::vector<TaskScore> tasks;
  long joint_retained = 0;  // reports retained on every task
  long joint_correct = 0;   // ... and correct on every task
  double joint_retained_accuracy = 0.0;  // NA when joint_retained = 0
  double joint_retained_fraction = 0.0;

  double micro_retained_accuracy() const;  // pooled over tasks
  double micro_abstention() const;
};

ScoreReport score(const std::vector<PredictionRecord>& predictions,
                  const std::vector<TokenizedReport>& truths,
                  std::span<const TaskSchema> schemas);

struct ConfusionMatrix {
  std::vector<std::string> row_labels;  // truth
  std::vector<std::string> col_labels;  // prediction; may end with "other"/"abstain"
  NumArray counts;                      // [rows, cols]
  std::vector<double> ppv;              // per column, NA for never-predicted or pooled cols
  std::vector<double> recall;           // per row

  long total() const;
};

// Truth rows limited to the K most prevalent classes (ties to the lower class
// index), the rest pooled as "other"; abstain gets its own prediction column.
ConfusionMatrix confusion_topk(const std::vector<PredictionRecord>& predictions,
                               const std::vector<TokenizedReport>& truths, std::size_t task,
                               const TaskSchema& schema, std::size_t k);

// Ground truth vs second choice over abstained outputs only: the model's
// answers had it not been allowed to abstain.
ConfusionMatrix second_choice_matrix(const std::vector<PredictionRecord>& predictions,
                                     const std::vector<TokenizedReport>& truths,
                                     std::size_t task, const TaskSchema& schema);

struct TradeoffTask {
  std::string task_name;
  double retained_accuracy = 0.0;
  double abstention = 0.0;
};

struct TradeoffPoint {
  double target = 0.0;
  double retained_accuracy = 0.0;  // micro over tasks
  double abstention = 0.0;         // micro over tasks
  int epochs_run = 0;
  std::vector<TradeoffTask> per_task;
};

// Eight evenly spaced targets from 0.80 to 0.97.
std::vector<double> default_sweep_targets();

// One full train+tune per target (shared seed), scored on the test split.
std::vector<TradeoffPoint> tradeoff_sweep(const ModelConfig& model_cfg, const SplitResult& splits,
                                          const DacConfig& base, std::span<const double> targets);

}  // namespace dacxai
