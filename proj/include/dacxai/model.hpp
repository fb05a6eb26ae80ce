#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dacxai/nn.hpp"

namespace dacxai {

struct TaskOutput {
  std::string task_name;
  std::vector<double> probs;          // length k+1, abstain last
  int predicted = 0;                  // argmax over all k+1 slots, ties to lowest index
  std::optional<int> second_choice;   // best original class, set only when abstained

  int abstain_slot() const { return static_cast<int>(probs.size()) - 1; }
  bool abstained() const { return predicted == abstain_slot(); }
};

std::vector<TaskOutput> predict(const ModelConfig& cfg, const LayerParams& params,
                                std::span<const int> tokens);

// Serialization unit for preds.jsonl.
struct PredictionRecord {
  int report_id = 0;
  std::vector<TaskOutput> tasks;
};

enum class TargetKind { top_prediction, second_choice };

const char* target_kind_name(TargetKind k);
TargetKind target_kind_from_name(const std::string& s);

// What the explainers need from a model: per-class target scores, their
// gradients with respect to the looked-up input embeddings, and the embedding
// table itself for centroid re-centering.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;
  virtual std::size_t task_count() const = 0;
  virtual int class_count(std::size_t task) const = 0;  // original classes, no abstain
  virtual const NumArray& embedding_table() const = 0;
  virtual TaskOutput predict_task(std::span<const int> tokens, std::size_t task) const = 0;
  virtual double target_score(std::span<const int> tokens, std::size_t task, int cls) const = 0;

  struct ScoreGrad {
    double score = 0.0;
    std::vector<int> positions_tokens;  // tokens as seen by the model (padded)
    NumArray embed_grad;                // [L, d] d(score)/d(embedding rows)
  };
  virtual ScoreGrad target_score_grad(std::span<const int> tokens, std::size_t task,
                                      int cls) const = 0;
};

// The trunk-plus-heads classifier behind a ScoreModel face. The target score
// is the softmax probability of the requested class.
class MtcnnModel : public ScoreModel {
 public:
  MtcnnModel(ModelConfig cfg, LayerParams params);

  const ModelConfig& config() const { return cfg_; }
  const LayerParams& params() const { return params_; }

  std::vector<TaskOutput> predict_all(std::span<const int> tokens) const;

  std::size_t task_count() const override { return cfg_.tasks.size(); }
  int class_count(std::size_t task) const override { return cfg_.tasks.at(task).n_classes; }
  const NumArray& embedding_table() const override { return params_.embedding; }
  TaskOutput predict_task(std::span<const int> tokens, std::size_t task) const override;
  double target_score(std::span<const int> tokens, std::size_t task, int cls) const override;
  ScoreGrad target_score_grad(std::span<const int> tokens, std::size_t task,
                              int cls) const override;

 private:
  ModelConfig cfg_;
  LayerParams params_;
};

}  // namespace dacxai
