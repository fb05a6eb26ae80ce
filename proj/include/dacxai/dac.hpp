#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dacxai/nn.hpp"

namespace dacxai {

// Thrown when the abstain mass of some head saturates; the trainer decorates
// it with the offending task name.
struct SaturationError : std::runtime_error {
  explicit SaturationError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kRetainFloor = 1e-12;

enum class TuneMode { accuracy_only, abstention_only, mixed };

struct DacConfig {
  std::vector<double> alpha_init;        // per task; broadcast from one entry if shorter
  std::optional<double> dummy_alpha;     // enables the N-task coupling when set
  double accuracy_target = 0.975;
  double accuracy_band = 0.005;          // 0.975 +/- 0.005 guards a 0.97 floor
  int max_epochs = 30;
  double learning_rate = 0.1;
  int batch_size = 16;
  double momentum = 0.9;
  double gamma = 1.2;                    // multiplicative alpha step
  double alpha_min = 1e-4;
  double alpha_max = 1e4;
  std::uint64_t seed = 0;
  TuneMode mode = TuneMode::accuracy_only;

  void validate(std::size_t n_tasks) const;
  std::vector<double> alphas_for(std::size_t n_tasks) const;
};

struct DacLoss {
  double loss = 0.0;
  std::vector<double> dprobs;
};

// Per-sample abstention loss on a (k+1)-way probability vector; the last slot
// is the abstain class. Returns the loss and its gradient in probability
// space. Training chains this through softmax via dac_loss_from_logits.
DacLoss dac_loss(std::span<const double> probs, int truth, double alpha);

struct LogitLoss {
  double loss = 0.0;
  std::vector<double> dlogits;
};

LogitLoss dac_loss_from_logits(std::span<const double> logits, int truth, double alpha);

struct NTaskLoss {
  double loss = 0.0;
  std::vector<std::vector<double>> dprobs;  // per task
  std::vector<double> ddummy;               // 2 entries: [retain, abstain]
};

// Couples every task's renormalized cross-entropy through the 2-way dummy
// head: total = sum_i[(q_i + q) S_i - alpha_i log q_i] - alpha log q.
NTaskLoss ntask_loss(std::span<const std::vector<double>> task_probs,
                     std::span<const int> truths, std::span<const double> alphas,
                     std::span<const double> dummy_probs, double dummy_alpha);

struct NTaskLogitLoss {
  double loss = 0.0;
  std::vector<std::vector<double>> dlogits;
  std::vector<double> ddummy_logits;
};

NTaskLogitLoss ntask_loss_from_logits(std::span<const std::vector<double>> task_logits,
                                      std::span<const int> truths,
                                      std::span<const double> alphas,
                                      std::span<const double> dummy_logits,
                                      double dummy_alpha);

struct AlphaRecord {
  int epoch = 0;
  double alpha = 0.0;
  double retained_accuracy = 0.0;  // NaN when every sample abstained
  double abstention = 0.0;
};

struct TaskTunerState {
  double alpha = 1.0;
  bool satisfied = false;
  bool frozen = false;  // set once the task beats the target with zero abstention
  std::vector<AlphaRecord> trajectory;
};

struct TunerState {
  std::vector<TaskTunerState> tasks;
  TuneMode mode = TuneMode::accuracy_only;

  bool all_satisfied() const {
    for (const auto& t : tasks)
      if (!t.satisfied) return false;
    return !tasks.empty();
  }
};

struct EpochTaskMetrics {
  double retained_accuracy = 0.0;  // NaN when retained set is empty
  double abstention = 0.0;
};

// Multiplicative band controller: below band -> alpha/gamma (abstain more),
// above band with abstention -> alpha*gamma (abstain less).
void tune_alpha(TunerState& state, const DacConfig& cfg,
                std::span<const EpochTaskMetrics> metrics, int epoch);

struct EpochLogRow {
  int epoch = 0;
  std::string task;
  double alpha = 0.0;
  double train_loss = 0.0;
  double val_retained_accuracy = 0.0;  // NaN = undefined
  double val_abstention = 0.0;
};

struct TrainResult {
  LayerParams params;
  TunerState tuner;
  std::vector<EpochLogRow> log;
  int epochs_run = 0;
};

struct TokenizedReport;  // corpus.hpp

TrainResult train(const ModelConfig& model_cfg, const std::vector<TokenizedReport>& train_set,
                  const std::vector<TokenizedReport>& val_set, const DacConfig& cfg);

struct EvalResult {
  std::vector<EpochTaskMetrics> tasks;
};

EvalResult evaluate(const ModelConfig& cfg, const LayerParams& params,
                    const std::vector<TokenizedReport>& reports);

}  // namespace dacxai
