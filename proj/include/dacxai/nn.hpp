#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dacxai/num_array.hpp"

namespace dacxai {

struct HeadSpec {
  std::string name;
  int n_classes = 0;  // original classes, abstain slot is added on top
};

struct ModelConfig {
  int vocab_size = 0;
  int embed_dim = 16;
  std::vector<int> filter_sizes{3, 4, 5};
  int n_filters = 8;
  int hidden_dim = 32;
  std::vector<HeadSpec> tasks;
  bool ntask_dummy = false;  // adds a 2-way retain/abstain head with no ground truth
  std::uint64_t init_seed = 0;

  int concat_dim() const { return static_cast<int>(filter_sizes.size()) * n_filters; }
  int max_filter() const;
  void validate() const;
};

// All trainable weights. Doubles throughout; the same struct doubles as the
// gradient container since every field has the same shape in both roles.
struct LayerParams {
  NumArray embedding;               // [vocab, d]
  std::vector<NumArray> conv_w;     // per filter size: [F, s, d]
  std::vector<NumArray> conv_b;     // per filter size: [F]
  NumArray dense_w;                 // [concat, hidden]
  NumArray dense_b;                 // [hidden]
  std::vector<NumArray> head_w;     // per task: [hidden, k+1]
  std::vector<NumArray> head_b;     // per task: [k+1]
  NumArray dummy_w;                 // [hidden, 2] when ntask_dummy
  NumArray dummy_b;                 // [2]

  void for_each(auto&& fn) {
    fn(embedding);
    for (auto& w : conv_w) fn(w);
    for (auto& b : conv_b) fn(b);
    fn(dense_w);
    fn(dense_b);
    for (auto& w : head_w) fn(w);
    for (auto& b : head_b) fn(b);
    fn(dummy_w);
    fn(dummy_b);
  }

  void for_each(auto&& fn) const {
    fn(embedding);
    for (const auto& w : conv_w) fn(w);
    for (const auto& b : conv_b) fn(b);
    fn(dense_w);
    fn(dense_b);
    for (const auto& w : head_w) fn(w);
    for (const auto& b : head_b) fn(b);
    fn(dummy_w);
    fn(dummy_b);
  }
};

LayerParams init_params(const ModelConfig& cfg);
LayerParams zero_like(const LayerParams& p);

// Intermediates retained for the backward pass.
struct ForwardCache {
  std::vector<int> padded_tokens;         // right-padded to >= max filter size
  NumArray embedded;                      // [L, d] looked-up rows
  std::vector<std::vector<int>> argmax;   // per size: [F] winning time index
  std::vector<double> concat;             // [S*F] pooled features
  std::vector<double> dense_pre;          // [hidden] before ReLU
  std::vector<double> hidden;             // [hidden]
};

struct ForwardResult {
  std::vector<std::vector<double>> task_logits;  // per task, length k_t+1
  std::vector<double> dummy_logits;              // length 2 when ntask_dummy
  ForwardCache cache;
};

ForwardResult forward(const ModelConfig& cfg, const LayerParams& params,
                      std::span<const int> tokens);

struct BackwardResult {
  LayerParams param_grads;
  NumArray input_embed_grad;  // [L, d], d(loss)/d(embedded rows); what GradxInput reads
};

// dummy_logit_grads may be empty when the dummy head is disabled or unused.
BackwardResult backward(const ModelConfig& cfg, const LayerParams& params,
                        const ForwardCache& cache,
                        std::span<const std::vector<double>> task_logit_grads,
                        std::span<const double> dummy_logit_grads = {});

// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> logits);

}  // namespace dacxai
