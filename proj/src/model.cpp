#include "dacxai/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace dacxai {

namespace {

int argmax_lowest(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

TaskOutput make_task_output(const std::string& name, std::vector<double> probs) {
  TaskOutput out;
  out.task_name = name;
  out.probs = std::move(probs);
  out.predicted = argmax_lowest(out.probs);
  if (out.abstained()) {
    // Highest-probability original class, abstain slot excluded.
    std::span<const double> originals(out.probs.data(), out.probs.size() - 1);
    out.second_choice = argmax_lowest(originals);
  }
  return out;
}

}  // namespace

std::vector<TaskOutput> predict(const ModelConfig& cfg, const LayerParams& params,
                                std::span<const int> tokens) {
  ForwardResult fr = forward(cfg, params, tokens);
  std::vector<TaskOutput> outs;
  outs.reserve(cfg.tasks.size());
  for (std::size_t t = 0; t < cfg.tasks.size(); ++t) {
    outs.push_back(make_task_output(cfg.tasks[t].name, softmax(fr.task_logits[t])));
  }
  return outs;
}

const char* target_kind_name(TargetKind k) {
  switch (k) {
    case TargetKind::top_prediction: return "top_prediction";
    case TargetKind::second_choice: return "second_choice";
  }
  throw std::logic_error("unknown TargetKind");
}

TargetKind target_kind_from_name(const std::string& s) {
  if (s == "top_prediction") return TargetKind::top_prediction;
  if (s == "second_choice") return TargetKind::second_choice;
  throw std::invalid_argument("unknown target kind: " + s);
}

MtcnnModel::MtcnnModel(ModelConfig cfg, LayerParams params)
    : cfg_(std::move(cfg)), params_(std::move(params)) {
  cfg_.validate();
}

std::vector<TaskOutput> MtcnnModel::predict_all(std::span<const int> tokens) const {
  return predict(cfg_, params_, tokens);
}

TaskOutput MtcnnModel::predict_task(std::span<const int> tokens, std::size_t task) const {
  if (task >= cfg_.tasks.size()) throw std::out_of_range("task index out of range");
  ForwardResult fr = forward(cfg_, params_, tokens);
  return make_task_output(cfg_.tasks[task].name, softmax(fr.task_logits[task]));
}

double MtcnnModel::target_score(std::span<const int> tokens, std::size_t task, int cls) const {
  if (task >= cfg_.tasks.size()) throw std::out_of_range("task index out of range");
  ForwardResult fr = forward(cfg_, params_, tokens);
  std::vector<double> probs = softmax(fr.task_logits[task]);
  if (cls < 0 || cls >= static_cast<int>(probs.size())) {
    throw std::out_of_range("class index out of range");
  }
  return probs[static_cast<std::size_t>(cls)];
}

MtcnnModel::ScoreGrad MtcnnModel::target_score_grad(std::span<const int> tokens,
                                                    std::size_t task, int cls) const {
  if (task >= cfg_.tasks.size()) throw std::out_of_range("task index out of range");
  ForwardResult fr = forward(cfg_, params_, tokens);
  std::vector<double> probs = softmax(fr.task_logits[task]);
  if (cls < 0 || cls >= static_cast<int>(probs.size())) {
    throw std::out_of_range("class index out of range");
  }
  const std::size_t c = static_cast<std::size_t>(cls);

  // d(p_c)/d(z_j) = p_c * (delta_cj - p_j), routed through the one head.
  std::vector<std::vector<double>> dlogits(cfg_.tasks.size());
  for (std::size_t t = 0; t < cfg_.tasks.size(); ++t) {
    dlogits[t].assign(static_cast<std::size_t>(cfg_.tasks[t].n_classes) + 1, 0.0);
  }
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double delta = (j == c) ? 1.0 : 0.0;
    dlogits[task][j] = probs[c] * (delta - probs[j]);
  }

  BackwardResult br = backward(cfg_, params_, fr.cache, dlogits);
  ScoreGrad sg;
  sg.score = probs[c];
  sg.positions_tokens = fr.cache.padded_tokens;
  sg.embed_grad = std::move(br.input_embed_grad);
  return sg;
}

}  // namespace dacxai
