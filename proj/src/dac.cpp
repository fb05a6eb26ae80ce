#include "dacxai/dac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "dacxai/corpus.hpp"
#include "dacxai/model.hpp"

namespace dacxai {

namespace {

void check_prob_vector(std::span<const double> probs, int truth, const char* who) {
  if (probs.size() < 2) {
    throw std::invalid_argument(std::string(who) + ": need at least one class plus abstain");
  }
  if (truth < 0 || truth + 1 >= static_cast<int>(probs.size())) {
    throw std::invalid_argument(std::string(who) + ": truth index outside original classes");
  }
}

double clamped_log(double x) { return std::log(std::max(x, 1e-300)); }

}  // namespace

void DacConfig::validate(std::size_t n_tasks) const {
  if (n_tasks == 0) throw std::invalid_argument("DacConfig: no tasks");
  if (alpha_init.size() > 1 && alpha_init.size() != n_tasks) {
    throw std::invalid_argument("DacConfig: alpha_init must have 0, 1, or n_tasks entries");
  }
  for (double a : alpha_init) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw std::invalid_argument("DacConfig: alpha_init entries must be positive");
    }
  }
  if (dummy_alpha && !(*dummy_alpha > 0.0)) {
    throw std::invalid_argument("DacConfig: dummy_alpha must be positive");
  }
  if (!(accuracy_target > 0.0) || accuracy_target > 1.0) {
    throw std::invalid_argument("DacConfig: accuracy_target must be in (0, 1]");
  }
  if (!(accuracy_band > 0.0) || accuracy_band >= 1.0) {
    throw std::invalid_argument("DacConfig: accuracy_band must be in (0, 1)");
  }
  if (max_epochs < 0) throw std::invalid_argument("DacConfig: max_epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("DacConfig: learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("DacConfig: batch_size must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("DacConfig: momentum must be in [0, 1)");
  }
  if (!(gamma > 1.0)) throw std::invalid_argument("DacConfig: gamma must be > 1");
  if (!(alpha_min > 0.0) || !(alpha_max > alpha_min)) {
    throw std::invalid_argument("DacConfig: need 0 < alpha_min < alpha_max");
  }
  if (mode != TuneMode::accuracy_only) {
    throw std::invalid_argument("DacConfig: only the accuracy_only tuning mode is implemented");
  }
}

std::vector<double> DacConfig::alphas_for(std::size_t n_tasks) const {
  if (alpha_init.empty()) return std::vector<double>(n_tasks, 1.0);
  if (alpha_init.size() == 1) return std::vector<double>(n_tasks, alpha_init[0]);
  if (alpha_init.size() != n_tasks) {
    throw std::invalid_argument("DacConfig: alpha_init must have 0, 1, or n_tasks entries");
  }
  return alpha_init;
}

DacLoss dac_loss(std::span<const double> probs, int truth, double alpha) {
  check_prob_vector(probs, truth, "dac_loss");
  const std::size_t abstain = probs.size() - 1;
  const double p_abs = probs[abstain];
  if (p_abs >= 1.0 - kRetainFloor) {
    throw SaturationError("abstain mass saturated (retained probability below 1e-12)");
  }
  const double p_t = probs[static_cast<std::size_t>(truth)];
  const double q = 1.0 - p_abs;
  const double log_q = std::log1p(-p_abs);
  const double log_pt = clamped_log(p_t);

  DacLoss out;
  out.loss = q * (log_q - log_pt) - alpha * log_q;
  out.dprobs.assign(probs.size(), 0.0);
  out.dprobs[static_cast<std::size_t>(truth)] += -q / std::max(p_t, 1e-300);
  out.dprobs[abstain] += log_pt - log_q - 1.0 + alpha / q;
  return out;
}

LogitLoss dac_loss_from_logits(std::span<const double> logits, int truth, double alpha) {
  std::vector<double> probs = softmax(logits);
  DacLoss dl = dac_loss(probs, truth, alpha);

  LogitLoss out;
  out.loss = dl.loss;
  out.dlogits.assign(logits.size(), 0.0);
  // dL/dz_j = sum_i dL/dp_i * p_i * (delta_ij - p_j); only truth and abstain
  // carry probability-space gradient.
  const std::size_t hot[2] = {static_cast<std::size_t>(truth), probs.size() - 1};
  for (std::size_t i : hot) {
    const double gi = dl.dprobs[i] * probs[i];
    for (std::size_t j = 0; j < probs.size(); ++j) {
      out.dlogits[j] += gi * ((i == j ? 1.0 : 0.0) - probs[j]);
    }
  }
  return out;
}

NTaskLoss ntask_loss(std::span<const std::vector<double>> task_probs,
                     std::span<const int> truths, std::span<const double> alphas,
                     std::span<const double> dummy_probs, double dummy_alpha) {
  const std::size_t n = task_probs.size();
  if (n == 0) throw std::invalid_argument("ntask_loss: no tasks");
  if (truths.size() != n || alphas.size() != n) {
    throw std::invalid_argument("ntask_loss: truths/alphas must match task count");
  }
  if (dummy_probs.size() != 2) {
    throw std::invalid_argument("ntask_loss: dummy head must be 2-way");
  }
  const double p_dummy_abs = dummy_probs[1];
  if (p_dummy_abs >= 1.0 - kRetainFloor) {
    throw SaturationError("dummy head abstain mass saturated");
  }
  const double q = 1.0 - p_dummy_abs;
  const double log_q = std::log1p(-p_dummy_abs);

  NTaskLoss out;
  out.dprobs.resize(n);
  out.ddummy.assign(2, 0.0);

  double total = -dummy_alpha * log_q;
  double sum_s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    check_prob_vector(task_probs[i], truths[i], "ntask_loss");
    const std::size_t abstain = task_probs[i].size() - 1;
    const double p_abs = task_probs[i][abstain];
    if (p_abs >= 1.0 - kRetainFloor) {
      throw SaturationError("abstain mass saturated for task index " + std::to_string(i));
    }
    const double q_i = 1.0 - p_abs;
    const double log_qi = std::log1p(-p_abs);
    const double p_t = task_probs[i][static_cast<std::size_t>(truths[i])];
    const double s_i = log_qi - clamped_log(p_t);  // renormalized cross-entropy
    sum_s += s_i;
    total += (q_i + q) * s_i - alphas[i] * log_qi;

    out.dprobs[i].assign(task_probs[i].size(), 0.0);
    out.dprobs[i][static_cast<std::size_t>(truths[i])] = -(q_i + q) / std::max(p_t, 1e-300);
    out.dprobs[i][abstain] = -s_i - (q_i + q) / q_i + alphas[i] / q_i;
  }
  out.loss = total;
  // d/d(p_dummy_abstain) = -(d/dq) = dummy_alpha/q - sum_i S_i; retain slot is
  // passive, the softmax chain redistributes it.
  out.ddummy[1] = dummy_alpha / q - sum_s;
  return out;
}

NTaskLogitLoss ntask_loss_from_logits(std::span<const std::vector<double>> task_logits,
                                      std::span<const int> truths,
                                      std::span<const double> alphas,
                                      std::span<const double> dummy_logits,
                                      double dummy_alpha) {
  std::vector<std::vector<double>> task_probs(task_logits.size());
  for (std::size_t i = 0; i < task_logits.size(); ++i) task_probs[i] = softmax(task_logits[i]);
  std::vector<double> dummy_probs = softmax(dummy_logits);

  NTaskLoss nl = ntask_loss(task_probs, truths, alphas, dummy_probs, dummy_alpha);

  NTaskLogitLoss out;
  out.loss = nl.loss;
  out.dlogits.resize(task_probs.size());
  for (std::size_t t = 0; t < task_probs.size(); ++t) {
    const auto& p = task_probs[t];
    out.dlogits[t].assign(p.size(), 0.0);
    const std::size_t hot[2] = {static_cast<std::size_t>(truths[t]), p.size() - 1};
    for (std::size_t i : hot) {
      const double gi = nl.dprobs[t][i] * p[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        out.dlogits[t][j] += gi * ((i == j ? 1.0 : 0.0) - p[j]);
      }
    }
  }
  out.ddummy_logits.assign(2, 0.0);
  const double ga = nl.ddummy[1] * dummy_probs[1];
  for (std::size_t j = 0; j < 2; ++j) {
    out.ddummy_logits[j] += ga * ((j == 1 ? 1.0 : 0.0) - dummy_probs[j]);
  }
  return out;
}

void tune_alpha(TunerState& state, const DacConfig& cfg,
                std::span<const EpochTaskMetrics> metrics, int epoch) {
  if (state.tasks.size() != metrics.size()) {
    throw std::invalid_argument("tune_alpha: metrics/task count mismatch");
  }
  const double lo = cfg.accuracy_target - cfg.accuracy_band;
  const double hi = cfg.accuracy_target + cfg.accuracy_band;
  for (std::size_t i = 0; i < state.tasks.size(); ++i) {
    TaskTunerState& ts = state.tasks[i];
    const EpochTaskMetrics& m = metrics[i];
    ts.trajectory.push_back({epoch, ts.alpha, m.retained_accuracy, m.abstention});
    if (ts.frozen) {
      ts.satisfied = true;
      continue;
    }
    auto clamp = [&](double a) { return std::clamp(a, cfg.alpha_min, cfg.alpha_max); };
    if (std::isnan(m.retained_accuracy)) {
      // Everything abstained: push toward retaining.
      ts.satisfied = false;
      ts.alpha = clamp(ts.alpha * cfg.gamma);
      continue;
    }
    if (m.abstention == 0.0 && m.retained_accuracy >= cfg.accuracy_target) {
      ts.satisfied = true;
      ts.frozen = true;
      continue;
    }
    if (m.retained_accuracy < lo) {
      ts.satisfied = false;
      ts.alpha = clamp(ts.alpha / cfg.gamma);  // cheapen abstention
    } else if (m.retained_accuracy > hi) {
      ts.satisfied = false;
      if (m.abstention > 0.0) ts.alpha = clamp(ts.alpha * cfg.gamma);  // retain more
    } else {
      ts.satisfied = true;
    }
  }
}

namespace {

std::vector<NumArray*> flatten(LayerParams& p) {
  std::vector<NumArray*> out;
  p.for_each([&](NumArray& a) { out.push_back(&a); });
  return out;
}

void check_reports(const ModelConfig& mc, const std::vector<TokenizedReport>& reports,
                   const char* which) {
  for (const auto& r : reports) {
    if (r.labels.size() != mc.tasks.size()) {
      throw std::invalid_argument(std::string("train: ") + which + " report " +
                                  std::to_string(r.report_id) + " has " +
                                  std::to_string(r.labels.size()) + " labels for " +
                                  std::to_string(mc.tasks.size()) + " tasks");
    }
    for (std::size_t t = 0; t < r.labels.size(); ++t) {
      if (r.labels[t] < 0 || r.labels[t] >= mc.tasks[t].n_classes) {
        throw std::invalid_argument(std::string("train: ") + which + " report " +
                                    std::to_string(r.report_id) + " label out of range for task " +
                                    mc.tasks[t].name);
      }
    }
  }
}

}  // namespace

EvalResult evaluate(const ModelConfig& cfg, const LayerParams& params,
                    const std::vector<TokenizedReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("evaluate: empty report set");
  const std::size_t n_tasks = cfg.tasks.size();
  std::vector<long> retained(n_tasks, 0), correct(n_tasks, 0), abstained(n_tasks, 0);
  for (const auto& r : reports) {
    std::vector<TaskOutput> outs = predict(cfg, params, r.tokens);
    for (std::size_t t = 0; t < n_tasks; ++t) {
      if (outs[t].abstained()) {
        ++abstained[t];
      } else {
        ++retained[t];
        if (outs[t].predicted == r.labels[t]) ++correct[t];
      }
    }
  }
  EvalResult res;
  res.tasks.resize(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    res.tasks[t].retained_accuracy =
        retained[t] > 0 ? static_cast<double>(correct[t]) / static_cast<double>(retained[t])
                        : std::numeric_limits<double>::quiet_NaN();
    res.tasks[t].abstention =
        static_cast<double>(abstained[t]) / static_cast<double>(reports.size());
  }
  return res;
}

TrainResult train(const ModelConfig& model_cfg, const std::vector<TokenizedReport>& train_set,
                  const std::vector<TokenizedReport>& val_set, const DacConfig& cfg) {
  ModelConfig mc = model_cfg;
  mc.init_seed = cfg.seed;
  mc.validate();
  const std::size_t n_tasks = mc.tasks.size();
  cfg.validate(n_tasks);
  if (cfg.dummy_alpha && !mc.ntask_dummy) {
    throw std::invalid_argument("train: dummy_alpha set but the model has no dummy head");
  }
  if (train_set.empty() || val_set.empty()) {
    throw std::invalid_argument("train: train and validation sets must be non-empty");
  }
  check_reports(mc, train_set, "train");
  check_reports(mc, val_set, "val");

  TrainResult res;
  res.params = init_params(mc);
  LayerParams velocity = zero_like(res.params);
  res.tuner.mode = cfg.mode;
  res.tuner.tasks.resize(n_tasks);
  {
    std::vector<double> alphas = cfg.alphas_for(n_tasks);
    for (std::size_t t = 0; t < n_tasks; ++t) res.tuner.tasks[t].alpha = alphas[t];
  }

  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const double task_scale = 1.0 / static_cast<double>(n_tasks);
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      LayerParams grads = zero_like(res.params);
      for (std::size_t pos = start; pos < stop; ++pos) {
        const TokenizedReport& r = train_set[order[pos]];
        ForwardResult fr = forward(mc, res.params, r.tokens);
        BackwardResult br;
        double sample_loss = 0.0;
        try {
          if (cfg.dummy_alpha) {
            std::vector<double> alphas(n_tasks);
            for (std::size_t t = 0; t < n_tasks; ++t) alphas[t] = res.tuner.tasks[t].alpha;
            NTaskLogitLoss nl = ntask_loss_from_logits(fr.task_logits, r.labels, alphas,
                                                       fr.dummy_logits, *cfg.dummy_alpha);
            sample_loss = nl.loss * task_scale;
            for (auto& v : nl.dlogits)
              for (double& g : v) g *= task_scale;
            for (double& g : nl.ddummy_logits) g *= task_scale;
            br = backward(mc, res.params, fr.cache, nl.dlogits, nl.ddummy_logits);
          } else {
            std::vector<std::vector<double>> dlogits(n_tasks);
            for (std::size_t t = 0; t < n_tasks; ++t) {
              LogitLoss ll = dac_loss_from_logits(fr.task_logits[t], r.labels[t],
                                                  res.tuner.tasks[t].alpha);
              sample_loss += ll.loss * task_scale;
              dlogits[t] = std::move(ll.dlogits);
              for (double& g : dlogits[t]) g *= task_scale;
            }
            br = backward(mc, res.params, fr.cache, dlogits);
          }
        } catch (const SaturationError& e) {
          throw SaturationError("report " + std::to_string(r.report_id) + ": " + e.what());
        }
        std::vector<NumArray*> gs = flatten(grads);
        std::vector<NumArray*> bs = flatten(br.param_grads);
        for (std::size_t i = 0; i < gs.size(); ++i) gs[i]->add_scaled(*bs[i], 1.0);
        loss_sum += sample_loss;
        ++loss_count;
      }
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      std::vector<NumArray*> ps = flatten(res.params);
      std::vector<NumArray*> vs = flatten(velocity);
      std::vector<NumArray*> gs = flatten(grads);
      for (std::size_t i = 0; i < ps.size(); ++i) {
        NumArray& v = *vs[i];
        const NumArray& g = *gs[i];
        for (std::size_t j = 0; j < v.data.size(); ++j) {
          v.data[j] = cfg.momentum * v.data[j] - cfg.learning_rate * inv_batch * g.data[j];
          ps[i]->data[j] += v.data[j];
        }
      }
    }

    const double train_loss = loss_sum / static_cast<double>(loss_count);
    EvalResult ev = evaluate(mc, res.params, val_set);
    for (std::size_t t = 0; t < n_tasks; ++t) {
      res.log.push_back({epoch, mc.tasks[t].name, res.tuner.tasks[t].alpha, train_loss,
                         ev.tasks[t].retained_accuracy, ev.tasks[t].abstention});
    }
    tune_alpha(res.tuner, cfg, ev.tasks, epoch);
    res.epochs_run = epoch + 1;
    if (res.tuner.all_satisfied()) break;
  }
  return res;
}

}  // namespace dacxai
