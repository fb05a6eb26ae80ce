#include "dacxai/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace dacxai {

namespace {

constexpr double kNa = std::numeric_limits<double>::quiet_NaN();

double ratio_or_na(long num, long den) {
  return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : kNa;
}

// Pair up predictions and truths by report id, in truth order.
std::vector<std::pair<const TokenizedReport*, const PredictionRecord*>> align(
    const std::vector<PredictionRecord>& predictions,
    const std::vector<TokenizedReport>& truths) {
  if (predictions.size() != truths.size()) {
    throw std::invalid_argument("prediction/truth lists differ in length");
  }
  std::map<int, const PredictionRecord*> by_id;
  for (const auto& p : predictions) by_id[p.report_id] = &p;
  std::vector<std::pair<const TokenizedReport*, const PredictionRecord*>> out;
  out.reserve(truths.size());
  for (const auto& t : truths) {
    auto it = by_id.find(t.report_id);
    if (it == by_id.end()) {
      throw std::invalid_argument("no prediction for report " + std::to_string(t.report_id));
    }
    out.emplace_back(&t, it->second);
  }
  return out;
}

}  // namespace

double ScoreReport::micro_retained_accuracy() const {
  long correct = 0, retained = 0;
  for (const auto& t : tasks) {
    correct += t.correct;
    retained += t.retained;
  }
  return ratio_or_na(correct, retained);
}

double ScoreReport::micro_abstention() const {
  long abstained = 0, total = 0;
  for (const auto& t : tasks) {
    abstained += t.abstained;
    total += t.retained + t.abstained;
  }
  return ratio_or_na(abstained, total);
}

ScoreReport score(const std::vector<PredictionRecord>& predictions,
                  const std::vector<TokenizedReport>& truths,
                  std::span<const TaskSchema> schemas) {
  const auto pairs = align(predictions, truths);
  const std::size_t n_tasks = schemas.size();

  ScoreReport rep;
  rep.n_reports = static_cast<long>(pairs.size());
  rep.tasks.resize(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    rep.tasks[t].task_name = schemas[t].task_name;
    rep.tasks[t].per_class.resize(static_cast<std::size_t>(schemas[t].n_classes()));
    for (int c = 0; c < schemas[t].n_classes(); ++c) {
      rep.tasks[t].per_class[static_cast<std::size_t>(c)].class_name =
          schemas[t].class_names[static_cast<std::size_t>(c)];
    }
  }

  std::vector<std::vector<long>> class_abstained(n_tasks), class_correct(n_tasks);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    class_abstained[t].assign(static_cast<std::size_t>(schemas[t].n_classes()), 0);
    class_correct[t].assign(static_cast<std::size_t>(schemas[t].n_classes()), 0);
  }

  for (const auto& [truth, pred] : pairs) {
    if (pred->tasks.size() != n_tasks || truth->labels.size() != n_tasks) {
      throw std::invalid_argument("task count mismatch for report " +
                                  std::to_string(truth->report_id));
    }
    bool all_retained = true, all_correct = true;
    for (std::size_t t = 0; t < n_tasks; ++t) {
      const TaskOutput& out = pred->tasks[t];
      const int label = truth->labels[t];
      if (label < 0 || label >= schemas[t].n_classes()) {
        throw std::invalid_argument("label out of schema range for report " +
                                    std::to_string(truth->report_id));
      }
      auto& ts = rep.tasks[t];
      auto& cs = ts.per_class[static_cast<std::size_t>(label)];
      ++cs.truth_count;
      if (out.abstained()) {
        ++ts.abstained;
        ++class_abstained[t][static_cast<std::size_t>(label)];
        all_retained = false;
        all_correct = false;
      } else {
        ++ts.retained;
        ++cs.retained;
        if (out.predicted >= 0 && out.predicted < schemas[t].n_classes()) {
          ++ts.per_class[static_cast<std::size_t>(out.predicted)].predicted;
        }
        if (out.predicted == label) {
          ++ts.correct;
          ++class_correct[t][static_cast<std::size_t>(label)];
        } else {
          all_correct = false;
        }
      }
    }
    if (all_retained) {
      ++rep.joint_retained;
      if (all_correct) ++rep.joint_correct;
    }
  }

  for (std::size_t t = 0; t < n_tasks; ++t) {
    auto& ts = rep.tasks[t];
    ts.retained_accuracy = ratio_or_na(ts.correct, ts.retained);
    ts.abstention = ratio_or_na(ts.abstained, ts.retained + ts.abstained);
    for (std::size_t c = 0; c < ts.per_class.size(); ++c) {
      auto& cs = ts.per_class[c];
      cs.correct = class_correct[t][c];
      cs.ppv = ratio_or_na(cs.correct, cs.predicted);
      cs.recall = ratio_or_na(cs.correct, cs.retained);
      cs.abstention = ratio_or_na(class_abstained[t][c], cs.truth_count);
    }
  }
  rep.joint_retained_accuracy = ratio_or_na(rep.joint_correct, rep.joint_retained);
  rep.joint_retained_fraction = ratio_or_na(rep.joint_retained, rep.n_reports);
  return rep;
}

long ConfusionMatrix::total() const {
  double sum = 0.0;
  for (double x : counts.data) sum += x;
  return static_cast<long>(std::llround(sum));
}

namespace {

ConfusionMatrix tally(const std::vector<std::string>& named_rows, bool pool_other,
                      bool abstain_col,
                      const std::vector<std::tuple<int, int, bool>>& events,
                      const TaskSchema& schema,
                      const std::vector<int>& class_to_named) {
  // events: (truth class, predicted class or -1, abstained)
  ConfusionMatrix m;
  m.row_labels = named_rows;
  m.col_labels = named_rows;
  if (pool_other) {
    m.row_labels.push_back("other");
    m.col_labels.push_back("other");
  }
  if (abstain_col) m.col_labels.push_back("abstain");
  const std::size_t rows = m.row_labels.size();
  const std::size_t cols = m.col_labels.size();
  m.counts = NumArray::zeros({rows, cols});
  const std::size_t other_row = named_rows.size();  // valid only when pool_other

  auto row_of = [&](int cls) -> std::size_t {
    const int named = class_to_named[static_cast<std::size_t>(cls)];
    return named >= 0 ? static_cast<std::size_t>(named) : other_row;
  };
  for (const auto& [truth, predicted, abstained] : events) {
    if (truth < 0 || truth >= schema.n_classes()) {
      throw std::invalid_argument("confusion tally: truth label out of range");
    }
    const std::size_t r = row_of(truth);
    std::size_t c;
    if (abstained) {
      if (!abstain_col) throw std::invalid_argument("confusion tally: unexpected abstention");
      c = cols - 1;
    } else {
      c = row_of(predicted);
    }
    m.counts(r, c) += 1.0;
  }

  m.ppv.assign(cols, kNa);
  m.recall.assign(rows, kNa);
  for (std::size_t j = 0; j < std::min(named_rows.size(), cols); ++j) {
    double col_sum = 0.0;
    for (std::size_t i = 0; i < rows; ++i) col_sum += m.counts(i, j);
    if (col_sum > 0.0) m.ppv[j] = m.counts(j, j) / col_sum;
  }
  for (std::size_t i = 0; i < std::min(named_rows.size(), rows); ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) row_sum += m.counts(i, j);
    if (row_sum > 0.0) m.recall[i] = m.counts(i, i) / row_sum;
  }
  return m;
}

}  // namespace

ConfusionMatrix confusion_topk(const std::vector<PredictionRecord>& predictions,
                               const std::vector<TokenizedReport>& truths, std::size_t task,
                               const TaskSchema& schema, std::size_t k) {
  if (k < 1) throw std::invalid_argument("confusion_topk: k must be >= 1");
  const auto pairs = align(predictions, truths);

  std::vector<long> prevalence(static_cast<std::size_t>(schema.n_classes()), 0);
  for (const auto& [truth, pred] : pairs) {
    (void)pred;
    ++prevalence[static_cast<std::size_t>(truth->labels[task])];
  }
  std::vector<int> order(prevalence.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return prevalence[static_cast<std::size_t>(a)] > prevalence[static_cast<std::size_t>(b)];
  });
  const std::size_t named_n = std::min(k, order.size());
  std::vector<int> named(order.begin(), order.begin() + static_cast<long>(named_n));
  std::sort(named.begin(), named.end());  // stable display order

  std::vector<int> class_to_named(prevalence.size(), -1);
  std::vector<std::string> named_rows;
  for (std::size_t i = 0; i < named.size(); ++i) {
    class_to_named[static_cast<std::size_t>(named[i])] = static_cast<int>(i);
    named_rows.push_back(schema.class_names[static_cast<std::size_t>(named[i])]);
  }
  const bool pool_other = named_n < prevalence.size();

  std::vector<std::tuple<int, int, bool>> events;
  events.reserve(pairs.size());
  for (const auto& [truth, pred] : pairs) {
    const TaskOutput& out = pred->tasks.at(task);
    events.emplace_back(truth->labels[task], out.abstained() ? -1 : out.predicted,
                        out.abstained());
  }
  return tally(named_rows, pool_other, /*abstain_col=*/true, events, schema, class_to_named);
}

ConfusionMatrix second_choice_matrix(const std::vector<PredictionRecord>& predictions,
                                     const std::vector<TokenizedReport>& truths,
                                     std::size_t task, const TaskSchema& schema) {
  const auto pairs = align(predictions, truths);
  std::vector<std::tuple<int, int, bool>> events;
  for (const auto& [truth, pred] : pairs) {
    const TaskOutput& out = pred->tasks.at(task);
    if (!out.abstained()) {
      throw std::invalid_argument("second_choice_matrix: report " +
                                  std::to_string(truth->report_id) + " did not abstain");
    }
    events.emplace_back(truth->labels[task], *out.second_choice, false);
  }
  std::vector<int> class_to_named(static_cast<std::size_t>(schema.n_classes()));
  std::iota(class_to_named.begin(), class_to_named.end(), 0);
  return tally(schema.class_names, /*pool_other=*/false, /*abstain_col=*/false, events, schema,
               class_to_named);
}

std::vector<double> default_sweep_targets() {
  std::vector<double> targets(8);
  for (int i = 0; i < 8; ++i) {
    targets[static_cast<std::size_t>(i)] = 0.80 + (0.97 - 0.80) * i / 7.0;
  }
  return targets;
}

std::vector<TradeoffPoint> tradeoff_sweep(const ModelConfig& model_cfg, const SplitResult& splits,
                                          const DacConfig& base, std::span<const double> targets) {
  if (targets.empty()) throw std::invalid_argument("tradeoff_sweep: no targets");
  for (std::size_t i = 1; i < targets.size(); ++i) {
    if (targets[i] < targets[i - 1]) {
      throw std::invalid_argument("tradeoff_sweep: targets must be sorted ascending");
    }
  }
  if (splits.test.empty()) throw std::invalid_argument("tradeoff_sweep: empty test split");

  std::vector<TradeoffPoint> out;
  out.reserve(targets.size());
  for (double target : targets) {
    DacConfig cfg = base;
    cfg.accuracy_target = target;
    TrainResult tr = train(model_cfg, splits.train, splits.val, cfg);

    TradeoffPoint pt;
    pt.target = target;
    pt.epochs_run = tr.epochs_run;
    const std::size_t n_tasks = model_cfg.tasks.size();
    std::vector<long> correct(n_tasks, 0), retained(n_tasks, 0), abstained(n_tasks, 0);
    for (const auto& r : splits.test) {
      std::vector<TaskOutput> outs = predict(model_cfg, tr.params, r.tokens);
      for (std::size_t t = 0; t < n_tasks; ++t) {
        if (outs[t].abstained()) {
          ++abstained[t];
        } else {
          ++retained[t];
          if (outs[t].predicted == r.labels[t]) ++correct[t];
        }
      }
    }
    long correct_all = 0, retained_all = 0, abstained_all = 0;
    for (std::size_t t = 0; t < n_tasks; ++t) {
      TradeoffTask tt;
      tt.task_name = model_cfg.tasks[t].name;
      tt.retained_accuracy = ratio_or_na(correct[t], retained[t]);
      tt.abstention = ratio_or_na(abstained[t], retained[t] + abstained[t]);
      pt.per_task.push_back(tt);
      correct_all += correct[t];
      retained_all += retained[t];
      abstained_all += abstained[t];
    }
    pt.retained_accuracy = ratio_or_na(correct_all, retained_all);
    pt.abstention = ratio_or_na(abstained_all, retained_all + abstained_all);
    out.push_back(pt);
  }
  return out;
}

}  // namespace dacxai
