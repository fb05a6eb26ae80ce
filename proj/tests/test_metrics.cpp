#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "dacxai/metrics.hpp"

using namespace dacxai;

namespace {

std::vector<TaskSchema> two_schemas() {
  TaskSchema site;
  site.task_name = "site";
  site.class_names = {"c0", "c1", "c2"};
  site.keyword_map = {{"c0", {"k0"}}, {"c1", {"k1"}}, {"c2", {"k2"}}};
  TaskSchema grade;
  grade.task_name = "grade";
  grade.class_names = {"g0", "g1"};
  grade.keyword_map = {{"g0", {"k3"}}, {"g1", {"k4"}}};
  return {site, grade};
}

TokenizedReport truth_of(int id, int site, int grade) {
  TokenizedReport r;
  r.report_id = id;
  r.tokens = {1};
  r.labels = {site, grade};
  return r;
}

TaskOutput out_of(const std::string& name, int n_classes, int predicted, int second = -1) {
  TaskOutput o;
  o.task_name = name;
  o.probs.assign(static_cast<std::size_t>(n_classes) + 1, 0.05);
  o.probs[static_cast<std::size_t>(predicted)] = 0.7;
  o.predicted = predicted;
  if (o.abstained() && second >= 0) o.second_choice = second;
  return o;
}

PredictionRecord pred_of(int id, int site_pred, int grade_pred, int site_second = -1) {
  PredictionRecord p;
  p.report_id = id;
  p.tasks = {out_of("site", 3, site_pred, site_second), out_of("grade", 2, grade_pred)};
  return p;
}

// Six reports with hand-tallied outcomes; see the assertions for the ledger.
struct Fixture {
  std::vector<TokenizedReport> truths;
  std::vector<PredictionRecord> predictions;

  Fixture() {
    truths = {truth_of(0, 0, 0), truth_of(1, 0, 1), truth_of(2, 1, 0),
              truth_of(3, 2, 1), truth_of(4, 2, 0), truth_of(5, 0, 1)};
    predictions = {pred_of(0, 0, 0),       pred_of(1, 1, 2),  pred_of(2, 3, 1, 1),
                   pred_of(3, 2, 1),       pred_of(4, 3, 0, 0), pred_of(5, 0, 0)};
    // Align pairs by id, not by list position.
    std::reverse(predictions.begin(), predictions.end());
  }
};

}  // namespace

TEST_CASE("score recounts every retained/abstained/correct cell") {
  const Fixture f;
  const ScoreReport rep = score(f.predictions, f.truths, two_schemas());

  CHECK(rep.n_reports == 6);
  REQUIRE(rep.tasks.size() == 2);

  const TaskScore& site = rep.tasks[0];
  CHECK(site.task_name == "site");
  CHECK(site.retained == 4);
  CHECK(site.abstained == 2);
  CHECK(site.correct == 3);
  CHECK(site.retained_accuracy == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(site.abstention == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  REQUIRE(site.per_class.size() == 3);
  const ClassScore& c0 = site.per_class[0];
  CHECK(c0.class_name == "c0");
  CHECK(c0.truth_count == 3);
  CHECK(c0.retained == 3);
  CHECK(c0.correct == 2);
  CHECK(c0.predicted == 2);
  CHECK(c0.ppv == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c0.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(c0.abstention == 0.0);

  const ClassScore& c1 = site.per_class[1];
  CHECK(c1.truth_count == 1);
  CHECK(c1.retained == 0);
  CHECK(c1.predicted == 1);        // report 1's wrong answer
  CHECK(c1.ppv == 0.0);
  CHECK(std::isnan(c1.recall));    // nothing retained to recall
  CHECK(c1.abstention == 1.0);

  const ClassScore& c2 = site.per_class[2];
  CHECK(c2.truth_count == 2);
  CHECK(c2.retained == 1);
  CHECK(c2.correct == 1);
  CHECK(c2.ppv == 1.0);
  CHECK(c2.recall == 1.0);
  CHECK(c2.abstention == 0.5);

  const TaskScore& grade = rep.tasks[1];
  CHECK(grade.retained == 5);
  CHECK(grade.abstained == 1);
  CHECK(grade.correct == 3);
  CHECK(grade.retained_accuracy == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(grade.per_class[0].ppv == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(grade.per_class[1].ppv == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(grade.per_class[1].recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(grade.per_class[1].abstention == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  CHECK(rep.joint_retained == 3);   // reports 0, 3, 5
  CHECK(rep.joint_correct == 2);    // report 5 misses grade
  CHECK(rep.joint_retained_accuracy == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(rep.joint_retained_fraction == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.micro_retained_accuracy() == doctest::Approx(6.0 / 9.0).epsilon(1e-12));
  CHECK(rep.micro_abstention() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("score validates alignment") {
  const Fixture f;
  std::vector<PredictionRecord> fewer(f.predictions.begin(), f.predictions.end() - 1);
  CHECK_THROWS_WITH_AS(score(fewer, f.truths, two_schemas()),
                       "prediction/truth lists differ in length", std::invalid_argument);

  std::vector<PredictionRecord> wrong_id = f.predictions;
  wrong_id[0].report_id = 99;  // fixture order is reversed, so this renames id 5
  CHECK_THROWS_WITH_AS(score(wrong_id, f.truths, two_schemas()),
                       "no prediction for report 5", std::invalid_argument);
}

TEST_CASE("confusion_topk pools rare classes and isolates abstention") {
  const Fixture f;
  const auto schemas = two_schemas();

  SUBCASE("k below the class count pools the remainder") {
    const ConfusionMatrix m = confusion_topk(f.predictions, f.truths, 0, schemas[0], 2);
    CHECK(m.row_labels == std::vector<std::string>{"c0", "c2", "other"});
    CHECK(m.col_labels == std::vector<std::string>{"c0", "c2", "other", "abstain"});
    CHECK(m.counts(0, 0) == 2.0);  // reports 0 and 5
    CHECK(m.counts(0, 2) == 1.0);  // report 1 predicted the pooled c1
    CHECK(m.counts(1, 1) == 1.0);  // report 3
    CHECK(m.counts(1, 3) == 1.0);  // report 4 abstained
    CHECK(m.counts(2, 3) == 1.0);  // report 2 (truth c1) abstained
    CHECK(m.total() == 6);
    CHECK(m.ppv[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.ppv[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::isnan(m.ppv[2]));  // pooled column has no PPV
    CHECK(std::isnan(m.ppv[3]));  // neither does abstain
    CHECK(m.recall[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.recall[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::isnan(m.recall[2]));
  }

  SUBCASE("k above the class count keeps every class and adds no pool") {
    const ConfusionMatrix m = confusion_topk(f.predictions, f.truths, 0, schemas[0], 5);
    CHECK(m.row_labels == std::vector<std::string>{"c0", "c1", "c2"});
    CHECK(m.col_labels == std::vector<std::string>{"c0", "c1", "c2", "abstain"});
    CHECK(m.total() == 6);
    CHECK(m.counts(1, 3) == 1.0);
  }

  SUBCASE("prevalence ties go to the lower class index") {
    // Grade classes are 3-3; k=1 must keep g0.
    const ConfusionMatrix m = confusion_topk(f.predictions, f.truths, 1, schemas[1], 1);
    CHECK(m.row_labels == std::vector<std::string>{"g0", "other"});
    CHECK(m.counts(0, 0) == 2.0);
    CHECK(m.ppv[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }

  SUBCASE("a named class that is never predicted gets an NA column") {
    const std::vector<TokenizedReport> truths{truth_of(0, 0, 0)};
    const std::vector<PredictionRecord> preds{pred_of(0, 3, 0, 1)};  // site abstains
    const ConfusionMatrix m = confusion_topk(preds, truths, 0, schemas[0], 1);
    CHECK(std::isnan(m.ppv[0]));
    CHECK(m.recall[0] == 0.0);  // truth row exists, diagonal empty
    CHECK(m.counts(0, m.col_labels.size() - 1) == 1.0);
  }

  CHECK_THROWS_AS(confusion_topk(f.predictions, f.truths, 0, schemas[0], 0),
                  std::invalid_argument);
}

TEST_CASE("second_choice_matrix consumes only abstained outputs") {
  const Fixture f;
  const auto schemas = two_schemas();

  // Keep the two site abstainers (reports 2 and 4) with their truths.
  std::vector<TokenizedReport> ab_truths;
  std::vector<PredictionRecord> ab_preds;
  for (const auto& t : f.truths) {
    if (t.report_id == 2 || t.report_id == 4) ab_truths.push_back(t);
  }
  for (const auto& p : f.predictions) {
    if (p.report_id == 2 || p.report_id == 4) ab_preds.push_back(p);
  }

  const ConfusionMatrix m = second_choice_matrix(ab_preds, ab_truths, 0, schemas[0]);
  CHECK(m.row_labels == std::vector<std::string>{"c0", "c1", "c2"});
  CHECK(m.col_labels == std::vector<std::string>{"c0", "c1", "c2"});
  CHECK(m.counts(1, 1) == 1.0);  // report 2: truth c1, second choice c1
  CHECK(m.counts(2, 0) == 1.0);  // report 4: truth c2, second choice c0
  CHECK(m.total() == 2);
  CHECK(m.ppv[0] == 0.0);
  CHECK(m.ppv[1] == 1.0);
  CHECK(std::isnan(m.ppv[2]));
  CHECK(std::isnan(m.recall[0]));
  CHECK(m.recall[1] == 1.0);
  CHECK(m.recall[2] == 0.0);

  CHECK_THROWS_WITH_AS(second_choice_matrix(f.predictions, f.truths, 0, schemas[0]),
                       "second_choice_matrix: report 0 did not abstain", std::invalid_argument);

  const ConfusionMatrix empty = second_choice_matrix({}, {}, 0, schemas[0]);
  CHECK(empty.total() == 0);
  CHECK(empty.row_labels.size() == 3);
  for (double v : empty.ppv) CHECK(std::isnan(v));
  for (double v : empty.recall) CHECK(std::isnan(v));
}

TEST_CASE("default sweep targets are eight evenly spaced accuracies") {
  const std::vector<double> targets = default_sweep_targets();
  REQUIRE(targets.size() == 8);
  CHECK(targets.front() == doctest::Approx(0.80).epsilon(1e-12));
  CHECK(targets.back() == doctest::Approx(0.97).epsilon(1e-12));
  for (std::size_t i = 1; i < targets.size(); ++i) {
    CHECK(targets[i] - targets[i - 1] ==
          doctest::Approx((0.97 - 0.80) / 7.0).epsilon(1e-9));
  }
}

TEST_CASE("tradeoff_sweep trains one point per target") {
  // Tiny separable corpus: class decided by which marker token appears.
  SplitResult splits;
  auto make = [](int id, int cls) {
    TokenizedReport r;
    r.report_id = id;
    r.tokens = {cls == 0 ? 1 : 2, 3, cls == 0 ? 1 : 2, cls == 0 ? 1 : 2};
    r.labels = {cls};
    return r;
  };
  for (int i = 0; i < 40; ++i) splits.train.push_back(make(i, i % 2));
  for (int i = 40; i < 52; ++i) splits.val.push_back(make(i, i % 2));
  for (int i = 52; i < 64; ++i) splits.test.push_back(make(i, i % 2));

  ModelConfig mc;
  mc.vocab_size = 5;
  mc.embed_dim = 4;
  mc.filter_sizes = {2};
  mc.n_filters = 3;
  mc.hidden_dim = 4;
  mc.tasks = {{"kind", 2}};
  mc.init_seed = 3;

  DacConfig dc;
  dc.alpha_init = {1.0};
  dc.max_epochs = 3;
  dc.batch_size = 8;
  dc.learning_rate = 0.2;
  dc.seed = 21;

  const std::vector<double> targets{0.8, 0.9};
  const auto points = tradeoff_sweep(mc, splits, dc, targets);
  REQUIRE(points.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(points[i].target == targets[i]);
    CHECK(points[i].epochs_run >= 1);
    CHECK(points[i].epochs_run <= 3);
    REQUIRE(points[i].per_task.size() == 1);
    CHECK(points[i].per_task[0].task_name == "kind");
    CHECK(points[i].abstention >= 0.0);
    CHECK(points[i].abstention <= 1.0);
    if (!std::isnan(points[i].retained_accuracy)) {
      CHECK(points[i].retained_accuracy >= 0.0);
      CHECK(points[i].retained_accuracy <= 1.0);
    }
  }

  const std::vector<double> unsorted{0.9, 0.8};
  CHECK_THROWS_AS(tradeoff_sweep(mc, splits, dc, unsorted), std::invalid_argument);
  CHECK_THROWS_AS(tradeoff_sweep(mc, splits, dc, std::vector<double>{}), std::invalid_argument);
  SplitResult no_test = splits;
  no_test.test.clear();
  CHECK_THROWS_AS(tradeoff_sweep(mc, no_test, dc, targets), std::invalid_argument);
}
