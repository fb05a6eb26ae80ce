#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <doctest.h>

#include "dacxai/global_xai.hpp"

using namespace dacxai;

namespace {

TokenizedReport rep(int id, std::vector<int> labels, Provenance prov = Provenance::clean) {
  TokenizedReport r;
  r.report_id = id;
  r.tokens = {1, 2};
  r.labels = std::move(labels);
  r.provenance = prov;
  return r;
}

TaskOutput out_for(int n_classes, int predicted) {
  TaskOutput o;
  o.task_name = "t";
  o.probs.assign(static_cast<std::size_t>(n_classes) + 1, 0.1);
  o.probs[static_cast<std::size_t>(predicted)] = 0.6;
  o.predicted = predicted;
  if (o.abstained()) {
    // Runner-up defaults to class 0 unless a test overrides it.
    o.second_choice = 0;
  }
  return o;
}

PredictionRecord pred(int id, TaskOutput site, TaskOutput grade) {
  PredictionRecord p;
  p.report_id = id;
  p.tasks = {std::move(site), std::move(grade)};
  return p;
}

AttributionRecord attr(int id, TargetKind kind, std::map<std::string, double> words) {
  AttributionRecord a;
  a.attr.report_id = id;
  a.attr.task_name = "site";
  a.attr.target_kind = kind;
  a.attr.weights = {0.0, 0.0};
  a.words.report_id = id;
  a.words.weights = std::move(words);
  return a;
}

// Two tasks: site (3 classes, abstain slot 3) and grade (2 classes, slot 2).
struct Fixture {
  std::vector<TokenizedReport> reports;
  std::vector<PredictionRecord> predictions;
  std::vector<AttributionRecord> attributions;

  Fixture() {
    reports = {
        rep(0, {0, 0}), rep(1, {0, 1}, Provenance::label_noise), rep(2, {1, 0}),
        rep(3, {1, 1}, Provenance::conflicting), rep(4, {2, 0}),
        rep(5, {0, 0}, Provenance::empty_evidence), rep(6, {2, 1}),
        rep(7, {1, 0}),  // never predicted
        rep(8, {0, 0}),
    };
    auto ab = [](int second) {
      TaskOutput o = out_for(3, 3);
      o.second_choice = second;
      return o;
    };
    predictions = {
        pred(0, out_for(3, 0), out_for(2, 0)),
        pred(1, out_for(3, 1), out_for(2, 1)),
        pred(2, out_for(3, 1), out_for(2, 0)),
        pred(3, ab(1), out_for(2, 1)),
        pred(4, out_for(3, 2), out_for(2, 1)),  // grade wrong
        pred(5, ab(2), out_for(2, 0)),
        pred(6, out_for(3, 2), out_for(2, 2)),  // grade abstains
        pred(8, out_for(3, 0), out_for(2, 0)),
    };
    attributions = {
        attr(0, TargetKind::top_prediction, {{"aa", 1.0}, {"bb", -2.0}}),
        attr(1, TargetKind::top_prediction, {{"bb", 0.5}, {"cc", 3.0}}),
        attr(2, TargetKind::top_prediction, {{"aa", -1.0}}),
        attr(3, TargetKind::second_choice, {{"aa", 0.1}}),
        attr(4, TargetKind::top_prediction, {{"dd", 0.25}}),
        attr(5, TargetKind::second_choice, {{"bb", 0.2}}),
        attr(6, TargetKind::top_prediction, {{"cc", -0.5}, {"dd", 1.0}}),
        attr(8, TargetKind::top_prediction, {{"aa", 2.0}}),
    };
  }

  CohortSpec base_spec() const {
    CohortSpec s;
    s.task = 0;
    s.class_subset = {0, 1, 2};
    return s;
  }
};

AleMatrix tiny_matrix() {
  AleMatrix m;
  m.rows = {AleRowMeta{1, 0, 0, Provenance::clean, TargetKind::top_prediction},
            AleRowMeta{2, 1, 1, Provenance::clean, TargetKind::top_prediction}};
  m.words = {"a", "b", "c", "d"};
  m.values = NumArray::zeros({2, 4});
  // Absolute column sums: a=2, b=0.9, c=0, d=3.
  m.values(0, 0) = 1.0;  m.values(1, 0) = -1.0;
  m.values(0, 1) = 0.5;  m.values(1, 1) = 0.4;
  m.values(0, 3) = -3.0;
  return m;
}

NumArray oracle_data() {
  const double raw[8][4] = {
      {2, 0.5, -1, 3},    {1.5, -0.25, 0.75, 2}, {-0.5, 1, 2, -1},  {0, 2.5, -0.5, 0.5},
      {3, -1, 1.25, 4},   {-2, 0.75, 3, -2.5},   {1, 1.5, -2, 1},   {-1, -0.5, 0.25, -0.75}};
  NumArray x = NumArray::zeros({8, 4});
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 4; ++j) x(i, j) = raw[i][j];
  return x;
}

}  // namespace

TEST_CASE("build_cohort selects, sorts, and lays out the retained cohort") {
  const Fixture f;
  const AleMatrix m = build_cohort(f.reports, f.predictions, f.attributions, f.base_spec());

  // Non-abstained site predictions with coverage: 0, 1, 2, 4, 6, 8.
  REQUIRE(m.rows.size() == 6);
  const int want_ids[6] = {0, 1, 2, 4, 6, 8};
  const int want_truth[6] = {0, 0, 1, 2, 2, 0};
  const int want_pred[6] = {0, 1, 1, 2, 2, 0};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(m.rows[i].report_id == want_ids[i]);
    CHECK(m.rows[i].truth == want_truth[i]);
    CHECK(m.rows[i].prediction == want_pred[i]);
    CHECK(m.rows[i].target_kind == TargetKind::top_prediction);
  }
  CHECK(m.rows[1].provenance == Provenance::label_noise);

  REQUIRE(m.words == std::vector<std::string>{"aa", "bb", "cc", "dd"});
  REQUIRE(m.values.rows() == 6);
  REQUIRE(m.values.cols() == 4);
  CHECK(m.values(0, 0) == 1.0);   // report 0, aa
  CHECK(m.values(0, 1) == -2.0);  // report 0, bb
  CHECK(m.values(0, 2) == 0.0);   // absent word is zero-filled
  CHECK(m.values(1, 1) == 0.5);
  CHECK(m.values(1, 2) == 3.0);
  CHECK(m.values(4, 3) == 1.0);   // report 6, dd
  CHECK(m.values(5, 0) == 2.0);   // report 8, aa
}

TEST_CASE("build_cohort gate and class-subset filters") {
  const Fixture f;

  CohortSpec gated = f.base_spec();
  gated.gate_task = 1;  // grade must be right and not abstain
  const AleMatrix g = build_cohort(f.reports, f.predictions, f.attributions, gated);
  REQUIRE(g.rows.size() == 4);  // 4 fails the gate truth, 6 abstains on grade
  const int want_ids[4] = {0, 1, 2, 8};
  for (std::size_t i = 0; i < 4; ++i) CHECK(g.rows[i].report_id == want_ids[i]);

  CohortSpec subset = f.base_spec();
  subset.class_subset = {0};
  const AleMatrix s = build_cohort(f.reports, f.predictions, f.attributions, subset);
  REQUIRE(s.rows.size() == 3);
  for (const auto& row : s.rows) CHECK(row.truth == 0);
}

TEST_CASE("build_cohort abstained cohort uses second choices") {
  const Fixture f;
  CohortSpec spec = f.base_spec();
  spec.abstained = true;
  const AleMatrix m = build_cohort(f.reports, f.predictions, f.attributions, spec);
  REQUIRE(m.rows.size() == 2);
  CHECK(m.rows[0].report_id == 3);
  CHECK(m.rows[0].prediction == 1);  // second choice, not the abstain slot
  CHECK(m.rows[1].report_id == 5);
  CHECK(m.rows[1].prediction == 2);
  for (const auto& row : m.rows) CHECK(row.target_kind == TargetKind::second_choice);
}

TEST_CASE("build_cohort caps cells deterministically") {
  const Fixture f;
  CohortSpec spec = f.base_spec();
  spec.cap = 1;
  spec.seed = 3;
  const AleMatrix a = build_cohort(f.reports, f.predictions, f.attributions, spec);
  const AleMatrix b = build_cohort(f.reports, f.predictions, f.attributions, spec);
  // Cells (0,0)={0,8}, (0,1)={1}, (1,1)={2}, (2,2)={4,6} -> one row each.
  REQUIRE(a.rows.size() == 4);
  REQUIRE(b.rows.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.rows[i].report_id == b.rows[i].report_id);
}

TEST_CASE("build_cohort names the filter that emptied the cohort") {
  const Fixture f;
  const CohortSpec spec = f.base_spec();

  CHECK_THROWS_WITH_AS(build_cohort({}, f.predictions, f.attributions, spec),
                       "build_cohort: no reports", std::invalid_argument);
  CHECK_THROWS_WITH_AS(build_cohort(f.reports, {}, f.attributions, spec),
                       "build_cohort: empty cohort; the prediction coverage removed every report",
                       std::invalid_argument);

  // Only abstained predictions available, but a retained cohort requested.
  std::vector<TokenizedReport> only3{f.reports[3]};
  std::vector<PredictionRecord> only3p{f.predictions[3]};
  CHECK_THROWS_WITH_AS(build_cohort(only3, only3p, f.attributions, spec),
                       "build_cohort: empty cohort; the non-abstained filter removed every report",
                       std::invalid_argument);

  CohortSpec abstained = spec;
  abstained.abstained = true;
  std::vector<TokenizedReport> only0{f.reports[0]};
  std::vector<PredictionRecord> only0p{f.predictions[0]};
  CHECK_THROWS_WITH_AS(build_cohort(only0, only0p, f.attributions, abstained),
                       "build_cohort: empty cohort; the abstained filter removed every report",
                       std::invalid_argument);

  // Report 4 survives abstention but its grade prediction is wrong.
  CohortSpec gated = spec;
  gated.gate_task = 1;
  std::vector<TokenizedReport> only4{f.reports[4]};
  std::vector<PredictionRecord> only4p{f.predictions[4]};
  CHECK_THROWS_WITH_AS(
      build_cohort(only4, only4p, f.attributions, gated),
      "build_cohort: empty cohort; the gating-task correctness filter removed every report",
      std::invalid_argument);

  // No abstained report carries truth class 2.
  CohortSpec missing_class = spec;
  missing_class.abstained = true;
  missing_class.class_subset = {1};
  std::vector<TokenizedReport> only5{f.reports[5]};
  std::vector<PredictionRecord> only5p{f.predictions[5]};
  CHECK_THROWS_WITH_AS(
      build_cohort(only5, only5p, f.attributions, missing_class),
      "build_cohort: empty cohort; the class-subset filter removed every report",
      std::invalid_argument);
}

TEST_CASE("build_cohort audits attribution coverage and target kinds") {
  const Fixture f;
  std::vector<AttributionRecord> missing = f.attributions;
  missing.pop_back();  // drop report 8
  CHECK_THROWS_WITH_AS(build_cohort(f.reports, f.predictions, missing, f.base_spec()),
                       "build_cohort: missing attribution for report 8", std::invalid_argument);

  std::vector<AttributionRecord> wrong_kind = f.attributions;
  wrong_kind[0].attr.target_kind = TargetKind::second_choice;
  CHECK_THROWS_WITH_AS(build_cohort(f.reports, f.predictions, wrong_kind, f.base_spec()),
                       "build_cohort: report 0 attribution used target kind 'second_choice' but "
                       "the cohort requires 'top_prediction'",
                       std::invalid_argument);
}

TEST_CASE("cohort spec validation") {
  CohortSpec s;
  s.class_subset = {0};
  s.task = 2;
  CHECK_THROWS_AS(s.validate(2), std::invalid_argument);
  s.task = 0;
  s.gate_task = 5;
  CHECK_THROWS_AS(s.validate(2), std::invalid_argument);
  s.gate_task.reset();
  s.class_subset = {};
  CHECK_THROWS_AS(s.validate(2), std::invalid_argument);
  s.class_subset = {0};
  s.cap = 0;
  CHECK_THROWS_AS(s.validate(2), std::invalid_argument);
  s.cap = 1;
  CHECK_NOTHROW(s.validate(2));
}

TEST_CASE("truncate keeps columns whose absolute sum strictly exceeds the threshold") {
  const AleMatrix m = tiny_matrix();

  const AleMatrix t = truncate(m, 0.9);  // b sits exactly on the boundary: dropped
  CHECK(t.words == std::vector<std::string>{"a", "d"});
  REQUIRE(t.values.cols() == 2);
  CHECK(t.values(0, 0) == 1.0);
  CHECK(t.values(1, 0) == -1.0);
  CHECK(t.values(0, 1) == -3.0);
  CHECK(t.rows.size() == m.rows.size());

  const AleMatrix z = truncate(m, 0.0);  // all-zero column still fails the strict test
  CHECK(z.words == std::vector<std::string>{"a", "b", "d"});

  const AleMatrix again = truncate(z, 0.0);  // idempotent once zeros are gone
  CHECK(again.words == z.words);

  CHECK_THROWS_AS(truncate(m, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(truncate(m, -0.5), std::invalid_argument);
}

TEST_CASE("threshold_for_top_columns pairs with truncate") {
  const AleMatrix m = tiny_matrix();  // sums: a=2, b=0.9, c=0, d=3
  CHECK(threshold_for_top_columns(m, 2) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(truncate(m, threshold_for_top_columns(m, 2)).words ==
        std::vector<std::string>{"a", "d"});
  CHECK(threshold_for_top_columns(m, 3) == 0.0);
  CHECK(threshold_for_top_columns(m, 4) == 0.0);   // nothing to cut
  CHECK(threshold_for_top_columns(m, 99) == 0.0);
  CHECK_THROWS_AS(threshold_for_top_columns(m, 0), std::invalid_argument);
}

TEST_CASE("pca matches an independently computed oracle") {
  const NumArray x = oracle_data();
  const PcaResult p = pca(x, 1.0);

  const double means[4] = {0.5, 0.5625, 0.46875, 0.78125};
  const double eig[4] = {8.312388831907038, 2.5727942838971036, 0.5685981564596165,
                         0.039522299164811994};
  const double expl[4] = {0.7232375600493987, 0.22385159044200867, 0.049472125479492764,
                          0.003438724029099976};
  const double v0[4] = {0.5685355373826769, -0.12170096153867149, -0.32098018028567094,
                        0.7476148356990595};
  const double v1[4] = {0.13299744125251792, -0.5550557658256805, 0.8064024954170907,
                        0.15472489401850967};
  const double v2[4] = {0.22724666055640746, 0.8209627622411699, 0.4943882327180068,
                        0.17308776279470128};
  const double v3[4] = {0.7793830756561464, -0.055875896391717195, -0.04761317673536293,
                        -0.6222321841437921};
  const double proj0[4] = {2.9906196726720498, -0.6069206592974017, -0.052534424909290875,
                           -0.1380789482302724};
  const double proj5[4] = {-4.7097500347308365, 1.0969486988026662, 0.2692898589265419,
                           -0.03775591910338266};

  REQUIRE(p.eigenvalues.size() == 4);
  REQUIRE(p.retained_count == 4);
  REQUIRE(p.projections.rows() == 8);
  REQUIRE(p.projections.cols() == 4);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(p.means[j] == doctest::Approx(means[j]).epsilon(1e-12));
    CHECK(p.eigenvalues[j] == doctest::Approx(eig[j]).epsilon(1e-8));
    CHECK(p.explained[j] == doctest::Approx(expl[j]).epsilon(1e-8));
    CHECK(p.eigenvectors(j, 0) == doctest::Approx(v0[j]).epsilon(1e-8));
    CHECK(p.eigenvectors(j, 1) == doctest::Approx(v1[j]).epsilon(1e-8));
    CHECK(p.eigenvectors(j, 2) == doctest::Approx(v2[j]).epsilon(1e-8));
    CHECK(p.eigenvectors(j, 3) == doctest::Approx(v3[j]).epsilon(1e-8));
    CHECK(p.projections(0, j) == doctest::Approx(proj0[j]).epsilon(1e-8));
    CHECK(p.projections(5, j) == doctest::Approx(proj5[j]).epsilon(1e-8));
  }
}

TEST_CASE("pca structural properties") {
  const NumArray x = oracle_data();
  const PcaResult p = pca(x, 1.0);

  // Orthonormal eigenvector columns.
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      double dot = 0.0;
      for (std::size_t j = 0; j < 4; ++j) dot += p.eigenvectors(j, a) * p.eigenvectors(j, b);
      CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-10));
    }
  }

  // Projection column variance reproduces the eigenvalue.
  for (std::size_t k = 0; k < 4; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 8; ++i) mean += p.projections(i, k);
    mean /= 8.0;
    double var = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      const double d = p.projections(i, k) - mean;
      var += d * d;
    }
    var /= 7.0;
    CHECK(var == doctest::Approx(p.eigenvalues[k]).epsilon(1e-9));
  }

  double total = 0.0;
  for (double e : p.explained) total += e;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // Variance goals: the retained count grows with the goal but never drops
  // below two components.
  CHECK(pca(x, 0.5).retained_count == 2);
  CHECK(pca(x, 0.9).retained_count == 2);
  CHECK(pca(x, 0.95).retained_count == 3);
  CHECK(pca(x, 0.999).retained_count == 4);

  // Permuting rows permutes projections and nothing else.
  NumArray shuffled = NumArray::zeros({8, 4});
  const std::size_t perm[8] = {5, 2, 7, 0, 3, 6, 1, 4};
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 4; ++j) shuffled(i, j) = x(perm[i], j);
  const PcaResult q = pca(shuffled, 1.0);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(q.eigenvalues[k] == doctest::Approx(p.eigenvalues[k]).epsilon(1e-10));
  }
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(q.projections(i, k) == doctest::Approx(p.projections(perm[i], k)).epsilon(1e-9));
    }
  }

  // AleMatrix overload delegates to the raw-data version.
  AleMatrix m;
  m.rows.resize(8);
  m.words = {"a", "b", "c", "d"};
  m.values = x;
  const PcaResult r = pca(m, 0.9);
  CHECK(r.eigenvalues[0] == doctest::Approx(p.eigenvalues[0]).epsilon(1e-12));
  CHECK(r.retained_count == 2);
}

TEST_CASE("pca input validation") {
  const NumArray x = oracle_data();
  CHECK_THROWS_AS(pca(x, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pca(x, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(pca(NumArray::zeros({4}), 0.9), std::invalid_argument);
  CHECK_THROWS_AS(pca(NumArray::zeros({1, 4}), 0.9), std::invalid_argument);
  CHECK_THROWS_AS(pca(NumArray::zeros({4, 1}), 0.9), std::invalid_argument);

  // Constant columns carry no variance at all.
  NumArray flat = NumArray::zeros({5, 3});
  flat.fill(2.5);
  CHECK_THROWS_AS(pca(flat, 0.9), std::invalid_argument);
}

TEST_CASE("keyword_annotations ranks by first-two-component loading") {
  const PcaResult p = pca(oracle_data(), 1.0);
  const std::vector<std::string> words = {"w0", "w1", "w2", "w3"};

  const auto top2 = keyword_annotations(p, words, 2);
  REQUIRE(top2.size() == 2);
  CHECK(top2[0].word == "w2");  // |pc2 loading| 0.806 dominates
  CHECK(top2[0].pc1 == doctest::Approx(-0.32098018028567094).epsilon(1e-8));
  CHECK(top2[0].pc2 == doctest::Approx(0.8064024954170907).epsilon(1e-8));
  CHECK(top2[1].word == "w3");  // |pc1 loading| 0.748

  const auto all = keyword_annotations(p, words, 4);
  REQUIRE(all.size() == 4);
  CHECK(all[2].word == "w0");
  CHECK(all[3].word == "w1");

  CHECK(keyword_annotations(p, words, 0).empty());
  const std::vector<std::string> short_words = {"a", "b"};
  CHECK_THROWS_AS(keyword_annotations(p, short_words, 2), std::invalid_argument);
  CHECK_THROWS_AS(keyword_annotations(p, words, 5), std::invalid_argument);
}

TEST_CASE("kde2d integrates to one and peaks at the mass") {
  // Spread points keep the 10% margins far beyond the bandwidth, so virtually
  // all density mass stays inside the evaluation box.
  NumArray pts = NumArray::zeros({8, 2});
  const double raw[8][2] = {{0, 0},   {10, 10}, {2, 2},   {2, 2},
                            {2, 2},   {2, 2},   {8, 3},   {5, 7}};
  for (std::size_t i = 0; i < 8; ++i) {
    pts(i, 0) = raw[i][0];
    pts(i, 1) = raw[i][1];
  }
  const double bw = 0.25;
  const std::size_t res = 241;
  const KdeGrid grid = kde2d(pts, res, bw);
  REQUIRE(grid.xs.size() == res);
  REQUIRE(grid.ys.size() == res);
  REQUIRE(grid.values.rows() == res);
  REQUIRE(grid.values.cols() == res);

  // Bounding box [0,10] widened by 10% per side.
  CHECK(grid.xs.front() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(grid.xs.back() == doctest::Approx(11.0).epsilon(1e-12));

  // Trapezoid quadrature of the density over the grid.
  const double hx = grid.xs[1] - grid.xs[0];
  const double hy = grid.ys[1] - grid.ys[0];
  double integral = 0.0;
  for (std::size_t iy = 0; iy < res; ++iy) {
    for (std::size_t ix = 0; ix < res; ++ix) {
      double w = 1.0;
      if (ix == 0 || ix == res - 1) w *= 0.5;
      if (iy == 0 || iy == res - 1) w *= 0.5;
      integral += w * grid.values(iy, ix);
    }
  }
  integral *= hx * hy;
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));

  // The densest node sits next to the four stacked points at (2, 2).
  std::size_t bx = 0, by = 0;
  for (std::size_t iy = 0; iy < res; ++iy) {
    for (std::size_t ix = 0; ix < res; ++ix) {
      if (grid.values(iy, ix) > grid.values(by, bx)) {
        by = iy;
        bx = ix;
      }
    }
  }
  CHECK(std::abs(grid.xs[bx] - 2.0) < hx + 1e-9);
  CHECK(std::abs(grid.ys[by] - 2.0) < hy + 1e-9);
}

TEST_CASE("kde2d threading does not change the values") {
  NumArray pts = NumArray::zeros({6, 2});
  for (std::size_t i = 0; i < 6; ++i) {
    pts(i, 0) = static_cast<double>(i) * 0.7 - 1.0;
    pts(i, 1) = static_cast<double>(i % 3) * 1.3;
  }
  const KdeGrid a = kde2d(pts, 33, 0.4, 1);
  const KdeGrid b = kde2d(pts, 33, 0.4, 4);
  CHECK(a.xs == b.xs);
  CHECK(a.ys == b.ys);
  CHECK(a.values.data == b.values.data);
}

TEST_CASE("kde2d handles degenerate ranges and validates inputs") {
  NumArray line = NumArray::zeros({3, 2});
  line(0, 1) = 0.0;
  line(1, 1) = 2.0;
  line(2, 1) = 4.0;
  for (std::size_t i = 0; i < 3; ++i) line(i, 0) = 3.0;  // zero x-range
  const KdeGrid g = kde2d(line, 16, 0.5);
  CHECK(g.xs.front() < g.xs.back());
  CHECK(g.xs.front() == doctest::Approx(3.0 - 0.2).epsilon(1e-12));  // 10% of max(4bw, eps)
  CHECK(g.xs.back() == doctest::Approx(3.0 + 0.2).epsilon(1e-12));

  NumArray one = NumArray::zeros({1, 2});
  CHECK_THROWS_AS(kde2d(one, 8, 0.5), std::invalid_argument);
  NumArray narrow = NumArray::zeros({4, 1});
  CHECK_THROWS_AS(kde2d(narrow, 8, 0.5), std::invalid_argument);
  NumArray ok = NumArray::zeros({4, 2});
  ok(1, 0) = 1.0;
  ok(2, 1) = 1.0;
  CHECK_THROWS_AS(kde2d(ok, 8, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(kde2d(ok, 1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(kde2d(ok, 8, 0.5, 0), std::invalid_argument);
}
