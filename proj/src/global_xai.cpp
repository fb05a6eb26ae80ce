#include "dacxai/global_xai.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include "dacxai/linalg.hpp"
#include "dacxai/rng.hpp"

namespace dacxai {

void CohortSpec::validate(std::size_t n_tasks) const {
  if (task >= n_tasks) throw std::invalid_argument("CohortSpec: task index out of range");
  if (gate_task && *gate_task >= n_tasks) {
    throw std::invalid_argument("CohortSpec: gate task index out of range");
  }
  if (class_subset.empty()) throw std::invalid_argument("CohortSpec: class subset is empty");
  if (cap < 1) throw std::invalid_argument("CohortSpec: cap must be >= 1");
}

AleMatrix build_cohort(const std::vector<TokenizedReport>& reports,
                       const std::vector<PredictionRecord>& predictions,
                       const std::vector<AttributionRecord>& attributions,
                       const CohortSpec& spec) {
  if (reports.empty()) throw std::invalid_argument("build_cohort: no reports");
  spec.validate(reports.front().labels.size());

  std::map<int, const PredictionRecord*> pred_of;
  for (const auto& p : predictions) pred_of[p.report_id] = &p;
  std::map<int, const AttributionRecord*> attr_of;
  for (const auto& a : attributions) attr_of[a.attr.report_id] = &a;
  const std::set<int> subset(spec.class_subset.begin(), spec.class_subset.end());
  const TargetKind want_kind =
      spec.abstained ? TargetKind::second_choice : TargetKind::top_prediction;

  std::size_t n_predicted = 0, n_abstain_pass = 0, n_gate_pass = 0, n_class_pass = 0;
  std::map<std::pair<int, int>, std::vector<AleRowMeta>> cells;
  for (const auto& report : reports) {
    auto pit = pred_of.find(report.report_id);
    if (pit == pred_of.end()) continue;
    ++n_predicted;
    const PredictionRecord& pred = *pit->second;
    if (pred.tasks.size() != report.labels.size()) {
      throw std::invalid_argument("build_cohort: prediction/label task count mismatch for report " +
                                  std::to_string(report.report_id));
    }
    const TaskOutput& out = pred.tasks[spec.task];
    if (out.abstained() != spec.abstained) continue;
    ++n_abstain_pass;
    if (spec.gate_task) {
      const TaskOutput& gate = pred.tasks[*spec.gate_task];
      if (gate.abstained() || gate.predicted != report.labels[*spec.gate_task]) continue;
    }
    ++n_gate_pass;
    const int truth = report.labels[spec.task];
    if (!subset.count(truth)) continue;
    ++n_class_pass;

    AleRowMeta meta;
    meta.report_id = report.report_id;
    meta.truth = truth;
    meta.prediction = spec.abstained ? *out.second_choice : out.predicted;
    meta.provenance = report.provenance;

    auto ait = attr_of.find(report.report_id);
    if (ait == attr_of.end()) {
      throw std::invalid_argument("build_cohort: missing attribution for report " +
                                  std::to_string(report.report_id));
    }
    if (ait->second->attr.target_kind != want_kind) {
      throw std::invalid_argument("build_cohort: report " + std::to_string(report.report_id) +
                                  " attribution used target kind '" +
                                  target_kind_name(ait->second->attr.target_kind) +
                                  "' but the cohort requires '" + target_kind_name(want_kind) + "'");
    }
    meta.target_kind = ait->second->attr.target_kind;
    cells[{meta.truth, meta.prediction}].push_back(meta);
  }

  if (n_class_pass == 0) {
    std::string which = "prediction coverage";
    if (n_predicted > 0) which = spec.abstained ? "abstained filter" : "non-abstained filter";
    if (n_abstain_pass > 0) which = "gating-task correctness filter";
    if (n_gate_pass > 0) which = "class-subset filter";
    throw std::invalid_argument("build_cohort: empty cohort; the " + which +
                                " removed every report");
  }

  // Deterministic per-cell cap, cells visited in sorted key order.
  std::mt19937_64 rng(spec.seed ^ 0xc0ffee1234abcdefULL);
  std::vector<AleRowMeta> retained;
  for (auto& [key, members] : cells) {
    if (static_cast<int>(members.size()) > spec.cap) {
      shuffle_inplace(members, rng);
      members.resize(static_cast<std::size_t>(spec.cap));
    }
    retained.insert(retained.end(), members.begin(), members.end());
  }
  std::sort(retained.begin(), retained.end(),
            [](const AleRowMeta& a, const AleRowMeta& b) { return a.report_id < b.report_id; });

  std::set<std::string> word_set;
  for (const auto& meta : retained) {
    for (const auto& [word, w] : attr_of.at(meta.report_id)->words.weights) {
      (void)w;
      word_set.insert(word);
    }
  }

  AleMatrix m;
  m.rows = std::move(retained);
  m.words.assign(word_set.begin(), word_set.end());
  std::map<std::string, std::size_t> col_of;
  for (std::size_t j = 0; j < m.words.size(); ++j) col_of[m.words[j]] = j;
  m.values = NumArray::zeros({m.rows.size(), m.words.size()});
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    for (const auto& [word, w] : attr_of.at(m.rows[i].report_id)->words.weights) {
      m.values(i, col_of[word]) = w;
    }
  }
  return m;
}

AleMatrix truncate(const AleMatrix& m, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("truncate: threshold must be >= 0");
  const std::size_t n = m.rows.size();
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < m.words.size(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::abs(m.values(i, j));
    if (sum > threshold) kept.push_back(j);
  }
  if (kept.empty()) {
    throw std::invalid_argument(
        "truncate: threshold removed every column; try a smaller threshold");
  }
  AleMatrix out;
  out.rows = m.rows;
  out.words.reserve(kept.size());
  for (std::size_t j : kept) out.words.push_back(m.words[j]);
  out.values = NumArray::zeros({n, kept.size()});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t jj = 0; jj < kept.size(); ++jj) out.values(i, jj) = m.values(i, kept[jj]);
  }
  return out;
}

double threshold_for_top_columns(const AleMatrix& m, std::size_t keep_columns) {
  if (keep_columns == 0) throw std::invalid_argument("threshold_for_top_columns: need >= 1");
  if (m.words.size() <= keep_columns) return 0.0;
  std::vector<double> sums(m.words.size(), 0.0);
  for (std::size_t j = 0; j < m.words.size(); ++j) {
    for (std::size_t i = 0; i < m.rows.size(); ++i) sums[j] += std::abs(m.values(i, j));
  }
  std::sort(sums.begin(), sums.end(), std::greater<double>());
  // Keep strictly-greater-than the (keep+1)-th largest sum.
  return sums[keep_columns];
}

PcaResult pca(const NumArray& data, double variance_goal) {
  if (data.shape.size() != 2) throw std::invalid_argument("pca: data must be 2-D");
  const std::size_t n = data.shape[0];
  const std::size_t m = data.shape[1];
  if (n < 2 || m < 2) throw std::invalid_argument("pca: need at least 2 rows and 2 columns");
  if (!(variance_goal > 0.0) || variance_goal > 1.0 + 1e-12) {
    throw std::invalid_argument("pca: variance_goal must be in (0, 1]");
  }

  PcaResult res;
  res.means.assign(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) res.means[j] += data(i, j);
  for (double& x : res.means) x /= static_cast<double>(n);

  NumArray centered = NumArray::zeros({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) centered(i, j) = data(i, j) - res.means[j];

  NumArray cov = NumArray::zeros({m, m});
  const double inv = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < m; ++a) {
      const double xa = centered(i, a);
      if (xa == 0.0) continue;
      for (std::size_t b = a; b < m; ++b) cov(a, b) += xa * centered(i, b);
    }
  }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      cov(a, b) *= inv;
      cov(b, a) = cov(a, b);
    }

  double trace = 0.0;
  for (std::size_t a = 0; a < m; ++a) trace += cov(a, a);
  if (trace <= 1e-300) throw std::invalid_argument("pca: rank-0 matrix (no column variance)");

  EigenResult eig = symmetric_eigen(cov);
  res.eigenvalues = std::move(eig.values);
  res.eigenvectors = std::move(eig.vectors);

  // Deterministic sign: largest-magnitude entry of each eigenvector positive.
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (std::abs(res.eigenvectors(i, j)) > std::abs(res.eigenvectors(arg, j))) arg = i;
    }
    if (res.eigenvectors(arg, j) < 0.0) {
      for (std::size_t i = 0; i < m; ++i) res.eigenvectors(i, j) = -res.eigenvectors(i, j);
    }
  }

  res.explained.resize(m);
  for (std::size_t j = 0; j < m; ++j) res.explained[j] = std::max(res.eigenvalues[j], 0.0) / trace;

  std::size_t retained = 0;
  double cum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    cum += res.explained[j];
    retained = j + 1;
    if (cum >= variance_goal - 1e-12) break;
  }
  res.retained_count = std::max<std::size_t>(2, retained);
  res.retained_count = std::min(res.retained_count, m);

  res.projections = NumArray::zeros({n, res.retained_count});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < res.retained_count; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < m; ++a) acc += centered(i, a) * res.eigenvectors(a, j);
      res.projections(i, j) = acc;
    }
  }
  return res;
}

PcaResult pca(const AleMatrix& m, double variance_goal) { return pca(m.values, variance_goal); }

std::vector<KeywordAnnotation> keyword_annotations(const PcaResult& p,
                                                   std::span<const std::string> words,
                                                   std::size_t top_n) {
  const std::size_t m = p.eigenvectors.shape.at(1);
  if (words.size() != m) {
    throw std::invalid_argument("keyword_annotations: word list does not match column count");
  }
  if (top_n > m) {
    throw std::invalid_argument("keyword_annotations: top_n exceeds column count");
  }
  std::vector<std::size_t> order(m);
  for (std::size_t j = 0; j < m; ++j) order[j] = j;
  auto load = [&](std::size_t j) {
    const double v1 = std::abs(p.eigenvectors(j, 0));
    const double v2 = m >= 2 ? std::abs(p.eigenvectors(j, 1)) : 0.0;
    return std::max(v1, v2);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return load(a) > load(b); });

  std::vector<KeywordAnnotation> out;
  out.reserve(top_n);
  for (std::size_t r = 0; r < top_n; ++r) {
    const std::size_t j = order[r];
    out.push_back({words[j], p.eigenvectors(j, 0), m >= 2 ? p.eigenvectors(j, 1) : 0.0});
  }
  return out;
}

KdeGrid kde2d(const NumArray& points, std::size_t resolution, double bandwidth, int threads) {
  if (points.shape.size() != 2 || points.shape[1] < 2) {
    throw std::invalid_argument("kde2d: points must be [n, >=2]");
  }
  const std::size_t n = points.shape[0];
  if (n < 2) throw std::invalid_argument("kde2d: need at least 2 points");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde2d: bandwidth must be > 0");
  if (resolution < 2) throw std::invalid_argument("kde2d: resolution must be >= 2");
  if (threads < 1) throw std::invalid_argument("kde2d: threads must be >= 1");

  double xmin = points(0, 0), xmax = xmin, ymin = points(0, 1), ymax = ymin;
  for (std::size_t i = 1; i < n; ++i) {
    xmin = std::min(xmin, points(i, 0));
    xmax = std::max(xmax, points(i, 0));
    ymin = std::min(ymin, points(i, 1));
    ymax = std::max(ymax, points(i, 1));
  }
  auto widen = [&](double& lo, double& hi) {
    double range = hi - lo;
    if (range <= 0.0) range = std::max(4.0 * bandwidth, 1e-9);
    lo -= 0.1 * range;
    hi += 0.1 * range;
  };
  widen(xmin, xmax);
  widen(ymin, ymax);

  KdeGrid grid;
  grid.xs.resize(resolution);
  grid.ys.resize(resolution);
  for (std::size_t i = 0; i < resolution; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(resolution - 1);
    grid.xs[i] = xmin + f * (xmax - xmin);
    grid.ys[i] = ymin + f * (ymax - ymin);
  }
  grid.values = NumArray::zeros({resolution, resolution});

  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  const double norm = 1.0 / (static_cast<double>(n) * 2.0 * M_PI * bandwidth * bandwidth);
  auto fill_rows = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t iy = lo; iy < hi; ++iy) {
      for (std::size_t ix = 0; ix < resolution; ++ix) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double dx = grid.xs[ix] - points(k, 0);
          const double dy = grid.ys[iy] - points(k, 1);
          acc += std::exp(-(dx * dx + dy * dy) * inv2h2);
        }
        grid.values(iy, ix) = acc * norm;
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), resolution);
  if (workers <= 1) {
    fill_rows(0, resolution);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (resolution + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(resolution, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(fill_rows, lo, hi);
    }
    for (auto& t : pool) t.join();
  }
  return grid;
}

}  // namespace dacxai
