#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dacxai/corpus.hpp"
#include "dacxai/explain.hpp"
#include "dacxai/model.hpp"
#include "dacxai/num_array.hpp"

namespace dacxai {

struct CohortSpec {
  std::optional<std::size_t> gate_task;  // keep only reports this task got right
  std::size_t task = 0;                  // task under analysis
  std::vector<int> class_subset;         // truth classes admitted (non-empty)
  int cap = 1000;                        // per-(truth, prediction) sample cap
  bool abstained = false;                // abstained cohort (second-choice targets)
  std::uint64_t seed = 0;                // subsampling seed

  void validate(std::size_t n_tasks) const;
};

struct AleRowMeta {
  int report_id = 0;
  int truth = 0;
  int prediction = 0;  // second choice for abstained rows
  Provenance provenance = Provenance::clean;
  TargetKind target_kind = TargetKind::top_prediction;
};

struct AleMatrix {
  std::vector<AleRowMeta> rows;
  std::vector<std::string> words;  // column labels, sorted
  NumArray values;                 // [rows, words]
};

AleMatrix build_cohort(const std::vector<TokenizedReport>& reports,
                       const std::vector<PredictionRecord>& predictions,
                       const std::vector<AttributionRecord>& attributions,
                       const CohortSpec& spec);

// Keep column j iff sum_i |w_ij| > threshold.
AleMatrix truncate(const AleMatrix& m, double threshold);

// Threshold that keeps (at most) the top keep_columns columns by absolute sum.
double threshold_for_top_columns(const AleMatrix& m, std::size_t keep_columns);

struct PcaResult {
  std::vector<double> means;        // column means
  std::vector<double> eigenvalues;  // descending
  NumArray eigenvectors;            // [m, m], orthonormal columns, sign-fixed
  std::vector<double> explained;    // fractions of total variance
  NumArray projections;             // [n, retained_count]
  std::size_t retained_count = 0;
};

PcaResult pca(const NumArray& data, double variance_goal);
PcaResult pca(const AleMatrix& m, double variance_goal);

struct KeywordAnnotation {
  std::string word;
  double pc1 = 0.0;
  double pc2 = 0.0;
};

// Top-n words by max |loading| over the first two components.
std::vector<KeywordAnnotation> keyword_annotations(const PcaResult& p,
                                                   std::span<const std::string> words,
                                                   std::size_t top_n);

struct KdeGrid {
  std::vector<double> xs;  // node coordinates, nx entries
  std::vector<double> ys;  // ny entries
  NumArray values;         // [ny, nx] density at nodes
};

// Isotropic Gaussian KDE on a regular grid over the bounding box with 10%
// margins per side.
KdeGrid kde2d(const NumArray& points, std::size_t resolution, double bandwidth,
              int threads = 1);

}  // namespace dacxai
