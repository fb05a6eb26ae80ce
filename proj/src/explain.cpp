#include "dacxai/explain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dacxai/linalg.hpp"
#include "dacxai/rng.hpp"

namespace dacxai {

namespace {

std::vector<double> embedding_centroid(const NumArray& table) {
  const std::size_t vocab = table.shape.at(0);
  const std::size_t d = table.shape.at(1);
  if (vocab < 2) throw std::invalid_argument("embedding table has no non-padding rows");
  std::vector<double> c(d, 0.0);
  for (std::size_t w = 1; w < vocab; ++w) {  // row 0 is padding
    for (std::size_t j = 0; j < d; ++j) c[j] += table(w, j);
  }
  const double inv = 1.0 / static_cast<double>(vocab - 1);
  for (double& x : c) x *= inv;
  return c;
}

int resolve_target_class(const TaskOutput& out, TargetKind kind) {
  if (kind == TargetKind::second_choice) {
    if (!out.abstained()) {
      throw std::invalid_argument("second_choice target requested on a non-abstained report");
    }
    return *out.second_choice;
  }
  return out.predicted;
}

}  // namespace

TokenAttribution grad_input(const ScoreModel& model, const TokenizedReport& report,
                            std::size_t task, TargetKind kind) {
  const TaskOutput out = model.predict_task(report.tokens, task);
  const int target = resolve_target_class(out, kind);

  const ScoreModel::ScoreGrad sg = model.target_score_grad(report.tokens, task, target);
  const NumArray& table = model.embedding_table();
  const std::vector<double> centroid = embedding_centroid(table);
  const std::size_t d = table.shape.at(1);

  TokenAttribution attr;
  attr.report_id = report.report_id;
  attr.task_name = out.task_name;
  attr.target_class = target;
  attr.target_kind = kind;
  attr.weights.assign(report.tokens.size(), 0.0);
  for (std::size_t p = 0; p < report.tokens.size(); ++p) {
    const int tok = report.tokens[p];
    if (tok == Vocabulary::pad_index) continue;  // stays exactly 0
    double w = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      w += (table(static_cast<std::size_t>(tok), j) - centroid[j]) * sg.embed_grad(p, j);
    }
    attr.weights[p] = w;
  }
  return attr;
}

WordAttribution aggregate_words(const TokenAttribution& attr, const TokenizedReport& report,
                                const Vocabulary& vocab) {
  if (attr.weights.size() != report.tokens.size()) {
    throw std::invalid_argument("aggregate_words: weight/token length mismatch");
  }
  WordAttribution out;
  out.report_id = attr.report_id;
  for (std::size_t p = 0; p < report.tokens.size(); ++p) {
    const int tok = report.tokens[p];
    if (tok == Vocabulary::pad_index) continue;
    out.weights[vocab.word(tok)] += attr.weights[p];
  }
  return out;
}

std::map<std::string, double> perturbation_explain(const ScoreModel& model,
                                                   const TokenizedReport& report,
                                                   std::size_t task, int target_class,
                                                   const Vocabulary& vocab, int n_perturb,
                                                   std::uint64_t seed) {
  if (n_perturb < 100) {
    throw std::invalid_argument("perturbation_explain: n_perturb must be >= 100");
  }

  // Feature set: unique non-padding words, in order of first occurrence.
  std::vector<int> feature_tokens;
  std::map<int, std::size_t> feature_of;
  for (int tok : report.tokens) {
    if (tok == Vocabulary::pad_index) continue;
    if (feature_of.emplace(tok, feature_tokens.size()).second) feature_tokens.push_back(tok);
  }
  std::map<std::string, double> result;
  if (feature_tokens.empty()) return result;
  const std::size_t nf = feature_tokens.size();

  std::mt19937_64 rng(seed);
  NumArray design = NumArray::zeros({static_cast<std::size_t>(n_perturb), nf + 1});
  std::vector<double> target(static_cast<std::size_t>(n_perturb), 0.0);
  std::vector<char> keep(nf, 1);
  std::vector<int> perturbed;
  perturbed.reserve(report.tokens.size());
  for (int m = 0; m < n_perturb; ++m) {
    for (std::size_t f = 0; f < nf; ++f) keep[f] = rand_unit(rng) < 0.5 ? 1 : 0;
    perturbed.clear();
    for (int tok : report.tokens) {
      if (tok == Vocabulary::pad_index) continue;
      if (keep[feature_of.at(tok)]) perturbed.push_back(tok);
    }
    const std::size_t row = static_cast<std::size_t>(m);
    design(row, 0) = 1.0;  // intercept
    for (std::size_t f = 0; f < nf; ++f) design(row, f + 1) = keep[f] ? 1.0 : 0.0;
    target[row] = model.target_score(perturbed, task, target_class);
  }

  // Constant indicator columns carry no information; zero them so the solver
  // reports weight 0 instead of competing with the intercept.
  for (std::size_t f = 1; f <= nf; ++f) {
    double lo = design(0, f), hi = design(0, f);
    for (int m = 1; m < n_perturb; ++m) {
      lo = std::min(lo, design(static_cast<std::size_t>(m), f));
      hi = std::max(hi, design(static_cast<std::size_t>(m), f));
    }
    if (lo == hi) {
      for (int m = 0; m < n_perturb; ++m) design(static_cast<std::size_t>(m), f) = 0.0;
    }
  }

  std::vector<double> beta = solve_least_squares(design, target);
  for (std::size_t f = 0; f < nf; ++f) {
    result[vocab.word(feature_tokens[f])] = beta[f + 1];
  }
  return result;
}

double sign_agreement(std::span<const WordAttribution> grad_side,
                      std::span<const WordAttribution> perturb_side) {
  if (grad_side.size() != perturb_side.size()) {
    throw std::invalid_argument("sign_agreement: report lists differ in length");
  }
  auto decile = [](std::span<const WordAttribution> side) {
    std::vector<double> mags;
    for (const auto& wa : side)
      for (const auto& [w, v] : wa.weights) mags.push_back(std::abs(v));
    if (mags.empty()) return 0.0;
    std::sort(mags.begin(), mags.end());
    const std::size_t rank =
        static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(mags.size())));
    return mags[std::min(mags.size() - 1, rank == 0 ? 0 : rank - 1)];
  };
  const double qa = decile(grad_side);
  const double qb = decile(perturb_side);

  std::size_t hits = 0, total = 0;
  for (std::size_t r = 0; r < grad_side.size(); ++r) {
    if (grad_side[r].report_id != perturb_side[r].report_id) {
      throw std::invalid_argument("sign_agreement: report ids misaligned");
    }
    for (const auto& [word, wa] : grad_side[r].weights) {
      auto it = perturb_side[r].weights.find(word);
      if (it == perturb_side[r].weights.end()) continue;
      const double wb = it->second;
      if (std::abs(wa) < qa && std::abs(wb) < qb) continue;  // below both deciles
      ++total;
      if (wa * wb > 0.0 || (wa == 0.0 && wb == 0.0)) ++hits;
    }
  }
  if (total == 0) {
    throw std::invalid_argument("sign_agreement: no shared top-decile words");
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace dacxai
