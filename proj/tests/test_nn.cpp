#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "dacxai/nn.hpp"

using namespace dacxai;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.vocab_size = 5;
  cfg.embed_dim = 2;
  cfg.filter_sizes = {2};
  cfg.n_filters = 2;
  cfg.hidden_dim = 2;
  cfg.tasks = {{"t0", 2}};
  cfg.init_seed = 3;
  return cfg;
}

// Straight-line re-computation of the forward pass with nested loops,
// independent of the library's layout choices.
std::vector<double> naive_logits(const ModelConfig& cfg, const LayerParams& p,
                                 const std::vector<int>& tokens, std::size_t task) {
  std::vector<int> padded = tokens;
  const int max_s = *std::max_element(cfg.filter_sizes.begin(), cfg.filter_sizes.end());
  while (static_cast<int>(padded.size()) < max_s) padded.push_back(0);
  const std::size_t L = padded.size();
  const std::size_t d = static_cast<std::size_t>(cfg.embed_dim);

  std::vector<double> concat;
  for (std::size_t si = 0; si < cfg.filter_sizes.size(); ++si) {
    const int s = cfg.filter_sizes[si];
    for (int f = 0; f < cfg.n_filters; ++f) {
      double best = -1e300;
      for (std::size_t t = 0; t + static_cast<std::size_t>(s) <= L; ++t) {
        double acc = p.conv_b[si](static_cast<std::size_t>(f));
        for (int o = 0; o < s; ++o) {
          for (std::size_t j = 0; j < d; ++j) {
            acc += p.conv_w[si](static_cast<std::size_t>(f), static_cast<std::size_t>(o), j) *
                   p.embedding(static_cast<std::size_t>(padded[t + static_cast<std::size_t>(o)]),
                               j);
          }
        }
        best = std::max(best, acc);
      }
      concat.push_back(best);
    }
  }

  std::vector<double> hidden(static_cast<std::size_t>(cfg.hidden_dim), 0.0);
  for (std::size_t h = 0; h < hidden.size(); ++h) {
    double acc = p.dense_b(h);
    for (std::size_t c = 0; c < concat.size(); ++c) acc += concat[c] * p.dense_w(c, h);
    hidden[h] = std::max(0.0, acc);
  }

  const std::size_t k1 = static_cast<std::size_t>(cfg.tasks[task].n_classes) + 1;
  std::vector<double> logits(k1, 0.0);
  for (std::size_t c = 0; c < k1; ++c) {
    double acc = p.head_b[task](c);
    for (std::size_t h = 0; h < hidden.size(); ++h) acc += hidden[h] * p.head_w[task](h, c);
    logits[c] = acc;
  }
  return logits;
}

}  // namespace

TEST_CASE("softmax matches the frozen probe and is shift invariant") {
  const std::vector<double> z{1.0, 2.0, 3.0};
  const auto s = softmax(z);
  CHECK(s[0] == doctest::Approx(0.09003057317038046).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(0.24472847105479764).epsilon(1e-12));
  CHECK(s[2] == doctest::Approx(0.6652409557748218).epsilon(1e-12));

  const std::vector<double> shifted{1.0 + 100.0, 2.0 + 100.0, 3.0 + 100.0};
  const auto s2 = softmax(shifted);
  for (std::size_t i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(s2[i]).epsilon(1e-12));

  const std::vector<double> extreme{1000.0, -1000.0, 0.0};
  const auto s3 = softmax(extreme);
  double sum = 0.0;
  for (double v : s3) {
    CHECK(std::isfinite(v));
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("init_params is seed deterministic with the declared shapes") {
  ModelConfig cfg = tiny_config();
  cfg.ntask_dummy = true;
  const LayerParams a = init_params(cfg);
  const LayerParams b = init_params(cfg);
  CHECK(a.embedding.data == b.embedding.data);
  CHECK(a.dense_w.data == b.dense_w.data);
  CHECK(a.head_w[0].data == b.head_w[0].data);
  CHECK(a.dummy_w.data == b.dummy_w.data);

  ModelConfig other = cfg;
  other.init_seed = 4;
  const LayerParams c = init_params(other);
  CHECK(a.embedding.data != c.embedding.data);

  CHECK(a.embedding.shape == std::vector<std::size_t>{5, 2});
  CHECK(a.conv_w[0].shape == std::vector<std::size_t>{2, 2, 2});
  CHECK(a.conv_b[0].shape == std::vector<std::size_t>{2});
  CHECK(a.dense_w.shape == std::vector<std::size_t>{2, 2});
  CHECK(a.head_w[0].shape == std::vector<std::size_t>{2, 3});  // k + 1 with the abstain slot
  CHECK(a.head_b[0].shape == std::vector<std::size_t>{3});
  CHECK(a.dummy_w.shape == std::vector<std::size_t>{2, 2});

  const LayerParams z = zero_like(a);
  CHECK(z.embedding.shape == a.embedding.shape);
  for (double v : z.head_w[0].data) CHECK(v == 0.0);
}

TEST_CASE("forward agrees with an independent naive recomputation") {
  ModelConfig cfg;
  cfg.vocab_size = 9;
  cfg.embed_dim = 3;
  cfg.filter_sizes = {2, 3};
  cfg.n_filters = 2;
  cfg.hidden_dim = 4;
  cfg.tasks = {{"a", 3}, {"b", 2}};
  cfg.init_seed = 11;
  const LayerParams p = init_params(cfg);

  for (const auto& tokens :
       {std::vector<int>{1, 4, 2, 7, 3, 1}, std::vector<int>{5}, std::vector<int>{8, 8}}) {
    const ForwardResult fr = forward(cfg, p, tokens);
    REQUIRE(fr.task_logits.size() == 2);
    for (std::size_t t = 0; t < 2; ++t) {
      const auto expect = naive_logits(cfg, p, tokens, t);
      REQUIRE(fr.task_logits[t].size() == expect.size());
      for (std::size_t c = 0; c < expect.size(); ++c) {
        CHECK(fr.task_logits[t][c] == doctest::Approx(expect[c]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("max pooling routes the gradient to the earliest winning position") {
  ModelConfig cfg = tiny_config();
  LayerParams p = init_params(cfg);
  // Identical embeddings at all positions force a pooling tie everywhere.
  for (std::size_t w = 1; w < 5; ++w) {
    p.embedding(w, 0) = 0.5;
    p.embedding(w, 1) = -0.25;
  }
  const std::vector<int> tokens{1, 2, 3, 4};
  const ForwardResult fr = forward(cfg, p, tokens);
  for (int win : fr.cache.argmax.at(0)) CHECK(win == 0);

  std::vector<std::vector<double>> grads{{1.0, 0.0, 0.0}};
  const BackwardResult br = backward(cfg, p, fr.cache, grads);
  // Positions beyond the first window never win a tie, so the embedding rows
  // reached only through them receive no gradient.
  const std::size_t L = fr.cache.padded_tokens.size();
  for (std::size_t pos = 2; pos < L; ++pos) {
    CHECK(br.input_embed_grad(pos, 0) == 0.0);
    CHECK(br.input_embed_grad(pos, 1) == 0.0);
  }
}

TEST_CASE("backward matches finite differences on every parameter family") {
  ModelConfig cfg;
  cfg.vocab_size = 20;
  cfg.embed_dim = 4;
  cfg.filter_sizes = {2, 3};
  cfg.n_filters = 3;
  cfg.hidden_dim = 5;
  cfg.tasks = {{"a", 3}, {"b", 2}};
  cfg.ntask_dummy = true;
  cfg.init_seed = 29;
  const LayerParams p = init_params(cfg);

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::vector<int> tokens{3, 11, 7, 19, 2, 3, 14};

  // Scalar objective: fixed random linear functional of all logits. Its exact
  // logit gradient is the coefficient vector itself.
  std::vector<std::vector<double>> task_c{{0.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  std::vector<double> dummy_c{0.0, 0.0};
  for (auto& v : task_c)
    for (auto& x : v) x = unit(rng);
  for (auto& x : dummy_c) x = unit(rng);

  auto objective = [&](const LayerParams& params) {
    const ForwardResult fr = forward(cfg, params, tokens);
    double val = 0.0;
    for (std::size_t t = 0; t < task_c.size(); ++t)
      for (std::size_t c = 0; c < task_c[t].size(); ++c)
        val += task_c[t][c] * fr.task_logits[t][c];
    for (std::size_t c = 0; c < 2; ++c) val += dummy_c[c] * fr.dummy_logits[c];
    return val;
  };

  const ForwardResult fr = forward(cfg, p, tokens);
  const BackwardResult br = backward(cfg, p, fr.cache, task_c, dummy_c);

  // Collect matching (analytic grad, parameter) array pairs.
  std::vector<const NumArray*> grads, params;
  br.param_grads.for_each([&](const NumArray& a) { grads.push_back(&a); });
  p.for_each([&](const NumArray& a) { params.push_back(&a); });
  REQUIRE(grads.size() == params.size());

  const double h = 1e-5;
  int checked = 0;
  for (std::size_t ai = 0; ai < params.size(); ++ai) {
    const std::size_t n = params[ai]->numel();
    if (n == 0) continue;
    for (int trial = 0; trial < 4; ++trial) {
      const std::size_t idx = static_cast<std::size_t>(rng() % n);
      LayerParams plus = p, minus = p;
      std::vector<NumArray*> pp, pm;
      plus.for_each([&](NumArray& a) { pp.push_back(&a); });
      minus.for_each([&](NumArray& a) { pm.push_back(&a); });
      pp[ai]->data[idx] += h;
      pm[ai]->data[idx] -= h;
      const double fd = (objective(plus) - objective(minus)) / (2.0 * h);
      const double an = grads[ai]->data[idx];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
      CHECK(std::abs(fd - an) / denom < 1e-4);
      ++checked;
    }
  }
  CHECK(checked >= 40);

  // The input-embedding gradient must pass the same check.
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t pos = static_cast<std::size_t>(rng() % tokens.size());
    const std::size_t j = static_cast<std::size_t>(rng() % 4);
    const int tok = tokens[pos];
    // Perturbing one table row moves every position holding that token, so
    // compare against the sum of position gradients for the token.
    LayerParams plus = p, minus = p;
    plus.embedding(static_cast<std::size_t>(tok), j) += h;
    minus.embedding(static_cast<std::size_t>(tok), j) -= h;
    const double fd = (objective(plus) - objective(minus)) / (2.0 * h);
    double an = 0.0;
    for (std::size_t q = 0; q < fr.cache.padded_tokens.size(); ++q) {
      if (fr.cache.padded_tokens[q] == tok) an += br.input_embed_grad(q, j);
    }
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
    CHECK(std::abs(fd - an) / denom < 1e-4);
    (void)pos;
  }
}

TEST_CASE("short token lists are padded up to the widest filter") {
  ModelConfig cfg = tiny_config();
  cfg.filter_sizes = {4};
  const LayerParams p = init_params(cfg);
  const ForwardResult fr = forward(cfg, p, std::vector<int>{1});
  CHECK(fr.cache.padded_tokens.size() == 4);
  CHECK(fr.cache.padded_tokens[1] == 0);
  CHECK(fr.task_logits[0].size() == 3);
}

TEST_CASE("model config validation rejects nonsense") {
  ModelConfig cfg = tiny_config();
  cfg.vocab_size = 1;  // only the padding row
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny_config();
  cfg.tasks.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny_config();
  cfg.filter_sizes = {0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny_config();
  cfg.tasks[0].n_classes = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
