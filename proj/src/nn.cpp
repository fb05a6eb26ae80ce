#include "dacxai/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dacxai {

int ModelConfig::max_filter() const {
  int m = 1;
  for (int s : filter_sizes) m = std::max(m, s);
  return m;
}

void ModelConfig::validate() const {
  if (vocab_size < 2) throw std::invalid_argument("ModelConfig: vocab_size must be >= 2");
  if (embed_dim < 1) throw std::invalid_argument("ModelConfig: embed_dim must be >= 1");
  if (filter_sizes.empty()) throw std::invalid_argument("ModelConfig: filter_sizes must be non-empty");
  for (int s : filter_sizes)
    if (s < 1) throw std::invalid_argument("ModelConfig: filter sizes must be >= 1");
  if (n_filters < 1) throw std::invalid_argument("ModelConfig: n_filters must be >= 1");
  if (hidden_dim < 1) throw std::invalid_argument("ModelConfig: hidden_dim must be >= 1");
  if (tasks.empty()) throw std::invalid_argument("ModelConfig: at least one task head required");
  for (const auto& t : tasks)
    if (t.n_classes < 2) throw std::invalid_argument("ModelConfig: each task needs >= 2 classes");
}

namespace {

void glorot_fill(NumArray& a, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : a.data) v = dist(rng);
}

}  // namespace

LayerParams init_params(const ModelConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.init_seed);
  const auto vocab = static_cast<std::size_t>(cfg.vocab_size);
  const auto d = static_cast<std::size_t>(cfg.embed_dim);
  const auto nf = static_cast<std::size_t>(cfg.n_filters);
  const auto hidden = static_cast<std::size_t>(cfg.hidden_dim);
  const auto concat = static_cast<std::size_t>(cfg.concat_dim());

  LayerParams p;
  p.embedding = NumArray({vocab, d});
  glorot_fill(p.embedding, vocab, d, rng);
  for (int s : cfg.filter_sizes) {
    NumArray w({nf, static_cast<std::size_t>(s), d});
    glorot_fill(w, static_cast<std::size_t>(s) * d, nf, rng);
    p.conv_w.push_back(std::move(w));
    p.conv_b.emplace_back(NumArray({nf}));
  }
  p.dense_w = NumArray({concat, hidden});
  glorot_fill(p.dense_w, concat, hidden, rng);
  p.dense_b = NumArray({hidden});
  for (const auto& t : cfg.tasks) {
    const auto out = static_cast<std::size_t>(t.n_classes + 1);
    NumArray w({hidden, out});
    glorot_fill(w, hidden, out, rng);
    p.head_w.push_back(std::move(w));
    p.head_b.emplace_back(NumArray({out}));
  }
  if (cfg.ntask_dummy) {
    p.dummy_w = NumArray({hidden, 2});
    glorot_fill(p.dummy_w, hidden, 2, rng);
    p.dummy_b = NumArray({2});
  }
  return p;
}

LayerParams zero_like(const LayerParams& p) {
  LayerParams z;
  z.embedding = NumArray(p.embedding.shape);
  for (const auto& w : p.conv_w) z.conv_w.emplace_back(NumArray(w.shape));
  for (const auto& b : p.conv_b) z.conv_b.emplace_back(NumArray(b.shape));
  z.dense_w = NumArray(p.dense_w.shape);
  z.dense_b = NumArray(p.dense_b.shape);
  for (const auto& w : p.head_w) z.head_w.emplace_back(NumArray(w.shape));
  for (const auto& b : p.head_b) z.head_b.emplace_back(NumArray(b.shape));
  if (!p.dummy_w.data.empty()) {
    z.dummy_w = NumArray(p.dummy_w.shape);
    z.dummy_b = NumArray(p.dummy_b.shape);
  }
  return z;
}

ForwardResult forward(const ModelConfig& cfg, const LayerParams& params,
                      std::span<const int> tokens) {
  const auto d = static_cast<std::size_t>(cfg.embed_dim);
  const auto nf = static_cast<std::size_t>(cfg.n_filters);
  const auto hidden = static_cast<std::size_t>(cfg.hidden_dim);

  ForwardResult res;
  ForwardCache& cache = res.cache;

  cache.padded_tokens.assign(tokens.begin(), tokens.end());
  const auto min_len = static_cast<std::size_t>(cfg.max_filter());
  while (cache.padded_tokens.size() < min_len) cache.padded_tokens.push_back(0);
  for (int t : cache.padded_tokens)
    if (t < 0 || t >= cfg.vocab_size)
      throw std::out_of_range("forward: token index " + std::to_string(t) +
                              " outside vocabulary of size " + std::to_string(cfg.vocab_size));

  const std::size_t len = cache.padded_tokens.size();
  cache.embedded = NumArray({len, d});
  for (std::size_t p = 0; p < len; ++p) {
    const auto row = static_cast<std::size_t>(cache.padded_tokens[p]);
    for (std::size_t m = 0; m < d; ++m) cache.embedded(p, m) = params.embedding(row, m);
  }

  // Valid 1-D convolutions, stride 1, then max over time per filter.
  cache.concat.assign(cfg.concat_dim(), 0.0);
  cache.argmax.assign(cfg.filter_sizes.size(), std::vector<int>(nf, 0));
  for (std::size_t si = 0; si < cfg.filter_sizes.size(); ++si) {
    const auto s = static_cast<std::size_t>(cfg.filter_sizes[si]);
    const NumArray& w = params.conv_w[si];
    const NumArray& b = params.conv_b[si];
    const std::size_t n_pos = len - s + 1;
    for (std::size_t f = 0; f < nf; ++f) {
      double best = 0.0;
      int best_pos = 0;
      for (std::size_t p = 0; p < n_pos; ++p) {
        double acc = b(f);
        for (std::size_t j = 0; j < s; ++j)
          for (std::size_t m = 0; m < d; ++m) acc += w(f, j, m) * cache.embedded(p + j, m);
        if (p == 0 || acc > best) {  // ties keep the lowest index
          best = acc;
          best_pos = static_cast<int>(p);
        }
      }
      cache.argmax[si][f] = best_pos;
      cache.concat[si * nf + f] = best;
    }
  }

  cache.dense_pre.assign(hidden, 0.0);
  for (std::size_t h = 0; h < hidden; ++h) {
    double acc = params.dense_b(h);
    for (std::size_t c = 0; c < cache.concat.size(); ++c)
      acc += params.dense_w(c, h) * cache.concat[c];
    cache.dense_pre[h] = acc;
  }
  cache.hidden.assign(hidden, 0.0);
  for (std::size_t h = 0; h < hidden; ++h) cache.hidden[h] = std::max(0.0, cache.dense_pre[h]);

  res.task_logits.resize(cfg.tasks.size());
  for (std::size_t t = 0; t < cfg.tasks.size(); ++t) {
    const auto out = static_cast<std::size_t>(cfg.tasks[t].n_classes + 1);
    res.task_logits[t].assign(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = params.head_b[t](o);
      for (std::size_t h = 0; h < hidden; ++h) acc += params.head_w[t](h, o) * cache.hidden[h];
      res.task_logits[t][o] = acc;
    }
  }
  if (cfg.ntask_dummy) {
    res.dummy_logits.assign(2, 0.0);
    for (std::size_t o = 0; o < 2; ++o) {
      double acc = params.dummy_b(o);
      for (std::size_t h = 0; h < hidden; ++h) acc += params.dummy_w(h, o) * cache.hidden[h];
      res.dummy_logits[o] = acc;
    }
  }
  return res;
}

BackwardResult backward(const ModelConfig& cfg, const LayerParams& params,
                        const ForwardCache& cache,
                        std::span<const std::vector<double>> task_logit_grads,
                        std::span<const double> dummy_logit_grads) {
  if (task_logit_grads.size() != cfg.tasks.size())
    throw std::invalid_argument("backward: one logit gradient per task required");
  for (std::size_t t = 0; t < cfg.tasks.size(); ++t)
    if (task_logit_grads[t].size() != static_cast<std::size_t>(cfg.tasks[t].n_classes + 1))
      throw std::invalid_argument("backward: logit gradient shape mismatch for task " +
                                  cfg.tasks[t].name);
  if (!dummy_logit_grads.empty() && (!cfg.ntask_dummy || dummy_logit_grads.size() != 2))
    throw std::invalid_argument("backward: dummy gradient requires the 2-way dummy head");

  const auto d = static_cast<std::size_t>(cfg.embed_dim);
  const auto nf = static_cast<std::size_t>(cfg.n_filters);
  const auto hidden = static_cast<std::size_t>(cfg.hidden_dim);
  const std::size_t len = cache.padded_tokens.size();

  BackwardResult res;
  res.param_grads = zero_like(params);
  LayerParams& g = res.param_grads;

  // Heads -> hidden.
  std::vector<double> dhidden(hidden, 0.0);
  for (std::size_t t = 0; t < cfg.tasks.size(); ++t) {
    const auto out = static_cast<std::size_t>(cfg.tasks[t].n_classes + 1);
    for (std::size_t o = 0; o < out; ++o) {
      const double go = task_logit_grads[t][o];
      if (go == 0.0) continue;
      g.head_b[t](o) += go;
      for (std::size_t h = 0; h < hidden; ++h) {
        g.head_w[t](h, o) += go * cache.hidden[h];
        dhidden[h] += go * params.head_w[t](h, o);
      }
    }
  }
  if (!dummy_logit_grads.empty()) {
    for (std::size_t o = 0; o < 2; ++o) {
      const double go = dummy_logit_grads[o];
      if (go == 0.0) continue;
      g.dummy_b(o) += go;
      for (std::size_t h = 0; h < hidden; ++h) {
        g.dummy_w(h, o) += go * cache.hidden[h];
        dhidden[h] += go * params.dummy_w(h, o);
      }
    }
  }

  // ReLU mask, dense -> concat.
  std::vector<double> dconcat(cache.concat.size(), 0.0);
  for (std::size_t h = 0; h < hidden; ++h) {
    const double dz = cache.dense_pre[h] > 0.0 ? dhidden[h] : 0.0;
    if (dz == 0.0) continue;
    g.dense_b(h) += dz;
    for (std::size_t c = 0; c < cache.concat.size(); ++c) {
      g.dense_w(c, h) += dz * cache.concat[c];
      dconcat[c] += dz * params.dense_w(c, h);
    }
  }

  // Max-pool routes each pooled gradient to its single argmax window.
  res.input_embed_grad = NumArray({len, d});
  for (std::size_t si = 0; si < cfg.filter_sizes.size(); ++si) {
    const auto s = static_cast<std::size_t>(cfg.filter_sizes[si]);
    const NumArray& w = params.conv_w[si];
    for (std::size_t f = 0; f < nf; ++f) {
      const double dout = dconcat[si * nf + f];
      if (dout == 0.0) continue;
      const auto p = static_cast<std::size_t>(cache.argmax[si][f]);
      g.conv_b[si](f) += dout;
      for (std::size_t j = 0; j < s; ++j)
        for (std::size_t m = 0; m < d; ++m) {
          g.conv_w[si](f, j, m) += dout * cache.embedded(p + j, m);
          res.input_embed_grad(p + j, m) += dout * w(f, j, m);
        }
    }
  }

  // Scatter the per-position gradient back into the embedding table.
  for (std::size_t p = 0; p < len; ++p) {
    const auto row = static_cast<std::size_t>(cache.padded_tokens[p]);
    for (std::size_t m = 0; m < d; ++m) g.embedding(row, m) += res.input_embed_grad(p, m);
  }
  return res;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size(), 0.0);
  if (logits.empty()) return out;
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace dacxai
