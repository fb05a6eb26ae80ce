#include "dacxai/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dacxai {

EigenResult symmetric_eigen(const NumArray& m) {
  if (m.shape.size() != 2 || m.shape[0] != m.shape[1]) {
    throw std::invalid_argument("symmetric_eigen: matrix must be square");
  }
  const std::size_t n = m.shape[0];
  if (n == 0) throw std::invalid_argument("symmetric_eigen: empty matrix");

  NumArray a = m;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = avg;
      a(j, i) = avg;
    }
  }
  NumArray v = NumArray::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double frob = 0.0;
  for (double x : a.data) frob += x * x;
  const double stop = 1e-28 * std::max(1.0, frob);

  const int max_sweeps = 200;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    }
    if (off <= stop) break;
    if (sweep == max_sweeps - 1) {
      throw std::runtime_error("symmetric_eigen: Jacobi sweeps did not converge");
    }
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = a(p, p), aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(p, i) = a(i, p);
          a(i, q) = s * aip + c * aiq;
          a(q, i) = a(i, q);
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  EigenResult res;
  res.values.resize(n);
  res.vectors = NumArray::zeros({n, n});
  for (std::size_t j = 0; j < n; ++j) {
    res.values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) res.vectors(i, j) = v(i, order[j]);
  }
  return res;
}

std::vector<double> solve_least_squares(const NumArray& design, std::span<const double> y) {
  if (design.shape.size() != 2) {
    throw std::invalid_argument("solve_least_squares: design must be 2-D");
  }
  const std::size_t n = design.shape[0];
  const std::size_t p = design.shape[1];
  if (y.size() != n) throw std::invalid_argument("solve_least_squares: y length mismatch");
  if (p == 0) return {};

  // Normal equations: (X^T X) beta = X^T y.
  NumArray g = NumArray::zeros({p, p});
  std::vector<double> rhs(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < p; ++a) {
      const double xa = design(i, a);
      if (xa == 0.0) continue;
      rhs[a] += xa * y[i];
      for (std::size_t b = a; b < p; ++b) g(a, b) += xa * design(i, b);
    }
  }
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < a; ++b) g(a, b) = g(b, a);
  }

  // Gaussian elimination with partial pivoting; zero pivots zero the
  // coefficient.
  double scale = 0.0;
  for (double x : g.data) scale = std::max(scale, std::abs(x));
  const double tiny = 1e-12 * std::max(1.0, scale);

  std::vector<double> beta(p, 0.0);
  std::vector<bool> dead(p, false);
  for (std::size_t k = 0; k < p; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < p; ++i) {
      if (std::abs(g(i, k)) > std::abs(g(piv, k))) piv = i;
    }
    if (std::abs(g(piv, k)) <= tiny) {
      dead[k] = true;
      for (std::size_t i = k; i < p; ++i) g(i, k) = 0.0;  // drop the variable
      continue;
    }
    if (piv != k) {
      for (std::size_t j = 0; j < p; ++j) std::swap(g(piv, j), g(k, j));
      std::swap(rhs[piv], rhs[k]);
    }
    for (std::size_t i = k + 1; i < p; ++i) {
      const double f = g(i, k) / g(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < p; ++j) g(i, j) -= f * g(k, j);
      rhs[i] -= f * rhs[k];
    }
  }
  for (std::size_t kk = p; kk-- > 0;) {
    if (dead[kk]) {
      beta[kk] = 0.0;
      continue;
    }
    double acc = rhs[kk];
    for (std::size_t j = kk + 1; j < p; ++j) acc -= g(kk, j) * beta[j];
    beta[kk] = acc / g(kk, kk);
  }
  return beta;
}

}  // namespace dacxai
