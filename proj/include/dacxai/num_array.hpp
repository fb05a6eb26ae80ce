#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace dacxai {

// Dense row-major array of doubles. Rank 1-3 is all the model needs.
struct NumArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  NumArray() = default;
  explicit NumArray(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0);
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return s.empty() ? 0 : n;
  }

  static NumArray zeros(std::vector<std::size_t> s) { return NumArray(std::move(s)); }

  std::size_t numel() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 0 : shape[1]; }

  double& operator()(std::size_t i) { return data[i]; }
  double operator()(std::size_t i) const { return data[i]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }

  bool same_shape(const NumArray& o) const { return shape == o.shape; }

  void add_scaled(const NumArray& o, double scale) {
    if (!same_shape(o)) throw std::invalid_argument("NumArray::add_scaled: shape mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += scale * o.data[i];
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace dacxai
