#pragma once

#include <span>
#include <vector>

#include "dacxai/num_array.hpp"

namespace dacxai {

struct EigenResult {
  std::vector<double> values;  // descending
  NumArray vectors;            // [n, n], column j pairs with values[j]
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. The input is
// symmetrized (averaged with its transpose) before sweeping; asymmetry beyond
// roundoff is the caller's bug.
EigenResult symmetric_eigen(const NumArray& m);

// Ordinary least squares via normal equations with partial pivoting.
// Near-zero pivots (rank deficiency) zero the corresponding coefficient
// instead of failing, which is what the perturbation explainer wants for
// constant columns.
std::vector<double> solve_least_squares(const NumArray& design, std::span<const double> y);

}  // namespace dacxai
