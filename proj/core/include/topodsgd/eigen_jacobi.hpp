#pragma once

#include <vector>

#include "topodsgd/matrix.hpp"

namespace topodsgd {

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column k pairs with values[k]
  int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// 1e-12 * max(1, ||A||_F) or throws NumericalError after `max_sweeps`.
/// Output is fully deterministic: eigenpairs are sorted by descending value
/// (stable on ties) and every eigenvector is sign-normalized so that its
/// largest-magnitude component is positive.
SymmetricEigen jacobi_eigen(const Matrix& a, int max_sweeps = 100);

}  // namespace topodsgd
