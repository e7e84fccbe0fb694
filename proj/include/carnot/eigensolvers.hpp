#pragma once

#include <carnot/lattice.hpp>

#include <functional>

namespace carnot
{

using ApplyFn = std::function<Vec(const Vec &)>;

struct ExtremeEigen
{
  double value = 0.0;
  double residual_bound = 0.0;  // |beta_k s_k| for Lanczos, ||A x - theta x|| for LOBPCG
  int iterations = 0;
  bool converged = false;
};

// Largest eigenvalue of a symmetric operator by three-term Lanczos (no vectors kept, so the
// memory cost is three vectors). Converged when the Ritz residual bound falls below
// tol * |theta|.
ExtremeEigen lanczos_largest(const ApplyFn &a, Index n, double tol = 1e-9, int max_iter = 600, unsigned seed = 1);

struct EigenPairs
{
  Vec values;
  Mat vectors;
  Vec residuals;
  int iterations = 0;
  bool converged = false;
};

// k smallest eigenpairs by LOBPCG with SVQB orthonormalisation. `precond` may be empty.
// scale is a norm estimate used in the relative residual test.
EigenPairs lobpcg_smallest(const ApplyFn &a, Index n, int k, const ApplyFn &precond, double scale,
                           double tol = 1e-9, int max_iter = 800, unsigned seed = 3, const Mat *start = nullptr);

// Dense matrix of an operator by columns.
Mat dense_from_apply(const ApplyFn &a, Index n);

}  // namespace carnot
