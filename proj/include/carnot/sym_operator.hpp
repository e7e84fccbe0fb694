#pragma once

#include <carnot/eigensolvers.hpp>
#include <carnot/spectral.hpp>

namespace carnot
{

// scale * L^{power} + diag(d), with L = -Delta held by a shared spectral backend.
// H, K and the second commutator are all of this form over one backend.
class SymOperator
{
public:
  SymOperator(std::shared_ptr<const SpectralCalculus> calc, double power, double scale, Vec diag);

  Index size() const { return calc_->size(); }
  double power() const { return power_; }
  double scale() const { return scale_; }
  const Vec &diagonal() const { return diag_; }
  const std::shared_ptr<const SpectralCalculus> &calculus() const { return calc_; }

  Vec apply(const Vec &x) const;
  ApplyFn fn() const;
  Mat dense() const;
  // Available when power == 1 and the backend keeps the sparse -Delta.
  bool has_sparse() const;
  SpMat sparse() const;
  // (scale * L^power + sigma)^{-1}, exact on the backend.
  ApplyFn preconditioner(double sigma) const;
  double norm_estimate() const;

  SymOperator with_diagonal(Vec d) const { return {calc_, power_, scale_, std::move(d)}; }

private:
  std::shared_ptr<const SpectralCalculus> calc_;
  double power_;
  double scale_;
  Vec diag_;
};

struct EigenOptions
{
  Index dense_limit = 2000;
  double tol = 1e-9;
  int max_iter = 1500;
  unsigned seed = 11;
  Mat start;  // optional warm start, n x k
};

// k smallest eigenpairs of op: dense LAPACK below dense_limit, LOBPCG otherwise.
EigenPairs smallest_eigenpairs(const SymOperator &op, int k, const EigenOptions &opt = {});

}  // namespace carnot
