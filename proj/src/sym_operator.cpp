#include <carnot/sym_operator.hpp>

#include <cmath>

namespace carnot
{

SymOperator::SymOperator(std::shared_ptr<const SpectralCalculus> calc, double power, double scale, Vec diag)
  : calc_(std::move(calc)), power_(power), scale_(scale), diag_(std::move(diag))
{
  if (!calc_)
    fail(ErrorCode::InvalidArgument, "operator needs a spectral backend");
  if (diag_.size() == 0)
    diag_ = Vec::Zero(calc_->size());
  if (diag_.size() != calc_->size())
    fail(ErrorCode::DimensionMismatch, "diagonal length differs from the operator size");
}

Vec SymOperator::apply(const Vec &x) const
{
  Vec y = diag_.cwiseProduct(x);
  if (scale_ != 0.0)
    y += calc_->apply({power_, scale_, 0.0, false}, x);
  return y;
}

ApplyFn SymOperator::fn() const
{
  return [this](const Vec &x) { return apply(x); };
}

Mat SymOperator::dense() const
{
  Mat d = scale_ != 0.0 ? calc_->dense({power_, scale_, 0.0, false}) : Mat::Zero(size(), size());
  d.diagonal() += diag_;
  return d;
}

bool SymOperator::has_sparse() const
{
  return power_ == 1.0 && calc_->sparse() != nullptr;
}

SpMat SymOperator::sparse() const
{
  if (!has_sparse())
    fail(ErrorCode::InvalidArgument, "operator has no sparse form");
  SpMat a = scale_ * (*calc_->sparse());
  SpMat d(size(), size());
  d.reserve(Eigen::VectorXi::Constant(size(), 1));
  for (Index i = 0; i < size(); ++i)
    d.insert(i, i) = diag_[i];
  a += d;
  return a;
}

ApplyFn SymOperator::preconditioner(double sigma) const
{
  auto calc = calc_;
  const SpectralFn g{power_, scale_, sigma, true};
  return [calc, g](const Vec &x) { return calc->apply(g, x); };
}

double SymOperator::norm_estimate() const
{
  return std::abs(scale_) * std::pow(calc_->lambda_max(), power_) + diag_.cwiseAbs().maxCoeff();
}

EigenPairs smallest_eigenpairs(const SymOperator &op, int k, const EigenOptions &opt)
{
  const Index n = op.size();
  if (n <= opt.dense_limit)
  {
    const SpectralFactorization f = factorize(op.dense());
    EigenPairs out;
    out.values = f.eigenvalues.head(k);
    out.vectors = f.vectors.leftCols(k);
    out.residuals = Vec::Zero(k);
    out.converged = true;
    return out;
  }
  // (a L^p + a lambda_min(L)^p)^{-1}: an SPD approximate inverse of the fractional part
  const double lmin = op.calculus()->lambda_min();
  const double sigma = std::max(std::abs(op.scale()) * std::pow(lmin, op.power()), 1e-12 * op.norm_estimate());
  const ApplyFn pre = op.preconditioner(sigma);
  EigenPairs r = lobpcg_smallest(op.fn(), n, k, pre, op.norm_estimate(), opt.tol, opt.max_iter, opt.seed,
                                 opt.start.size() ? &opt.start : nullptr);
  if (!r.converged)
    fail(ErrorCode::NonConvergence, "LOBPCG did not converge; residual " + std::to_string(r.residuals.maxCoeff()));
  return r;
}

}  // namespace carnot
