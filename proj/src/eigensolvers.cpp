#include <carnot/eigensolvers.hpp>

#include <cmath>
#include <random>

namespace carnot
{

namespace
{

Vec random_unit(Index n, unsigned seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vec v(n);
  for (auto &x : v)
    x = g(rng);
  return v.normalized();
}

Mat apply_block(const ApplyFn &a, const Mat &x)
{
  Mat y(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j)
    y.col(j) = a(x.col(j));
  return y;
}

// Orthonormal basis transform for S: returns T with (S T)^T (S T) = I, dropping directions
// with relative Gram eigenvalue below drop.
Mat svqb(const Mat &s, double drop = 1e-10)
{
  const Mat g = s.transpose() * s;
  Vec d = g.diagonal();
  for (auto &v : d)
    v = v > 0 ? 1.0 / std::sqrt(v) : 0.0;
  const Mat gs = d.asDiagonal() * g * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(gs);
  const Vec &ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  std::vector<Index> keep;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev[i] > drop * top)
      keep.push_back(i);
  Mat t(s.cols(), keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c)
    t.col(c) = d.asDiagonal() * es.eigenvectors().col(keep[c]) / std::sqrt(ev[keep[c]]);
  return t;
}

}  // namespace

ExtremeEigen lanczos_largest(const ApplyFn &a, Index n, double tol, int max_iter, unsigned seed)
{
  ExtremeEigen out;
  Vec v = random_unit(n, seed);
  Vec vprev = Vec::Zero(n);
  std::vector<double> alpha, beta;
  double b = 0.0;
  const int steps = static_cast<int>(std::min<Index>(max_iter, n));
  for (int k = 0; k < steps; ++k)
  {
    Vec w = a(v);
    if (b != 0.0)
      w -= b * vprev;
    const double al = v.dot(w);
    w -= al * v;
    w -= v.dot(w) * v;
    alpha.push_back(al);
    const double bn = w.norm();
    const int kk = k + 1;
    if (kk % 5 == 0 || kk == steps || bn < 1e-300)
    {
      Mat T = Mat::Zero(kk, kk);
      for (int i = 0; i < kk; ++i)
      {
        T(i, i) = alpha[i];
        if (i + 1 < kk)
          T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Mat> es(T);
      const double theta = es.eigenvalues()[kk - 1];
      const double bound = bn * std::abs(es.eigenvectors()(kk - 1, kk - 1));
      out.value = theta;
      out.residual_bound = bound;
      out.iterations = kk;
      if (bound <= tol * std::abs(theta) || bn < 1e-300)
      {
        out.converged = true;
        return out;
      }
    }
    beta.push_back(bn);
    vprev = std::move(v);
    v = w / bn;
    b = bn;
  }
  return out;
}

EigenPairs lobpcg_smallest(const ApplyFn &a, Index n, int k, const ApplyFn &precond, double scale, double tol,
                           int max_iter, unsigned seed, const Mat *start)
{
  if (k < 1 || k > n)
    fail(ErrorCode::InvalidArgument, "lobpcg block size out of range");
  EigenPairs out;
  if (n <= std::max<Index>(3 * k, 64))
  {
    const Mat d = dense_from_apply(a, n);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (d + d.transpose()));
    out.values = es.eigenvalues().head(k);
    out.vectors = es.eigenvectors().leftCols(k);
    out.residuals = Vec::Zero(k);
    out.converged = true;
    return out;
  }

  Mat x(n, k);
  if (start && start->rows() == n && start->cols() == k)
    x = *start;
  else
    for (int j = 0; j < k; ++j)
      x.col(j) = random_unit(n, seed + 17 * j);
  {
    const Mat t = svqb(x);
    x = x * t;
  }
  Mat ax = apply_block(a, x);
  Mat p, ap;
  Vec theta;
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(x.transpose() * ax);
    x = x * es.eigenvectors();
    ax = ax * es.eigenvectors();
    theta = es.eigenvalues();
  }

  for (int it = 1; it <= max_iter; ++it)
  {
    Mat r = ax - x * theta.asDiagonal();
    Vec res(k);
    bool done = true;
    for (int j = 0; j < k; ++j)
    {
      res[j] = r.col(j).norm();
      if (res[j] > tol * std::max(scale, std::abs(theta[j])))
        done = false;
    }
    out.iterations = it;
    if (done)
    {
      out.values = theta;
      out.vectors = x;
      out.residuals = res;
      out.converged = true;
      return out;
    }
    Mat w = precond ? apply_block(precond, r) : r;
    w -= x * (x.transpose() * w);
    for (Index j = 0; j < w.cols(); ++j)
    {
      const double nw = w.col(j).norm();
      if (nw > 0)
        w.col(j) /= nw;
    }
    const Mat aw = apply_block(a, w);

    const Index np = p.cols();
    Mat s(n, k + w.cols() + np), as(n, k + w.cols() + np);
    s << x, w, p;
    as << ax, aw, ap;
    Mat t = svqb(s);
    t = t * svqb(s * t);
    Mat hs = (s * t).transpose() * (as * t);
    hs = 0.5 * (hs + hs.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(hs);
    // coefficients in the original [X W P] basis; the search direction keeps only the
    // W and P parts, which avoids the cancellation of X_new - X_old
    const Mat coef = t * es.eigenvectors().leftCols(k);
    const Index rest = s.cols() - k;
    p = s.rightCols(rest) * coef.bottomRows(rest);
    ap = as.rightCols(rest) * coef.bottomRows(rest);
    x = s * coef;
    if (it % 20 == 0)
      ax = apply_block(a, x);
    else
      ax = as * coef;
    theta = es.eigenvalues().head(k);
  }
  out.values = theta;
  out.vectors = x;
  out.residuals = (ax - x * theta.asDiagonal()).colwise().norm().transpose();
  out.converged = false;
  return out;
}

Mat dense_from_apply(const ApplyFn &a, Index n)
{
  Mat d(n, n);
  for (Index j = 0; j < n; ++j)
    d.col(j) = a(Vec::Unit(n, j));
  return d;
}

}  // namespace carnot
