#include <carnot/spectral.hpp>

#include <Eigen/SparseCholesky>
#include <fftw3.h>
#include <lapacke.h>

#include <cmath>
#include <sstream>

namespace carnot
{

SpectralFactorization factorize(const Mat &a)
{
  const lapack_int n = static_cast<lapack_int>(a.rows());
  if (a.rows() != a.cols())
    fail(ErrorCode::DimensionMismatch, "factorize needs a square matrix");
  SpectralFactorization f;
  f.vectors = 0.5 * (a + a.transpose());
  f.eigenvalues.resize(n);
  if (n == 0)
    return f;
  const lapack_int info =
    LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, f.vectors.data(), n, f.eigenvalues.data());
  if (info != 0)
    fail(ErrorCode::FactorizationFailure, "dsyevd returned " + std::to_string(info));
  return f;
}

SpectralFactorization factorize(const SpMat &a)
{
  return factorize(Mat(a));
}

double reconstruction_error(const SpectralFactorization &f, const Mat &a)
{
  const Mat r = f.vectors * f.eigenvalues.asDiagonal() * f.vectors.transpose() - a;
  const double n = a.norm();
  return n == 0.0 ? r.norm() : r.norm() / n;
}

double orthonormality_error(const SpectralFactorization &f)
{
  const Index n = f.vectors.cols();
  return (f.vectors.transpose() * f.vectors - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
}

namespace
{

Vec mapped_eigenvalues(const SpectralFactorization &f, const SpectralFn &g)
{
  Vec d(f.eigenvalues.size());
  for (Index i = 0; i < d.size(); ++i)
    d[i] = g(f.eigenvalues[i]);
  return d;
}

void check_psd(const Vec &lambda)
{
  const double scale = lambda.cwiseAbs().maxCoeff();
  if (lambda.size() && lambda.minCoeff() < -1e-10 * std::max(scale, 1.0))
  {
    std::ostringstream os;
    os << "smallest eigenvalue " << lambda.minCoeff() << " is negative";
    fail(ErrorCode::NegativeEigenvalue, os.str());
  }
}

}  // namespace

double SpectralFn::operator()(double lambda) const
{
  lambda = std::max(lambda, 0.0);
  double v = (power == 1.0) ? lambda : (power == 0.0 ? 1.0 : std::pow(lambda, power));
  v = scale * v + shift;
  return inverse ? 1.0 / v : v;
}

Mat fractional_power(const SpectralFactorization &f, double s)
{
  if (s < 0.0)
    fail(ErrorCode::InvalidArgument, "fractional power must be nonnegative");
  check_psd(f.eigenvalues);
  const Vec d = mapped_eigenvalues(f, SpectralFn::pow(s));
  return f.vectors * d.asDiagonal() * f.vectors.transpose();
}

double sobolev_norm(const SpectralFactorization &f, const Vec &u, double sigma)
{
  check_psd(f.eigenvalues);
  const Vec c = f.vectors.transpose() * u;
  double acc = 0.0;
  for (Index i = 0; i < c.size(); ++i)
    acc += std::pow(std::max(f.eigenvalues[i], 0.0), sigma) * c[i] * c[i];
  return std::sqrt(acc);
}

Mat SpectralCalculus::dense(const SpectralFn &g) const
{
  const Index n = size();
  Mat out(n, n);
  for (Index j = 0; j < n; ++j)
    out.col(j) = apply(g, Vec::Unit(n, j));
  return 0.5 * (out + out.transpose());
}

std::string to_string(SpectralBackend b)
{
  switch (b)
  {
    case SpectralBackend::Auto: return "auto";
    case SpectralBackend::Dense: return "dense";
    case SpectralBackend::Sine: return "sine";
    case SpectralBackend::Krylov: return "krylov";
  }
  return "unknown";
}

SpectralBackend spectral_backend_from_string(const std::string &s)
{
  if (s == "auto")
    return SpectralBackend::Auto;
  if (s == "dense")
    return SpectralBackend::Dense;
  if (s == "sine")
    return SpectralBackend::Sine;
  if (s == "krylov")
    return SpectralBackend::Krylov;
  fail(ErrorCode::InvalidArgument, "unknown spectral backend '" + s + "'");
}

namespace
{

class DenseSpectral final : public SpectralCalculus
{
public:
  DenseSpectral(const SpMat &l) : sparse_(l), f_(factorize(l)) { check_psd(f_.eigenvalues); }

  Index size() const override { return f_.eigenvalues.size(); }
  std::string name() const override { return "dense"; }
  Vec apply(const SpectralFn &g, const Vec &x) const override
  {
    const Vec d = mapped_eigenvalues(f_, g);
    return f_.vectors * (d.asDiagonal() * (f_.vectors.transpose() * x));
  }
  double lambda_min() const override { return std::max(f_.eigenvalues[0], 0.0); }
  double lambda_max() const override { return f_.eigenvalues[f_.eigenvalues.size() - 1]; }
  bool has_factorization() const override { return true; }
  Mat dense(const SpectralFn &g) const override
  {
    const Vec d = mapped_eigenvalues(f_, g);
    Mat out = f_.vectors * d.asDiagonal() * f_.vectors.transpose();
    return 0.5 * (out + out.transpose());
  }
  const SpectralFactorization *factorization() const override { return &f_; }
  const SpMat *sparse() const override { return &sparse_; }

private:
  SpMat sparse_;
  SpectralFactorization f_;
};

std::mutex &fftw_planner_mutex()
{
  static std::mutex m;
  return m;
}

class SineSpectral final : public SpectralCalculus
{
public:
  explicit SineSpectral(const Lattice &latt) : latt_(latt)
  {
    if (!latt.algebra().is_abelian())
      fail(ErrorCode::InvalidArgument, "the sine backend diagonalises only abelian Laplacians");
    const int m = latt.dim();
    dims_.resize(m);
    norm_ = 1.0;
    std::vector<Vec> axis(m);
    for (int a = 0; a < m; ++a)
    {
      const int n = latt.extent(a);
      dims_[a] = n;
      norm_ *= 2.0 * (n + 1);
      axis[a].resize(n);
      const double h = latt.spacing(a);
      for (int k = 0; k < n; ++k)
      {
        const double s = std::sin((k + 1) * M_PI / (2.0 * (n + 1)));
        axis[a][k] = 4.0 / (h * h) * s * s;
      }
    }
    lambda_.resize(latt.size());
    std::vector<int> mi(m);
    for (Index p = 0; p < latt.size(); ++p)
    {
      latt.multi_index(p, mi.data());
      double s = 0.0;
      for (int a = 0; a < m; ++a)
        s += axis[a][mi[a]];
      lambda_[p] = s;
    }
    lmin_ = lambda_.minCoeff();
    lmax_ = lambda_.maxCoeff();
  }

  Index size() const override { return lambda_.size(); }
  std::string name() const override { return "sine"; }
  double lambda_min() const override { return lmin_; }
  double lambda_max() const override { return lmax_; }

  Vec apply(const SpectralFn &g, const Vec &x) const override
  {
    const Index n = size();
    double *buf = fftw_alloc_real(n);
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      std::vector<fftw_r2r_kind> kinds(dims_.size(), FFTW_RODFT00);
      plan = fftw_plan_r2r(static_cast<int>(dims_.size()), dims_.data(), buf, buf, kinds.data(), FFTW_ESTIMATE);
    }
    std::copy(x.data(), x.data() + n, buf);
    fftw_execute(plan);
    for (Index p = 0; p < n; ++p)
      buf[p] *= g(lambda_[p]) / norm_;
    fftw_execute(plan);
    Vec y(n);
    std::copy(buf, buf + n, y.data());
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
    fftw_free(buf);
    return y;
  }

  const SpMat *sparse() const override
  {
    std::lock_guard<std::mutex> lock(sparse_mutex_);
    if (!sparse_)
      sparse_ = std::make_unique<SpMat>(sublaplacian(latt_));
    return sparse_.get();
  }

private:
  Lattice latt_;
  std::vector<int> dims_;
  double norm_ = 1.0;
  Vec lambda_;
  double lmin_ = 0.0, lmax_ = 0.0;
  mutable std::mutex sparse_mutex_;
  mutable std::unique_ptr<SpMat> sparse_;
};

class KrylovSpectral final : public SpectralCalculus
{
public:
  KrylovSpectral(SpMat l, double tol) : l_(std::move(l)), tol_(tol)
  {
    // extreme eigenvalues by plain Lanczos, used only for reporting
    const Index n = l_.rows();
    Vec v = Vec::Ones(n).normalized();
    Vec vprev = Vec::Zero(n);
    std::vector<double> alpha, beta;
    double b = 0.0;
    const int steps = static_cast<int>(std::min<Index>(n, 200));
    for (int k = 0; k < steps; ++k)
    {
      Vec w = l_ * v - b * vprev;
      const double a = v.dot(w);
      w -= a * v;
      alpha.push_back(a);
      b = w.norm();
      if (b < 1e-14)
        break;
      beta.push_back(b);
      vprev = v;
      v = w / b;
    }
    const Index k = static_cast<Index>(alpha.size());
    Mat T = Mat::Zero(k, k);
    for (Index i = 0; i < k; ++i)
    {
      T(i, i) = alpha[i];
      if (i + 1 < k)
        T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(T, Eigen::EigenvaluesOnly);
    lmin_ = std::max(es.eigenvalues()[0], 0.0);
    lmax_ = es.eigenvalues()[k - 1];
  }

  Index size() const override { return l_.rows(); }
  std::string name() const override { return "krylov"; }
  double lambda_min() const override { return lmin_; }
  double lambda_max() const override { return lmax_; }
  const SpMat *sparse() const override { return &l_; }
  double last_error() const override { return last_error_; }

  Vec apply(const SpectralFn &g, const Vec &x) const override
  {
    if (g.power == 1.0 && !g.inverse)
      return g.scale * (l_ * x) + g.shift * x;
    if (g.power == 1.0 && g.inverse)
      return cholesky(g.scale, g.shift).solve(x);
    if (g.power == 0.0)
      return x * g(1.0);
    return lanczos_function(g, x);
  }

private:
  const Eigen::SimplicialLLT<SpMat> &cholesky(double scale, double shift) const
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(scale, shift);
    auto it = chol_.find(key);
    if (it != chol_.end())
      return *it->second;
    SpMat a = scale * l_;
    if (shift != 0.0)
    {
      SpMat id(l_.rows(), l_.cols());
      id.setIdentity();
      a += shift * id;
    }
    auto f = std::make_unique<Eigen::SimplicialLLT<SpMat>>(a);
    if (f->info() != Eigen::Success)
      fail(ErrorCode::FactorizationFailure, "sparse Cholesky failed");
    return *chol_.emplace(key, std::move(f)).first->second;
  }

  // f(L) x ~ |x| V_k f(T_k) e_1 with full reorthogonalisation; stops when successive
  // approximations agree to tol.
  Vec lanczos_function(const SpectralFn &g, const Vec &x) const
  {
    const Index n = l_.rows();
    const double xn = x.norm();
    if (xn == 0.0)
      return Vec::Zero(n);
    const int max_steps = static_cast<int>(std::min<Index>(n, 400));
    Mat V(n, max_steps + 1);
    V.col(0) = x / xn;
    std::vector<double> alpha, beta;
    Vec prev;
    double err = 1.0;
    for (int k = 0; k < max_steps; ++k)
    {
      Vec w = l_ * V.col(k);
      const double a = V.col(k).dot(w);
      alpha.push_back(a);
      w -= V.leftCols(k + 1) * (V.leftCols(k + 1).transpose() * w);
      w -= V.leftCols(k + 1) * (V.leftCols(k + 1).transpose() * w);
      const double b = w.norm();
      const bool breakdown = b < 1e-13 * std::max(1.0, std::abs(a));
      const int kk = k + 1;
      if (kk % 8 == 0 || breakdown || kk == max_steps)
      {
        Mat T = Mat::Zero(kk, kk);
        for (int i = 0; i < kk; ++i)
        {
          T(i, i) = alpha[i];
          if (i + 1 < kk)
            T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(T);
        Vec fe(kk);
        for (int i = 0; i < kk; ++i)
          fe[i] = g(es.eigenvalues()[i]) * es.eigenvectors()(0, i);
        const Vec coeff = es.eigenvectors() * fe;
        Vec y = xn * (V.leftCols(kk) * coeff);
        if (prev.size())
        {
          err = (y - prev).norm() / std::max(y.norm(), 1e-300);
          if (err < tol_ || breakdown)
          {
            last_error_ = err;
            return y;
          }
        }
        else if (breakdown)
        {
          last_error_ = 0.0;
          return y;
        }
        prev = std::move(y);
      }
      beta.push_back(b);
      V.col(k + 1) = w / b;
    }
    last_error_ = err;
    if (err > 1e3 * tol_)
      fail(ErrorCode::NonConvergence, "Krylov function evaluation stalled at relative change " + std::to_string(err));
    return prev;
  }

  SpMat l_;
  double tol_;
  double lmin_ = 0.0, lmax_ = 0.0;
  mutable double last_error_ = 0.0;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<double, double>, std::unique_ptr<Eigen::SimplicialLLT<SpMat>>> chol_;
};

}  // namespace

std::shared_ptr<SpectralCalculus> make_dense_spectral(const SpMat &laplacian, Index dense_limit)
{
  if (laplacian.rows() > dense_limit)
    fail(ErrorCode::BudgetExceeded,
         "dense factorisation limited to " + std::to_string(dense_limit) + " nodes, got " + std::to_string(laplacian.rows()));
  return std::make_shared<DenseSpectral>(laplacian);
}

std::shared_ptr<SpectralCalculus> make_sine_spectral(const Lattice &latt)
{
  return std::make_shared<SineSpectral>(latt);
}

std::shared_ptr<SpectralCalculus> make_krylov_spectral(SpMat laplacian, double tol)
{
  return std::make_shared<KrylovSpectral>(std::move(laplacian), tol);
}

std::shared_ptr<SpectralCalculus> make_spectral(const Lattice &latt, SpectralBackend backend, Index dense_limit)
{
  if (backend == SpectralBackend::Auto)
  {
    if (latt.algebra().is_abelian())
      backend = SpectralBackend::Sine;
    else if (latt.size() <= dense_limit)
      backend = SpectralBackend::Dense;
    else
      backend = SpectralBackend::Krylov;
  }
  switch (backend)
  {
    case SpectralBackend::Sine: return make_sine_spectral(latt);
    case SpectralBackend::Dense: return make_dense_spectral(sublaplacian(latt), dense_limit);
    default: return make_krylov_spectral(sublaplacian(latt));
  }
}

}  // namespace carnot
