#include <carnot/diagnostics.hpp>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace carnot
{

OperatorTriple assemble_hamiltonian(const Lattice &latt, double alpha, const Potential &v, const AssemblyOptions &opt)
{
  const auto &alg = latt.algebra();
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    fail(ErrorCode::OutOfRange, "alpha must be positive");
  const Index n = latt.size();
  Vec V(n), EV(n), EEV(n);
  for (Index p = 0; p < n; ++p)
  {
    const Vec x = latt.point(p);
    V[p] = v.value(x);
    EV[p] = euler_derivative(alg, v, x, 1);
    EEV[p] = euler_derivative(alg, v, x, 2);
    if (!std::isfinite(V[p]) || !std::isfinite(EV[p]) || !std::isfinite(EEV[p]))
      fail(ErrorCode::NonFiniteSample, "potential or its Euler derivatives are not finite on the lattice");
  }
  std::shared_ptr<const SpectralCalculus> calc = make_spectral(latt, resolve_backend(alg, opt.backend, 0.5 * alpha), opt.dense_limit);
  const double p = 0.5 * alpha;
  return {alpha,
          calc,
          SymOperator(calc, p, 1.0, V),
          SymOperator(calc, p, alpha, -EV),
          SymOperator(calc, p, alpha * alpha, EEV),
          V,
          EV,
          EEV,
          generator_iA(latt)};
}

CommutatorCheck verify_commutator(const Lattice &latt, const OperatorTriple &tr, const Vec &u, double t,
                                  Interpolation mode)
{
  if (u.size() != latt.size())
    fail(ErrorCode::DimensionMismatch, "trial vector length differs from the lattice");
  if (!(t > 0.0))
    fail(ErrorCode::InvalidArgument, "dilation step must be positive");
  const double umax = u.cwiseAbs().maxCoeff();
  for (Index p = 0; p < latt.size(); ++p)
    if (latt.boundary_distance(p) <= 4 && std::abs(u[p]) > 1e-12 * umax)
      fail(ErrorCode::SupportViolation, "trial vector reaches within 4 nodes of the boundary");

  CommutatorCheck c;
  c.t = t;
  const Vec Hu = tr.H.apply(u);
  c.form_K = u.dot(tr.K.apply(u));
  c.commutator = 2.0 * Hu.dot(tr.iA * u);

  auto f = [&](double s) {
    const Vec w = DilationPullback(latt, s, mode).apply(u);
    return w.dot(tr.H.apply(w));
  };
  c.dilation = (f(t) - f(-t)) / (2.0 * t);
  c.dilation_limit = 2.0 * Hu.dot(spline_dilation_generator(latt, u));

  const double a = std::abs(c.form_K);
  c.defect_ac = std::abs(c.form_K - c.commutator) / a;
  c.defect_ab = std::abs(c.form_K - c.dilation) / a;
  c.defect_bc = std::abs(c.dilation - c.commutator) / a;
  c.defect_b = std::abs(c.dilation - c.dilation_limit) / std::abs(c.dilation_limit);
  return c;
}

double positivity_margin(const OperatorTriple &tr, const Vec &w, double eps, const EigenOptions &opt)
{
  if (w.size() != tr.K.size())
    fail(ErrorCode::DimensionMismatch, "weight length differs from the operator");
  return weighted_positivity(tr.K, w, eps, opt);
}

Domination second_commutator_domination(const OperatorTriple &tr, double tol)
{
  const auto &calc = *tr.calc;
  const double p = 0.5 * tr.alpha;
  const double lmin = std::pow(calc.lambda_min(), p), lmax = std::pow(calc.lambda_max(), p);
  if (!(lmin > tol * lmax))
    fail(ErrorCode::PencilSingular, "L^alpha has a numerical kernel");
  // B^{-T} K2 B^{-1} with B^T B = L^{alpha/2}, symmetric with the pencil's eigenvalues. Integer
  // powers over a sparse backend factor L^p by sparse Cholesky; otherwise B = L^{alpha/4}.
  const SpectralFn half = SpectralFn::inv_pow(0.5 * p);
  ApplyFn t;
  Eigen::SimplicialLLT<SpMat> llt;
  if (calc.sparse() && p == std::round(p) && p <= 4.0)
  {
    SpMat lp = *calc.sparse();
    for (int k = 1; k < static_cast<int>(p); ++k)
      lp = SpMat(lp * *calc.sparse());
    llt.compute(lp);
    if (llt.info() != Eigen::Success)
      fail(ErrorCode::PencilSingular, "Cholesky of L^alpha failed");
    t = [&](const Vec &x) {
      const Vec y = llt.permutationPinv() * Vec(llt.matrixU().solve(x));
      return Vec(llt.matrixL().solve(llt.permutationP() * tr.K2.apply(y)));
    };
  }
  else
    t = [&](const Vec &x) { return calc.apply(half, tr.K2.apply(calc.apply(half, x))); };
  const ApplyFn neg = [&](const Vec &x) { return Vec(-t(x)); };
  const Index n = tr.K2.size();
  const ExtremeEigen hi = lanczos_largest(t, n, 1e-10, 2000, 3);
  const ExtremeEigen lo = lanczos_largest(neg, n, 1e-10, 2000, 4);
  if (!hi.converged || !lo.converged)
    fail(ErrorCode::NonConvergence, "pencil extremes did not converge");
  Domination d;
  d.upper = hi.value;
  d.lower = -lo.value;
  d.C = std::max(std::abs(d.upper), std::abs(d.lower));
  d.finite = std::isfinite(d.C);
  return d;
}

std::string to_string(LapClass c)
{
  switch (c)
  {
    case LapClass::Bounded: return "bounded";
    case LapClass::Divergent: return "divergent";
    case LapClass::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

std::vector<double> geometric_schedule(double hi, double lo, int n)
{
  if (!(hi > lo) || !(lo > 0.0) || n < 2)
    fail(ErrorCode::InvalidArgument, "geometric schedule needs hi > lo > 0 and n >= 2");
  std::vector<double> s(n);
  for (int k = 0; k < n; ++k)
    s[k] = hi * std::pow(lo / hi, double(k) / (n - 1));
  return s;
}

namespace
{

using Cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

double median_gap(const Vec &ev)
{
  std::vector<double> gaps;
  for (Index i = 1; i < ev.size(); ++i)
    gaps.push_back(ev[i] - ev[i - 1]);
  if (gaps.empty())
    return 0.0;
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  return gaps[gaps.size() / 2];
}

// least-squares slope of log(value) against log(eps)
double loglog_slope(const std::vector<double> &eps, const std::vector<double> &val)
{
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < eps.size(); ++i)
  {
    if (!(val[i] > 0.0))
      continue;
    const double x = std::log(eps[i]), y = std::log(val[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2)
    return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

LapResult lap_probe(const SymOperator &H, const Vec &u, const std::vector<double> &lambdas,
                    const std::vector<double> &eps_schedule, const LapOptions &opt)
{
  const Index n = H.size();
  if (u.size() != n)
    fail(ErrorCode::DimensionMismatch, "probe vector length differs from the operator");
  const bool sparse = H.has_sparse();
  if (!sparse && n > opt.dense_limit)
    fail(ErrorCode::SolveFailure, "no shifted-solve path: fractional operator above the dense limit");

  LapResult out;
  Mat dense;
  if (!sparse)
    dense = H.dense();
  if (opt.eps_floor < 0.0)
  {
    if (n <= opt.dense_limit)
      out.eps_floor = median_gap(factorize(sparse ? Mat(H.sparse()) : dense).eigenvalues) / 10.0;
    else
      out.eps_floor = (H.norm_estimate() - H.calculus()->lambda_min()) / double(n) / 10.0;
  }
  else
    out.eps_floor = opt.eps_floor;

  std::vector<double> eps;
  for (double e : eps_schedule)
  {
    if (!(e > 0.0))
      fail(ErrorCode::InvalidArgument, "eps schedule must be positive");
    (e >= out.eps_floor ? eps : out.dropped_eps).push_back(e);
  }

  const CVec cu = u.cast<Cplx>();
  Eigen::SparseMatrix<Cplx> hs;
  if (sparse)
    hs = H.sparse().cast<Cplx>();
  for (double lambda : lambdas)
  {
    LapCurve c;
    c.lambda = lambda;
    c.eps = eps;
    for (double e : eps)
    {
      const Cplx z(lambda, e);
      CVec x;
      if (sparse)
      {
        Eigen::SparseMatrix<Cplx> a = hs;
        for (Index i = 0; i < n; ++i)
          a.coeffRef(i, i) -= z;
        Eigen::SparseLU<Eigen::SparseMatrix<Cplx>> lu;
        lu.compute(a);
        if (lu.info() != Eigen::Success)
          fail(ErrorCode::SolveFailure, "sparse LU of the shifted operator failed");
        x = lu.solve(cu);
      }
      else
      {
        CMat a = dense.cast<Cplx>();
        a.diagonal().array() -= z;
        x = a.partialPivLu().solve(cu);
      }
      if (!x.allFinite())
        fail(ErrorCode::SolveFailure, "shifted solve produced non-finite values");
      c.values.push_back(cu.dot(x).imag());
    }
    c.slope = loglog_slope(c.eps, c.values);
    if (std::isnan(c.slope))
      c.classification = LapClass::Inconclusive;
    else if (c.slope > -0.2)
      c.classification = LapClass::Bounded;
    else if (c.slope < -0.8)
      c.classification = LapClass::Divergent;
    else
      c.classification = LapClass::Inconclusive;
    out.curves.push_back(std::move(c));
  }
  return out;
}

double SpectralMeasure::mass(double a, double b) const
{
  double m = 0.0;
  for (Index i = 0; i < atoms.size(); ++i)
    if (atoms[i] >= a && atoms[i] < b)
      m += weights[i];
  return m;
}

SpectralMeasure spectral_measure(const SymOperator &H, const Vec &u)
{
  if (u.size() != H.size())
    fail(ErrorCode::DimensionMismatch, "vector length differs from the operator");
  const SpectralFactorization f = factorize(H.dense());
  SpectralMeasure m;
  m.atoms = f.eigenvalues;
  m.weights = (f.vectors.transpose() * u).array().square();
  m.total = m.weights.sum();
  return m;
}

int PersistenceReport::persistent_count() const
{
  return static_cast<int>(std::count_if(tracks.begin(), tracks.end(), [](const Track &t) { return t.persistent; }));
}

namespace
{

LevelSpectrum level_spectrum(const Lattice &latt, const SymOperator &H, const PersistenceOptions &opt)
{
  LevelSpectrum s;
  s.spec = latt.spec();
  s.nodes = latt.size();
  Vec values;
  Mat vectors;
  if (latt.size() <= opt.eig.dense_limit)
  {
    const SpectralFactorization f = factorize(H.dense());
    values = f.eigenvalues;
    vectors = f.vectors;
  }
  else
  {
    EigenOptions eo = opt.eig;
    for (int k = opt.initial_k;; k *= 2)
    {
      k = static_cast<int>(std::min<Index>(k, latt.size()));
      const EigenPairs r = smallest_eigenpairs(H, k, eo);
      values = r.values;
      vectors = r.vectors;
      if (values[k - 1] > opt.window_hi || k == latt.size())
        break;
      if (2 * k > opt.max_k)
        fail(ErrorCode::BudgetExceeded, "more than max_k eigenvalues inside the window");
    }
  }
  for (Index i = 0; i < values.size(); ++i)
  {
    if (values[i] < opt.window_lo || values[i] >= opt.window_hi)
      continue;
    double in = 0.0, all = 0.0;
    for (Index p = 0; p < latt.size(); ++p)
    {
      const double w = vectors(p, i) * vectors(p, i);
      all += w;
      if (latt.boundary_distance(p) > 2)
        in += w;
    }
    s.values.push_back(values[i]);
    s.interior_mass.push_back(in / all);
  }
  return s;
}

}  // namespace

PersistenceReport eigenvalue_persistence(const StratifiedAlgebra &alg, const std::vector<LatticeSpec> &ladder,
                                         const HamiltonianBuilder &build, const PersistenceOptions &opt)
{
  if (ladder.size() < 2)
    fail(ErrorCode::InvalidArgument, "persistence needs at least two ladder levels");
  PersistenceReport rep;
  for (const auto &spec : ladder)
  {
    const Lattice latt(alg, spec);
    rep.levels.push_back(level_spectrum(latt, build(latt), opt));
  }

  const std::size_t L = rep.levels.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  // track index of each value, per level
  std::vector<std::vector<int>> owner(L);
  for (std::size_t l = 0; l < L; ++l)
    owner[l].assign(rep.levels[l].values.size(), -1);
  for (std::size_t i = 0; i < rep.levels[0].values.size(); ++i)
  {
    Track t;
    t.values.assign(L, nan);
    t.values[0] = rep.levels[0].values[i];
    owner[0][i] = static_cast<int>(rep.tracks.size());
    rep.tracks.push_back(std::move(t));
  }
  for (std::size_t l = 0; l + 1 < L; ++l)
  {
    const auto &next = rep.levels[l + 1].values;
    for (std::size_t i = 0; i < rep.levels[l].values.size(); ++i)
    {
      const int tr = owner[l][i];
      if (tr < 0)
        continue;
      const double lam = rep.levels[l].values[i];
      int pick = -1;
      for (std::size_t j = 0; j < next.size(); ++j)
      {
        if (owner[l + 1][j] >= 0)
          continue;
        if (std::abs(next[j] - lam) <= opt.cauchy_tol * std::max(std::abs(lam), std::abs(next[j])))
        {
          if (pick >= 0)
            fail(ErrorCode::MatchingAmbiguous, "two eigenvalues within the Cauchy band of " + std::to_string(lam));
          pick = static_cast<int>(j);
        }
      }
      if (pick >= 0)
      {
        owner[l + 1][pick] = tr;
        rep.tracks[tr].values[l + 1] = next[pick];
      }
    }
    // unmatched values open new tracks
    for (std::size_t j = 0; j < next.size(); ++j)
      if (owner[l + 1][j] < 0)
      {
        Track t;
        t.values.assign(L, nan);
        t.values[l + 1] = next[j];
        owner[l + 1][j] = static_cast<int>(rep.tracks.size());
        rep.tracks.push_back(std::move(t));
      }
  }

  for (std::size_t k = 0; k < rep.tracks.size(); ++k)
  {
    auto &t = rep.tracks[k];
    bool ok = std::none_of(t.values.begin(), t.values.end(), [](double v) { return std::isnan(v); });
    for (std::size_t l = 0; ok && l < L; ++l)
      for (std::size_t j = 0; j < owner[l].size(); ++j)
        if (owner[l][j] == static_cast<int>(k) && rep.levels[l].interior_mass[j] < opt.interior_mass)
          ok = false;
    t.persistent = ok;
    t.verdict = ok ? "persistent" : "discretization artifact";
  }
  return rep;
}

HamiltonianBuilder schrodinger_builder(const Potential &v, double alpha, const AssemblyOptions &opt)
{
  return [v, alpha, opt](const Lattice &latt) {
    std::shared_ptr<const SpectralCalculus> calc =
        make_spectral(latt, resolve_backend(latt.algebra(), opt.backend, 0.5 * alpha), opt.dense_limit);
    return SymOperator(calc, 0.5 * alpha, 1.0, sample(latt, v.value));
  };
}

}  // namespace carnot
