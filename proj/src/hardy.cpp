#include <carnot/hardy.hpp>

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace carnot
{

std::string to_string(WeightKind k)
{
  switch (k)
  {
    case WeightKind::QuasiNormPower: return "quasi_norm_power";
    case WeightKind::RhoGradient: return "rho_gradient";
    case WeightKind::HorizontalInverse: return "horizontal_inverse";
    case WeightKind::HeisenbergFractional: return "heisenberg_fractional";
  }
  return "unknown";
}

WeightKind weight_kind_from_string(const std::string &s)
{
  if (s == "quasi_norm_power")
    return WeightKind::QuasiNormPower;
  if (s == "rho_gradient")
    return WeightKind::RhoGradient;
  if (s == "horizontal_inverse")
    return WeightKind::HorizontalInverse;
  if (s == "heisenberg_fractional")
    return WeightKind::HeisenbergFractional;
  fail(ErrorCode::InvalidArgument, "unknown weight kind '" + s + "'");
}

double weight_value(const StratifiedAlgebra &alg, const HardyWeight &w, const Vec &x)
{
  switch (w.kind)
  {
    case WeightKind::QuasiNormPower:
    {
      const double r = QuasiNorm(alg, w.quasi_norm)(x);
      if (r == 0.0)
        fail(ErrorCode::OriginSingular, "weight is singular at the identity");
      return std::pow(r, -w.alpha);
    }
    case WeightKind::HeisenbergFractional:
    {
      const double r = heisenberg_rho(alg, x);
      if (r == 0.0)
        fail(ErrorCode::OriginSingular, "weight is singular at the identity");
      return std::pow(r, -w.alpha);
    }
    case WeightKind::RhoGradient: return rho_gradient_weight(alg, x);
    case WeightKind::HorizontalInverse:
    {
      const double n2 = x.head(alg.horizontal_dim()).squaredNorm();
      return n2 == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / n2;
    }
  }
  return 0.0;
}

WeightSample evaluate_weight(const Lattice &latt, const HardyWeight &w)
{
  WeightSample s;
  s.values.resize(latt.size());
  const double cut = 0.5 * latt.spacing(0);
  for (Index p = 0; p < latt.size(); ++p)
  {
    const Vec x = latt.point(p);
    if (w.kind == WeightKind::HorizontalInverse && x.head(latt.algebra().horizontal_dim()).norm() < cut)
    {
      s.values[p] = 0.0;
      ++s.excluded;
      continue;
    }
    const double v = weight_value(latt.algebra(), w, x);
    if (!std::isfinite(v) || v < 0.0)
      fail(ErrorCode::NonFiniteSample, "weight is not finite on the lattice");
    s.values[p] = v;
  }
  return s;
}

double kappa_on_lattice(const Lattice &latt, const SpectralCalculus &calc, double beta, QuasiNormKind qn,
                        const HardyOptions &opt, int *iterations)
{
  const int M = latt.algebra().homogeneous_dimension();
  if (!(beta > 0.0) || beta >= 0.5 * M)
  {
    std::ostringstream os;
    os << "beta = " << beta << " outside (0, M/2) = (0, " << 0.5 * M << ")";
    fail(ErrorCode::OutOfRange, os.str());
  }
  const Vec w = evaluate_weight(latt, {WeightKind::QuasiNormPower, beta, qn}).values;
  const SpectralFn g = SpectralFn::inv_pow(beta);
  const ApplyFn op = [&](const Vec &v) { return Vec(w.cwiseProduct(calc.apply(g, w.cwiseProduct(v)))); };
  const ExtremeEigen top = lanczos_largest(op, latt.size(), opt.lanczos_tol, opt.max_iter, opt.seed);
  if (!top.converged)
    fail(ErrorCode::NonConvergence, "Lanczos for the Hardy norm did not converge");
  if (iterations)
    *iterations = top.iterations;
  return std::sqrt(top.value);
}

namespace
{

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void finish_ladder(HardyEstimate &e, double tol)
{
  const auto &l = e.ladder;
  e.constant = l.back().estimate;
  e.monotone = true;
  bool down = true;
  for (std::size_t i = 1; i < l.size(); ++i)
  {
    if (l[i].estimate < l[i - 1].estimate * (1.0 - 1e-12))
      e.monotone = false;
    if (l[i].estimate > l[i - 1].estimate * (1.0 + 1e-12))
      down = false;
  }
  e.monotone_either = e.monotone || down;
  e.converged = l.size() >= 2 && std::abs(l.back().estimate - l[l.size() - 2].estimate) <= tol * std::abs(l.back().estimate);
}

SpectralBackend resolve_backend(const StratifiedAlgebra &alg, SpectralBackend b, double power)
{
  if (b != SpectralBackend::Auto)
    return b;
  if (alg.is_abelian())
    return SpectralBackend::Sine;
  // sparse -Delta is exact for power one
  if (power == 1.0)
    return SpectralBackend::Krylov;
  return SpectralBackend::Auto;
}

HardyEstimate estimate_kappa(const StratifiedAlgebra &alg, const std::vector<LatticeSpec> &ladder, double beta,
                             QuasiNormKind qn, const HardyOptions &opt)
{
  if (ladder.empty())
    fail(ErrorCode::InvalidArgument, "empty ladder");
  HardyEstimate e;
  e.weight = {WeightKind::QuasiNormPower, beta, qn};
  e.exponent = beta;
  for (const auto &spec : ladder)
  {
    const auto t0 = std::chrono::steady_clock::now();
    const Lattice latt(alg, spec);
    const auto calc = make_spectral(latt, resolve_backend(alg, opt.backend, beta), opt.dense_limit);
    LadderStep s;
    s.radius = spec.radius;
    s.spacing = spec.spacing;
    s.nodes = latt.size();
    s.estimate = kappa_on_lattice(latt, *calc, beta, qn, opt, &s.iterations);
    s.backend = calc->name();
    s.seconds = seconds_since(t0);
    e.ladder.push_back(s);
  }
  finish_ladder(e, opt.ladder_tol);
  return e;
}

double weighted_positivity(const SymOperator &op, const Vec &w, double c, const EigenOptions &opt)
{
  const SymOperator shifted = op.with_diagonal(op.diagonal() - c * w);
  return smallest_eigenpairs(shifted, 1, opt).values[0];
}

OptimalConstant optimal_constant(const SymOperator &op, const Vec &w, const PositivityOptions &opt)
{
  OptimalConstant out;
  if (op.diagonal().cwiseAbs().maxCoeff() != 0.0)
    fail(ErrorCode::InvalidArgument, "optimal constant expects a pure power of -Delta");
  const Vec sw = w.cwiseSqrt();
  const auto calc = op.calculus();
  const SpectralFn inv{op.power(), op.scale(), 0.0, true};
  const ApplyFn pencil = [&](const Vec &v) { return Vec(sw.cwiseProduct(calc->apply(inv, sw.cwiseProduct(v)))); };
  const ExtremeEigen top = lanczos_largest(pencil, op.size(), 1e-10, 3000, opt.eig.seed);
  if (!top.converged)
    fail(ErrorCode::NonConvergence, "pencil Lanczos did not converge");
  out.pencil = 1.0 / top.value;

  EigenOptions eo = opt.eig;
  auto margin = [&](double c) {
    const SymOperator shifted = op.with_diagonal(-c * w);
    const EigenPairs r = smallest_eigenpairs(shifted, 1, eo);
    eo.start = r.vectors;
    ++out.solves;
    return r.values[0];
  };

  double delta = 1e-2;
  double lo = out.pencil * (1.0 - delta), hi = out.pencil * (1.0 + delta);
  for (int guard = 0; margin(lo) < 0.0; ++guard)
  {
    if (guard > 20)
      fail(ErrorCode::NonConvergence, "no certified lower bracket for the optimal constant");
    hi = lo;
    delta *= 4.0;
    lo = out.pencil * std::max(1.0 - delta, 1e-6);
  }
  for (int guard = 0; margin(hi) >= 0.0; ++guard)
  {
    if (guard > 20)
      fail(ErrorCode::NonConvergence, "no refuting upper bracket for the optimal constant");
    lo = hi;
    hi *= 1.0 + delta;
  }
  while ((hi - lo) > opt.rel_tol * hi)
  {
    const double mid = 0.5 * (lo + hi);
    if (margin(mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  out.c = lo;
  out.refuted = hi;
  return out;
}

HardyEstimate estimate_E_alpha(int d, const std::vector<LatticeSpec> &ladder, double alpha, const HardyOptions &opt,
                               const PositivityOptions &popt)
{
  const auto alg = StratifiedAlgebra::heisenberg(d);
  if (!(alpha > 0.0) || alpha >= 2.0 * d + 2.0)
  {
    std::ostringstream os;
    os << "alpha = " << alpha << " outside (0, 2d+2) = (0, " << 2 * d + 2 << ")";
    fail(ErrorCode::OutOfRange, os.str());
  }
  return estimate_weighted_constant(alg, ladder, {WeightKind::HeisenbergFractional, alpha, QuasiNormKind::HeisenbergRho},
                                    opt, popt);
}

HardyEstimate estimate_weighted_constant(const StratifiedAlgebra &alg, const std::vector<LatticeSpec> &ladder,
                                         const HardyWeight &weight, const HardyOptions &opt,
                                         const PositivityOptions &popt)
{
  const double alpha = weight.alpha;
  if (!(alpha > 0.0) || alpha >= alg.homogeneous_dimension())
    fail(ErrorCode::OutOfRange, "alpha outside (0, M)");
  if (ladder.empty())
    fail(ErrorCode::InvalidArgument, "empty ladder");
  HardyEstimate e;
  e.weight = weight;
  e.exponent = alpha;
  for (const auto &spec : ladder)
  {
    const auto t0 = std::chrono::steady_clock::now();
    const Lattice latt(alg, spec);
    const auto calc = make_spectral(latt, resolve_backend(alg, opt.backend, 0.5 * alpha), opt.dense_limit);
    const SymOperator op(calc, 0.5 * alpha, 1.0, Vec::Zero(latt.size()));
    const Vec w = evaluate_weight(latt, e.weight).values;
    const OptimalConstant oc = optimal_constant(op, w, popt);
    LadderStep s;
    s.radius = spec.radius;
    s.spacing = spec.spacing;
    s.nodes = latt.size();
    s.estimate = oc.c;
    s.iterations = oc.solves;
    s.backend = calc->name();
    s.seconds = seconds_since(t0);
    e.ladder.push_back(s);
  }
  finish_ladder(e, opt.ladder_tol);
  return e;
}

WeightComparison compare_weights(const Lattice &latt)
{
  const auto &alg = latt.algebra();
  if (!alg.is_heisenberg())
    fail(ErrorCode::InvalidArgument, "weight comparison needs a Heisenberg lattice");
  WeightComparison out;
  const int M = alg.homogeneous_dimension();
  const int m1 = alg.horizontal_dim();
  out.c1 = 0.5 * (M - 2) * (M - 2);
  out.c2 = 0.5 * (m1 - 2) * (m1 - 2);
  double best1 = 0.0, best2 = 0.0;
  for (Index p = 0; p < latt.size(); ++p)
  {
    const Vec x = latt.point(p);
    const double z2 = x.head(m1).squaredNorm();
    if (z2 == 0.0)
      continue;
    ++out.nodes;
    const double rho2 = std::sqrt(z2 * z2 + x[alg.dim() - 1] * x[alg.dim() - 1]);
    const double grad = rho_gradient_weight(alg, x);
    const double hinv = 1.0 / z2;
    if (1.0 / rho2 <= hinv)
      ++out.rho_below_horizontal;
    if (grad <= hinv)
      ++out.gradient_below_horizontal;
    const double a = out.c1 * grad, b = out.c2 * hinv;
    if (a > b)
    {
      ++out.c1_larger;
      if (a - b > best1)
      {
        best1 = a - b;
        out.witness_c1 = x;
      }
    }
    else if (b > a)
    {
      ++out.c2_larger;
      if (b - a > best2)
      {
        best2 = b - a;
        out.witness_c2 = x;
      }
    }
  }
  return out;
}

}  // namespace carnot
