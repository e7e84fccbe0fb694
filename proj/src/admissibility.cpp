#include <carnot/admissibility.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace carnot
{

std::string to_string(CriterionKind k)
{
  switch (k)
  {
    case CriterionKind::Thm2_1: return "thm2_1";
    case CriterionKind::Thm4_1: return "thm4_1";
    case CriterionKind::Thm4_2: return "thm4_2";
    case CriterionKind::Thm4_4: return "thm4_4";
    case CriterionKind::Combined: return "combined";
  }
  return "unknown";
}

CriterionKind criterion_from_string(const std::string &s)
{
  for (auto k : {CriterionKind::Thm2_1, CriterionKind::Thm4_1, CriterionKind::Thm4_2, CriterionKind::Thm4_4,
                 CriterionKind::Combined})
    if (s == to_string(k))
      return k;
  fail(ErrorCode::InvalidArgument, "unknown criterion '" + s + "'");
}

void validate_criterion(const StratifiedAlgebra &alg, const Criterion &c)
{
  const int M = alg.homogeneous_dimension();
  switch (c.kind)
  {
    case CriterionKind::Thm2_1:
      if (!(c.alpha > 0.0) || c.alpha >= M)
        fail(ErrorCode::OutOfRange, "thm2_1 needs alpha in (0, M) = (0, " + std::to_string(M) + ")");
      break;
    case CriterionKind::Thm4_1:
      if (!alg.is_heisenberg())
        fail(ErrorCode::InvalidArgument, "thm4_1 needs the closed-form rho (Heisenberg algebras)");
      if (M < 3)
        fail(ErrorCode::InvalidArgument, "thm4_1 needs M >= 3");
      break;
    case CriterionKind::Thm4_2:
      if (alg.horizontal_dim() < 3)
        fail(ErrorCode::InvalidArgument, "thm4_2 needs m1 >= 3 (the horizontal Hardy constant vanishes at m1 = 2)");
      break;
    case CriterionKind::Thm4_4:
    {
      if (!alg.is_heisenberg())
        fail(ErrorCode::InvalidArgument, "thm4_4 needs a Heisenberg algebra");
      if (!(c.alpha > 0.0) || c.alpha >= M)
        fail(ErrorCode::OutOfRange, "thm4_4 needs alpha in (0, 2d+2) = (0, " + std::to_string(M) + ")");
      break;
    }
    case CriterionKind::Combined:
    {
      if (!alg.is_heisenberg())
        fail(ErrorCode::InvalidArgument, "combined criterion needs the closed-form rho (Heisenberg algebras)");
      if (M < 3)
        fail(ErrorCode::InvalidArgument, "combined criterion needs M >= 3");
      double s = 0.0;
      for (double t : c.theta)
      {
        if (!(t > 0.0))
          fail(ErrorCode::InvalidArgument, "theta entries must be positive");
        s += t;
      }
      if (!(s < 1.0))
        fail(ErrorCode::InvalidArgument, "theta1+theta2+theta3 < 1 required");
      break;
    }
  }
}

namespace
{

double horizontal_inverse(const StratifiedAlgebra &alg, const Vec &x)
{
  const double n2 = x.head(alg.horizontal_dim()).squaredNorm();
  return n2 == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / n2;
}

double hardy_c1(const StratifiedAlgebra &alg)
{
  const double M = alg.homogeneous_dimension();
  return 0.5 * (M - 2.0) * (M - 2.0);
}

double hardy_c2(const StratifiedAlgebra &alg)
{
  const double m1 = alg.horizontal_dim();
  return 0.5 * (m1 - 2.0) * (m1 - 2.0);
}

double need(const std::optional<double> &v, const char *what)
{
  if (!v)
    fail(ErrorCode::MissingConstant, std::string("criterion needs ") + what);
  if (!(*v > 0.0) || !std::isfinite(*v))
    fail(ErrorCode::InvalidArgument, std::string(what) + " must be positive and finite");
  return *v;
}

// The three Combined terms without thetas.
std::array<double, 3> combined_terms(const StratifiedAlgebra &alg, const Criterion &c, const HardyConstants &k,
                                     const Vec &x)
{
  const double kappa = need(k.kappa, "kappa_2");
  const double q = QuasiNorm(alg, c.quasi_norm)(x);
  return {2.0 / (kappa * kappa) / (q * q), hardy_c1(alg) * rho_gradient_weight(alg, x),
          hardy_c2(alg) == 0.0 ? 0.0 : hardy_c2(alg) * horizontal_inverse(alg, x)};
}

}  // namespace

double criterion_weight(const StratifiedAlgebra &alg, const Criterion &c, const HardyConstants &k, const Vec &x)
{
  switch (c.kind)
  {
    case CriterionKind::Thm2_1: return std::pow(QuasiNorm(alg, c.quasi_norm)(x), -c.alpha);
    case CriterionKind::Thm4_1: return rho_gradient_weight(alg, x);
    case CriterionKind::Thm4_2: return horizontal_inverse(alg, x);
    case CriterionKind::Thm4_4: return std::pow(heisenberg_rho(alg, x), -c.alpha);
    case CriterionKind::Combined:
    {
      const auto t = combined_terms(alg, c, k, x);
      return c.theta[0] * t[0] + c.theta[1] * t[1] + c.theta[2] * t[2];
    }
  }
  return 0.0;
}

double criterion_constant(const StratifiedAlgebra &alg, const Criterion &c, const HardyConstants &k)
{
  switch (c.kind)
  {
    case CriterionKind::Thm2_1:
    {
      const double kappa = need(k.kappa, "kappa_alpha");
      return c.alpha / (kappa * kappa);
    }
    case CriterionKind::Thm4_1: return hardy_c1(alg);
    case CriterionKind::Thm4_2: return hardy_c2(alg);
    case CriterionKind::Thm4_4: return need(k.E_alpha, "E_alpha");
    case CriterionKind::Combined: need(k.kappa, "kappa_2"); return 1.0;
  }
  return 0.0;
}

AdmissibilityReport check_admissibility(const StratifiedAlgebra &alg, const Potential &v, const Criterion &c,
                                        const std::vector<Vec> &cloud, const HardyConstants &k)
{
  validate_criterion(alg, c);
  if (cloud.empty())
    fail(ErrorCode::InvalidArgument, "empty sample cloud");
  AdmissibilityReport r;
  r.criterion = c;
  r.constant = criterion_constant(alg, c, k);
  r.cloud_size = static_cast<Index>(cloud.size());

  std::vector<WorstPoint> ratios;
  ratios.reserve(cloud.size());
  for (const auto &x : cloud)
  {
    if (x.isZero(0.0))
      fail(ErrorCode::OriginSingular, "sample cloud contains the identity");
    const double val = v.value(x);
    const double e1 = euler_derivative(alg, v, x, 1);
    const double e2 = euler_derivative(alg, v, x, 2);
    if (!std::isfinite(val) || !std::isfinite(e1) || !std::isfinite(e2))
      fail(ErrorCode::NonFiniteSample, "potential or its Euler derivatives are not finite on the cloud");
    r.sup_V = std::max(r.sup_V, std::abs(val));
    r.sup_EV = std::max(r.sup_EV, std::abs(e1));

    const double w = criterion_weight(alg, c, k, x);
    const double ratio = std::isinf(w) ? 0.0 : std::abs(e1) / w;
    ratios.push_back({x, ratio});

    // condition (ii): the terms combine with arbitrary constants, so B is measured against their sum
    double w2 = w;
    if (c.kind == CriterionKind::Combined)
    {
      const auto t = combined_terms(alg, c, k, x);
      w2 = t[0] + t[1] + t[2];
    }
    const double b = std::isinf(w2) ? 0.0 : std::abs(e2) / w2;
    r.B_estimate = std::max(r.B_estimate, b);
  }
  const std::size_t keep = std::min<std::size_t>(5, ratios.size());
  std::partial_sort(ratios.begin(), ratios.begin() + keep, ratios.end(),
                    [](const WorstPoint &a, const WorstPoint &b) { return a.ratio > b.ratio; });
  r.worst_points.assign(ratios.begin(), ratios.begin() + keep);
  r.worst_ratio = r.worst_points.front().ratio;
  r.epsilon_margin = r.constant - r.worst_ratio;
  r.threshold = r.worst_ratio > 0.0 ? r.constant / r.worst_ratio : std::numeric_limits<double>::infinity();
  r.side_conditions = std::isfinite(r.sup_V) && std::isfinite(r.sup_EV) &&
                      (!v.bounded_claim || r.sup_V <= *v.bounded_claim * (1.0 + 1e-12));
  r.verdict = r.epsilon_margin > 0.0 && std::isfinite(r.B_estimate) && r.side_conditions;
  return r;
}

std::vector<Vec> default_cloud(const StratifiedAlgebra &alg, const LatticeSpec &spec, int count, double rmin,
                               double rmax, unsigned seed, QuasiNormKind qn)
{
  if (!spec.offset)
    fail(ErrorCode::InvalidArgument, "the default cloud uses offset lattice nodes");
  if (!(rmin > 0.0) || !(rmax > rmin) || count < 0)
    fail(ErrorCode::InvalidArgument, "cloud radii must satisfy 0 < rmin < rmax");
  const Lattice latt(alg, spec);
  std::vector<Vec> pts;
  pts.reserve(latt.size() + count);
  for (Index p = 0; p < latt.size(); ++p)
    pts.push_back(latt.point(p));

  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  const QuasiNorm norm(alg, qn);
  for (int i = 0; i < count; ++i)
  {
    Vec y(alg.dim());
    for (auto &c : y)
      c = g(rng);
    const double lr = count > 1 ? std::log(rmin) + (std::log(rmax) - std::log(rmin)) * i / (count - 1) : std::log(rmin);
    pts.push_back(alg.dilate(lr - std::log(norm(y)), y));
  }
  return pts;
}

}  // namespace carnot
