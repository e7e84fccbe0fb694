#include <carnot/expression.hpp>
#include <carnot/potential.hpp>

#include <cmath>
#include <memory>
#include <random>

namespace carnot
{

double orbit_derivative(const StratifiedAlgebra &alg, const ScalarField &f, const Vec &x, int order)
{
  if (x.isZero(0.0))
    fail(ErrorCode::OriginSingular, "Euler derivative at the identity");
  auto at = [&](double s) {
    const double v = f(alg.dilate(s, x));
    if (!std::isfinite(v))
      fail(ErrorCode::NonFiniteSample, "field is not finite on the dilation orbit");
    return v;
  };
  if (order == 1)
  {
    auto d = [&](double h) { return (at(h) - at(-h)) / (2.0 * h); };
    const double h = 1e-5;
    return (4.0 * d(0.5 * h) - d(h)) / 3.0;
  }
  if (order == 2)
  {
    const double f0 = at(0.0);
    auto d = [&](double h) { return (at(h) - 2.0 * f0 + at(-h)) / (h * h); };
    const double h = 1e-3;
    return (4.0 * d(0.5 * h) - d(h)) / 3.0;
  }
  fail(ErrorCode::InvalidArgument, "Euler derivative order must be 1 or 2");
}

double euler_derivative(const StratifiedAlgebra &alg, const Potential &v, const Vec &x, int order)
{
  if (x.isZero(0.0))
    fail(ErrorCode::OriginSingular, "Euler derivative at the identity");
  if (order == 1)
    return v.euler1 ? v.euler1(x) : orbit_derivative(alg, v.value, x, 1);
  if (order == 2)
  {
    if (v.euler2)
      return v.euler2(x);
    if (v.euler1)
      return orbit_derivative(alg, v.euler1, x, 1);
    return orbit_derivative(alg, v.value, x, 2);
  }
  fail(ErrorCode::InvalidArgument, "Euler derivative order must be 1 or 2");
}

double euler_from_gradient(const StratifiedAlgebra &alg, const Vec &x, const Vec &grad)
{
  const Mat a = alg.field_coefficients(x);
  double e = 0.0;
  for (int j = 0; j < alg.dim(); ++j)
    e += alg.weight(j) * x[j] * a.row(j).dot(grad);
  return e;
}

namespace
{

std::vector<Vec> probe_points(const StratifiedAlgebra &alg)
{
  std::mt19937 rng(17);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> logr(std::log(0.3), std::log(3.0));
  const QuasiNorm qn(alg, QuasiNormKind::PowerSum);
  std::vector<Vec> pts;
  for (int i = 0; i < 16; ++i)
  {
    Vec y(alg.dim());
    for (auto &v : y)
      v = g(rng);
    pts.push_back(alg.dilate(logr(rng) - std::log(qn(y)), y));
  }
  return pts;
}

void check_against_orbit(const StratifiedAlgebra &alg, const std::string &name, const ScalarField &analytic,
                         const ScalarField &base, int order, const std::vector<Vec> &pts)
{
  std::vector<double> a, fd;
  double scale = 0.0;
  for (const auto &x : pts)
  {
    a.push_back(analytic(x));
    fd.push_back(orbit_derivative(alg, base, x, order));
    scale = std::max(scale, std::abs(a.back()));
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - fd[i]) > 1e-6 * std::max(std::abs(a[i]), 1e-3 * scale) + 1e-12)
      fail(ErrorCode::ValidationError, "potential '" + name + "': analytic Euler derivative of order " +
                                         std::to_string(order) + " disagrees with the orbit difference (" +
                                         std::to_string(a[i]) + " vs " + std::to_string(fd[i]) + ")");
}

}  // namespace

Potential make_potential(const StratifiedAlgebra &alg, std::string name, ScalarField value, ScalarField euler1,
                         ScalarField euler2, std::optional<double> bounded_claim)
{
  if (!value)
    fail(ErrorCode::InvalidArgument, "potential needs a value callback");
  Potential v{std::move(name), std::move(value), std::move(euler1), std::move(euler2), bounded_claim};
  const auto pts = probe_points(alg);
  if (v.euler1)
    check_against_orbit(alg, v.name, v.euler1, v.value, 1, pts);
  if (v.euler2)
  {
    // one orbit difference of the analytic EV when available keeps the check at 1e-6
    if (v.euler1)
      check_against_orbit(alg, v.name, v.euler2, v.euler1, 1, pts);
    else
      check_against_orbit(alg, v.name, v.euler2, v.value, 2, pts);
  }
  return v;
}

Potential zero_potential()
{
  const ScalarField z = [](const Vec &) { return 0.0; };
  return {"zero", z, z, z, 0.0};
}

std::vector<std::string> profile_names()
{
  return {"inverse_quadratic", "negative_inverse_quadratic", "constant", "log_oscillation"};
}

Profile profile_by_name(const std::string &name)
{
  if (name == "inverse_quadratic" || name == "negative_inverse_quadratic")
  {
    const double s = name == "inverse_quadratic" ? 1.0 : -1.0;
    return {name, [s](double t) { return s / (1.0 + t * t); },
            [s](double t) { return -2.0 * s * t / std::pow(1.0 + t * t, 2); },
            [s](double t) { return s * (6.0 * t * t - 2.0) / std::pow(1.0 + t * t, 3); }};
  }
  if (name == "constant")
    return {name, [](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
  if (name == "log_oscillation")
  {
    // U = cos(g), g = log(1+t^2): no decay in t, but tU' and t^2 U'' stay bounded
    return {name, [](double t) { return std::cos(std::log1p(t * t)); },
            [](double t) { return -std::sin(std::log1p(t * t)) * 2.0 * t / (1.0 + t * t); },
            [](double t) {
              const double q = 1.0 + t * t, g = std::log1p(t * t);
              const double g1 = 2.0 * t / q, g2 = 2.0 * (1.0 - t * t) / (q * q);
              return -std::cos(g) * g1 * g1 - std::sin(g) * g2;
            }};
  }
  fail(ErrorCode::InvalidArgument, "unknown profile '" + name + "'");
}

Potential heisenberg_profile_potential(const StratifiedAlgebra &alg, double gamma, const Profile &u)
{
  if (!alg.is_heisenberg())
    fail(ErrorCode::InvalidArgument, "profile potential needs a Heisenberg algebra");
  const int m1 = alg.horizontal_dim();
  const int it = alg.dim() - 1;
  auto value = [=](const Vec &x) { return gamma * u.u(x[it]) / (1.0 + x.head(m1).squaredNorm()); };
  auto e1 = [=](const Vec &x) {
    const double q = x.head(m1).squaredNorm(), t = x[it];
    return 2.0 * gamma / (1.0 + q) * (t * u.du(t) - q / (1.0 + q) * u.u(t));
  };
  auto e2 = [=](const Vec &x) {
    const double q = x.head(m1).squaredNorm(), t = x[it];
    const double p = 1.0 + q;
    const double tu1 = t * u.du(t), t2u2 = t * t * u.d2u(t), U = u.u(t);
    return 4.0 * gamma *
           ((tu1 + t2u2) / p - 2.0 * q * tu1 / (p * p) - q * U / (p * p) + 2.0 * q * q * U / (p * p * p));
  };
  // every catalogue profile has sup |U| = 1
  return make_potential(alg, "heisenberg_profile:" + u.name, value, e1, e2, std::abs(gamma));
}

Potential smoothed_power_potential(const StratifiedAlgebra &alg, double c, double alpha, double a, QuasiNormKind qn)
{
  if (!(alpha > 0.0) || a < 0.0)
    fail(ErrorCode::InvalidArgument, "smoothed power needs alpha > 0 and a >= 0");
  const auto norm = std::make_shared<QuasiNorm>(alg, qn);
  auto value = [=](const Vec &x) {
    const double s = (*norm)(x);
    return c * std::pow(s * s + a * a, -0.5 * alpha);
  };
  auto e1 = [=](const Vec &x) {
    const double s = (*norm)(x), w = s * s + a * a;
    return -c * alpha * s * s * std::pow(w, -0.5 * alpha - 1.0);
  };
  auto e2 = [=](const Vec &x) {
    const double s = (*norm)(x), w = s * s + a * a;
    return -c * alpha *
           (2.0 * s * s * std::pow(w, -0.5 * alpha - 1.0) - (alpha + 2.0) * std::pow(s, 4) * std::pow(w, -0.5 * alpha - 2.0));
  };
  std::optional<double> bound;
  if (a > 0.0)
    bound = std::abs(c) * std::pow(a, -alpha);
  return make_potential(alg, "smoothed_power", value, e1, e2, bound);
}

Potential well_potential(const StratifiedAlgebra &alg, double eta, double width)
{
  if (!(width > 0.0))
    fail(ErrorCode::InvalidArgument, "well width must be positive");
  (void)alg;
  auto value = [=](const Vec &x) { return x.cwiseAbs().maxCoeff() <= width ? -eta : 0.0; };
  // EV vanishes off the box boundary
  const ScalarField z = [](const Vec &) { return 0.0; };
  return {"well", value, z, z, std::abs(eta)};
}

Potential expression_potential(const StratifiedAlgebra &alg, const std::string &text)
{
  const auto e = std::make_shared<Expression>(alg, text);
  return make_potential(alg, "expression:" + text, [e](const Vec &x) { return (*e)(x); });
}

Potential scaled(const Potential &v, double gamma)
{
  Potential out;
  out.name = v.name;
  out.value = [f = v.value, gamma](const Vec &x) { return gamma * f(x); };
  if (v.euler1)
    out.euler1 = [f = v.euler1, gamma](const Vec &x) { return gamma * f(x); };
  if (v.euler2)
    out.euler2 = [f = v.euler2, gamma](const Vec &x) { return gamma * f(x); };
  if (v.bounded_claim)
    out.bounded_claim = std::abs(gamma) * *v.bounded_claim;
  return out;
}

Potential sum(const Potential &a, const Potential &b)
{
  Potential out;
  out.name = a.name + "+" + b.name;
  out.value = [f = a.value, g = b.value](const Vec &x) { return f(x) + g(x); };
  // mixing analytic and orbit paths would hide one of them, so keep analytic only when both have it
  if (a.euler1 && b.euler1)
    out.euler1 = [f = a.euler1, g = b.euler1](const Vec &x) { return f(x) + g(x); };
  if (a.euler2 && b.euler2)
    out.euler2 = [f = a.euler2, g = b.euler2](const Vec &x) { return f(x) + g(x); };
  if (a.bounded_claim && b.bounded_claim)
    out.bounded_claim = *a.bounded_claim + *b.bounded_claim;
  return out;
}

Vec unit_direction(const StratifiedAlgebra &alg, const Vec &x, QuasiNormKind qn)
{
  const double r = QuasiNorm(alg, qn)(x);
  if (r == 0.0)
    fail(ErrorCode::OriginSingular, "no direction at the identity");
  return alg.dilate(-std::log(r), x);
}

RadialProbe radial_limit(const StratifiedAlgebra &alg, const Potential &f, const Vec &omega, double alpha, double D,
                         const std::vector<double> &radii, QuasiNormKind qn)
{
  const QuasiNorm norm(alg, qn);
  if (std::abs(norm(omega) - 1.0) > 1e-12)
    fail(ErrorCode::InvalidArgument, "direction is not on the unit quasi-sphere");
  if (!(alpha > 0.0) || D < 0.0)
    fail(ErrorCode::InvalidArgument, "radial probe needs alpha > 0 and D >= 0");
  if (radii.empty())
    fail(ErrorCode::InvalidArgument, "empty radius schedule");
  constexpr double slack = 1e-9;

  RadialProbe p;
  p.direction = omega;
  p.radii = radii;
  p.alpha = alpha;
  p.rate_constant = D;

  auto ef = [&](double s) {
    const Vec x = alg.dilate(s, omega);
    const double e = euler_derivative(alg, f, x, 1);
    if (std::abs(e) > D * std::exp(-alpha * s) * (1.0 + 1e-6) + slack)
      fail(ErrorCode::RateViolation, "|EF| exceeds D |x|^{-alpha} at radius " + std::to_string(std::exp(s)));
    return e;
  };

  double rmax = 0.0;
  for (double r : radii)
  {
    if (!(r > 0.0))
      fail(ErrorCode::InvalidArgument, "radii must be positive");
    ef(std::log(r));
    rmax = std::max(rmax, r);
  }

  // composite Simpson over [ln rmax, ln rmax + 40/alpha]; the rest of the tail is below e^{-40} D/alpha
  const double s0 = std::log(rmax), len = 40.0 / alpha;
  const int n = 4000;
  const double hs = len / n;
  double acc = ef(s0) + ef(s0 + len);
  for (int i = 1; i < n; ++i)
    acc += (i % 2 ? 4.0 : 2.0) * ef(s0 + i * hs);
  p.limit = f.value(alg.dilate(s0, omega)) + acc * hs / 3.0;

  p.within_bound = true;
  for (double r : radii)
  {
    const double v = f.value(alg.dilate(std::log(r), omega));
    p.values.push_back(v);
    p.deviations.push_back(std::abs(v - p.limit));
    p.bounds.push_back(D / alpha * std::pow(r, -alpha));
    if (p.deviations.back() > p.bounds.back() * (1.0 + 1e-6) + slack)
      p.within_bound = false;
  }
  return p;
}

}  // namespace carnot
