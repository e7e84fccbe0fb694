#include <doctest.h>

#include <carnot/admissibility.hpp>
#include <carnot/expression.hpp>
#include <carnot/potential.hpp>

#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <random>

using namespace carnot;

namespace
{

using AD = Eigen::AutoDiffScalar<Eigen::VectorXd>;

int factorial(int r)
{
  return r <= 1 ? 1 : r * factorial(r - 1);
}

// Power-sum quasi-norm raised to s, written out independently of the library, with its gradient.
std::pair<double, Vec> power_sum_pow(const StratifiedAlgebra &alg, const Vec &x, double s)
{
  const int n = alg.dim();
  const int e = 2 * factorial(alg.step());
  AD acc(0.0, Vec::Zero(n));
  for (int j = 0; j < n; ++j)
  {
    const AD xj(x[j], n, j);
    acc += pow(xj, e / alg.weight(j));  // even integer power
  }
  const AD r = pow(acc, s / e);
  return {r.value(), r.derivatives()};
}

std::vector<Vec> random_points(const StratifiedAlgebra &alg, int n, unsigned seed)
{
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Vec> pts;
  for (int i = 0; i < n; ++i)
  {
    Vec x(alg.dim());
    for (auto &v : x)
      v = g(rng);
    pts.push_back(x);
  }
  return pts;
}

const std::vector<StratifiedAlgebra> &presets()
{
  static const std::vector<StratifiedAlgebra> p{StratifiedAlgebra::abelian(1), StratifiedAlgebra::abelian(3),
                                                StratifiedAlgebra::heisenberg(1), StratifiedAlgebra::heisenberg(2)};
  return p;
}

}  // namespace

TEST_CASE("Euler identity for homogeneous functions, field route and orbit route")
{
  const double s = 1.7;
  for (const auto &alg : presets())
  {
    const QuasiNorm qn(alg, QuasiNormKind::PowerSum);
    const ScalarField f = [&](const Vec &x) { return std::pow(qn(x), s); };
    for (const auto &x : random_points(alg, 100, 4))
    {
      const auto [v, grad] = power_sum_pow(alg, x, s);
      CHECK(v == doctest::Approx(f(x)).epsilon(1e-13));
      CHECK(std::abs(euler_from_gradient(alg, x, grad) - s * v) <= 1e-8 * v);
      CHECK(std::abs(orbit_derivative(alg, f, x, 1) - s * v) <= 1e-5 * v);
      CHECK(std::abs(orbit_derivative(alg, f, x, 2) - s * s * v) <= 1e-5 * v);
    }
  }
}

TEST_CASE("Euler derivative of degree-zero functions vanishes")
{
  for (const auto &alg : presets())
  {
    // U = x1^2 / |x|^2 and its gradient
    for (const auto &x : random_points(alg, 100, 5))
    {
      const int n = alg.dim();
      const auto [r2, g2] = power_sum_pow(alg, x, 2.0);
      const double u = x[0] * x[0] / r2;
      Vec grad = -x[0] * x[0] / (r2 * r2) * g2;
      grad[0] += 2.0 * x[0] / r2;
      (void)n;
      CHECK(std::abs(euler_from_gradient(alg, x, grad)) <= 1e-8);
      const QuasiNorm qn(alg, QuasiNormKind::PowerSum);
      const ScalarField U = [&](const Vec &y) { return y[0] * y[0] / std::pow(qn(y), 2); };
      CHECK(U(x) == doctest::Approx(u).epsilon(1e-12));
      CHECK(std::abs(orbit_derivative(alg, U, x, 1)) <= 1e-8);
    }
  }
  CHECK_THROWS_AS(orbit_derivative(presets()[2], [](const Vec &) { return 1.0; }, Vec::Zero(3), 1), Error);
}

TEST_CASE("field route and orbit route part ways at step three")
{
  // Engel in first-kind coordinates: sum nu_j x_j X_j picks up [x, Dx]/2 in the top layer
  const auto e = StratifiedAlgebra::engel();
  Vec x(4);
  x << 0.7, -0.4, 0.9, 0.3;
  const ScalarField top = [](const Vec &y) { return y[3]; };
  const double orbit = orbit_derivative(e, top, x, 1);
  CHECK(orbit == doctest::Approx(3.0 * x[3]).epsilon(1e-9));
  Vec grad = Vec::Zero(4);
  grad[3] = 1.0;
  const double field = euler_from_gradient(e, x, grad);
  // [x, Dx] = x1 x3 [X1, X3] (weights 1 and 2) -> extra x1 x3 / 2
  CHECK(field - orbit == doctest::Approx(0.5 * x[0] * x[2]).epsilon(1e-9));
}

TEST_CASE("profile potential closed forms")
{
  for (int d : {1, 2})
  {
    const auto alg = StratifiedAlgebra::heisenberg(d);
    for (const auto &name : profile_names())
    {
      const Potential v = heisenberg_profile_potential(alg, 0.8, profile_by_name(name));
      for (const auto &x : random_points(alg, 20, 6))
      {
        const double a = v.euler1(x), fd = orbit_derivative(alg, v.value, x, 1);
        CHECK(std::abs(a - fd) <= 1e-6 * std::max(1.0, std::abs(a)));
        const double a2 = v.euler2(x), fd2 = orbit_derivative(alg, v.value, x, 2);
        CHECK(std::abs(a2 - fd2) <= 1e-5 * std::max(1.0, std::abs(a2)));
      }
    }
  }
  CHECK_THROWS_AS(heisenberg_profile_potential(StratifiedAlgebra::abelian(3), 1.0, profile_by_name("constant")), Error);
  CHECK_THROWS_AS(profile_by_name("bessel"), Error);
}

TEST_CASE("construction rejects a wrong analytic derivative")
{
  const auto alg = StratifiedAlgebra::heisenberg(1);
  const ScalarField v = [](const Vec &x) { return std::exp(-x.squaredNorm()); };
  const ScalarField wrong = [](const Vec &x) { return -2.0 * x.squaredNorm() * std::exp(-x.squaredNorm()); };
  const ScalarField right = [](const Vec &x) {
    return -2.0 * (x[0] * x[0] + x[1] * x[1] + 2.0 * x[2] * x[2]) * std::exp(-x.squaredNorm());
  };
  try
  {
    make_potential(alg, "gauss", v, wrong);
    FAIL("accepted a wrong derivative");
  }
  catch (const Error &e)
  {
    CHECK(e.code() == ErrorCode::ValidationError);
  }
  CHECK_NOTHROW(make_potential(alg, "gauss", v, right));
}

TEST_CASE("expression parser")
{
  const auto h1 = StratifiedAlgebra::heisenberg(1);
  Vec x(3);
  x << 3, 4, 2;
  CHECK(Expression(h1, "1 + 2 * 3")(x) == 7.0);
  CHECK(Expression(h1, "2^3^2")(x) == 512.0);
  CHECK(Expression(h1, "-2^2")(x) == -4.0);
  CHECK(Expression(h1, "(1 + 2) * 3 - 4 / 2")(x) == 7.0);
  CHECK(Expression(h1, "x1 * x2 - t")(x) == 10.0);
  CHECK(Expression(h1, "hnorm")(x) == doctest::Approx(5.0));
  CHECK(Expression(h1, "rho")(x) == doctest::Approx(std::pow(625.0 + 4.0, 0.25)));
  CHECK(Expression(h1, "qnorm")(x) == doctest::Approx(QuasiNorm(h1, QuasiNormKind::PowerSum)(x)));
  CHECK(Expression(h1, "abs(-1.5e0) + sqrt(16) + exp(0) + cos(0) + sin(0) + log(1)")(x) == doctest::Approx(7.5));
  CHECK(Expression(h1, "cos(pi)")(x) == doctest::Approx(-1.0));

  auto column = [&](const std::string &text) {
    try
    {
      Expression(h1, text);
    }
    catch (const Error &e)
    {
      CHECK(e.code() == ErrorCode::ParseError);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(column("1 + ") .find("column 5") != std::string::npos);
  CHECK(column("x4").find("column 1") != std::string::npos);
  CHECK(column("2 * foo").find("column 5") != std::string::npos);
  CHECK(column("(1 + 2").find("column 7") != std::string::npos);
  CHECK(column("1 $ 2").find("column 3") != std::string::npos);
  CHECK_THROWS_AS(Expression(StratifiedAlgebra::abelian(2), "rho"), Error);

  const Potential p = expression_potential(h1, "1 / (1 + x1^2 + x2^2)");
  CHECK(!p.euler1);
  CHECK(euler_derivative(h1, p, x, 1) == doctest::Approx(-2.0 * 25.0 / (26.0 * 26.0)).epsilon(1e-8));
}

TEST_CASE("admissibility of the zero potential")
{
  const auto h1 = StratifiedAlgebra::heisenberg(1);
  const auto cloud = default_cloud(h1, {2.0, 0.5, true}, 200);
  CHECK(cloud.size() == 512 + 200);
  const HardyConstants k{1.5, 1.2};
  const AdmissibilityReport r = check_admissibility(h1, zero_potential(), {CriterionKind::Thm2_1, 2.0}, cloud, k);
  CHECK(r.verdict);
  CHECK(r.epsilon_margin == doctest::Approx(2.0 / (1.5 * 1.5)));
  CHECK(r.B_estimate == 0.0);
  for (auto kind : {CriterionKind::Thm4_1, CriterionKind::Thm4_4, CriterionKind::Combined})
  {
    Criterion c;
    c.kind = kind;
    const AdmissibilityReport z = check_admissibility(h1, zero_potential(), c, cloud, k);
    CHECK(z.verdict);
    CHECK(z.epsilon_margin == doctest::Approx(z.constant));
    CHECK(std::isinf(z.threshold));
  }
  try
  {
    check_admissibility(h1, zero_potential(), {CriterionKind::Thm4_4, 2.0}, cloud, {});
    FAIL("no error");
  }
  catch (const Error &e)
  {
    CHECK(e.code() == ErrorCode::MissingConstant);
  }
  CHECK_THROWS_AS(check_admissibility(h1, zero_potential(), {CriterionKind::Thm4_2}, cloud, k), Error);
  CHECK_THROWS_AS(check_admissibility(h1, zero_potential(), {CriterionKind::Thm2_1, 4.0}, cloud, k), Error);
  Criterion bad{CriterionKind::Combined};
  bad.theta = {0.5, 0.4, 0.2};
  CHECK_THROWS_AS(validate_criterion(h1, bad), Error);
  for (auto kind : {CriterionKind::Thm2_1, CriterionKind::Thm4_1, CriterionKind::Thm4_2, CriterionKind::Thm4_4,
                    CriterionKind::Combined})
    CHECK(criterion_from_string(to_string(kind)) == kind);
}

TEST_CASE("profile potential against the horizontal criterion")
{
  // m1 >= 3 is needed for a nonzero horizontal constant, so use heisenberg(2)
  const auto h2 = StratifiedAlgebra::heisenberg(2);
  const auto cloud = default_cloud(h2, {1.0, 0.25, true}, 1000);
  const Criterion c{CriterionKind::Thm4_2};
  const Potential v0 = heisenberg_profile_potential(h2, 1.0, profile_by_name("inverse_quadratic"));
  const AdmissibilityReport r0 = check_admissibility(h2, v0, c, cloud, {});
  CHECK(r0.constant == 2.0);
  const double gstar = r0.threshold;
  REQUIRE(std::isfinite(gstar));
  // oracle: maximize the closed form |EV| |x~|^2 directly
  double best = 0.0;
  for (const auto &x : cloud)
    best = std::max(best, std::abs(v0.euler1(x)) * x.head(4).squaredNorm());
  CHECK(gstar == doctest::Approx(2.0 / best).epsilon(1e-12));

  // the pass set in gamma is an interval containing 0
  bool seen_fail = false;
  for (double f : {0.0, 0.25, 0.5, 0.9, 0.99, 1.01, 1.5, 4.0})
  {
    const AdmissibilityReport r =
      check_admissibility(h2, heisenberg_profile_potential(h2, f * gstar, profile_by_name("inverse_quadratic")), c,
                          cloud, {});
    CHECK(r.verdict == (f < 1.0));
    if (!r.verdict)
      seen_fail = true;
    else
      CHECK(!seen_fail);
    CHECK(std::isfinite(r.B_estimate));
  }

  // bisection on the verdict lands on the threshold
  double lo = 0.0, hi = 10.0 * gstar;
  for (int i = 0; i < 50; ++i)
  {
    const double mid = 0.5 * (lo + hi);
    const bool ok =
      check_admissibility(h2, heisenberg_profile_potential(h2, mid, profile_by_name("inverse_quadratic")), c, cloud, {})
        .verdict;
    (ok ? lo : hi) = mid;
  }
  CHECK(lo == doctest::Approx(gstar).epsilon(1e-9));
}

TEST_CASE("large inverse powers fail the first criterion")
{
  const auto a3 = StratifiedAlgebra::abelian(3);
  const auto cloud = default_cloud(a3, {2.0, 0.5, true}, 300);
  const double kappa = 2.0;
  const Criterion c{CriterionKind::Thm2_1, 2.0};
  for (double coef : {0.1, 0.2, 0.3, 1.0})
  {
    // pure power: EV = -c alpha |x|^{-alpha} exactly
    const Potential v = smoothed_power_potential(a3, coef, 2.0, 0.0);
    const AdmissibilityReport r = check_admissibility(a3, v, c, cloud, {kappa, {}});
    CHECK(r.epsilon_margin == doctest::Approx(2.0 * (1.0 / (kappa * kappa) - coef)).epsilon(1e-9));
    CHECK(r.worst_ratio == doctest::Approx(2.0 * coef));
    CHECK((r.epsilon_margin > 0.0) == (coef < 0.25));
  }
  // a smoothed version is bounded and its claim holds on the cloud
  const Potential s = smoothed_power_potential(a3, 0.1, 2.0, 0.5);
  const AdmissibilityReport rs = check_admissibility(a3, s, c, cloud, {kappa, {}});
  CHECK(rs.side_conditions);
  CHECK(rs.verdict);
}

TEST_CASE("adding a degree-zero function leaves the report unchanged")
{
  const auto h1 = StratifiedAlgebra::heisenberg(1);
  const auto cloud = default_cloud(h1, {2.0, 0.5, true}, 200);
  const Potential v = heisenberg_profile_potential(h1, 0.3, profile_by_name("inverse_quadratic"));
  const auto rho = std::make_shared<QuasiNorm>(h1, QuasiNormKind::HeisenbergRho);
  Potential u;
  u.name = "angular";
  u.value = [rho](const Vec &x) { return x[0] / (*rho)(x); };
  u.euler1 = [](const Vec &) { return 0.0; };
  u.euler2 = [](const Vec &) { return 0.0; };
  u.bounded_claim = 1.0;
  const HardyConstants k{1.5, 1.2};
  for (auto kind : {CriterionKind::Thm4_1, CriterionKind::Thm4_4, CriterionKind::Combined, CriterionKind::Thm2_1})
  {
    Criterion c;
    c.kind = kind;
    const AdmissibilityReport a = check_admissibility(h1, v, c, cloud, k);
    const AdmissibilityReport b = check_admissibility(h1, sum(v, u), c, cloud, k);
    CHECK(std::abs(a.epsilon_margin - b.epsilon_margin) <= 1e-8);
    CHECK(std::abs(a.B_estimate - b.B_estimate) <= 1e-8);
    CHECK(a.verdict == b.verdict);
    // orbit route for U alone
    for (int i = 0; i < 20; ++i)
      CHECK(std::abs(orbit_derivative(h1, u.value, cloud[37 * i], 1)) <= 1e-8);
  }
}

TEST_CASE("radial limits")
{
  const auto h1 = StratifiedAlgebra::heisenberg(1);
  const QuasiNormKind qk = QuasiNormKind::PowerSum;
  const QuasiNorm qn(h1, qk);
  Vec y(3);
  y << 0.6, -0.3, 0.8;
  const Vec omega = unit_direction(h1, y, qk);
  CHECK(qn(omega) == doctest::Approx(1.0).epsilon(1e-14));
  std::vector<double> radii;
  for (int i = 0; i <= 12; ++i)
    radii.push_back(std::pow(10.0, i / 4.0));

  // degree zero
  const Potential f0 = expression_potential(h1, "x1 / qnorm + t / qnorm^2");
  const RadialProbe p0 = radial_limit(h1, f0, omega, 2.0, 0.0, radii, qk);
  CHECK(p0.limit == doctest::Approx(f0.value(omega)).epsilon(1e-9));
  CHECK(p0.within_bound);

  // f0 + |x|^{-alpha}: deviation is exactly r^{-alpha}, bound (D/alpha) r^{-alpha} with D = alpha
  const double alpha = 1.5;
  const Potential f1 = sum(f0, smoothed_power_potential(h1, 1.0, alpha, 0.0, qk));
  const RadialProbe p1 = radial_limit(h1, f1, omega, alpha, alpha, radii, qk);
  CHECK(p1.limit == doctest::Approx(f0.value(omega)).epsilon(1e-9));
  CHECK(p1.within_bound);
  for (std::size_t i = 0; i < radii.size(); ++i)
    CHECK(p1.deviations[i] == doctest::Approx(std::pow(radii[i], -alpha)).epsilon(1e-7));
  try
  {
    radial_limit(h1, f1, omega, alpha, 0.5 * alpha, radii, qk);
    FAIL("no error");
  }
  catch (const Error &e)
  {
    CHECK(e.code() == ErrorCode::RateViolation);
  }

  // profile potential along a direction with x~ != 0: limit 0 at rate 2
  const Potential v = heisenberg_profile_potential(h1, 1.0, profile_by_name("inverse_quadratic"));
  double D = 0.0;
  for (double s = -1.0; s < 40.0; s += 1e-3)
    D = std::max(D, std::abs(v.euler1(h1.dilate(s, omega))) * std::exp(2.0 * s));
  const RadialProbe pv = radial_limit(h1, v, omega, 2.0, 1.01 * D, radii, qk);
  CHECK(std::abs(pv.limit) < 1e-9);
  CHECK(pv.within_bound);
  CHECK(pv.deviations.back() < 1e-5);
}
