#include <doctest.h>

#include <carnot/algebra.hpp>

#include <cmath>
#include <random>

using namespace carnot;

namespace
{

Mat mat_exp_nilpotent(const Mat &n)
{
  Mat out = Mat::Identity(n.rows(), n.cols());
  Mat term = out;
  for (int k = 1; k <= n.rows(); ++k)
  {
    term = term * n / k;
    out += term;
  }
  return out;
}

Mat mat_log_unipotent(const Mat &g)
{
  const Mat n = g - Mat::Identity(g.rows(), g.cols());
  Mat out = Mat::Zero(g.rows(), g.cols());
  Mat p = n;
  for (int k = 1; k <= g.rows(); ++k)
  {
    out += ((k % 2) ? 1.0 : -1.0) * p / k;
    p = p * n;
  }
  return out;
}

// Product through a faithful matrix representation: exp(sum x A) exp(sum y A) = exp(sum z A).
Vec matrix_oracle_product(const std::vector<Mat> &basis, const Vec &x, const Vec &y)
{
  const Eigen::Index d = basis[0].rows();
  Mat X = Mat::Zero(d, d), Y = Mat::Zero(d, d);
  for (std::size_t j = 0; j < basis.size(); ++j)
  {
    X += x[j] * basis[j];
    Y += y[j] * basis[j];
  }
  const Mat Z = mat_log_unipotent(mat_exp_nilpotent(X) * mat_exp_nilpotent(Y));
  Mat design(d * d, basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j)
    design.col(j) = Eigen::Map<const Vec>(basis[j].data(), d * d);
  return design.colPivHouseholderQr().solve(Eigen::Map<const Vec>(Z.data(), d * d));
}

Mat unit(int d, int i, int j)
{
  Mat e = Mat::Zero(d, d);
  e(i, j) = 1.0;
  return e;
}

Vec rand_vec(std::mt19937 &rng, int m, double s = 1.0)
{
  std::normal_distribution<double> g(0.0, s);
  Vec v(m);
  for (auto &x : v)
    x = g(rng);
  return v;
}

}  // namespace

TEST_CASE("presets carry the expected grading")
{
  const auto a3 = StratifiedAlgebra::abelian(3);
  CHECK(a3.step() == 1);
  CHECK(a3.dim() == 3);
  CHECK(a3.homogeneous_dimension() == 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        CHECK(a3.c(i, j, k) == 0.0);

  const auto h1 = StratifiedAlgebra::heisenberg(1);
  CHECK(h1.layer_dims() == std::vector<int>{2, 1});
  CHECK(h1.dim() == 3);
  CHECK(h1.homogeneous_dimension() == 4);
  CHECK(h1.weights() == std::vector<int>{1, 1, 2});
  CHECK(h1.c(0, 1, 2) == -4.0);
  CHECK(h1.c(1, 0, 2) == 4.0);

  for (int d = 1; d <= 4; ++d)
    CHECK(StratifiedAlgebra::heisenberg(d).homogeneous_dimension() == 2 * d + 2);

  const auto e = StratifiedAlgebra::engel();
  CHECK(e.homogeneous_dimension() == 7);
  CHECK(e.weights() == std::vector<int>{1, 1, 2, 3});
}

TEST_CASE("heisenberg fields follow d + 2y dt, d - 2x dt")
{
  const auto h1 = StratifiedAlgebra::heisenberg(1);
  const Vec x = (Vec(3) << 0.7, -1.3, 2.2).finished();
  const Mat a = h1.field_coefficients(x);
  CHECK(a(0, 0) == doctest::Approx(1.0));
  CHECK(a(0, 1) == doctest::Approx(0.0));
  CHECK(a(0, 2) == doctest::Approx(2.0 * x[1]));
  CHECK(a(1, 1) == doctest::Approx(1.0));
  CHECK(a(1, 2) == doctest::Approx(-2.0 * x[0]));
  CHECK(a(2, 2) == doctest::Approx(1.0));
  // commuting the two closed-form fields: [X1, X2] = (-2 - 2) d_t = -4 X3
}

TEST_CASE("field coefficients equal the right-translation derivative of the product")
{
  std::mt19937 rng(5);
  for (const auto &alg : {StratifiedAlgebra::heisenberg(2), StratifiedAlgebra::engel()})
  {
    const Vec x = rand_vec(rng, alg.dim());
    const Mat a = alg.field_coefficients(x);
    for (int j = 0; j < alg.dim(); ++j)
    {
      const double s = 1e-6;
      const Vec d = (alg.multiply(x, s * Vec::Unit(alg.dim(), j)) - alg.multiply(x, -s * Vec::Unit(alg.dim(), j))) / (2 * s);
      CHECK((d - a.row(j).transpose()).norm() < 1e-8);
    }
  }
}

TEST_CASE("BCH product examples")
{
  const auto a3 = StratifiedAlgebra::abelian(3);
  const Vec p = a3.multiply((Vec(3) << 1, 2, 3).finished(), (Vec(3) << 4, 5, 6).finished());
  CHECK(p[0] == 5.0);
  CHECK(p[1] == 7.0);
  CHECK(p[2] == 9.0);

  const auto h1 = StratifiedAlgebra::heisenberg(1);
  const Vec q = h1.multiply(Vec::Unit(3, 0), Vec::Unit(3, 1));
  CHECK(q[0] == doctest::Approx(1.0));
  CHECK(q[1] == doctest::Approx(1.0));
  CHECK(q[2] == doctest::Approx(-2.0));

  std::mt19937 rng(1);
  for (const auto &alg : {h1, StratifiedAlgebra::engel(), StratifiedAlgebra::heisenberg(3)})
  {
    const Vec x = rand_vec(rng, alg.dim(), 3.0);
    CHECK(alg.multiply(x, alg.inverse(x)).norm() < 1e-12);
    CHECK((alg.multiply(x, Vec::Zero(alg.dim())) - x).norm() == 0.0);
  }
}

TEST_CASE("BCH agrees with matrix exponentials in faithful representations")
{
  // heisenberg(1): A1 = E12, A2 = E23, A3 = -E13/4 gives [A1, A2] = -4 A3
  const std::vector<Mat> heis = {unit(3, 0, 1), unit(3, 1, 2), -0.25 * unit(3, 0, 2)};
  // engel: X1 = E12 + E23 + E34, X2 = E34, X3 = E24, X4 = E14
  const std::vector<Mat> eng = {unit(4, 0, 1) + unit(4, 1, 2) + unit(4, 2, 3), unit(4, 2, 3), unit(4, 1, 3),
                                unit(4, 0, 3)};
  const auto h1 = StratifiedAlgebra::heisenberg(1);
  const auto e = StratifiedAlgebra::engel();
  std::mt19937 rng(2);
  for (int trial = 0; trial < 50; ++trial)
  {
    const Vec x = rand_vec(rng, 3, 2.0), y = rand_vec(rng, 3, 2.0);
    const Vec z = h1.multiply(x, y);
    CHECK((z - matrix_oracle_product(heis, x, y)).norm() < 1e-10 * (1 + z.norm()));
    const Vec u = rand_vec(rng, 4, 2.0), v = rand_vec(rng, 4, 2.0);
    const Vec w = e.multiply(u, v);
    CHECK((w - matrix_oracle_product(eng, u, v)).norm() < 1e-10 * (1 + w.norm()));
  }
}

TEST_CASE("BCH associativity on random triples")
{
  std::mt19937 rng(3);
  for (const auto &alg : {StratifiedAlgebra::heisenberg(1), StratifiedAlgebra::engel()})
  {
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial)
    {
      const Vec x = rand_vec(rng, alg.dim()), y = rand_vec(rng, alg.dim()), z = rand_vec(rng, alg.dim());
      const Vec l = alg.multiply(alg.multiply(x, y), z);
      const Vec r = alg.multiply(x, alg.multiply(y, z));
      worst = std::max(worst, (l - r).norm() / std::max(1.0, l.norm()));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("dilations")
{
  const auto h1 = StratifiedAlgebra::heisenberg(1);
  const Vec d = h1.dilate(std::log(2.0), (Vec(3) << 1, 1, -2).finished());
  CHECK(d[0] == doctest::Approx(2.0));
  CHECK(d[1] == doctest::Approx(2.0));
  CHECK(d[2] == doctest::Approx(-8.0));
  const Vec x = (Vec(3) << 0.3, -0.2, 5.0).finished();
  CHECK(h1.dilate(0.0, x) == x);

  std::mt19937 rng(4);
  std::uniform_real_distribution<double> ut(-2.0, 2.0);
  for (const auto &alg : {h1, StratifiedAlgebra::engel(), StratifiedAlgebra::heisenberg(2)})
    for (int trial = 0; trial < 100; ++trial)
    {
      const Vec a = rand_vec(rng, alg.dim()), b = rand_vec(rng, alg.dim());
      const double t = ut(rng), s = ut(rng);
      const Vec lhs = alg.dilate(t, alg.multiply(a, b));
      const Vec rhs = alg.multiply(alg.dilate(t, a), alg.dilate(t, b));
      CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, lhs.norm()));
      const Vec g1 = alg.dilate(s, alg.dilate(t, a));
      const Vec g2 = alg.dilate(s + t, a);
      CHECK((g1 - g2).norm() <= 1e-13 * std::max(1.0, g2.norm()));
    }
}

TEST_CASE("quasi-norms")
{
  const auto h1 = StratifiedAlgebra::heisenberg(1);
  CHECK(heisenberg_rho(h1, (Vec(3) << 0, 0, 4).finished()) == doctest::Approx(2.0));
  const Vec e1 = Vec::Unit(3, 0);
  CHECK(rho_gradient_weight(h1, e1) == doctest::Approx(1.0));
  CHECK(1.0 / horizontal_part(h1, e1).norm / horizontal_part(h1, e1).norm == doctest::Approx(1.0));
  CHECK_THROWS_AS(rho_gradient_weight(h1, Vec::Zero(3)), Error);

  std::mt19937 rng(6);
  struct Case
  {
    StratifiedAlgebra alg;
    QuasiNorm qn;
  };
  const auto a3 = StratifiedAlgebra::abelian(3);
  const auto e = StratifiedAlgebra::engel();
  std::vector<Case> cases = {
    {a3, QuasiNorm(a3, QuasiNormKind::PowerSum)},
    {a3, QuasiNorm(a3, QuasiNormKind::Euclidean)},
    {h1, QuasiNorm(h1, QuasiNormKind::PowerSum)},
    {h1, QuasiNorm(h1, QuasiNormKind::HeisenbergRho)},
    {e, QuasiNorm(e, QuasiNormKind::PowerSum)},
    {h1, QuasiNorm(h1, [&](const Vec &x) { return std::pow(std::pow(x.head(2).squaredNorm(), 2) + 4 * x[2] * x[2], 0.25); })},
  };
  for (auto &c : cases)
  {
    CHECK(c.qn(Vec::Zero(c.alg.dim())) == 0.0);
    for (int trial = 0; trial < 100; ++trial)
    {
      const Vec x = rand_vec(rng, c.alg.dim(), 10.0);
      const double n = c.qn(x);
      CHECK(n > 0.0);
      CHECK(c.qn(c.alg.dilate(std::log(3.0), x)) == doctest::Approx(3.0 * n).epsilon(1e-12));
    }
  }
  // power-sum on abelian groups is the Euclidean norm (2 r! = 2)
  const Vec y = (Vec(3) << 3, 4, 12).finished();
  CHECK(QuasiNorm(a3, QuasiNormKind::PowerSum)(y) == doctest::Approx(13.0));
  CHECK_THROWS_AS(QuasiNorm(h1, QuasiNormKind::Euclidean), Error);
  CHECK_THROWS_AS(QuasiNorm(a3, QuasiNormKind::HeisenbergRho), Error);
  // not homogeneous: rejected
  CHECK_THROWS_AS(QuasiNorm(h1, [](const Vec &x) { return x.norm(); }), Error);
}

TEST_CASE("horizontal part")
{
  const auto h1 = StratifiedAlgebra::heisenberg(1);
  const auto hp = horizontal_part(h1, (Vec(3) << 3, 4, 7).finished());
  CHECK(hp.coords.size() == 2);
  CHECK(hp.norm == doctest::Approx(5.0));
  const auto a4 = StratifiedAlgebra::abelian(4);
  const Vec x = (Vec(4) << 1, 2, 3, 4).finished();
  CHECK(horizontal_part(a4, x).coords == x);
  const Vec z = (Vec(3) << 0.4, -1.1, 3.0).finished();
  CHECK(horizontal_part(h1, h1.dilate(0.7, z)).norm == doctest::Approx(std::exp(0.7) * horizontal_part(h1, z).norm));
}

TEST_CASE("invalid tables are rejected")
{
  CHECK_THROWS_AS(StratifiedAlgebra({}, {}), Error);
  CHECK_THROWS_AS(StratifiedAlgebra({2, 1}, {{0, 5, 2, 1.0}}), Error);
  try
  {
    StratifiedAlgebra({2, 1}, {{0, 1, 0, 1.0}});
    FAIL("expected GradingViolation");
  }
  catch (const Error &e)
  {
    CHECK(e.code() == ErrorCode::GradingViolation);
  }
  // graded but not a Lie algebra: [X1,[X2,X3]] + cyclic != 0 on layers (3,3,1)
  std::vector<Bracket> b = {{0, 1, 3, 1.0}, {1, 2, 4, 1.0}, {0, 2, 5, 1.0}, {0, 4, 6, 1.0}};
  try
  {
    StratifiedAlgebra({3, 3, 1}, b);
    FAIL("expected JacobiViolation");
  }
  catch (const Error &e)
  {
    CHECK(e.code() == ErrorCode::JacobiViolation);
  }
  // [X2, Y3] = Z cancels the cyclic sum
  b.push_back({1, 5, 6, 1.0});
  CHECK_NOTHROW(StratifiedAlgebra({3, 3, 1}, b));
}

TEST_CASE("random perturbations of preset tables are rejected")
{
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> val(0.01, 3.0);
  const std::vector<StratifiedAlgebra> presets = {StratifiedAlgebra::heisenberg(1), StratifiedAlgebra::heisenberg(2),
                                                  StratifiedAlgebra::engel()};
  int rejected = 0;
  for (int trial = 0; trial < 100; ++trial)
  {
    const auto &p = presets[trial % presets.size()];
    const int m = p.dim();
    std::vector<Bracket> table;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        for (int k = 0; k < m; ++k)
          if (p.c(i, j, k) != 0.0)
            table.push_back({i, j, k, p.c(i, j, k)});
    // perturb a slot whose weights do not add up
    int i, j, k;
    do
    {
      i = std::uniform_int_distribution<int>(0, m - 2)(rng);
      j = std::uniform_int_distribution<int>(i + 1, m - 1)(rng);
      k = std::uniform_int_distribution<int>(0, m - 1)(rng);
    } while (p.weight(k) == p.weight(i) + p.weight(j));
    table.push_back({i, j, k, val(rng)});
    try
    {
      StratifiedAlgebra(p.layer_dims(), table);
    }
    catch (const Error &)
    {
      ++rejected;
    }
  }
  CHECK(rejected == 100);
}

TEST_CASE("sum of weights equals the homogeneous dimension on random gradings")
{
  std::mt19937 rng(9);
  for (int trial = 0; trial < 100; ++trial)
  {
    const int r = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<int> layers(r);
    int expect = 0;
    for (int k = 0; k < r; ++k)
    {
      layers[k] = std::uniform_int_distribution<int>(1, 3)(rng);
      expect += (k + 1) * layers[k];
    }
    const StratifiedAlgebra alg(layers, random_grading_brackets(layers, trial));
    int sum = 0;
    for (int w : alg.weights())
      sum += w;
    CHECK(sum == alg.homogeneous_dimension());
    CHECK(sum == expect);
  }
}
