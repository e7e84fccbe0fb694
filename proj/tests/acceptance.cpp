// Acceptance run: one PASS/FAIL line per criterion. `acceptance --only N` runs criterion N alone.
#include <carnot/admissibility.hpp>
#include <carnot/diagnostics.hpp>
#include <carnot/hardy.hpp>
#include <carnot/lattice.hpp>
#include <carnot/operators.hpp>
#include <carnot/potential.hpp>
#include <carnot/spectral.hpp>

#include <json.hpp>

#include <unsupported/Eigen/AutoDiff>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

using namespace carnot;
using json = nlohmann::json;

namespace
{

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string num(double x)
{
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

LatticeSpec spec(double R, double h)
{
  LatticeSpec s;
  s.radius = R;
  s.spacing = h;
  return s;
}

std::vector<LatticeSpec> ladder(double R, std::initializer_list<double> hs)
{
  std::vector<LatticeSpec> l;
  for (double h : hs)
    l.push_back(spec(R, h));
  return l;
}

Vec rand_vec(std::mt19937 &rng, int n)
{
  std::normal_distribution<double> g;
  Vec x(n);
  for (auto &v : x)
    v = g(rng);
  return x;
}

int factorial(int r)
{
  return r <= 1 ? 1 : r * factorial(r - 1);
}

using AD = Eigen::AutoDiffScalar<Eigen::VectorXd>;

// power-sum quasi-norm to the power s with its coordinate gradient, independent of the library
std::pair<double, Vec> power_sum_pow(const StratifiedAlgebra &alg, const Vec &x, double s)
{
  const int n = alg.dim();
  const int e = 2 * factorial(alg.step());
  AD acc(0.0, Vec::Zero(n));
  for (int j = 0; j < n; ++j)
    acc += pow(AD(x[j], n, j), e / alg.weight(j));
  const AD r = pow(acc, s / e);
  return {r.value(), r.derivatives()};
}

// d/dt F(dil_t x) at t = 0 in graded coordinates: sum nu_j x_j d_j F
double coordinate_euler(const StratifiedAlgebra &alg, const Vec &x, const Vec &grad)
{
  double e = 0.0;
  for (int j = 0; j < alg.dim(); ++j)
    e += alg.weight(j) * x[j] * grad[j];
  return e;
}

double analytic_euler(const StratifiedAlgebra &alg, const Vec &x, const Vec &grad)
{
  // the left-invariant sum is the dilation generator only up to step two
  return alg.step() <= 2 ? euler_from_gradient(alg, x, grad) : coordinate_euler(alg, x, grad);
}

double well_oracle(double eta)
{
  double lo = 1e-12, hi = std::sqrt(eta);
  for (int i = 0; i < 200; ++i)
  {
    const double m = 0.5 * (lo + hi);
    const double k = std::sqrt(eta - m * m);
    (k * std::tan(k) > m ? lo : hi) = m;
  }
  return -lo * lo;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// The default Heisenberg lattice: LatticeSpec defaults.
const LatticeSpec kDefault{};

Outcome euclidean_hardy()
{
  const auto t0 = std::chrono::steady_clock::now();
  const auto e = estimate_kappa(StratifiedAlgebra::abelian(3), ladder(8.0, {0.5, 0.25, 0.125}), 1.0);
  const double secs = seconds_since(t0);
  const double rel = std::abs(e.constant - 2.0) / 2.0;
  std::string d = "kappa ladder";
  for (const auto &s : e.ladder)
    d += " " + num(s.estimate);
  d += ", relative gap to 2 = " + num(rel) + " (tol 0.15), monotone " + (e.monotone ? "yes" : "no") +
       ", " + num(secs) + " s";
  return {e.monotone && rel <= 0.15 && secs <= 600.0, d};
}

Outcome sharpness()
{
  const auto alg = StratifiedAlgebra::abelian(3);
  const Lattice latt(alg, spec(8.0, 0.125));
  const auto calc = make_spectral(latt);
  const SymOperator op(calc, 1.0, 1.0, Vec());
  const Vec w = evaluate_weight(latt, HardyWeight{}).values;
  const double keep = weighted_positivity(op, w, 0.225);
  const double drop = weighted_positivity(op, w, 0.5);
  return {keep >= -1e-8 && drop < 0.0, "margin(c = 0.225) = " + num(keep) + ", margin(c = 0.5) = " + num(drop) +
                                           " on " + std::to_string(latt.size()) + " nodes"};
}

Outcome structure()
{
  std::ostringstream d;
  bool ok = true;

  const std::vector<StratifiedAlgebra> presets{StratifiedAlgebra::abelian(1), StratifiedAlgebra::abelian(3),
                                               StratifiedAlgebra::heisenberg(1), StratifiedAlgebra::heisenberg(2),
                                               StratifiedAlgebra::engel()};
  double jac = 0.0;
  for (const auto &p : presets)
    jac = std::max(jac, p.jacobi_residual());
  ok = ok && jac == 0.0;
  d << "preset Jacobi residual " << jac;

  std::mt19937 rng(8);
  std::uniform_real_distribution<double> val(0.01, 3.0);
  int rejected = 0;
  for (int trial = 0; trial < 100; ++trial)
  {
    const auto &p = presets[2 + trial % 3];
    const int m = p.dim();
    std::vector<Bracket> table;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        for (int k = 0; k < m; ++k)
          if (p.c(i, j, k) != 0.0)
            table.push_back({i, j, k, p.c(i, j, k)});
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
  ok = ok && rejected == 100;
  d << "; perturbations rejected " << rejected << "/100";

  int exact = 0;
  for (int trial = 0; trial < 100; ++trial)
  {
    const int r = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<int> layers(r);
    int expect = 0;
    for (int q = 0; q < r; ++q)
    {
      layers[q] = std::uniform_int_distribution<int>(1, 3)(rng);
      expect += (q + 1) * layers[q];
    }
    const StratifiedAlgebra alg(layers, random_grading_brackets(layers, trial));
    int sum = 0;
    for (int w : alg.weights())
      sum += w;
    exact += sum == alg.homogeneous_dimension() && sum == expect;
  }
  ok = ok && exact == 100;
  d << "; sum of weights = M on " << exact << "/100 gradings";

  const auto h1 = StratifiedAlgebra::heisenberg(1);
  double bch = 0.0;
  for (int trial = 0; trial < 1000; ++trial)
  {
    const Vec x = rand_vec(rng, 3), y = rand_vec(rng, 3), z = rand_vec(rng, 3);
    const Vec l = h1.multiply(h1.multiply(x, y), z);
    const Vec r = h1.multiply(x, h1.multiply(y, z));
    bch = std::max(bch, (l - r).norm() / std::max(1.0, l.norm()));
  }
  ok = ok && bch <= 1e-10;
  d << "; BCH associativity " << bch;

  double hom = 0.0;
  std::uniform_real_distribution<double> tt(-3.0, 3.0);
  for (const auto &p : presets)
  {
    std::vector<QuasiNormKind> kinds{QuasiNormKind::PowerSum};
    if (p.is_heisenberg())
      kinds.push_back(QuasiNormKind::HeisenbergRho);
    for (auto kind : kinds)
    {
      const QuasiNorm qn(p, kind);
      for (int trial = 0; trial < 100; ++trial)
      {
        const Vec x = rand_vec(rng, p.dim());
        const double t = tt(rng);
        hom = std::max(hom, std::abs(qn(p.dilate(t, x)) - std::exp(t) * qn(x)) / (std::exp(t) * qn(x)));
      }
    }
  }
  ok = ok && hom <= 1e-12;
  d << "; quasi-norm homogeneity " << hom;
  return {ok, d.str()};
}

Outcome commutator()
{
  const auto alg = StratifiedAlgebra::abelian(1);
  const Lattice latt(alg, spec(8.0, 0.125));
  const auto tr = assemble_hamiltonian(latt, 2.0, zero_potential());
  const Vec u = sample(latt, [](const Vec &x) { return std::exp(-x.squaredNorm()); });
  const auto c1 = verify_commutator(latt, tr, u, 1e-2);
  const auto c2 = verify_commutator(latt, tr, u, 5e-3);
  const double ratio = c1.defect_b / c2.defect_b;
  return {c1.defect_ac <= 0.05 && ratio >= 3.0, "(a)/(c) relative defect " + num(c1.defect_ac) +
                                                    " (tol 0.05); route (b) defect " + num(c1.defect_b) + " -> " +
                                                    num(c2.defect_b) + ", ratio " + num(ratio) + " (need 3)"};
}

Outcome positivity_chain()
{
  const auto alg = StratifiedAlgebra::heisenberg(1);
  const Lattice latt(alg, kDefault);
  HardyWeight hw;
  hw.kind = WeightKind::HeisenbergFractional;
  const double E2 = estimate_E_alpha(1, {kDefault}, 2.0).constant;
  const Vec w = evaluate_weight(latt, hw).values;

  Criterion crit;
  crit.kind = CriterionKind::Thm4_4;
  crit.alpha = 2.0;
  const HardyConstants k{std::nullopt, E2};
  const auto cloud = default_cloud(alg, kDefault);
  const Profile u = profile_by_name("inverse_quadratic");
  const auto unit = check_admissibility(alg, heisenberg_profile_potential(alg, 1.0, u), crit, cloud, k);
  const double gstar = unit.threshold;

  const auto free = assemble_hamiltonian(latt, 2.0, zero_potential());
  const auto r0 = check_admissibility(alg, zero_potential(), crit, cloud, k);
  const double m0 = positivity_margin(free, w, r0.epsilon_margin);

  // the threshold bounds |EV|, so both signs of gamma are admissible at half of it
  double mh = std::numeric_limits<double>::infinity();
  double eh = 0.0;
  for (double sign : {1.0, -1.0})
  {
    const Potential half = heisenberg_profile_potential(alg, sign * 0.5 * gstar, u);
    const auto rh = check_admissibility(alg, half, crit, cloud, k);
    mh = std::min(mh, positivity_margin(assemble_hamiltonian(latt, 2.0, half), w, rh.epsilon_margin));
    eh = rh.epsilon_margin;
  }

  // K = 2L - EV, and EV < 0 for gamma > 0 here: only the attractive sign can spend the positivity
  const Potential big = heisenberg_profile_potential(alg, -4.0 * gstar, u);
  const double m4 = positivity_margin(assemble_hamiltonian(latt, 2.0, big), w, 0.0);

  const bool ok = m0 >= -1e-8 && mh >= -1e-8 && m4 < 0.0;
  return {ok, "E_2 on lattice " + num(E2) + ", threshold |gamma*| " + num(gstar) + "; V = 0: margin " + num(m0) +
                  " at eps " + num(r0.epsilon_margin) + "; gamma = +-gamma*/2: smaller margin " + num(mh) +
                  " at eps " + num(eh) + "; gamma = -4 gamma*: margin " + num(m4) + " at eps 0 (need < 0)"};
}

Outcome second_commutator()
{
  const auto alg = StratifiedAlgebra::heisenberg(1);
  const Lattice latt(alg, kDefault);
  const auto d0 = second_commutator_domination(assemble_hamiltonian(latt, 2.0, zero_potential()));
  const double rel0 = std::abs(d0.C - 4.0) / 4.0;
  // a fractional order on a smaller box exercises the spectral route
  const Lattice small(alg, spec(3.0, 0.75));
  const auto d1 = second_commutator_domination(assemble_hamiltonian(small, 1.0, zero_potential()));
  const double rel1 = std::abs(d1.C - 1.0);
  const auto dv = second_commutator_domination(
      assemble_hamiltonian(latt, 2.0, heisenberg_profile_potential(alg, 1.0, profile_by_name("inverse_quadratic"))));
  return {rel0 <= 1e-6 && rel1 <= 1e-6 && dv.finite,
          "V = 0: C relative error " + num(rel0) + " (alpha 2), " + num(rel1) + " (alpha 1); U = 1/(1+t^2): C = " +
              num(dv.C) + " in [" + num(dv.lower) + ", " + num(dv.upper) + "]"};
}

Outcome low_dimension()
{
  PersistenceOptions o;
  o.eig.dense_limit = 2000;
  const auto a1 = StratifiedAlgebra::abelian(1);
  const auto r1 = eigenvalue_persistence(a1, {spec(40, 0.5), spec(40, 0.25), spec(40, 0.125), spec(80, 0.125)},
                                         schrodinger_builder(well_potential(a1, 0.1, 1.0)), o);
  const double oracle = well_oracle(0.1);
  double value = std::nan("");
  for (const auto &t : r1.tracks)
    if (t.persistent)
      value = t.values.back();
  const double rel = std::abs(value - oracle) / std::abs(oracle);

  const auto a3 = StratifiedAlgebra::abelian(3);
  const auto r3 = eigenvalue_persistence(a3, {spec(4, 0.5), spec(4, 0.25), spec(8, 0.25)},
                                         schrodinger_builder(well_potential(a3, 0.1, 1.0)), o);
  return {r1.persistent_count() == 1 && rel <= 0.05 && r3.persistent_count() == 0,
          "1D: " + std::to_string(r1.persistent_count()) + " persistent, " + num(value) + " vs oracle " + num(oracle) +
              " (relative " + num(rel) + "); 3D: " + std::to_string(r3.persistent_count()) + " persistent"};
}

Outcome euler_identities()
{
  const std::vector<StratifiedAlgebra> presets{StratifiedAlgebra::abelian(1), StratifiedAlgebra::abelian(3),
                                               StratifiedAlgebra::heisenberg(1), StratifiedAlgebra::heisenberg(2),
                                               StratifiedAlgebra::engel()};
  const double s = 1.7;
  double hom_a = 0.0, hom_fd = 0.0, zero_a = 0.0, zero_fd = 0.0;
  std::mt19937 rng(4);
  for (const auto &alg : presets)
  {
    const QuasiNorm qn(alg, QuasiNormKind::PowerSum);
    const ScalarField f = [&](const Vec &x) { return std::pow(qn(x), s); };
    const ScalarField u0 = [&](const Vec &x) { return x[0] * x[0] / std::pow(qn(x), 2); };
    for (int i = 0; i < 100; ++i)
    {
      const Vec x = rand_vec(rng, alg.dim());
      const auto [v, grad] = power_sum_pow(alg, x, s);
      hom_a = std::max(hom_a, std::abs(analytic_euler(alg, x, grad) - s * v) / v);
      hom_fd = std::max(hom_fd, std::abs(orbit_derivative(alg, f, x, 1) - s * v) / v);

      const auto [r2, g2] = power_sum_pow(alg, x, 2.0);
      Vec gu = -x[0] * x[0] / (r2 * r2) * g2;
      gu[0] += 2.0 * x[0] / r2;
      zero_a = std::max(zero_a, std::abs(analytic_euler(alg, x, gu)));
      zero_fd = std::max(zero_fd, std::abs(orbit_derivative(alg, u0, x, 1)));
    }
  }
  double closed = 0.0;
  const auto h1 = StratifiedAlgebra::heisenberg(1);
  const Potential v = heisenberg_profile_potential(h1, 1.0, profile_by_name("inverse_quadratic"));
  for (int i = 0; i < 20; ++i)
  {
    const Vec x = rand_vec(rng, 3);
    const double a = v.euler1(x);
    closed = std::max(closed, std::abs(a - orbit_derivative(h1, v.value, x, 1)) / std::max(1.0, std::abs(a)));
  }
  const bool ok = hom_a <= 1e-8 && hom_fd <= 1e-5 && zero_a <= 1e-8 && zero_fd <= 1e-5 && closed <= 1e-6;
  return {ok, "E|x|^s: analytic " + num(hom_a) + ", orbit " + num(hom_fd) + "; degree 0: analytic " + num(zero_a) +
                  ", orbit " + num(zero_fd) + "; closed-form EV vs orbit " + num(closed)};
}

Outcome weight_comparison()
{
  const auto c1 = compare_weights(Lattice(StratifiedAlgebra::heisenberg(1), kDefault));
  const bool pointwise = c1.rho_below_horizontal == c1.nodes && c1.gradient_below_horizontal == c1.nodes;
  // on heisenberg(1) m1 = 2 zeroes the horizontal constant, so both orderings need heisenberg(2)
  const auto c2 = compare_weights(Lattice(StratifiedAlgebra::heisenberg(2), spec(3.0, 0.75)));
  const bool both = c2.c1_larger > 0 && c2.c2_larger > 0;
  return {pointwise && both, "heisenberg(1): " + std::to_string(c1.rho_below_horizontal) + " and " +
                                 std::to_string(c1.gradient_below_horizontal) + " of " + std::to_string(c1.nodes) +
                                 " nodes ordered pointwise; heisenberg(2) constant-weighted: " +
                                 std::to_string(c2.c1_larger) + " nodes one way, " + std::to_string(c2.c2_larger) +
                                 " the other (heisenberg(1): " + std::to_string(c1.c1_larger) + ", " +
                                 std::to_string(c1.c2_larger) + ")"};
}

Outcome lap_consistency()
{
  const auto alg = StratifiedAlgebra::abelian(1);
  const Lattice latt(alg, spec(10.0, 0.1));
  const auto tr = assemble_hamiltonian(latt, 2.0, smoothed_power_potential(alg, -2.0, 1.0, 1.0));
  const SpectralFactorization f = factorize(tr.H.dense());
  std::mt19937 rng(5);
  const Vec u = rand_vec(rng, static_cast<int>(latt.size()));
  const Vec c = f.vectors.transpose() * u;
  const auto eps = geometric_schedule(1e-1, 1e-6, 11);
  const std::vector<double> lambdas{f.eigenvalues[0] - 1.0, 0.5 * (f.eigenvalues[3] + f.eigenvalues[4]), 50.0,
                                    f.eigenvalues[10]};
  LapOptions opt;
  opt.eps_floor = 0.0;
  const auto res = lap_probe(tr.H, u, lambdas, eps, opt);
  double rank = 0.0;
  std::size_t points = 0;
  for (const auto &cv : res.curves)
    for (std::size_t k = 0; k < cv.eps.size(); ++k, ++points)
    {
      double ref = 0.0;
      for (Index i = 0; i < c.size(); ++i)
      {
        const double d = cv.lambda - f.eigenvalues[i];
        ref += c[i] * c[i] * cv.eps[k] / (d * d + cv.eps[k] * cv.eps[k]);
      }
      rank = std::max(rank, std::abs(cv.values[k] - ref) / std::abs(ref));
    }
  const bool full = points == lambdas.size() * eps.size();

  const double h = 0.1;
  const auto free = assemble_hamiltonian(latt, 2.0, zero_potential());
  const Vec g = sample(latt, [](const Vec &x) { return std::exp(-x.squaredNorm() / 4.0); });
  const double lam = 20.0;
  // the closed form is the finite-lattice resolvent itself, so no eps needs to be dropped
  const auto fr = lap_probe(free.H, g, {lam}, geometric_schedule(1.0, 1e-4, 9), opt);
  const Index n = latt.size();
  using C = std::complex<double>;
  double closed = 0.0;
  for (std::size_t k = 0; k < fr.curves[0].eps.size(); ++k)
  {
    const C z(lam, fr.curves[0].eps[k]);
    const C th = std::acos(1.0 - z * h * h / 2.0);
    const C den = std::sin(th) * std::sin(double(n + 1) * th);
    C acc = 0.0;
    for (Index a = 0; a < n; ++a)
      for (Index b = 0; b < n; ++b)
      {
        const Index lo = std::min(a, b) + 1, hi = std::max(a, b) + 1;
        acc += g[a] * g[b] * std::sin(double(lo) * th) * std::sin(double(n + 1 - hi) * th) / den;
      }
    closed = std::max(closed, std::abs(fr.curves[0].values[k] - (h * h * acc).imag()) / std::abs((h * h * acc).imag()));
  }
  const bool compared = fr.curves[0].eps.size() == 9;
  return {full && rank <= 1e-8 && compared && closed <= 1e-6,
          "rank formula " + num(rank) + " over " + std::to_string(points) + " points; closed-form resolvent " +
              num(closed) + " over " + std::to_string(fr.curves[0].eps.size()) + " eps"};
}

Outcome e_alpha_regression()
{
  const auto e = estimate_E_alpha(1, ladder(6.0, {0.75, 0.5, 0.375}), 2.0);
  const std::filesystem::path path = CARNOT_BASELINE;
  std::string d = "E_2 ladder";
  for (const auto &s : e.ladder)
    d += " " + num(s.estimate);
  d += std::string(", monotone ") + (e.monotone_either ? "yes" : "no");
  if (!std::filesystem::exists(path))
  {
    json j = {{"d", 1}, {"alpha", 2.0}, {"radius", 6.0}, {"spacings", {0.75, 0.5, 0.375}}, {"constant", e.constant}};
    std::ofstream(path) << j.dump(2) << "\n";
    return {e.monotone_either, d + "; baseline recorded: " + num(e.constant)};
  }
  std::ifstream in(path);
  const double base = json::parse(in).at("constant").get<double>();
  const double rel = std::abs(e.constant - base) / std::abs(base);
  return {e.monotone_either && rel <= 1e-6,
          d + "; constant " + num(e.constant) + " vs baseline " + num(base) + " (relative " + num(rel) + ")"};
}

struct Entry
{
  const char *name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char **argv)
{
  const std::vector<Entry> all{
      {"euclidean Hardy constant", euclidean_hardy},
      {"optimal-constant sharpness", sharpness},
      {"structure suite", structure},
      {"commutator identity", commutator},
      {"positivity chain", positivity_chain},
      {"second commutator", second_commutator},
      {"low-dimension bound state", low_dimension},
      {"Euler-operator identities", euler_identities},
      {"weight comparison", weight_comparison},
      {"LAP oracle consistency", lap_consistency},
      {"E_alpha regression", e_alpha_regression},
  };
  int only = 0;
  for (int i = 1; i + 1 < argc; ++i)
    if (!std::strcmp(argv[i], "--only"))
      only = std::atoi(argv[i + 1]);

  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i)
  {
    if (only && static_cast<int>(i) + 1 != only)
      continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try
    {
      o = all[i].run();
    }
    catch (const std::exception &e)
    {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << all[i].name << ": " << o.detail << " ("
              << num(seconds_since(t0)) << " s)" << std::endl;
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
