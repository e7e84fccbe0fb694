#pragma once

#include <carnot/algebra.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace carnot
{

using ScalarField = std::function<double(const Vec &)>;

// A perturbation V with optional analytic Euler derivatives EV and E(EV).
struct Potential
{
  std::string name;
  ScalarField value;
  ScalarField euler1;
  ScalarField euler2;
  std::optional<double> bounded_claim;
};

// Checks the analytic derivatives against the dilation-orbit differences on a fixed probe
// set (relative 1e-6); ValidationError on mismatch.
Potential make_potential(const StratifiedAlgebra &alg, std::string name, ScalarField value, ScalarField euler1 = {},
                         ScalarField euler2 = {}, std::optional<double> bounded_claim = {});

// d^k/ds^k F(dil_s x) at s = 0 by central differences plus one Richardson step.
// Order 1: delta = 1e-5. Order 2: second difference with delta = 1e-3.
double orbit_derivative(const StratifiedAlgebra &alg, const ScalarField &f, const Vec &x, int order);

// Analytic callback when present, orbit difference otherwise. Order 2 without euler2 but with
// euler1 differentiates euler1 once along the orbit.
double euler_derivative(const StratifiedAlgebra &alg, const Potential &v, const Vec &x, int order);

// Literal sum_j nu_j x_j (X_j F)(x) from the Euclidean gradient of F at x. Agrees with the orbit
// derivative up to step 2; from step 3 on, first-kind coordinates add psi(ad_x)-terms such as
// [x, Dx] / 2 and the two differ.
double euler_from_gradient(const StratifiedAlgebra &alg, const Vec &x, const Vec &grad);

Potential zero_potential();

// Profile U(t) with U', U'' for the Heisenberg family gamma U(t) / (1 + |z|^2).
struct Profile
{
  std::string name;
  std::function<double(double)> u, du, d2u;
};
// inverse_quadratic: 1/(1+t^2); negative_inverse_quadratic; constant: 1;
// log_oscillation: cos(log(1+t^2)).
Profile profile_by_name(const std::string &name);
std::vector<std::string> profile_names();

// gamma U(t) / (1 + |z|^2) on heisenberg(d) with closed-form EV and E(EV).
Potential heisenberg_profile_potential(const StratifiedAlgebra &alg, double gamma, const Profile &u);

// c (s^2 + a^2)^{-alpha/2} with s the chosen quasi-norm; a = 0 gives the pure power.
Potential smoothed_power_potential(const StratifiedAlgebra &alg, double c, double alpha, double a,
                                   QuasiNormKind qn = QuasiNormKind::PowerSum);

// -eta on the box max|x_j| <= width, 0 outside.
Potential well_potential(const StratifiedAlgebra &alg, double eta, double width = 1.0);

// Expression over coordinates; orbit differences for both derivatives.
Potential expression_potential(const StratifiedAlgebra &alg, const std::string &text);

Potential scaled(const Potential &v, double gamma);
Potential sum(const Potential &a, const Potential &b);

// Radial behaviour along the orbit r . omega = dil_{ln r} omega of a unit direction.
struct RadialProbe
{
  Vec direction;
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<double> deviations;  // |F(r omega) - f(omega)|
  std::vector<double> bounds;      // (D / alpha) r^{-alpha}
  double limit = 0.0;
  double rate_constant = 0.0;      // D
  double alpha = 0.0;
  bool within_bound = false;
};

// f(omega) = F(r_N omega) + int_{ln r_N}^inf (EF)(e^s omega) ds, the tail integrated numerically.
// RateViolation when |EF| <= D |x|^{-alpha} fails on the probed orbit.
RadialProbe radial_limit(const StratifiedAlgebra &alg, const Potential &f, const Vec &omega, double alpha, double D,
                         const std::vector<double> &radii, QuasiNormKind qn = QuasiNormKind::PowerSum);

// Projection onto the unit quasi-sphere along the dilation orbit.
Vec unit_direction(const StratifiedAlgebra &alg, const Vec &x, QuasiNormKind qn = QuasiNormKind::PowerSum);

}  // namespace carnot
