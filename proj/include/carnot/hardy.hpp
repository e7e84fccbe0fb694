#pragma once

#include <carnot/sym_operator.hpp>

#include <string>
#include <vector>

namespace carnot
{

enum class WeightKind
{
  QuasiNormPower,        // |x|^{-alpha} for the chosen quasi-norm
  RhoGradient,           // (grad rho)^2 / rho^2, Heisenberg
  HorizontalInverse,     // |x~|^{-2}
  HeisenbergFractional,  // rho^{-alpha}
};

std::string to_string(WeightKind k);
WeightKind weight_kind_from_string(const std::string &s);

struct HardyWeight
{
  WeightKind kind = WeightKind::QuasiNormPower;
  double alpha = 2.0;
  QuasiNormKind quasi_norm = QuasiNormKind::PowerSum;
};

// Pointwise value; +inf for HorizontalInverse on the plane x~ = 0, OriginSingular at e.
double weight_value(const StratifiedAlgebra &alg, const HardyWeight &w, const Vec &x);

struct WeightSample
{
  Vec values;
  Index excluded = 0;  // HorizontalInverse nodes with |x~| < h/2, set to 0
};
WeightSample evaluate_weight(const Lattice &latt, const HardyWeight &w);

// Auto -> Sine on abelian algebras, Krylov for power one (exact there), Auto otherwise.
SpectralBackend resolve_backend(const StratifiedAlgebra &alg, SpectralBackend b, double power);

struct LadderStep
{
  double radius = 0.0;
  double spacing = 0.0;
  Index nodes = 0;
  double estimate = 0.0;
  int iterations = 0;
  double seconds = 0.0;
  std::string backend;
};

struct HardyEstimate
{
  HardyWeight weight;
  double exponent = 0.0;
  double constant = 0.0;
  std::vector<LadderStep> ladder;
  bool converged = false;  // last two ladder steps within the tolerance
  bool monotone = false;   // nondecreasing along the ladder
  bool monotone_either = false;  // nondecreasing or nonincreasing
};

// Sets constant, converged, monotone and monotone_either from the ladder steps.
void finish_ladder(HardyEstimate &e, double tol);

struct HardyOptions
{
  SpectralBackend backend = SpectralBackend::Auto;
  Index dense_limit = 5000;
  double lanczos_tol = 1e-9;
  int max_iter = 2000;
  double ladder_tol = 0.10;
  unsigned seed = 1;
};

// kappa_{2 beta}: largest singular value of |x|^{-beta} (-Delta)^{-beta/2}, i.e.
// sqrt(lambda_max(W_beta (-Delta)^{-beta} W_beta)) by Lanczos. OutOfRange unless 0 < beta < M/2.
double kappa_on_lattice(const Lattice &latt, const SpectralCalculus &calc, double beta, QuasiNormKind qn,
                        const HardyOptions &opt, int *iterations = nullptr);
HardyEstimate estimate_kappa(const StratifiedAlgebra &alg, const std::vector<LatticeSpec> &ladder, double beta,
                             QuasiNormKind qn = QuasiNormKind::PowerSum, const HardyOptions &opt = {});

struct PositivityOptions
{
  EigenOptions eig;
  double rel_tol = 1e-3;  // binary search tolerance on c
};

// Smallest eigenvalue of op - c W.
double weighted_positivity(const SymOperator &op, const Vec &w, double c, const EigenOptions &opt = {});

struct OptimalConstant
{
  double c = 0.0;       // certified side of the bracket (margin >= 0)
  double refuted = 0.0; // margin < 0
  double pencil = 0.0;  // 1 / lambda_max(W^{1/2} op^{-1} W^{1/2})
  int solves = 0;
};

// Largest c with op >= c W: pencil estimate, then bisection on the sign of the margin.
OptimalConstant optimal_constant(const SymOperator &op, const Vec &w, const PositivityOptions &opt = {});

// Discrete optimal E_alpha in (-Delta)^{alpha/2} >= E rho^{-alpha} on heisenberg(d).
HardyEstimate estimate_E_alpha(int d, const std::vector<LatticeSpec> &ladder, double alpha,
                               const HardyOptions &opt = {}, const PositivityOptions &popt = {});

// Discrete optimal c in (-Delta)^{alpha/2} >= c W for any weight kind, alpha = weight.alpha in (0, M).
// HorizontalInverse excludes the plane nodes as in evaluate_weight.
HardyEstimate estimate_weighted_constant(const StratifiedAlgebra &alg, const std::vector<LatticeSpec> &ladder,
                                         const HardyWeight &weight, const HardyOptions &opt = {},
                                         const PositivityOptions &popt = {});

struct WeightComparison
{
  Index nodes = 0;
  Index rho_below_horizontal = 0;      // 1/rho^2 <= 1/|x~|^2
  Index gradient_below_horizontal = 0; // (grad rho)^2/rho^2 <= 1/|x~|^2
  double c1 = 0.0;                     // (M-2)^2/2
  double c2 = 0.0;                     // (m_1-2)^2/2
  Index c1_larger = 0;                 // c1 (grad rho)^2/rho^2 > c2 |x~|^{-2}
  Index c2_larger = 0;
  Vec witness_c1;
  Vec witness_c2;
};

WeightComparison compare_weights(const Lattice &latt);

}  // namespace carnot
