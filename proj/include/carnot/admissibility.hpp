#pragma once

#include <carnot/lattice.hpp>
#include <carnot/potential.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace carnot
{

enum class CriterionKind
{
  Thm2_1,    // |EV| <= (alpha kappa^{-2} - eps) |x|^{-alpha}
  Thm4_1,    // |EV| <= ((M-2)^2/2 - eps) (grad rho)^2 / rho^2
  Thm4_2,    // |EV| <= ((m1-2)^2/2 - eps) |x~|^{-2}
  Thm4_4,    // |EV| <= (E_alpha - eps) rho^{-alpha}
  Combined,  // |EV| <= theta1 2 kappa_2^{-2} |x|^{-2} + theta2 (M-2)^2/2 (grad rho)^2/rho^2 + theta3 (m1-2)^2/2 |x~|^{-2}
};

std::string to_string(CriterionKind k);
CriterionKind criterion_from_string(const std::string &s);

struct Criterion
{
  CriterionKind kind = CriterionKind::Thm2_1;
  double alpha = 2.0;
  std::array<double, 3> theta{0.3, 0.3, 0.3};
  QuasiNormKind quasi_norm = QuasiNormKind::PowerSum;
};

// kappa is kappa_alpha for Thm2_1 (kappa_2 for Combined); E_alpha for Thm4_4.
struct HardyConstants
{
  std::optional<double> kappa;
  std::optional<double> E_alpha;
};

// Throws on any precondition of the criterion (ranges, M >= 3, m1 >= 3, Heisenberg-only weights).
void validate_criterion(const StratifiedAlgebra &alg, const Criterion &c);

// The criterion weight w(x) and the constant in front of it; Combined folds the thetas into w
// and uses constant 1.
double criterion_weight(const StratifiedAlgebra &alg, const Criterion &c, const HardyConstants &k, const Vec &x);
double criterion_constant(const StratifiedAlgebra &alg, const Criterion &c, const HardyConstants &k);

struct WorstPoint
{
  Vec x;
  double ratio;  // |EV| / w
};

struct AdmissibilityReport
{
  Criterion criterion;
  double constant = 0.0;        // c in |EV| <= (c - eps) w
  double worst_ratio = 0.0;     // sup |EV| / w over the cloud
  double epsilon_margin = 0.0;  // c - worst_ratio
  double B_estimate = 0.0;      // sup |E(EV)| / w (Combined: w without thetas)
  double sup_V = 0.0;
  double sup_EV = 0.0;
  bool side_conditions = false; // V and EV finite (and within the bounded claim, if any)
  bool verdict = false;
  Index cloud_size = 0;
  std::vector<WorstPoint> worst_points;
  // Largest gamma with gamma V admissible: constant / worst_ratio (inf when EV = 0).
  double threshold = 0.0;
};

AdmissibilityReport check_admissibility(const StratifiedAlgebra &alg, const Potential &v, const Criterion &c,
                                        const std::vector<Vec> &cloud, const HardyConstants &k);

// Offset lattice nodes plus `count` points on quasi-annuli, radii log-spaced in [rmin, rmax].
std::vector<Vec> default_cloud(const StratifiedAlgebra &alg, const LatticeSpec &spec, int count = 1000,
                               double rmin = 1e-2, double rmax = 1e3, unsigned seed = 3,
                               QuasiNormKind qn = QuasiNormKind::PowerSum);

}  // namespace carnot
