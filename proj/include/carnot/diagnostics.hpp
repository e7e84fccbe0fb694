#pragma once

#include <carnot/hardy.hpp>
#include <carnot/operators.hpp>
#include <carnot/potential.hpp>

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace carnot
{

// H = L^alpha + V, K = alpha L^alpha - EV, K2 = alpha^2 L^alpha + E(EV), with L^alpha = (-Delta)^{alpha/2},
// all over one spectral backend. iA is the real antisymmetric part of E, i.e. A = -i iA.
struct OperatorTriple
{
  double alpha = 2.0;
  std::shared_ptr<const SpectralCalculus> calc;
  SymOperator H;
  SymOperator K;
  SymOperator K2;
  Vec V, EV, EEV;
  SpMat iA;
};

struct AssemblyOptions
{
  SpectralBackend backend = SpectralBackend::Auto;
  Index dense_limit = 5000;
};

// OutOfRange unless alpha > 0. The Hardy range alpha < M belongs to the criteria, not to the
// operator: abelian(1) with alpha = 2 is the plain Schroedinger chain.
OperatorTriple assemble_hamiltonian(const Lattice &latt, double alpha, const Potential &v,
                                    const AssemblyOptions &opt = {});

struct CommutatorCheck
{
  double t = 0.0;
  double form_K = 0.0;        // (a) <u, K u>
  double dilation = 0.0;      // (b) symmetric t-difference of <Dil(t)u, H Dil(t)u>
  double dilation_limit = 0.0;// exact t -> 0 limit of (b) for the spline pullback
  double commutator = 0.0;    // (c) <Hu, iA u> + <iA u, Hu>
  double defect_ac = 0.0;     // relative |a - c| / |a|
  double defect_ab = 0.0;
  double defect_bc = 0.0;
  double defect_b = 0.0;      // |b - dilation_limit| / |dilation_limit|: truncation in t alone
};

// u must vanish (1e-12 relative) within 4 nodes of the boundary; SupportViolation otherwise.
// Offset lattices keep every node off the identity, so no separate origin gap is imposed.
CommutatorCheck verify_commutator(const Lattice &latt, const OperatorTriple &tr, const Vec &u, double t,
                                  Interpolation mode = Interpolation::CubicSpline);

// Smallest eigenvalue of K - eps W.
double positivity_margin(const OperatorTriple &tr, const Vec &w, double eps, const EigenOptions &opt = {});

struct Domination
{
  double lower = 0.0;  // smallest generalized eigenvalue of (K2, L^alpha)
  double upper = 0.0;  // largest
  double C = 0.0;      // max(|lower|, |upper|)
  bool finite = false;
};

// PencilSingular when L^alpha has a numerical kernel.
Domination second_commutator_domination(const OperatorTriple &tr, double tol = 1e-10);

enum class LapClass
{
  Bounded,
  Divergent,
  Inconclusive
};
std::string to_string(LapClass c);

struct LapCurve
{
  double lambda = 0.0;
  std::vector<double> eps;
  std::vector<double> values;  // Im <u, (H - lambda - i eps)^{-1} u>
  double slope = 0.0;          // d log(value) / d log(eps)
  LapClass classification = LapClass::Inconclusive;
};

struct LapOptions
{
  // eps below the floor are dropped. < 0: median eigenvalue gap / 10; 0: keep the whole schedule
  double eps_floor = -1.0;
  Index dense_limit = 5000;
};

struct LapResult
{
  std::vector<LapCurve> curves;
  double eps_floor = 0.0;
  std::vector<double> dropped_eps;
};

// Complex shifted solves: dense LU, or sparse LU when H is sparse (power one).
LapResult lap_probe(const SymOperator &H, const Vec &u, const std::vector<double> &lambdas,
                    const std::vector<double> &eps_schedule, const LapOptions &opt = {});

// eps_k = hi * (lo/hi)^{k/(n-1)}
std::vector<double> geometric_schedule(double hi, double lo, int n);

struct SpectralMeasure
{
  Vec atoms;    // eigenvalues
  Vec weights;  // |<v_i, u>|^2
  double total = 0.0;
  double mass(double a, double b) const;  // atoms in [a, b)
};

SpectralMeasure spectral_measure(const SymOperator &H, const Vec &u);

struct PersistenceOptions
{
  double window_lo = -1e300;
  double window_hi = 0.0;
  double cauchy_tol = 1e-2;     // relative, consecutive levels
  double interior_mass = 0.99;  // fraction beyond 2h from the boundary
  int initial_k = 4;
  int max_k = 64;
  EigenOptions eig;
};

struct LevelSpectrum
{
  LatticeSpec spec;
  Index nodes = 0;
  std::vector<double> values;          // eigenvalues inside the window, ascending
  std::vector<double> interior_mass;   // per value
};

struct Track
{
  std::vector<double> values;  // one per level, NaN once lost
  bool persistent = false;
  std::string verdict;         // "persistent" or "discretization artifact"
};

struct PersistenceReport
{
  std::vector<LevelSpectrum> levels;
  std::vector<Track> tracks;
  int persistent_count() const;
};

using HamiltonianBuilder = std::function<SymOperator(const Lattice &)>;

// Tracks window eigenvalues across the ladder. A track is persistent when it is present at every
// level, Cauchy between consecutive levels and interior-localized everywhere.
// MatchingAmbiguous when two candidates at the next level both fall inside the Cauchy band.
PersistenceReport eigenvalue_persistence(const StratifiedAlgebra &alg, const std::vector<LatticeSpec> &ladder,
                                         const HamiltonianBuilder &build, const PersistenceOptions &opt = {});

// Schroedinger builder -Delta^{alpha/2} + V on the automatic backend.
HamiltonianBuilder schrodinger_builder(const Potential &v, double alpha = 2.0, const AssemblyOptions &opt = {});

}  // namespace carnot
