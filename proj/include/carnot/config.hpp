#pragma once

#include <carnot/admissibility.hpp>
#include <carnot/hardy.hpp>
#include <carnot/potential.hpp>

#include <optional>
#include <string>
#include <vector>

namespace carnot
{

enum class Task
{
  EstimateHardy,
  CheckPotential,
  Spectrum,
  LapProbe,
  Persistence,
  CompareWeights,
};
std::string to_string(Task t);
Task task_from_string(const std::string &s);
std::vector<std::string> task_names();

// preset "heisenberg(d)", "abelian(m)" or "engel"; otherwise layers + brackets; or a file with
// the same keys (relative to the config file).
struct AlgebraConfig
{
  std::string preset;
  std::vector<int> layers;
  std::vector<Bracket> brackets;
  std::string file;
};

struct PotentialConfig
{
  std::string kind = "zero";  // zero, profile, smoothed_power, well, expression
  double gamma = 1.0;
  std::string profile = "inverse_quadratic";
  double c = 1.0;
  double alpha = 2.0;
  double a = 0.0;
  QuasiNormKind quasi_norm = QuasiNormKind::PowerSum;
  double eta = 0.1;
  double width = 1.0;
  std::string expression;
};

struct HardyTaskConfig
{
  WeightKind weight = WeightKind::QuasiNormPower;
  double alpha = 2.0;
  QuasiNormKind quasi_norm = QuasiNormKind::PowerSum;
  double ladder_tol = 0.10;
  std::optional<double> expected;
  double expected_tol = 0.15;
};

struct CheckTaskConfig
{
  Criterion criterion;
  std::string points;  // CSV of m coordinates per row; empty: default cloud on the last ladder level
  int cloud_size = 1000;
  double rmin = 1e-2;
  double rmax = 1e3;
  std::optional<double> kappa;
  std::optional<double> E_alpha;
};

struct SpectrumTaskConfig
{
  double alpha = 2.0;
  int count = 8;
  double positivity_tol = 1e-8;
  bool domination = true;
};

struct LapTaskConfig
{
  double alpha = 2.0;
  std::vector<double> lambdas{1.0};
  double eps_hi = 1e-1;
  double eps_lo = 1e-6;
  int eps_count = 6;
  double eps_floor = -1.0;
  std::string probe = "gaussian";  // gaussian or random
  double probe_width = 1.0;
};

struct PersistenceTaskConfig
{
  double alpha = 2.0;
  double window_lo = -1e300;
  double window_hi = 0.0;
  double cauchy_tol = 1e-2;
  double interior_mass = 0.99;
  int expected_persistent = 0;
  int max_k = 64;
};

struct ExperimentConfig
{
  AlgebraConfig algebra;
  std::vector<LatticeSpec> ladder;
  Task task = Task::EstimateHardy;
  std::string output = "carnot_out";
  unsigned seed = 1;
  SpectralBackend backend = SpectralBackend::Auto;
  Index dense_limit = 5000;
  PotentialConfig potential;
  HardyTaskConfig estimate_hardy;
  CheckTaskConfig check_potential;
  SpectrumTaskConfig spectrum;
  LapTaskConfig lap_probe;
  PersistenceTaskConfig persistence;

  std::string base_dir;   // directory that relative paths resolve against
  std::string canonical;  // fully resolved config as sorted JSON; hashed into the report
};

struct KeyDoc
{
  std::string path;
  std::string type;
  std::string fallback;
  std::string doc;
};
// Every accepted key; anything else is rejected.
const std::vector<KeyDoc> &config_keys();
std::string config_help();

// ParseError "line L, column C: ..." on malformed text. ValidationError listing every violation,
// one "field.path: message" per line, when the content is wrong.
ExperimentConfig parse_config_text(const std::string &text, const std::string &base_dir = ".");
ExperimentConfig parse_config_file(const std::string &path);

// Default document for a task: a small ladder that finishes in seconds.
std::string default_config_text(Task t);

StratifiedAlgebra build_algebra(const AlgebraConfig &a, const std::string &base_dir = ".");
// "heisenberg(2)" etc.; InvalidArgument for unknown names.
StratifiedAlgebra algebra_preset(const std::string &name);
Potential build_potential(const StratifiedAlgebra &alg, const PotentialConfig &p);

}  // namespace carnot
