#include <carnot/config.hpp>
#include <carnot/expression.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace carnot
{

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Task t)
{
  switch (t)
  {
    case Task::EstimateHardy: return "estimate-hardy";
    case Task::CheckPotential: return "check-potential";
    case Task::Spectrum: return "spectrum";
    case Task::LapProbe: return "lap-probe";
    case Task::Persistence: return "persistence";
    case Task::CompareWeights: return "compare-weights";
  }
  return "unknown";
}

std::vector<std::string> task_names()
{
  return {"estimate-hardy", "check-potential", "spectrum", "lap-probe", "persistence", "compare-weights"};
}

Task task_from_string(const std::string &s)
{
  for (auto t : {Task::EstimateHardy, Task::CheckPotential, Task::Spectrum, Task::LapProbe, Task::Persistence,
                 Task::CompareWeights})
    if (s == to_string(t))
      return t;
  fail(ErrorCode::InvalidArgument, "unknown task '" + s + "'");
}

const std::vector<KeyDoc> &config_keys()
{
  static const std::vector<KeyDoc> keys = {
      {"algebra", "object", "", "exactly one of preset, layers+brackets, file"},
      {"algebra.preset", "string", "", "heisenberg(d), abelian(m) or engel"},
      {"algebra.layers", "int list", "", "layer dimensions m_1..m_r, all positive"},
      {"algebra.brackets", "list of [i,j,k,value]", "[]", "[X_i,X_j] += value X_k, 0-based, i < j; Jacobi and grading checked"},
      {"algebra.file", "path", "", "JSON file with keys preset | layers, brackets"},
      {"ladder", "list", "", "refinement ladder, coarse to fine; non-empty"},
      {"ladder[].radius", "number", "3", "box half-width R > 0"},
      {"ladder[].spacing", "number", "0.375", "h in (0, R)"},
      {"ladder[].offset", "bool", "true", "nodes at (k+1/2)h so none sits at the identity"},
      {"ladder[].max_nodes", "int", "4194304", "node budget; (2 floor(R/h))^m must not exceed it"},
      {"task", "string", "estimate-hardy", "estimate-hardy | check-potential | spectrum | lap-probe | persistence | compare-weights"},
      {"output", "path", "carnot_out", "report directory"},
      {"seed", "int", "1", "seed for every randomized trial vector"},
      {"backend", "string", "auto", "auto | dense | sine | krylov; sine needs an abelian algebra"},
      {"dense_limit", "int", "5000", "largest node count for dense factorizations"},
      {"potential", "object", "", "perturbation V"},
      {"potential.kind", "string", "zero", "zero | profile | smoothed_power | well | expression"},
      {"potential.gamma", "number", "1", "profile: gamma U(t)/(1+|z|^2), Heisenberg only"},
      {"potential.profile", "string", "inverse_quadratic", "inverse_quadratic | negative_inverse_quadratic | constant | log_oscillation"},
      {"potential.c", "number", "1", "smoothed_power: c (s^2+a^2)^(-alpha/2)"},
      {"potential.alpha", "number", "2", "smoothed_power exponent, > 0"},
      {"potential.a", "number", "0", "smoothed_power smoothing, >= 0"},
      {"potential.quasi_norm", "string", "power_sum", "smoothed_power quasi-norm: power_sum | heisenberg_rho | euclidean"},
      {"potential.eta", "number", "0.1", "well: depth, V = -eta on the box max|x_j| <= width"},
      {"potential.width", "number", "1", "well: half-width > 0"},
      {"potential.expression", "string", "", "expression: formula in x1..xm, t, rho, qnorm, hnorm"},
      {"estimate_hardy", "object", "", "estimate-hardy parameters"},
      {"estimate_hardy.weight", "string", "quasi_norm_power", "quasi_norm_power | rho_gradient | horizontal_inverse | heisenberg_fractional"},
      {"estimate_hardy.alpha", "number", "2", "order; quasi_norm_power and heisenberg_fractional need 0 < alpha < M, the others alpha = 2"},
      {"estimate_hardy.quasi_norm", "string", "power_sum", "quasi-norm for quasi_norm_power"},
      {"estimate_hardy.ladder_tol", "number", "0.1", "relative agreement of the last two levels for convergence"},
      {"estimate_hardy.expected", "number|null", "null", "optional reference constant; the verdict then also needs agreement"},
      {"estimate_hardy.expected_tol", "number", "0.15", "relative tolerance against expected"},
      {"check_potential", "object", "", "check-potential parameters"},
      {"check_potential.criterion", "string", "thm2_1", "thm2_1 | thm4_1 | thm4_2 | thm4_4 | combined"},
      {"check_potential.alpha", "number", "2", "thm2_1, thm4_4: 0 < alpha < M"},
      {"check_potential.theta", "[t1,t2,t3]", "[0.3,0.3,0.3]", "combined: all positive, t1+t2+t3 < 1"},
      {"check_potential.quasi_norm", "string", "power_sum", "quasi-norm in the thm2_1 weight"},
      {"check_potential.points", "path", "", "CSV with m coordinates per row; empty: lattice nodes plus annuli"},
      {"check_potential.cloud_size", "int", "1000", "annulus points added to the default cloud"},
      {"check_potential.rmin", "number", "0.01", "smallest annulus radius, > 0"},
      {"check_potential.rmax", "number", "1000", "largest annulus radius, > rmin"},
      {"check_potential.kappa", "number|null", "null", "Hardy constant kappa; null: computed on the last ladder level"},
      {"check_potential.E_alpha", "number|null", "null", "Heisenberg constant E_alpha; null: computed on the last ladder level"},
      {"spectrum", "object", "", "spectrum parameters"},
      {"spectrum.alpha", "number", "2", "order of L^alpha; 0 < alpha < M"},
      {"spectrum.count", "int", "8", "lowest eigenvalues of H reported per level, >= 1"},
      {"spectrum.positivity_tol", "number", "1e-8", "K passes when its smallest eigenvalue is >= -tol"},
      {"spectrum.domination", "bool", "true", "also bound the second commutator by C L^alpha"},
      {"lap_probe", "object", "", "lap-probe parameters"},
      {"lap_probe.alpha", "number", "2", "order, > 0; alpha != 2 needs every level within dense_limit"},
      {"lap_probe.lambdas", "number list", "[1]", "spectral parameters, non-empty"},
      {"lap_probe.eps_hi", "number", "0.1", "largest epsilon"},
      {"lap_probe.eps_lo", "number", "1e-6", "smallest epsilon, 0 < eps_lo < eps_hi"},
      {"lap_probe.eps_count", "int", "6", "geometric schedule length, >= 2"},
      {"lap_probe.eps_floor", "number", "-1", "drop epsilon below it; < 0: median eigenvalue gap / 10"},
      {"lap_probe.probe", "string", "gaussian", "gaussian | random (seeded)"},
      {"lap_probe.probe_width", "number", "1", "gaussian width, > 0"},
      {"persistence", "object", "", "persistence parameters"},
      {"persistence.alpha", "number", "2", "order, > 0"},
      {"persistence.window", "[lo|null, hi]", "[null, 0]", "eigenvalue window, lo < hi; null: unbounded below"},
      {"persistence.cauchy_tol", "number", "0.01", "relative agreement between consecutive levels"},
      {"persistence.interior_mass", "number", "0.99", "eigenvector mass beyond 2h from the boundary, in (0, 1]"},
      {"persistence.expected_persistent", "int", "0", "verdict passes when exactly this many values persist"},
      {"persistence.max_k", "int", "64", "eigenpair budget per level above the dense limit"},
  };
  return keys;
}

std::string config_help()
{
  std::ostringstream os;
  os << "Config keys (JSON; unknown keys are rejected):\n";
  for (const auto &k : config_keys())
  {
    os << "  " << k.path << " (" << k.type;
    if (!k.fallback.empty())
      os << ", default " << k.fallback;
    os << ")\n      " << k.doc << "\n";
  }
  return os.str();
}

namespace
{

std::string format(double x)
{
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

class Loader
{
public:
  std::vector<std::string> issues;

  void issue(const std::string &path, const std::string &msg) { issues.push_back(path + ": " + msg); }

  // `shown` is the path reported to the user; `path` is the table form with "ladder[]"
  void check_keys(const json &j, const std::string &path, const std::string &shown = "")
  {
    static const std::set<std::string> known = [] {
      std::set<std::string> s;
      for (const auto &k : config_keys())
        s.insert(k.path);
      return s;
    }();
    if (j.is_object())
      for (auto it = j.begin(); it != j.end(); ++it)
      {
        const std::string p = path.empty() ? it.key() : path + "." + it.key();
        const std::string q = shown.empty() ? p : shown + "." + it.key();
        if (!known.count(p))
        {
          issue(q, "unknown key");
          continue;
        }
        if (p == "ladder" && it->is_array())
          for (std::size_t i = 0; i < it->size(); ++i)
            check_keys((*it)[i], "ladder[]", "ladder[" + std::to_string(i) + "]");
        else if (it->is_object())
          check_keys(*it, p, q);
      }
  }

  const json *section(const json &root, const char *key)
  {
    if (!root.contains(key))
      return nullptr;
    const json &s = root.at(key);
    if (!s.is_object())
    {
      issue(key, "expected an object");
      return nullptr;
    }
    return &s;
  }

  void number(const json *obj, const std::string &prefix, const char *key, double &out)
  {
    if (!obj || !obj->contains(key))
      return;
    const json &v = obj->at(key);
    if (!v.is_number())
      issue(path(prefix, key), "expected a number");
    else
      out = v.get<double>();
  }

  void optional_number(const json *obj, const std::string &prefix, const char *key, std::optional<double> &out)
  {
    if (!obj || !obj->contains(key) || obj->at(key).is_null())
      return;
    double x = 0.0;
    number(obj, prefix, key, x);
    if (obj->at(key).is_number())
      out = x;
  }

  template <class I> void integer(const json *obj, const std::string &prefix, const char *key, I &out)
  {
    if (!obj || !obj->contains(key))
      return;
    const json &v = obj->at(key);
    if (!v.is_number_integer())
      issue(path(prefix, key), "expected an integer");
    else if (std::is_unsigned_v<I> && v.get<long long>() < 0)
      issue(path(prefix, key), "must be >= 0");
    else
      out = static_cast<I>(v.get<long long>());
  }

  void boolean(const json *obj, const std::string &prefix, const char *key, bool &out)
  {
    if (!obj || !obj->contains(key))
      return;
    const json &v = obj->at(key);
    if (!v.is_boolean())
      issue(path(prefix, key), "expected true or false");
    else
      out = v.get<bool>();
  }

  void string(const json *obj, const std::string &prefix, const char *key, std::string &out)
  {
    if (!obj || !obj->contains(key))
      return;
    const json &v = obj->at(key);
    if (!v.is_string())
      issue(path(prefix, key), "expected a string");
    else
      out = v.get<std::string>();
  }

  // string mapped through a from_string function that throws on unknown names
  template <class E, class F>
  void named(const json *obj, const std::string &prefix, const char *key, E &out, F from)
  {
    std::string s;
    string(obj, prefix, key, s);
    if (s.empty())
      return;
    try
    {
      out = from(s);
    }
    catch (const Error &e)
    {
      issue(path(prefix, key), message(e));
    }
  }

  static std::string path(const std::string &prefix, const char *key) { return prefix.empty() ? key : prefix + "." + key; }

  static std::string message(const Error &e)
  {
    const std::string w = e.what();
    const auto p = w.find(": ");
    return p == std::string::npos ? w : w.substr(p + 2);
  }
};

void load_algebra_object(Loader &ld, const json &a, const std::string &prefix, AlgebraConfig &out, bool allow_file)
{
  ld.string(&a, prefix, "preset", out.preset);
  if (allow_file)
    ld.string(&a, prefix, "file", out.file);
  if (a.contains("layers"))
  {
    const json &l = a.at("layers");
    if (!l.is_array() || !std::all_of(l.begin(), l.end(), [](const json &x) { return x.is_number_integer(); }))
      ld.issue(prefix + ".layers", "expected a list of integers");
    else
      out.layers = l.get<std::vector<int>>();
  }
  if (a.contains("brackets"))
  {
    const json &b = a.at("brackets");
    bool ok = b.is_array();
    if (ok)
      for (const auto &e : b)
      {
        if (!e.is_array() || e.size() != 4 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
            !e[2].is_number_integer() || !e[3].is_number())
        {
          ok = false;
          break;
        }
        out.brackets.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<double>()});
      }
    if (!ok)
      ld.issue(prefix + ".brackets", "expected a list of [i, j, k, value]");
  }
  const int forms = !out.preset.empty() + !out.layers.empty() + !out.file.empty();
  if (forms != 1)
    ld.issue(prefix, "give exactly one of preset, layers (with brackets), file");
  if (!out.preset.empty() && !out.brackets.empty())
    ld.issue(prefix + ".brackets", "presets ignore the bracket table; remove it");
}

std::string read_file(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json parse_json(const std::string &text)
{
  try
  {
    return json::parse(text);
  }
  catch (const json::parse_error &e)
  {
    // e.byte is the 1-based offset of the offending character
    const std::size_t at = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < at; ++i)
    {
      if (text[i] == '\n')
      {
        ++line;
        col = 1;
      }
      else
        ++col;
    }
    std::string why = e.what();
    const auto p = why.find(": ");
    if (p != std::string::npos)
      why = why.substr(p + 2);
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + why);
  }
}

Index node_count(int m, const LatticeSpec &s)
{
  const auto K = static_cast<Index>(std::floor(s.radius / s.spacing + 1e-12));
  const Index per = s.offset ? 2 * K : 2 * K - 1;
  double n = 1.0;
  for (int j = 0; j < m; ++j)
    n *= static_cast<double>(per);
  return n > 9e18 ? std::numeric_limits<Index>::max() : static_cast<Index>(n);
}

json algebra_json(const AlgebraConfig &a)
{
  json j;
  if (!a.preset.empty())
    j["preset"] = a.preset;
  else
  {
    j["layers"] = a.layers;
    json b = json::array();
    for (const auto &x : a.brackets)
      b.push_back({x.i, x.j, x.k, x.value});
    j["brackets"] = b;
  }
  if (!a.file.empty())
    j["file"] = a.file;
  return j;
}

json optional_json(const std::optional<double> &v)
{
  return v ? json(*v) : json(nullptr);
}

json canonical_json(const ExperimentConfig &c)
{
  json j;
  j["algebra"] = algebra_json(c.algebra);
  j["ladder"] = json::array();
  for (const auto &s : c.ladder)
    j["ladder"].push_back({{"radius", s.radius}, {"spacing", s.spacing}, {"offset", s.offset}, {"max_nodes", s.max_nodes}});
  j["task"] = to_string(c.task);
  j["output"] = c.output;
  j["seed"] = c.seed;
  j["backend"] = to_string(c.backend);
  j["dense_limit"] = c.dense_limit;
  const auto &p = c.potential;
  j["potential"] = {{"kind", p.kind},     {"gamma", p.gamma}, {"profile", p.profile},
                    {"c", p.c},           {"alpha", p.alpha}, {"a", p.a},
                    {"quasi_norm", to_string(p.quasi_norm)}, {"eta", p.eta},
                    {"width", p.width},   {"expression", p.expression}};
  // only the active task's section enters the canonical form
  switch (c.task)
  {
    case Task::EstimateHardy:
    {
      const auto &h = c.estimate_hardy;
      j["estimate_hardy"] = {{"weight", to_string(h.weight)},
                             {"alpha", h.alpha},
                             {"quasi_norm", to_string(h.quasi_norm)},
                             {"ladder_tol", h.ladder_tol},
                             {"expected", optional_json(h.expected)},
                             {"expected_tol", h.expected_tol}};
      break;
    }
    case Task::CheckPotential:
    {
      const auto &k = c.check_potential;
      j["check_potential"] = {{"criterion", to_string(k.criterion.kind)},
                              {"alpha", k.criterion.alpha},
                              {"theta", k.criterion.theta},
                              {"quasi_norm", to_string(k.criterion.quasi_norm)},
                              {"points", k.points},
                              {"cloud_size", k.cloud_size},
                              {"rmin", k.rmin},
                              {"rmax", k.rmax},
                              {"kappa", optional_json(k.kappa)},
                              {"E_alpha", optional_json(k.E_alpha)}};
      break;
    }
    case Task::Spectrum:
    {
      const auto &s = c.spectrum;
      j["spectrum"] = {{"alpha", s.alpha}, {"count", s.count}, {"positivity_tol", s.positivity_tol},
                       {"domination", s.domination}};
      break;
    }
    case Task::LapProbe:
    {
      const auto &l = c.lap_probe;
      j["lap_probe"] = {{"alpha", l.alpha},         {"lambdas", l.lambdas},     {"eps_hi", l.eps_hi},
                        {"eps_lo", l.eps_lo},       {"eps_count", l.eps_count}, {"eps_floor", l.eps_floor},
                        {"probe", l.probe},         {"probe_width", l.probe_width}};
      break;
    }
    case Task::Persistence:
    {
      const auto &q = c.persistence;
      j["persistence"] = {{"alpha", q.alpha},
                          {"window", {q.window_lo <= -1e300 ? json(nullptr) : json(q.window_lo), q.window_hi}},
                          {"cauchy_tol", q.cauchy_tol},
                          {"interior_mass", q.interior_mass},
                          {"expected_persistent", q.expected_persistent},
                          {"max_k", q.max_k}};
      break;
    }
    case Task::CompareWeights: break;
  }
  return j;
}

void validate(Loader &ld, ExperimentConfig &c)
{
  std::optional<StratifiedAlgebra> alg;
  if (ld.issues.empty() || std::none_of(ld.issues.begin(), ld.issues.end(),
                                        [](const std::string &s) { return s.rfind("algebra", 0) == 0; }))
  {
    try
    {
      alg = build_algebra(c.algebra, c.base_dir);
    }
    catch (const Error &e)
    {
      ld.issue(c.algebra.file.empty() ? "algebra" : "algebra.file", Loader::message(e));
    }
  }

  if (c.ladder.empty())
    ld.issue("ladder", "at least one level required");
  for (std::size_t i = 0; i < c.ladder.size(); ++i)
  {
    const auto &s = c.ladder[i];
    const std::string p = "ladder[" + std::to_string(i) + "]";
    if (!(s.radius > 0.0))
      ld.issue(p + ".radius", "must be > 0");
    if (!(s.spacing > 0.0) || !(s.spacing < s.radius))
      ld.issue(p + ".spacing", "must lie in (0, radius)");
    else if (alg && node_count(alg->dim(), s) > static_cast<Index>(s.max_nodes))
      ld.issue(p, std::to_string(node_count(alg->dim(), s)) + " nodes exceed max_nodes = " + std::to_string(s.max_nodes));
  }
  if (c.output.empty())
    ld.issue("output", "must not be empty");
  if (c.dense_limit < 1)
    ld.issue("dense_limit", "must be >= 1");
  if (alg && c.backend == SpectralBackend::Sine && !alg->is_abelian())
    ld.issue("backend", "sine needs an abelian algebra");

  const int M = alg ? alg->homogeneous_dimension() : 0;
  auto hardy_range = [&](const std::string &path, double a, const std::string &owner) {
    if (alg && (!(a > 0.0) || a >= M))
      ld.issue(path, "alpha = " + format(a) + " must lie in (0, M) = (0, " + std::to_string(M) + "), " + owner);
  };
  auto heisenberg_only = [&](const std::string &path, const std::string &what) {
    if (alg && !alg->is_heisenberg())
      ld.issue(path, what + " needs a Heisenberg algebra");
  };

  const auto &p = c.potential;
  static const std::set<std::string> kinds{"zero", "profile", "smoothed_power", "well", "expression"};
  const bool uses_potential = c.task != Task::EstimateHardy && c.task != Task::CompareWeights;
  if (!kinds.count(p.kind))
    ld.issue("potential.kind", "unknown kind '" + p.kind + "'");
  else if (alg && uses_potential)
  {
    if (p.kind == "profile")
      heisenberg_only("potential.kind", "the profile family");
    if (p.kind == "smoothed_power" && (!(p.alpha > 0.0) || !(p.a >= 0.0)))
      ld.issue("potential", "smoothed_power needs alpha > 0 and a >= 0");
    if (p.kind == "well" && !(p.width > 0.0))
      ld.issue("potential.width", "must be > 0");
    if (p.kind == "expression" && p.expression.empty())
      ld.issue("potential.expression", "required for kind expression");
    const bool attempt = !(p.kind == "profile" && !alg->is_heisenberg());
    if (attempt)
      try
      {
        build_potential(*alg, p);
      }
      catch (const Error &e)
      {
        ld.issue(p.kind == "expression" ? "potential.expression" : "potential", Loader::message(e));
      }
  }

  switch (c.task)
  {
    case Task::EstimateHardy:
    {
      const auto &h = c.estimate_hardy;
      if (h.weight == WeightKind::QuasiNormPower)
        hardy_range("estimate_hardy.alpha", h.alpha, "the range of the Hardy inequality");
      else if (h.weight == WeightKind::HeisenbergFractional)
      {
        heisenberg_only("estimate_hardy.weight", "heisenberg_fractional");
        hardy_range("estimate_hardy.alpha", h.alpha, "the range of the Heisenberg Hardy inequality");
      }
      else
      {
        if (h.weight == WeightKind::RhoGradient)
          heisenberg_only("estimate_hardy.weight", "rho_gradient");
        if (h.alpha != 2.0)
          ld.issue("estimate_hardy.alpha", "the " + to_string(h.weight) + " weight has degree -2; alpha must be 2");
        if (alg && M <= 2)
          ld.issue("estimate_hardy.alpha", "alpha = 2 needs M > 2");
      }
      if (h.quasi_norm == QuasiNormKind::HeisenbergRho)
        heisenberg_only("estimate_hardy.quasi_norm", "heisenberg_rho");
      if (h.quasi_norm == QuasiNormKind::Euclidean && alg && !alg->is_abelian())
        ld.issue("estimate_hardy.quasi_norm", "euclidean is homogeneous only on abelian algebras");
      if (!(h.ladder_tol > 0.0))
        ld.issue("estimate_hardy.ladder_tol", "must be > 0");
      if (!(h.expected_tol > 0.0))
        ld.issue("estimate_hardy.expected_tol", "must be > 0");
      break;
    }
    case Task::CheckPotential:
    {
      auto &k = c.check_potential;
      if (alg)
        try
        {
          validate_criterion(*alg, k.criterion);
        }
        catch (const Error &e)
        {
          const std::string m = Loader::message(e);
          const std::string field = m.find("theta") != std::string::npos ? "check_potential.theta"
                                    : m.find("alpha") != std::string::npos ? "check_potential.alpha"
                                                                           : "check_potential.criterion";
          ld.issue(field, m);
        }
      if (k.cloud_size < 0)
        ld.issue("check_potential.cloud_size", "must be >= 0");
      if (!(k.rmin > 0.0) || !(k.rmax > k.rmin))
        ld.issue("check_potential.rmin", "need 0 < rmin < rmax");
      if (k.kappa && !(*k.kappa > 0.0))
        ld.issue("check_potential.kappa", "must be > 0");
      if (k.E_alpha && !(*k.E_alpha > 0.0))
        ld.issue("check_potential.E_alpha", "must be > 0");
      if (!k.points.empty() && !fs::exists(fs::path(c.base_dir) / k.points))
        ld.issue("check_potential.points", "file not found: " + k.points);
      break;
    }
    case Task::Spectrum:
      hardy_range("spectrum.alpha", c.spectrum.alpha, "the range where the weak-conjugacy argument applies");
      if (c.spectrum.count < 1)
        ld.issue("spectrum.count", "must be >= 1");
      if (!(c.spectrum.positivity_tol >= 0.0))
        ld.issue("spectrum.positivity_tol", "must be >= 0");
      break;
    case Task::LapProbe:
    {
      const auto &l = c.lap_probe;
      if (!(l.alpha > 0.0))
        ld.issue("lap_probe.alpha", "must be > 0");
      if (l.lambdas.empty())
        ld.issue("lap_probe.lambdas", "must not be empty");
      if (!(l.eps_lo > 0.0) || !(l.eps_hi > l.eps_lo))
        ld.issue("lap_probe.eps_lo", "need 0 < eps_lo < eps_hi");
      if (l.eps_count < 2)
        ld.issue("lap_probe.eps_count", "must be >= 2");
      if (l.probe != "gaussian" && l.probe != "random")
        ld.issue("lap_probe.probe", "gaussian or random");
      if (!(l.probe_width > 0.0))
        ld.issue("lap_probe.probe_width", "must be > 0");
      if (alg && l.alpha != 2.0)
        for (std::size_t i = 0; i < c.ladder.size(); ++i)
          if (node_count(alg->dim(), c.ladder[i]) > c.dense_limit)
            ld.issue("lap_probe.alpha", "fractional powers need dense shifted solves; ladder[" + std::to_string(i) +
                                            "] exceeds dense_limit");
      break;
    }
    case Task::Persistence:
    {
      const auto &q = c.persistence;
      if (!(q.alpha > 0.0))
        ld.issue("persistence.alpha", "must be > 0");
      if (!(q.window_lo < q.window_hi))
        ld.issue("persistence.window", "need lo < hi");
      if (!(q.cauchy_tol > 0.0))
        ld.issue("persistence.cauchy_tol", "must be > 0");
      if (!(q.interior_mass > 0.0) || q.interior_mass > 1.0)
        ld.issue("persistence.interior_mass", "must lie in (0, 1]");
      if (q.expected_persistent < 0)
        ld.issue("persistence.expected_persistent", "must be >= 0");
      if (q.max_k < 1)
        ld.issue("persistence.max_k", "must be >= 1");
      if (c.ladder.size() < 2)
        ld.issue("ladder", "persistence needs at least two levels");
      break;
    }
    case Task::CompareWeights:
      heisenberg_only("algebra", "compare-weights");
      break;
  }
}

}  // namespace

StratifiedAlgebra algebra_preset(const std::string &name)
{
  static const std::regex re(R"((heisenberg|abelian)\((\d+)\))");
  std::smatch m;
  if (name == "engel")
    return StratifiedAlgebra::engel();
  if (std::regex_match(name, m, re))
  {
    const int n = std::stoi(m[2]);
    return m[1] == "heisenberg" ? StratifiedAlgebra::heisenberg(n) : StratifiedAlgebra::abelian(n);
  }
  fail(ErrorCode::InvalidArgument, "unknown preset '" + name + "'; heisenberg(d), abelian(m) or engel");
}

StratifiedAlgebra build_algebra(const AlgebraConfig &a, const std::string &base_dir)
{
  if (!a.preset.empty())
    return algebra_preset(a.preset);
  if (!a.layers.empty())
    return StratifiedAlgebra(a.layers, a.brackets);
  if (a.file.empty())
    fail(ErrorCode::InvalidArgument, "no algebra given");
  const std::string path = (fs::path(base_dir) / a.file).string();
  const json j = parse_json(read_file(path));
  if (!j.is_object())
    fail(ErrorCode::ValidationError, path + ": expected an object");
  Loader ld;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "preset" && it.key() != "layers" && it.key() != "brackets")
      ld.issue(it.key(), "unknown key");
  AlgebraConfig inner;
  load_algebra_object(ld, j, path, inner, false);
  if (!ld.issues.empty())
  {
    std::string msg;
    for (const auto &s : ld.issues)
      msg += (msg.empty() ? "" : "; ") + s;
    fail(ErrorCode::ValidationError, msg);
  }
  return build_algebra(inner, base_dir);
}

Potential build_potential(const StratifiedAlgebra &alg, const PotentialConfig &p)
{
  if (p.kind == "zero")
    return zero_potential();
  if (p.kind == "profile")
    return heisenberg_profile_potential(alg, p.gamma, profile_by_name(p.profile));
  if (p.kind == "smoothed_power")
    return smoothed_power_potential(alg, p.c, p.alpha, p.a, p.quasi_norm);
  if (p.kind == "well")
    return well_potential(alg, p.eta, p.width);
  if (p.kind == "expression")
    return expression_potential(alg, p.expression);
  fail(ErrorCode::InvalidArgument, "unknown potential kind '" + p.kind + "'");
}

ExperimentConfig parse_config_text(const std::string &text, const std::string &base_dir)
{
  const json root = parse_json(text);
  Loader ld;
  ExperimentConfig c;
  c.base_dir = base_dir;
  if (!root.is_object())
    fail(ErrorCode::ValidationError, "(root): expected an object");
  ld.check_keys(root, "");

  if (const json *a = ld.section(root, "algebra"))
    load_algebra_object(ld, *a, "algebra", c.algebra, true);
  else
    ld.issue("algebra", "required");

  if (!root.contains("ladder") || !root.at("ladder").is_array())
    ld.issue("ladder", "required list of {radius, spacing, offset, max_nodes}");
  else
    for (std::size_t i = 0; i < root.at("ladder").size(); ++i)
    {
      const json &e = root.at("ladder")[i];
      const std::string p = "ladder[" + std::to_string(i) + "]";
      if (!e.is_object())
      {
        ld.issue(p, "expected an object");
        continue;
      }
      LatticeSpec s;
      ld.number(&e, p, "radius", s.radius);
      ld.number(&e, p, "spacing", s.spacing);
      ld.boolean(&e, p, "offset", s.offset);
      ld.integer(&e, p, "max_nodes", s.max_nodes);
      c.ladder.push_back(s);
    }

  ld.named(&root, "", "task", c.task, task_from_string);
  ld.string(&root, "", "output", c.output);
  ld.integer(&root, "", "seed", c.seed);
  ld.named(&root, "", "backend", c.backend, spectral_backend_from_string);
  ld.integer(&root, "", "dense_limit", c.dense_limit);

  if (const json *p = ld.section(root, "potential"))
  {
    auto &v = c.potential;
    ld.string(p, "potential", "kind", v.kind);
    ld.number(p, "potential", "gamma", v.gamma);
    ld.string(p, "potential", "profile", v.profile);
    ld.number(p, "potential", "c", v.c);
    ld.number(p, "potential", "alpha", v.alpha);
    ld.number(p, "potential", "a", v.a);
    ld.named(p, "potential", "quasi_norm", v.quasi_norm, quasi_norm_kind_from_string);
    ld.number(p, "potential", "eta", v.eta);
    ld.number(p, "potential", "width", v.width);
    ld.string(p, "potential", "expression", v.expression);
  }
  if (const json *h = ld.section(root, "estimate_hardy"))
  {
    auto &v = c.estimate_hardy;
    ld.named(h, "estimate_hardy", "weight", v.weight, weight_kind_from_string);
    ld.number(h, "estimate_hardy", "alpha", v.alpha);
    ld.named(h, "estimate_hardy", "quasi_norm", v.quasi_norm, quasi_norm_kind_from_string);
    ld.number(h, "estimate_hardy", "ladder_tol", v.ladder_tol);
    ld.optional_number(h, "estimate_hardy", "expected", v.expected);
    ld.number(h, "estimate_hardy", "expected_tol", v.expected_tol);
  }
  if (const json *k = ld.section(root, "check_potential"))
  {
    auto &v = c.check_potential;
    ld.named(k, "check_potential", "criterion", v.criterion.kind, criterion_from_string);
    ld.number(k, "check_potential", "alpha", v.criterion.alpha);
    if (k->contains("theta"))
    {
      const json &t = k->at("theta");
      if (!t.is_array() || t.size() != 3 || !std::all_of(t.begin(), t.end(), [](const json &x) { return x.is_number(); }))
        ld.issue("check_potential.theta", "expected three numbers");
      else
        for (int i = 0; i < 3; ++i)
          v.criterion.theta[i] = t[i].get<double>();
    }
    ld.named(k, "check_potential", "quasi_norm", v.criterion.quasi_norm, quasi_norm_kind_from_string);
    ld.string(k, "check_potential", "points", v.points);
    ld.integer(k, "check_potential", "cloud_size", v.cloud_size);
    ld.number(k, "check_potential", "rmin", v.rmin);
    ld.number(k, "check_potential", "rmax", v.rmax);
    ld.optional_number(k, "check_potential", "kappa", v.kappa);
    ld.optional_number(k, "check_potential", "E_alpha", v.E_alpha);
  }
  if (const json *s = ld.section(root, "spectrum"))
  {
    auto &v = c.spectrum;
    ld.number(s, "spectrum", "alpha", v.alpha);
    ld.integer(s, "spectrum", "count", v.count);
    ld.number(s, "spectrum", "positivity_tol", v.positivity_tol);
    ld.boolean(s, "spectrum", "domination", v.domination);
  }
  if (const json *l = ld.section(root, "lap_probe"))
  {
    auto &v = c.lap_probe;
    ld.number(l, "lap_probe", "alpha", v.alpha);
    if (l->contains("lambdas"))
    {
      const json &x = l->at("lambdas");
      if (!x.is_array() || !std::all_of(x.begin(), x.end(), [](const json &e) { return e.is_number(); }))
        ld.issue("lap_probe.lambdas", "expected a list of numbers");
      else
        v.lambdas = x.get<std::vector<double>>();
    }
    ld.number(l, "lap_probe", "eps_hi", v.eps_hi);
    ld.number(l, "lap_probe", "eps_lo", v.eps_lo);
    ld.integer(l, "lap_probe", "eps_count", v.eps_count);
    ld.number(l, "lap_probe", "eps_floor", v.eps_floor);
    ld.string(l, "lap_probe", "probe", v.probe);
    ld.number(l, "lap_probe", "probe_width", v.probe_width);
  }
  if (const json *q = ld.section(root, "persistence"))
  {
    auto &v = c.persistence;
    ld.number(q, "persistence", "alpha", v.alpha);
    if (q->contains("window"))
    {
      const json &w = q->at("window");
      if (!w.is_array() || w.size() != 2 || !(w[0].is_null() || w[0].is_number()) || !w[1].is_number())
        ld.issue("persistence.window", "expected [lo or null, hi]");
      else
      {
        v.window_lo = w[0].is_null() ? -1e300 : w[0].get<double>();
        v.window_hi = w[1].get<double>();
      }
    }
    ld.number(q, "persistence", "cauchy_tol", v.cauchy_tol);
    ld.number(q, "persistence", "interior_mass", v.interior_mass);
    ld.integer(q, "persistence", "expected_persistent", v.expected_persistent);
    ld.integer(q, "persistence", "max_k", v.max_k);
  }

  validate(ld, c);
  if (!ld.issues.empty())
  {
    std::string msg = std::to_string(ld.issues.size()) + " config violation(s)";
    for (const auto &s : ld.issues)
      msg += "\n  " + s;
    fail(ErrorCode::ValidationError, msg);
  }
  c.canonical = canonical_json(c).dump(2);
  return c;
}

ExperimentConfig parse_config_file(const std::string &path)
{
  const std::string dir = fs::path(path).parent_path().string();
  return parse_config_text(read_file(path), dir.empty() ? "." : dir);
}

std::string default_config_text(Task t)
{
  json j;
  j["task"] = to_string(t);
  j["output"] = "carnot_out";
  j["seed"] = 1;
  j["backend"] = "auto";
  j["dense_limit"] = 5000;
  auto level = [](double R, double h) { return json{{"radius", R}, {"spacing", h}, {"offset", true}}; };
  switch (t)
  {
    case Task::EstimateHardy:
      j["algebra"] = {{"preset", "abelian(3)"}};
      j["ladder"] = {level(4, 1.0), level(4, 0.5), level(4, 0.25)};
      j["estimate_hardy"] = {{"weight", "quasi_norm_power"}, {"alpha", 2.0}, {"quasi_norm", "power_sum"},
                             {"ladder_tol", 0.1}, {"expected", nullptr}, {"expected_tol", 0.15}};
      break;
    case Task::CheckPotential:
      j["algebra"] = {{"preset", "heisenberg(1)"}};
      j["ladder"] = {level(3, 0.75)};
      j["potential"] = {{"kind", "profile"}, {"gamma", 0.2}, {"profile", "inverse_quadratic"}};
      j["check_potential"] = {{"criterion", "thm4_4"}, {"alpha", 2.0},     {"theta", {0.3, 0.3, 0.3}},
                              {"points", ""},          {"cloud_size", 1000}, {"rmin", 0.01},
                              {"rmax", 1000.0},        {"kappa", nullptr}, {"E_alpha", nullptr}};
      break;
    case Task::Spectrum:
      j["algebra"] = {{"preset", "heisenberg(1)"}};
      j["ladder"] = {level(2, 0.5), level(2, 0.25)};
      j["potential"] = {{"kind", "profile"}, {"gamma", 0.2}, {"profile", "inverse_quadratic"}};
      j["spectrum"] = {{"alpha", 2.0}, {"count", 8}, {"positivity_tol", 1e-8}, {"domination", true}};
      break;
    case Task::LapProbe:
      j["algebra"] = {{"preset", "abelian(1)"}};
      // eps stays above the level spacing of the box, where the finite resolvent tracks the continuum
      j["ladder"] = {level(60, 0.4), level(60, 0.2)};
      j["potential"] = {{"kind", "zero"}};
      j["lap_probe"] = {{"alpha", 2.0},     {"lambdas", {1.0, 5.0, 20.0}}, {"eps_hi", 1.0}, {"eps_lo", 0.02},
                        {"eps_count", 6},   {"eps_floor", -1.0},           {"probe", "gaussian"},
                        {"probe_width", 1.0}};
      break;
    case Task::Persistence:
      j["algebra"] = {{"preset", "abelian(1)"}};
      j["ladder"] = {level(40, 0.5), level(40, 0.25), level(40, 0.125), level(80, 0.125)};
      j["potential"] = {{"kind", "well"}, {"eta", 0.1}, {"width", 1.0}};
      j["persistence"] = {{"alpha", 2.0},      {"window", {nullptr, 0.0}}, {"cauchy_tol", 0.01},
                          {"interior_mass", 0.99}, {"expected_persistent", 1}, {"max_k", 64}};
      break;
    case Task::CompareWeights:
      j["algebra"] = {{"preset", "heisenberg(1)"}};
      j["ladder"] = {level(3, 0.375)};
      break;
  }
  return j.dump(2) + "\n";
}

}  // namespace carnot
