#include <carnot/diagnostics.hpp>
#include <carnot/io.hpp>
#include <carnot/runner.hpp>

#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>

namespace carnot
{

using json = nlohmann::json;
namespace fs = std::filesystem;

const char *const kReportHeader =
    "Finite-lattice surrogate. Verdicts cover the discrete hypothesis checks, eigenvalue persistence across "
    "refinements and resolvent (LAP) trends; none of them certifies the spectral type of the continuum operator.";

const char *carnot_version()
{
  return "0.1.0";
}

std::string sha256_hex(const std::string &data)
{
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    fail(ErrorCode::IoError, "SHA-256 failed");
  static const char *hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i)
  {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace
{

// CSV table flushed row by row, so an interrupted run keeps what it computed.
class Table
{
public:
  Table(const fs::path &dir, const std::string &name, const std::vector<std::string> &cols, bool write,
        std::vector<std::string> &registry)
    : width_(cols.size())
  {
    registry.push_back(name);
    if (!write)
      return;
    out_.open(dir / name);
    if (!out_)
      fail(ErrorCode::IoError, "cannot open " + (dir / name).string());
    row_begin();
    for (const auto &c : cols)
      cell(c);
    row_end();
  }

  template <class... T> void row(const T &...v)
  {
    static_assert(sizeof...(T) > 0);
    if (sizeof...(T) != width_)
      fail(ErrorCode::InvalidArgument, "table row width mismatch");
    if (!out_.is_open())
      return;
    row_begin();
    (put(v), ...);
    row_end();
  }

  void cells(const std::vector<std::string> &v)
  {
    if (v.size() != width_)
      fail(ErrorCode::InvalidArgument, "table row width mismatch");
    if (!out_.is_open())
      return;
    row_begin();
    for (const auto &c : v)
      cell(c);
    row_end();
  }

private:
  void row_begin() { first_ = true; }
  void row_end()
  {
    out_ << '\n';
    out_.flush();
  }
  void cell(const std::string &s)
  {
    if (!first_)
      out_ << ',';
    first_ = false;
    out_ << s;
  }
  void put(double x) { cell(format_double(x)); }
  void put(const std::string &s) { cell(s); }
  void put(const char *s) { cell(s); }
  void put(bool b) { cell(b ? "true" : "false"); }
  template <class I, std::enable_if_t<std::is_integral_v<I>, int> = 0> void put(I i) { cell(std::to_string(i)); }

  std::size_t width_;
  std::ofstream out_;
  bool first_ = true;
};

struct Context
{
  const ExperimentConfig &cfg;
  const RunOptions &opt;
  StratifiedAlgebra alg;
  fs::path dir;
  json results = json::object();
  std::vector<Verdict> verdicts;
  std::vector<std::string> tables;
  int level = -1;

  Table table(const std::string &name, const std::vector<std::string> &cols)
  {
    return Table(dir, name, cols, opt.write_files, tables);
  }
  void enter(int l)
  {
    if (opt.stop && opt.stop->load())
      fail(ErrorCode::Interrupted, "stopped before ladder level " + std::to_string(l));
    level = l;
    if (opt.log)
      *opt.log << "[" << to_string(cfg.task) << "] level " << l << ": R = " << cfg.ladder[l].radius
               << ", h = " << cfg.ladder[l].spacing << std::endl;
  }
  void verdict(std::string name, bool pass, std::string detail)
  {
    verdicts.push_back({std::move(name), pass, std::move(detail)});
  }
  AssemblyOptions assembly() const { return {cfg.backend, cfg.dense_limit}; }
  HardyOptions hardy() const
  {
    HardyOptions h;
    h.backend = cfg.backend;
    h.dense_limit = cfg.dense_limit;
    h.seed = cfg.seed;
    h.ladder_tol = cfg.estimate_hardy.ladder_tol;
    return h;
  }
  EigenOptions eig() const
  {
    EigenOptions e;
    e.seed = cfg.seed;
    return e;
  }
};

std::string fmt(double x)
{
  return format_double(x);
}

json ladder_json(const HardyEstimate &e)
{
  json l = json::array();
  for (const auto &s : e.ladder)
    l.push_back({{"radius", s.radius}, {"spacing", s.spacing}, {"nodes", s.nodes}, {"estimate", s.estimate}});
  return l;
}

void run_estimate_hardy(Context &cx)
{
  const auto &h = cx.cfg.estimate_hardy;
  HardyEstimate e;
  for (std::size_t l = 0; l < cx.cfg.ladder.size(); ++l)
  {
    cx.enter(static_cast<int>(l));
    const std::vector<LatticeSpec> one{cx.cfg.ladder[l]};
    HardyEstimate step;
    if (h.weight == WeightKind::QuasiNormPower)
      step = estimate_kappa(cx.alg, one, 0.5 * h.alpha, h.quasi_norm, cx.hardy());
    else
    {
      const HardyWeight w{h.weight, h.alpha,
                          h.weight == WeightKind::HeisenbergFractional ? QuasiNormKind::HeisenbergRho : h.quasi_norm};
      PositivityOptions p;
      p.eig = cx.eig();
      step = estimate_weighted_constant(cx.alg, one, w, cx.hardy(), p);
    }
    e.weight = step.weight;
    e.exponent = step.exponent;
    e.ladder.push_back(step.ladder.front());
  }
  finish_ladder(e, h.ladder_tol);
  auto t = cx.table("hardy_ladder.csv", {"level", "radius", "spacing", "nodes", "estimate", "iterations", "backend"});
  for (std::size_t l = 0; l < e.ladder.size(); ++l)
  {
    const auto &s = e.ladder[l];
    t.row(l, s.radius, s.spacing, s.nodes, s.estimate, s.iterations, s.backend);
  }
  const std::string what = h.weight == WeightKind::QuasiNormPower ? "kappa" : "optimal constant";
  cx.results = {{"weight", to_string(h.weight)},
                {"alpha", h.alpha},
                {"quantity", what},
                {"constant", e.constant},
                {"converged", e.converged},
                {"monotone_nondecreasing", e.monotone},
                {"monotone_either", e.monotone_either},
                {"ladder", ladder_json(e)}};
  cx.verdict("ladder converged", e.converged,
             "last two levels within " + fmt(h.ladder_tol) + " relative");
  cx.verdict("ladder monotone", e.monotone_either, e.monotone ? "nondecreasing" : e.monotone_either ? "nonincreasing" : "not monotone");
  if (h.expected)
  {
    const double rel = std::abs(e.constant - *h.expected) / std::abs(*h.expected);
    cx.results["expected"] = *h.expected;
    cx.results["relative_error"] = rel;
    cx.verdict("agrees with expected", rel <= h.expected_tol,
               what + " " + fmt(e.constant) + " vs " + fmt(*h.expected) + ", relative error " + fmt(rel));
  }
}

std::vector<Vec> read_points(const std::string &path, int m)
{
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::IoError, "cannot read " + path);
  std::vector<Vec> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (line.empty() || line[0] == '#')
      continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    bool numeric = true;
    while (std::getline(ss, cell, ','))
    {
      try
      {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
      }
      catch (const std::exception &)
      {
        numeric = false;
        break;
      }
    }
    if (!numeric)
    {
      if (pts.empty() && lineno == 1)
        continue;  // header
      fail(ErrorCode::ParseError, path + " line " + std::to_string(lineno) + ": non-numeric entry");
    }
    if (static_cast<int>(v.size()) != m)
      fail(ErrorCode::ParseError, path + " line " + std::to_string(lineno) + ": expected " + std::to_string(m) +
                                      " coordinates");
    pts.push_back(Eigen::Map<const Vec>(v.data(), m));
  }
  if (pts.empty())
    fail(ErrorCode::ParseError, path + ": no points");
  return pts;
}

void run_check_potential(Context &cx)
{
  const auto &k = cx.cfg.check_potential;
  const Criterion &crit = k.criterion;
  const Potential v = build_potential(cx.alg, cx.cfg.potential);
  const int last = static_cast<int>(cx.cfg.ladder.size()) - 1;
  const LatticeSpec &spec = cx.cfg.ladder[last];
  HardyConstants hc;
  json constants = json::object();
  const std::string where = "lattice R = " + fmt(spec.radius) + ", h = " + fmt(spec.spacing);

  const bool needs_kappa = crit.kind == CriterionKind::Thm2_1 || crit.kind == CriterionKind::Combined;
  if (needs_kappa)
  {
    if (k.kappa)
    {
      hc.kappa = k.kappa;
      constants["kappa"] = {{"value", *k.kappa}, {"source", "config"}};
    }
    else
    {
      cx.enter(last);
      const Lattice latt(cx.alg, spec);
      const double beta = crit.kind == CriterionKind::Combined ? 1.0 : 0.5 * crit.alpha;
      const auto calc = make_spectral(latt, resolve_backend(cx.alg, cx.cfg.backend, beta), cx.cfg.dense_limit);
      hc.kappa = kappa_on_lattice(latt, *calc, beta, crit.quasi_norm, cx.hardy());
      constants["kappa"] = {{"value", *hc.kappa}, {"source", where}};
    }
  }
  if (crit.kind == CriterionKind::Thm4_4)
  {
    if (k.E_alpha)
    {
      hc.E_alpha = k.E_alpha;
      constants["E_alpha"] = {{"value", *k.E_alpha}, {"source", "config"}};
    }
    else
    {
      cx.enter(last);
      PositivityOptions p;
      p.eig = cx.eig();
      const auto e = estimate_weighted_constant(
          cx.alg, {spec}, {WeightKind::HeisenbergFractional, crit.alpha, QuasiNormKind::HeisenbergRho}, cx.hardy(), p);
      hc.E_alpha = e.constant;
      constants["E_alpha"] = {{"value", e.constant}, {"source", where}};
    }
  }

  const std::vector<Vec> cloud =
      k.points.empty() ? default_cloud(cx.alg, spec, k.cloud_size, k.rmin, k.rmax, cx.cfg.seed, crit.quasi_norm)
                       : read_points((fs::path(cx.cfg.base_dir) / k.points).string(), cx.alg.dim());
  const AdmissibilityReport r = check_admissibility(cx.alg, v, crit, cloud, hc);

  auto t = cx.table("admissibility.csv", {"criterion", "constant", "worst_ratio", "epsilon_margin", "B_estimate",
                                          "sup_V", "sup_EV", "threshold", "cloud_size", "side_conditions", "verdict"});
  t.row(to_string(crit.kind), r.constant, r.worst_ratio, r.epsilon_margin, r.B_estimate, r.sup_V, r.sup_EV,
        r.threshold, r.cloud_size, r.side_conditions, r.verdict ? "pass" : "fail");
  std::vector<std::string> cols{"rank"};
  for (int j = 0; j < cx.alg.dim(); ++j)
    cols.push_back("x" + std::to_string(j + 1));
  cols.push_back("ratio");
  auto w = cx.table("worst_points.csv", cols);
  for (std::size_t i = 0; i < r.worst_points.size(); ++i)
  {
    std::vector<std::string> row{std::to_string(i)};
    for (double c : r.worst_points[i].x)
      row.push_back(format_double(c));
    row.push_back(format_double(r.worst_points[i].ratio));
    w.cells(row);
  }
  json worst = json::array();
  for (const auto &p : r.worst_points)
    worst.push_back({{"x", std::vector<double>(p.x.data(), p.x.data() + p.x.size())}, {"ratio", p.ratio}});
  cx.results = {{"criterion", to_string(crit.kind)},
                {"potential", v.name},
                {"constants", constants},
                {"constant", r.constant},
                {"worst_ratio", r.worst_ratio},
                {"epsilon_margin", r.epsilon_margin},
                {"B_estimate", r.B_estimate},
                {"sup_V", r.sup_V},
                {"sup_EV", r.sup_EV},
                {"threshold", r.threshold},
                {"cloud_size", r.cloud_size},
                {"side_conditions", r.side_conditions},
                {"worst_points", worst}};
  cx.verdict("admissible", r.verdict,
             "epsilon margin " + fmt(r.epsilon_margin) + ", B " + fmt(r.B_estimate) +
                 (r.side_conditions ? "" : ", side conditions fail"));
}

void run_spectrum(Context &cx)
{
  const auto &s = cx.cfg.spectrum;
  const Potential v = build_potential(cx.alg, cx.cfg.potential);
  auto ev = cx.table("spectrum_eigenvalues.csv", {"level", "radius", "spacing", "nodes", "index", "eigenvalue"});
  auto lv = cx.table("spectrum_levels.csv", {"level", "radius", "spacing", "nodes", "backend", "K_min", "K2_lower",
                                             "K2_upper", "C"});
  json levels = json::array();
  bool positive = true, dominated = true;
  double worst_k = std::numeric_limits<double>::infinity(), worst_c = 0.0;
  for (std::size_t l = 0; l < cx.cfg.ladder.size(); ++l)
  {
    cx.enter(static_cast<int>(l));
    const auto &spec = cx.cfg.ladder[l];
    const Lattice latt(cx.alg, spec);
    const auto tr = assemble_hamiltonian(latt, s.alpha, v, cx.assembly());
    const int k = static_cast<int>(std::min<Index>(s.count, latt.size()));
    const EigenPairs h = smallest_eigenpairs(tr.H, k, cx.eig());
    for (int i = 0; i < k; ++i)
      ev.row(l, spec.radius, spec.spacing, latt.size(), i, h.values[i]);
    const double kmin = smallest_eigenpairs(tr.K, 1, cx.eig()).values[0];
    Domination d;
    if (s.domination)
      d = second_commutator_domination(tr);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    lv.row(l, spec.radius, spec.spacing, latt.size(), tr.calc->name(), kmin, s.domination ? d.lower : nan,
           s.domination ? d.upper : nan, s.domination ? d.C : nan);
    positive = positive && kmin >= -s.positivity_tol;
    worst_k = std::min(worst_k, kmin);
    if (s.domination)
    {
      dominated = dominated && d.finite;
      worst_c = std::max(worst_c, d.C);
    }
    json lj = {{"radius", spec.radius},
               {"spacing", spec.spacing},
               {"nodes", latt.size()},
               {"eigenvalues", std::vector<double>(h.values.data(), h.values.data() + k)},
               {"K_min", kmin}};
    if (s.domination)
      lj["C"] = d.C;
    levels.push_back(lj);
  }
  cx.results = {{"alpha", s.alpha}, {"potential", cx.cfg.potential.kind}, {"levels", levels}};
  cx.verdict("K positive", positive, "smallest eigenvalue of K over the ladder " + fmt(worst_k));
  if (s.domination)
    cx.verdict("second commutator dominated", dominated, "largest C over the ladder " + fmt(worst_c));
}

Vec probe_vector(const Context &cx, const Lattice &latt)
{
  const auto &l = cx.cfg.lap_probe;
  Vec u(latt.size());
  if (l.probe == "gaussian")
  {
    const double w2 = l.probe_width * l.probe_width;
    u = sample(latt, [w2](const Vec &x) { return std::exp(-x.squaredNorm() / w2); });
  }
  else
  {
    std::mt19937_64 rng(cx.cfg.seed);
    std::normal_distribution<double> nd;
    for (auto &x : u)
      x = nd(rng);
  }
  return u / u.norm();
}

void run_lap_probe(Context &cx)
{
  const auto &l = cx.cfg.lap_probe;
  const Potential v = build_potential(cx.alg, cx.cfg.potential);
  const auto eps = geometric_schedule(l.eps_hi, l.eps_lo, l.eps_count);
  auto curves = cx.table("lap_curves.csv", {"level", "radius", "spacing", "lambda", "epsilon", "value", "classification"});
  auto slopes = cx.table("lap_slopes.csv", {"level", "radius", "spacing", "lambda", "slope", "classification",
                                            "eps_floor", "dropped"});
  json levels = json::array();
  double worst_rank = 0.0;
  int checked = 0;
  bool finite = true;
  int min_kept = l.eps_count;
  for (std::size_t k = 0; k < cx.cfg.ladder.size(); ++k)
  {
    cx.enter(static_cast<int>(k));
    const auto &spec = cx.cfg.ladder[k];
    const Lattice latt(cx.alg, spec);
    const auto tr = assemble_hamiltonian(latt, l.alpha, v, cx.assembly());
    const Vec u = probe_vector(cx, latt);
    LapOptions o;
    o.eps_floor = l.eps_floor;
    o.dense_limit = cx.cfg.dense_limit;
    const LapResult r = lap_probe(tr.H, u, l.lambdas, eps, o);
    json lj = {{"radius", spec.radius}, {"spacing", spec.spacing}, {"eps_floor", r.eps_floor},
               {"dropped_eps", r.dropped_eps}, {"curves", json::array()}};
    for (const auto &c : r.curves)
    {
      for (std::size_t i = 0; i < c.eps.size(); ++i)
      {
        curves.row(k, spec.radius, spec.spacing, c.lambda, c.eps[i], c.values[i], to_string(c.classification));
        finite = finite && std::isfinite(c.values[i]);
      }
      slopes.row(k, spec.radius, spec.spacing, c.lambda, c.slope, to_string(c.classification), r.eps_floor,
                 r.dropped_eps.size());
      lj["curves"].push_back({{"lambda", c.lambda}, {"slope", c.slope}, {"classification", to_string(c.classification)}});
    }
    // the solve path against the spectral decomposition, where a dense factorization is affordable
    for (const auto &c : r.curves)
      min_kept = std::min<int>(min_kept, static_cast<int>(c.eps.size()));
    if (latt.size() <= cx.cfg.dense_limit && !r.curves.empty() && !r.curves.front().eps.empty())
    {
      const SpectralMeasure mu = spectral_measure(tr.H, u);
      for (const auto &c : r.curves)
        for (std::size_t i = 0; i < c.eps.size(); ++i)
        {
          const double e = c.eps[i];
          const double ref = (mu.weights.array() * e / ((c.lambda - mu.atoms.array()).square() + e * e)).sum();
          worst_rank = std::max(worst_rank, std::abs(c.values[i] - ref) / std::abs(ref));
        }
      ++checked;
    }
    levels.push_back(lj);
  }
  cx.results = {{"alpha", l.alpha}, {"probe", l.probe}, {"levels", levels}, {"rank_formula_error", worst_rank},
                {"rank_formula_levels", checked}};
  cx.verdict("eps schedule resolved", min_kept >= 3,
             "fewest eps values above the resolution floor on any curve: " + std::to_string(min_kept) +
                 " (need 3)");
  cx.verdict("resolvent values finite", finite, "all shifted solves returned finite values");
  cx.verdict("solve path matches spectral decomposition", checked == 0 || worst_rank <= 1e-8,
             checked == 0 ? "no level within dense_limit; not checked"
                          : "largest relative deviation " + fmt(worst_rank) + " over " + std::to_string(checked) +
                                " level(s)");
}

void run_persistence(Context &cx)
{
  const auto &q = cx.cfg.persistence;
  const Potential v = build_potential(cx.alg, cx.cfg.potential);
  PersistenceOptions o;
  o.window_lo = q.window_lo;
  o.window_hi = q.window_hi;
  o.cauchy_tol = q.cauchy_tol;
  o.interior_mass = q.interior_mass;
  o.max_k = q.max_k;
  o.eig = cx.eig();
  o.eig.dense_limit = std::min<Index>(cx.cfg.dense_limit, 2000);
  for (std::size_t l = 0; l < cx.cfg.ladder.size(); ++l)
    cx.enter(static_cast<int>(l));
  const auto rep = eigenvalue_persistence(cx.alg, cx.cfg.ladder, schrodinger_builder(v, q.alpha, cx.assembly()), o);

  auto lt = cx.table("persistence_levels.csv",
                     {"level", "radius", "spacing", "nodes", "index", "eigenvalue", "interior_mass"});
  for (std::size_t l = 0; l < rep.levels.size(); ++l)
  {
    const auto &lv = rep.levels[l];
    for (std::size_t i = 0; i < lv.values.size(); ++i)
      lt.row(l, lv.spec.radius, lv.spec.spacing, lv.nodes, i, lv.values[i], lv.interior_mass[i]);
  }
  std::vector<std::string> cols{"track", "persistent", "verdict"};
  for (std::size_t l = 0; l < rep.levels.size(); ++l)
    cols.push_back("level" + std::to_string(l));
  auto tt = cx.table("persistence_tracks.csv", cols);
  json tracks = json::array(), persistent = json::array();
  for (std::size_t k = 0; k < rep.tracks.size(); ++k)
  {
    const auto &t = rep.tracks[k];
    std::vector<std::string> row{std::to_string(k), t.persistent ? "true" : "false", t.verdict};
    for (double x : t.values)
      row.push_back(std::isnan(x) ? std::string() : format_double(x));
    tt.cells(row);
  }
  for (const auto &t : rep.tracks)
  {
    json vals = json::array();
    for (double x : t.values)
      vals.push_back(std::isnan(x) ? json(nullptr) : json(x));
    tracks.push_back({{"values", vals}, {"verdict", t.verdict}});
    if (t.persistent)
      persistent.push_back(t.values.back());
  }
  cx.results = {{"alpha", q.alpha},
                {"window", {q.window_lo <= -1e300 ? json(nullptr) : json(q.window_lo), q.window_hi}},
                {"tracks", tracks},
                {"persistent_eigenvalues", persistent},
                {"persistent_count", rep.persistent_count()}};
  cx.verdict("persistent eigenvalue count", rep.persistent_count() == q.expected_persistent,
             std::to_string(rep.persistent_count()) + " persistent, expected " + std::to_string(q.expected_persistent));
}

void run_compare_weights(Context &cx)
{
  auto t = cx.table("weight_comparison.csv",
                    {"level", "radius", "spacing", "nodes", "rho_below_horizontal", "gradient_below_horizontal", "c1",
                     "c2", "c1_larger", "c2_larger"});
  json levels = json::array();
  bool pointwise = true;
  for (std::size_t l = 0; l < cx.cfg.ladder.size(); ++l)
  {
    cx.enter(static_cast<int>(l));
    const auto &spec = cx.cfg.ladder[l];
    const Lattice latt(cx.alg, spec);
    const auto w = compare_weights(latt);
    t.row(l, spec.radius, spec.spacing, w.nodes, w.rho_below_horizontal, w.gradient_below_horizontal, w.c1, w.c2,
          w.c1_larger, w.c2_larger);
    pointwise = pointwise && w.rho_below_horizontal == w.nodes && w.gradient_below_horizontal == w.nodes;
    auto vec = [](const Vec &x) { return std::vector<double>(x.data(), x.data() + x.size()); };
    levels.push_back({{"radius", spec.radius},
                      {"spacing", spec.spacing},
                      {"nodes", w.nodes},
                      {"rho_below_horizontal", w.rho_below_horizontal},
                      {"gradient_below_horizontal", w.gradient_below_horizontal},
                      {"c1", w.c1},
                      {"c2", w.c2},
                      {"c1_larger", w.c1_larger},
                      {"c2_larger", w.c2_larger},
                      {"witness_c1", vec(w.witness_c1)},
                      {"witness_c2", vec(w.witness_c2)}});
  }
  cx.results = {{"levels", levels}};
  cx.verdict("pointwise weight order", pointwise,
             "1/rho^2 <= 1/|x~|^2 and (grad rho)^2/rho^2 <= 1/|x~|^2 at every node off the centre axis");
}

std::string summary_text(const Context &cx, const std::string &status, const std::string &message, double wall)
{
  json s;
  s["header"] = kReportHeader;
  s["task"] = to_string(cx.cfg.task);
  s["status"] = status;
  if (!message.empty())
    s["message"] = message;
  s["inputs"] = json::parse(cx.cfg.canonical);
  s["results"] = cx.results;
  json v = json::array();
  for (const auto &x : cx.verdicts)
    v.push_back({{"name", x.name}, {"pass", x.pass}, {"detail", x.detail}});
  s["verdicts"] = v;
  s["tables"] = cx.tables;
  s["provenance"] = {{"config_sha256", sha256_hex(cx.cfg.canonical)},
                     {"version", carnot_version()},
                     {"wall_seconds", wall}};
  return s.dump(2) + "\n";
}

}  // namespace

RunResult run(const ExperimentConfig &cfg, const RunOptions &opt)
{
  const auto t0 = std::chrono::steady_clock::now();
  Context cx{cfg, opt, build_algebra(cfg.algebra, cfg.base_dir), fs::path(cfg.output), json::object(), {}, {}, -1};
  if (opt.write_files)
  {
    std::error_code ec;
    fs::create_directories(cx.dir, ec);
    if (ec)
      fail(ErrorCode::IoError, "cannot create " + cx.dir.string() + ": " + ec.message());
  }
  auto wall = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  auto write_summary = [&](const std::string &text) {
    if (!opt.write_files)
      return;
    std::ofstream out(cx.dir / "summary.json");
    out << text;
    if (!out)
      fail(ErrorCode::IoError, "cannot write summary.json");
  };

  try
  {
    switch (cfg.task)
    {
      case Task::EstimateHardy: run_estimate_hardy(cx); break;
      case Task::CheckPotential: run_check_potential(cx); break;
      case Task::Spectrum: run_spectrum(cx); break;
      case Task::LapProbe: run_lap_probe(cx); break;
      case Task::Persistence: run_persistence(cx); break;
      case Task::CompareWeights: run_compare_weights(cx); break;
    }
  }
  catch (const Error &e)
  {
    std::string where = "task " + to_string(cfg.task);
    if (cx.level >= 0)
      where += ", ladder[" + std::to_string(cx.level) + "] (R = " + fmt(cfg.ladder[cx.level].radius) +
               ", h = " + fmt(cfg.ladder[cx.level].spacing) + ")";
    const std::string msg = where + ": " + e.what();
    write_summary(summary_text(cx, e.code() == ErrorCode::Interrupted ? "interrupted" : "error", msg, wall()));
    throw Error(e.code(), msg);
  }

  RunResult r;
  r.wall_seconds = wall();
  r.verdicts = cx.verdicts;
  r.all_pass = !r.verdicts.empty() &&
               std::all_of(r.verdicts.begin(), r.verdicts.end(), [](const Verdict &v) { return v.pass; });
  r.tables = cx.tables;
  r.summary = summary_text(cx, "complete", "", r.wall_seconds);
  write_summary(r.summary);
  return r;
}

}  // namespace carnot
