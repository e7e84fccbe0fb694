#include <carnot/diagnostics.hpp>
#include <carnot/io.hpp>
#include <carnot/operators.hpp>
#include <carnot/runner.hpp>
#include <carnot/spectral.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace carnot;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace
{

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int)
{
  g_stop.store(true);
}

enum Exit
{
  Ok = 0,
  VerdictFailed = 1,
  ConfigError = 2,
  RuntimeError = 3,
  Interrupted = 130,
};

std::vector<double> parse_list(const std::string &s, const std::string &flag)
{
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ','))
  {
    if (cell == "null" || cell == "-inf")
    {
      out.push_back(-HUGE_VAL);
      continue;
    }
    try
    {
      out.push_back(std::stod(cell));
    }
    catch (const std::exception &)
    {
      throw CLI::ValidationError(flag, "'" + cell + "' is not a number");
    }
  }
  return out;
}

std::string read_text(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Flags shared by every task subcommand; each one, when given, overwrites the config key it mirrors.
struct Common
{
  std::string config;
  std::string algebra;
  double radius = 0.0;
  std::string ladder;
  std::string output;
  long long seed = -1;
  std::string backend;
  long long dense_limit = -1;
  std::string potential, profile, expression, potential_qn;
  std::optional<double> gamma, c, power, a, eta, width;
  bool quiet = false;
};

void add_common(CLI::App *s, Common &c)
{
  s->add_option("--config", c.config, "base config file (JSON); defaults to the task's default config")
      ->check(CLI::ExistingFile);
  s->add_option("--algebra", c.algebra, "algebra.preset: heisenberg(d), abelian(m), engel");
  s->add_option("--radius", c.radius, "ladder[].radius for every level given by --ladder (R > 0)");
  s->add_option("--ladder", c.ladder, "ladder spacings h1,h2,... (coarse to fine, each in (0, R))");
  s->add_option("--output,-o", c.output, "output: report directory");
  s->add_option("--seed", c.seed, "seed: randomized trial vectors");
  s->add_option("--backend", c.backend, "backend: auto | dense | sine | krylov");
  s->add_option("--dense-limit", c.dense_limit, "dense_limit: largest dense factorization");
  s->add_option("--potential", c.potential, "potential.kind: zero | profile | smoothed_power | well | expression");
  s->add_option("--gamma", c.gamma, "potential.gamma (profile family, Heisenberg)");
  s->add_option("--profile", c.profile,
                "potential.profile: inverse_quadratic | negative_inverse_quadratic | constant | log_oscillation");
  s->add_option("--coupling", c.c, "potential.c (smoothed_power)");
  s->add_option("--power", c.power, "potential.alpha (smoothed_power exponent > 0)");
  s->add_option("--smoothing", c.a, "potential.a (smoothed_power, >= 0)");
  s->add_option("--potential-quasi-norm", c.potential_qn, "potential.quasi_norm");
  s->add_option("--eta", c.eta, "potential.eta (well depth)");
  s->add_option("--width", c.width, "potential.width (well half-width > 0)");
  s->add_option("--expression", c.expression, "potential.expression (sets potential.kind = expression)");
  s->add_flag("--quiet,-q", c.quiet, "no per-level progress");
}

json base_document(const Common &c, Task t, std::string &base_dir)
{
  if (!c.config.empty())
  {
    const std::string dir = fs::path(c.config).parent_path().string();
    base_dir = dir.empty() ? "." : dir;
    json j;
    try
    {
      j = json::parse(read_text(c.config));
    }
    catch (const json::parse_error &)
    {
      // let the library report line and column
      parse_config_text(read_text(c.config), base_dir);
      throw;
    }
    j["task"] = to_string(t);
    return j;
  }
  base_dir = ".";
  return json::parse(default_config_text(t));
}

void apply_common(const Common &c, json &j)
{
  if (!c.algebra.empty())
    j["algebra"] = {{"preset", c.algebra}};
  if (!c.ladder.empty())
  {
    json l = json::array();
    const double R = c.radius > 0.0 ? c.radius
                                    : (j.contains("ladder") && !j["ladder"].empty() && j["ladder"][0].contains("radius")
                                           ? j["ladder"][0]["radius"].get<double>()
                                           : 3.0);
    for (double h : parse_list(c.ladder, "--ladder"))
      l.push_back({{"radius", R}, {"spacing", h}, {"offset", true}});
    j["ladder"] = l;
  }
  else if (c.radius > 0.0 && j.contains("ladder"))
    for (auto &e : j["ladder"])
      e["radius"] = c.radius;
  if (!c.output.empty())
    j["output"] = c.output;
  if (c.seed >= 0)
    j["seed"] = c.seed;
  if (!c.backend.empty())
    j["backend"] = c.backend;
  if (c.dense_limit >= 0)
    j["dense_limit"] = c.dense_limit;
  auto &p = j["potential"];
  if (p.is_null())
    p = json::object();
  if (!c.potential.empty())
    p["kind"] = c.potential;
  if (!c.expression.empty())
  {
    p["kind"] = "expression";
    p["expression"] = c.expression;
  }
  if (!c.profile.empty())
    p["profile"] = c.profile;
  if (!c.potential_qn.empty())
    p["quasi_norm"] = c.potential_qn;
  if (c.gamma)
    p["gamma"] = *c.gamma;
  if (c.c)
    p["c"] = *c.c;
  if (c.power)
    p["alpha"] = *c.power;
  if (c.a)
    p["a"] = *c.a;
  if (c.eta)
    p["eta"] = *c.eta;
  if (c.width)
    p["width"] = *c.width;
}

int execute(const std::string &text, const std::string &base_dir, bool quiet)
{
  ExperimentConfig cfg;
  try
  {
    cfg = parse_config_text(text, base_dir);
  }
  catch (const Error &e)
  {
    std::cerr << e.what() << "\n";
    return ConfigError;
  }
  RunOptions opt;
  opt.stop = &g_stop;
  opt.log = quiet ? nullptr : &std::cerr;
  try
  {
    const RunResult r = run(cfg, opt);
    std::cout << kReportHeader << "\n";
    for (const auto &v : r.verdicts)
      std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << "\n";
    std::cout << "report: " << (fs::path(cfg.output) / "summary.json").string() << "\n";
    return r.all_pass ? Ok : VerdictFailed;
  }
  catch (const Error &e)
  {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::Interrupted ? Interrupted : RuntimeError;
  }
}

struct ExportArgs
{
  std::string config;
  std::string object = "laplacian";
  std::string format = "cgop";
  std::string output;
  int level = -1;
  double alpha = 2.0;
};

int export_object(const ExportArgs &a)
{
  ExperimentConfig cfg;
  try
  {
    cfg = parse_config_file(a.config);
  }
  catch (const Error &e)
  {
    std::cerr << e.what() << "\n";
    return ConfigError;
  }
  const int n = static_cast<int>(cfg.ladder.size());
  const int l = a.level < 0 ? n - 1 : a.level;
  if (l >= n)
  {
    std::cerr << "level " << l << " outside the ladder (" << n << " levels)\n";
    return ConfigError;
  }
  const StratifiedAlgebra alg = build_algebra(cfg.algebra, cfg.base_dir);
  const Lattice latt(alg, cfg.ladder[l]);
  const bool csv = a.format == "csv";

  auto write_op = [&](const SpMat &m) {
    csv ? write_operator_csv(a.output, m) : write_operator_binary(a.output, m);
  };
  auto write_grid = [&](const Vec &u) {
    csv ? write_grid_csv(a.output, latt, u) : write_grid_binary(a.output, latt, u);
  };

  if (a.object == "laplacian")
    write_op(sublaplacian(latt));
  else if (a.object == "euler")
    write_op(euler_operator(latt));
  else if (a.object == "generator")
    write_op(generator_iA(latt));
  else if (a.object == "fractional")
  {
    if (latt.size() > cfg.dense_limit)
      fail(ErrorCode::BudgetExceeded, std::to_string(latt.size()) + " nodes exceed dense_limit for a dense L^(alpha/2)");
    const Mat m = make_spectral(latt, SpectralBackend::Dense, cfg.dense_limit)->dense(SpectralFn::pow(a.alpha / 2));
    if (csv)
      write_operator_csv(a.output, m.sparseView());
    else
      write_dense_binary(a.output, m);
  }
  else
  {
    const Potential v = build_potential(alg, cfg.potential);
    if (a.object == "potential")
      write_grid(sample(latt, v.value));
    else
      write_grid(sample(latt, [&](const Vec &x) { return euler_derivative(alg, v, x, 1); }));
  }
  std::cout << a.object << " on ladder[" << l << "] (" << latt.size() << " nodes) -> " << a.output << "\n";
  return Ok;
}

}  // namespace

int main(int argc, char **argv)
{
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  CLI::App app{"Lattice diagnostics for Schroedinger-type operators on stratified groups"};
  app.require_subcommand(1);
  app.footer("\n" + config_help() +
             "\nExit status: 0 all verdicts pass, 1 a verdict fails, 2 config error, 3 runtime error, 130 interrupted.");
  app.set_version_flag("--version", carnot_version());

  std::string run_path;
  bool run_quiet = false;
  std::string run_output;
  auto *run_cmd = app.add_subcommand("run", "run the task described by a config file");
  run_cmd->add_option("config", run_path, "config file (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--output,-o", run_output, "override output");
  run_cmd->add_flag("--quiet,-q", run_quiet, "no per-level progress");
  run_cmd->footer("\n" + config_help());

  std::string dc_task = "estimate-hardy", dc_out;
  auto *dc = app.add_subcommand("default-config", "print a small default config for a task");
  dc->add_option("--task", dc_task, "task name")->check(CLI::IsMember(task_names()));
  dc->add_option("--output,-o", dc_out, "write to this file instead of stdout");

  ExportArgs ex;
  auto *ex_cmd = app.add_subcommand("export", "write an operator or grid function of one ladder level");
  ex_cmd->add_option("config", ex.config, "config file (JSON)")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--object", ex.object,
                     "laplacian | euler | generator (sparse), fractional (dense L^(alpha/2)), potential | "
                     "euler_potential (grid)")
      ->check(CLI::IsMember({"laplacian", "euler", "generator", "fractional", "potential", "euler_potential"}));
  ex_cmd->add_option("--format", ex.format, "cgop (binary) | csv")->check(CLI::IsMember({"cgop", "csv"}));
  ex_cmd->add_option("--level", ex.level, "ladder index; default the last level");
  ex_cmd->add_option("--alpha", ex.alpha, "order for --object fractional");
  ex_cmd->add_option("--output,-o", ex.output, "output file")->required();

  Common common;

  std::string weight, hardy_qn;
  std::optional<double> hardy_alpha, expected, ladder_tol;
  auto *eh = app.add_subcommand("estimate-hardy", "discrete Hardy constants along a refinement ladder");
  add_common(eh, common);
  eh->add_option("--weight", weight,
                 "estimate_hardy.weight: quasi_norm_power | rho_gradient | horizontal_inverse | heisenberg_fractional");
  eh->add_option("--alpha", hardy_alpha, "estimate_hardy.alpha (quasi_norm_power, heisenberg_fractional: 0 < alpha < M; others: 2)");
  eh->add_option("--quasi-norm", hardy_qn, "estimate_hardy.quasi_norm: power_sum | heisenberg_rho | euclidean");
  eh->add_option("--ladder-tol", ladder_tol, "estimate_hardy.ladder_tol");
  eh->add_option("--expected", expected, "estimate_hardy.expected: reference constant for the verdict");

  std::string criterion, theta, points;
  std::optional<double> check_alpha, kappa, e_alpha;
  std::optional<int> cloud;
  auto *cp = app.add_subcommand("check-potential", "decide an admissibility criterion for a potential");
  add_common(cp, common);
  cp->add_option("--criterion", criterion, "check_potential.criterion: thm2_1 | thm4_1 | thm4_2 | thm4_4 | combined");
  cp->add_option("--alpha", check_alpha, "check_potential.alpha (thm2_1, thm4_4: 0 < alpha < M)");
  cp->add_option("--theta", theta, "check_potential.theta t1,t2,t3 (combined: positive, sum < 1)");
  cp->add_option("--points", points, "check_potential.points: CSV of sample points");
  cp->add_option("--cloud-size", cloud, "check_potential.cloud_size");
  cp->add_option("--kappa", kappa, "check_potential.kappa (else computed on the last level)");
  cp->add_option("--E-alpha", e_alpha, "check_potential.E_alpha (else computed on the last level)");

  std::optional<double> spec_alpha;
  std::optional<int> count;
  bool no_domination = false;
  auto *sp = app.add_subcommand("spectrum", "low spectrum of H, positivity of K, second-commutator bound");
  add_common(sp, common);
  sp->add_option("--alpha", spec_alpha, "spectrum.alpha (0 < alpha < M)");
  sp->add_option("--count", count, "spectrum.count");
  sp->add_flag("--no-domination", no_domination, "spectrum.domination = false");

  std::string lambdas, probe;
  std::optional<double> lap_alpha, eps_hi, eps_lo, eps_floor;
  std::optional<int> eps_count;
  auto *lp = app.add_subcommand("lap-probe", "Im <u, (H - lambda - i eps)^-1 u> along an eps schedule");
  add_common(lp, common);
  lp->add_option("--alpha", lap_alpha, "lap_probe.alpha (> 0)");
  lp->add_option("--lambdas", lambdas, "lap_probe.lambdas l1,l2,...");
  lp->add_option("--eps-hi", eps_hi, "lap_probe.eps_hi");
  lp->add_option("--eps-lo", eps_lo, "lap_probe.eps_lo");
  lp->add_option("--eps-count", eps_count, "lap_probe.eps_count");
  lp->add_option("--eps-floor", eps_floor, "lap_probe.eps_floor (< 0: automatic)");
  lp->add_option("--probe", probe, "lap_probe.probe: gaussian | random");

  std::string window;
  std::optional<double> pers_alpha, cauchy;
  std::optional<int> expected_count;
  auto *pe = app.add_subcommand("persistence", "track window eigenvalues across the ladder");
  add_common(pe, common);
  pe->add_option("--alpha", pers_alpha, "persistence.alpha (> 0)");
  pe->add_option("--window", window, "persistence.window lo,hi (lo may be null)");
  pe->add_option("--cauchy-tol", cauchy, "persistence.cauchy_tol");
  pe->add_option("--expected", expected_count, "persistence.expected_persistent");

  auto *cw = app.add_subcommand("compare-weights", "pointwise and constant-weighted Heisenberg weight comparison");
  add_common(cw, common);

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (*dc)
    {
      const std::string text = default_config_text(task_from_string(dc_task));
      if (dc_out.empty())
        std::cout << text;
      else
      {
        std::ofstream out(dc_out);
        out << text;
        if (!out)
          fail(ErrorCode::IoError, "cannot write " + dc_out);
      }
      return Ok;
    }
    if (*ex_cmd)
      return export_object(ex);
    if (*run_cmd)
    {
      std::string text = read_text(run_path);
      const std::string dir = fs::path(run_path).parent_path().string();
      if (!run_output.empty())
      {
        json j;
        try
        {
          j = json::parse(text);
        }
        catch (const json::parse_error &)
        {
          return execute(text, dir.empty() ? "." : dir, run_quiet);
        }
        j["output"] = run_output;
        text = j.dump(2);
      }
      return execute(text, dir.empty() ? "." : dir, run_quiet);
    }

    CLI::App *sub = app.get_subcommands().front();
    const Task task = task_from_string(sub->get_name());
    std::string base_dir;
    json j = base_document(common, task, base_dir);
    apply_common(common, j);
    switch (task)
    {
      case Task::EstimateHardy:
      {
        auto &s = j["estimate_hardy"];
        if (!weight.empty())
          s["weight"] = weight;
        if (hardy_alpha)
          s["alpha"] = *hardy_alpha;
        if (!hardy_qn.empty())
          s["quasi_norm"] = hardy_qn;
        if (ladder_tol)
          s["ladder_tol"] = *ladder_tol;
        if (expected)
          s["expected"] = *expected;
        break;
      }
      case Task::CheckPotential:
      {
        auto &s = j["check_potential"];
        if (!criterion.empty())
          s["criterion"] = criterion;
        if (check_alpha)
          s["alpha"] = *check_alpha;
        if (!theta.empty())
          s["theta"] = parse_list(theta, "--theta");
        if (!points.empty())
          s["points"] = fs::absolute(points).string();
        if (cloud)
          s["cloud_size"] = *cloud;
        if (kappa)
          s["kappa"] = *kappa;
        if (e_alpha)
          s["E_alpha"] = *e_alpha;
        break;
      }
      case Task::Spectrum:
      {
        auto &s = j["spectrum"];
        if (spec_alpha)
          s["alpha"] = *spec_alpha;
        if (count)
          s["count"] = *count;
        if (no_domination)
          s["domination"] = false;
        break;
      }
      case Task::LapProbe:
      {
        auto &s = j["lap_probe"];
        if (lap_alpha)
          s["alpha"] = *lap_alpha;
        if (!lambdas.empty())
          s["lambdas"] = parse_list(lambdas, "--lambdas");
        if (eps_hi)
          s["eps_hi"] = *eps_hi;
        if (eps_lo)
          s["eps_lo"] = *eps_lo;
        if (eps_count)
          s["eps_count"] = *eps_count;
        if (eps_floor)
          s["eps_floor"] = *eps_floor;
        if (!probe.empty())
          s["probe"] = probe;
        break;
      }
      case Task::Persistence:
      {
        auto &s = j["persistence"];
        if (pers_alpha)
          s["alpha"] = *pers_alpha;
        if (!window.empty())
        {
          const auto w = parse_list(window, "--window");
          if (w.size() != 2)
            throw CLI::ValidationError("--window", "expected lo,hi");
          s["window"] = {std::isinf(w[0]) ? json(nullptr) : json(w[0]), w[1]};
        }
        if (cauchy)
          s["cauchy_tol"] = *cauchy;
        if (expected_count)
          s["expected_persistent"] = *expected_count;
        break;
      }
      case Task::CompareWeights: break;
    }
    // drop sections left empty by flag handling so unknown-key checks stay meaningful
    for (auto it = j.begin(); it != j.end();)
      it = it->is_object() && it->empty() ? j.erase(it) : std::next(it);
    return execute(j.dump(2), base_dir, common.quiet);
  }
  catch (const CLI::Error &e)
  {
    return app.exit(e);
  }
  catch (const Error &e)
  {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::ParseError || e.code() == ErrorCode::ValidationError ? ConfigError : RuntimeError;
  }
}
