// Command-line front end: solve / simulate / bound / fit-lattice / oracle.
// Exit codes: 0 success, 1 usage error, 2 solver failure, 3 validation
// failure.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mssp/cuts.hpp"
#include "mssp/dsa.hpp"
#include "mssp/dualsddp.hpp"
#include "mssp/eddp.hpp"
#include "mssp/horizon.hpp"
#include "mssp/lp.hpp"
#include "mssp/oracle.hpp"
#include "mssp/problem_io.hpp"
#include "mssp/scen.hpp"
#include "mssp/sddp.hpp"

namespace {

using mssp::Vector;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolver = 2;
constexpr int kExitValidation = 3;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CsvRow {
  int iter = 0;
  double lb = 0.0;
  std::optional<double> ub;
  std::optional<double> wall;
  std::optional<long> cuts;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

void write_iterations_csv(const std::filesystem::path& path,
                          const std::vector<CsvRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iter,lb,dual_ub,wall_seconds,cuts\n";
  for (const CsvRow& r : rows) {
    out << r.iter << ',' << fmt(r.lb) << ',';
    if (r.ub) out << fmt(*r.ub);
    out << ',';
    if (r.wall) out << fmt(*r.wall);
    out << ',';
    if (r.cuts) out << *r.cuts;
    out << '\n';
  }
}

void write_summary(const std::filesystem::path& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ordered_json json_vector(const Vector& v) {
  ordered_json out = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

ordered_json json_risk(const mssp::CoherentRisk& r) {
  ordered_json out;
  switch (r.kind) {
    case mssp::RiskKind::Expectation:
      out["kind"] = "expectation";
      break;
    case mssp::RiskKind::AVaR:
      out["kind"] = "avar";
      out["alpha"] = r.alpha;
      break;
    case mssp::RiskKind::Combo:
      out["kind"] = "combo";
      out["lambda"] = r.lambda;
      out["alpha"] = r.alpha;
      break;
  }
  return out;
}

std::uint64_t resolve_seed(std::uint64_t flag_seed) {
  if (const char* env = std::getenv("MSSP_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ValidationError("MSSP_SEED is not an integer");
    }
  }
  return flag_seed;
}

int resolve_threads(int flag_threads) {
  if (const char* env = std::getenv("MSSP_THREADS")) {
    try {
      return std::stoi(env);
    } catch (const std::exception&) {
      throw ValidationError("MSSP_THREADS is not an integer");
    }
  }
  return flag_threads;
}

mssp::io::ProblemFile load_checked(const std::string& path) {
  mssp::io::ProblemFile file;
  try {
    file = mssp::io::load_problem(path);
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
  auto errors = mssp::validate(file.problem);
  if (!errors.empty()) {
    std::ostringstream msg;
    msg << "invalid problem " << path << ':';
    for (const auto& e : errors) msg << "\n  " << e;
    throw ValidationError(msg.str());
  }
  return file;
}

void write_checkpoint(const std::string& path,
                      const std::vector<std::vector<mssp::CutPool>>& pools) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  std::vector<mssp::CutPool> flat;
  for (const auto& stage : pools)
    for (const auto& pool : stage) flat.push_back(pool);
  mssp::write_pools(out, flat);
}

struct SolveOptions {
  std::string problem_path;
  std::string method = "sddp";
  int iters = 100;
  std::uint64_t seed = 0;
  double gap_tol = 0.0;
  std::string risk_file;
  std::string out_dir = ".";
  std::string checkpoint;
  int threads = 1;
  // explorative / stationary
  double epsilon = 1e-2;
  double gamma = 0.9;
  int period = 0;
  double kappa = -1.0;
  std::vector<double> x_lb, x_ub;
  // nested primal-dual
  int n1 = 200, n2 = 10, n3 = 10;
  std::string mode = "general";
};

mssp::StationaryProblem stationary_from(const mssp::io::ProblemFile& file,
                                        const SolveOptions& opt) {
  if (!file.soc)
    throw ValidationError("stationary methods need a soc block in the file");
  mssp::StationaryProblem sp;
  sp.blocks = file.soc->stages;
  sp.gamma = opt.gamma;
  sp.kappa = opt.kappa;
  sp.x1 = file.soc->x1;
  const int n = sp.state_dim();
  auto broadcast = [&](const std::vector<double>& v, const char* name) {
    if (v.size() == 1) return Vector::Constant(n, v[0]).eval();
    if (static_cast<int>(v.size()) == n)
      return Eigen::Map<const Vector>(v.data(), n).eval();
    throw ValidationError(std::string(name) +
                          " needs 1 or state-dim entries");
  };
  if (opt.x_lb.empty() || opt.x_ub.empty())
    throw ValidationError("stationary methods need --x-lb and --x-ub");
  sp.x_lower = broadcast(opt.x_lb, "--x-lb");
  sp.x_upper = broadcast(opt.x_ub, "--x-ub");
  if (opt.period > 0 && opt.period != sp.period())
    throw ValidationError("--period disagrees with the soc block");
  auto errors = mssp::validate_stationary(sp);
  if (!errors.empty()) {
    std::ostringstream msg;
    msg << "invalid stationary problem:";
    for (const auto& e : errors) msg << "\n  " << e;
    throw ValidationError(msg.str());
  }
  return sp;
}

int run_solve(const SolveOptions& opt) {
  auto file = load_checked(opt.problem_path);
  std::uint64_t seed = resolve_seed(opt.seed);
  int threads = resolve_threads(opt.threads);  // accepted; runs serial
  std::filesystem::path out_dir(opt.out_dir);
  std::filesystem::create_directories(out_dir);

  std::vector<mssp::CoherentRisk> risks = file.stage_risks;
  if (!opt.risk_file.empty()) {
    std::ifstream in(opt.risk_file);
    if (!in) throw ValidationError("cannot open risk file " + opt.risk_file);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      risks = mssp::io::parse_risk_document(buf.str());
    } catch (const std::exception& e) {
      throw ValidationError(e.what());
    }
  }

  ordered_json summary;
  summary["method"] = opt.method;
  summary["seed"] = seed;
  ordered_json cfg;
  cfg["iters"] = opt.iters;
  cfg["gap_tol"] = opt.gap_tol;
  cfg["threads"] = threads;
  if (!risks.empty()) {
    cfg["risk"] = ordered_json::array();
    for (const auto& r : risks) cfg["risk"].push_back(json_risk(r));
  }
  std::vector<CsvRow> rows;

  if (opt.method == "sddp") {
    mssp::SddpConfig c;
    c.max_iterations = opt.iters;
    c.seed = seed;
    c.gap_tol = opt.gap_tol;
    c.stage_risks = risks;
    auto r = mssp::run_sddp(file.problem, c);
    summary["lower_bound"] = r.lower_bound;
    summary["first_stage"] = json_vector(r.first_stage);
    summary["stop_rule"] = r.stop_rule;
    summary["iterations"] = r.iterations;
    ordered_json ub;
    ub["mean"] = r.upper.mean;
    ub["std_error"] = r.upper.std_error;
    ub["edge"] = r.upper.edge;
    ub["paths"] = r.upper.paths;
    ub["z_alpha"] = c.z_alpha;
    summary["statistical_upper"] = ub;
    for (const auto& row : r.log)
      rows.push_back({row.iteration, row.lower_bound, std::nullopt,
                      row.elapsed_seconds, row.total_cuts});
    if (!opt.checkpoint.empty()) write_checkpoint(opt.checkpoint, r.state.pools);
    std::cout << "lower bound " << r.lower_bound << ", statistical edge "
              << r.upper.edge << " (" << r.stop_rule << ")\n";
  } else if (opt.method == "eddp") {
    mssp::EddpConfig c;
    c.epsilon = opt.epsilon;
    c.max_iterations = opt.iters;
    auto r = mssp::run_eddp(file.problem, c);
    summary["lower_bound"] = r.lower_bound;
    summary["first_stage"] = json_vector(r.first_stage);
    summary["policy_value"] = r.policy_value;
    summary["gap"] = r.gap;
    summary["gap_certificate"] = r.gap_bound;  // 2 m_hat (T-1) epsilon
    summary["m_hat"] = r.m_hat;
    summary["iteration_bound"] = r.iteration_bound;
    summary["iterations"] = r.iterations;
    summary["stop_rule"] = r.stop_rule;
    cfg["epsilon"] = opt.epsilon;
    if (!opt.checkpoint.empty()) write_checkpoint(opt.checkpoint, r.state.pools);
    std::cout << "lower bound " << r.lower_bound << ", gap certificate "
              << r.gap_bound << " (" << r.stop_rule << ")\n";
  } else if (opt.method == "dual") {
    mssp::SddpConfig pc;
    pc.max_iterations = opt.iters;
    pc.seed = seed;
    pc.gap_tol = 0.0;
    pc.upper_bound_paths = 0;
    pc.stabilization_window = 0;
    pc.stage_risks = risks;
    mssp::DualConfig dc;
    dc.max_iterations = opt.iters;
    if (opt.gap_tol > 0.0) dc.gap_tol = opt.gap_tol;
    auto r = mssp::run_dual_sddp(file.problem, pc, dc);
    summary["lower_bound"] = r.primal_lower_bound;
    summary["upper_bound"] = r.upper_bound;
    summary["gap"] = r.upper_bound - r.primal_lower_bound;
    summary["stop_rule"] = r.stop_rule;
    summary["iterations"] = r.iterations;
    summary["penalty_rho"] = r.penalty_rho;
    for (const auto& row : r.log)
      rows.push_back(
          {row.iteration, row.primal_lb, row.dual_ub, std::nullopt,
           std::nullopt});
    std::cout << "bounds [" << r.primal_lower_bound << ", " << r.upper_bound
              << "] (" << r.stop_rule << ")\n";
  } else if (opt.method == "dsa") {
    mssp::DsaProblem dp;
    dp.base = file.problem;
    mssp::DsaSchedule sch;
    sch.loops = {opt.n1};
    if (file.problem.horizon > 1) sch.loops.push_back(opt.n2);
    for (int t = 2; t < file.problem.horizon; ++t) sch.loops.push_back(opt.n3);
    sch.mode = opt.mode == "strong" ? mssp::DsaMode::Strong
                                    : mssp::DsaMode::General;
    auto r = mssp::dsa_solve(dp, sch, seed);
    summary["first_stage"] = json_vector(r.first_stage);
    summary["objective_estimate"] = r.objective_estimate;
    summary["residual"] = r.residual;
    summary["samples"] = r.samples;
    summary["dual_clips"] = r.dual_clips;
    summary["stop_rule"] = "schedule exhausted";
    if (!r.warning.empty()) summary["warning"] = r.warning;
    cfg["loops"] = sch.loops;
    cfg["mode"] = r.mode;
    cfg["tau_scale"] = r.tau_scale;
    cfg["eta_scale"] = r.eta_scale;
    cfg["mu"] = r.mu;
    std::cout << "objective estimate " << r.objective_estimate
              << ", residual " << r.residual << "\n";
  } else if (opt.method == "stationary" || opt.method == "periodic") {
    auto sp = stationary_from(file, opt);
    mssp::StationaryConfig c;
    c.max_iterations = opt.iters;
    c.epsilon = opt.epsilon;
    c.seed = seed;
    auto r = opt.method == "stationary" ? mssp::stationary_solve(sp, c)
                                        : mssp::periodic_solve(sp, c);
    summary["lower_bound"] = r.lower_bound;
    summary["truncation"] = r.truncation;
    summary["kappa"] = r.kappa;
    summary["stop_rule"] = r.stop_rule;
    summary["iterations"] = r.iterations;
    cfg["epsilon"] = opt.epsilon;
    cfg["gamma"] = opt.gamma;
    cfg["period"] = sp.period();
    for (std::size_t k = 0; k < r.lb_history.size(); ++k)
      rows.push_back({static_cast<int>(k + 1), r.lb_history[k], std::nullopt,
                      std::nullopt, std::nullopt});
    std::cout << "lower bound " << r.lower_bound << " over truncation "
              << r.truncation << " (" << r.stop_rule << ")\n";
  } else {
    throw CLI::ValidationError("--method", "unknown method " + opt.method);
  }

  summary["config"] = cfg;
  write_iterations_csv(out_dir / "iterations.csv", rows);
  write_summary(out_dir / "summary.json", summary);
  return kExitOk;
}

int run_simulate(const std::string& problem_path, int paths, double z_alpha,
                 int iters, std::uint64_t seed_flag,
                 const std::string& out_dir_flag) {
  auto file = load_checked(problem_path);
  std::uint64_t seed = resolve_seed(seed_flag);
  mssp::SddpConfig c;
  c.max_iterations = iters;
  c.seed = seed;
  c.upper_bound_paths = paths;
  c.z_alpha = z_alpha;
  c.stage_risks = file.stage_risks;
  auto r = mssp::run_sddp(file.problem, c);
  std::cout << "paths " << r.upper.paths << "\nmean " << r.upper.mean
            << "\nstd_error " << r.upper.std_error << "\nedge "
            << r.upper.edge << "\nlower_bound " << r.lower_bound << "\n";
  std::filesystem::path out_dir(out_dir_flag);
  std::filesystem::create_directories(out_dir);
  ordered_json summary;
  summary["method"] = "simulate";
  summary["seed"] = seed;
  summary["lower_bound"] = r.lower_bound;
  ordered_json ub;
  ub["mean"] = r.upper.mean;
  ub["std_error"] = r.upper.std_error;
  ub["edge"] = r.upper.edge;
  ub["paths"] = r.upper.paths;
  ub["z_alpha"] = z_alpha;
  summary["statistical_upper"] = ub;
  ordered_json cfg;
  cfg["iters"] = iters;
  cfg["paths"] = paths;
  summary["config"] = cfg;
  write_summary(out_dir / "summary.json", summary);
  return kExitOk;
}

int run_bound(const std::string& problem_path, int iters,
              std::uint64_t seed_flag, double gap_tol) {
  auto file = load_checked(problem_path);
  mssp::SddpConfig pc;
  pc.max_iterations = iters;
  pc.seed = resolve_seed(seed_flag);
  pc.gap_tol = 0.0;
  pc.upper_bound_paths = 0;
  pc.stabilization_window = 0;
  pc.stage_risks = file.stage_risks;
  mssp::DualConfig dc;
  dc.max_iterations = iters;
  if (gap_tol > 0.0) dc.gap_tol = gap_tol;
  auto r = mssp::run_dual_sddp(file.problem, pc, dc);
  std::cout << "iter\tlb\tub\tgap\n";
  for (const auto& row : r.log)
    std::cout << row.iteration << '\t' << row.primal_lb << '\t' << row.dual_ub
              << '\t' << row.dual_ub - row.primal_lb << '\n';
  std::cout << "final [" << r.primal_lower_bound << ", " << r.upper_bound
            << "] (" << r.stop_rule << ")\n";
  return kExitOk;
}

int run_fit_lattice(const std::string& series_path, int clusters, int period,
                    std::uint64_t seed_flag, const std::string& out_path) {
  std::ifstream in(series_path);
  if (!in) throw ValidationError("cannot open series " + series_path);
  std::vector<Vector> series;
  try {
    series = mssp::scen::read_series_csv(in);
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
  auto fit =
      mssp::scen::fit_lattice(series, clusters, period, resolve_seed(seed_flag));
  // lattice block skeleton: centers and transitions; stage LP data is the
  // problem author's to fill in
  ordered_json lattice;
  lattice["nodes"] = ordered_json::array();
  for (const auto& phase : fit.phases) {
    ordered_json stage_nodes = ordered_json::array();
    for (const auto& center : phase.centers) {
      ordered_json node;
      node["center"] = json_vector(center);
      stage_nodes.push_back(std::move(node));
    }
    lattice["nodes"].push_back(std::move(stage_nodes));
  }
  lattice["transitions"] = ordered_json::array();
  for (const auto& t : fit.transitions) {
    ordered_json mat = ordered_json::array();
    for (int i = 0; i < t.matrix.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (int j = 0; j < t.matrix.cols(); ++j) row.push_back(t.matrix(i, j));
      mat.push_back(std::move(row));
    }
    lattice["transitions"].push_back(std::move(mat));
  }
  ordered_json doc;
  doc["lattice"] = std::move(lattice);
  std::string text = doc.dump(2) + "\n";
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
  }
  long smoothed = 0;
  for (const auto& t : fit.transitions) smoothed += t.smoothed_rows;
  if (smoothed > 0)
    std::cerr << "note: " << smoothed
              << " unvisited source cells received uniform rows\n";
  return kExitOk;
}

mssp::MultistageProblem builtin_newsvendor() {
  using mssp::Matrix;
  mssp::MultistageProblem p;
  p.horizon = 2;
  p.stages.resize(2);
  mssp::StageRealization s1;
  s1.c = Vector::Constant(1, 1.0);
  s1.A = Matrix(0, 1);
  s1.b = Vector(0);
  p.stages[0].realizations.push_back(s1);
  p.stages[0].lower = Vector::Zero(1);
  p.stages[0].upper = Vector::Constant(1, 10.0);
  for (double d : {1.0, 3.0}) {
    mssp::StageRealization s2;
    s2.p = 0.5;
    s2.c = Vector(2);
    s2.c << 2.0, 0.5;  // backlog, holding
    s2.B = Matrix::Constant(1, 1, 1.0);
    s2.A = Matrix(1, 2);
    s2.A << 1.0, -1.0;  // x + back - hold = d
    s2.b = Vector::Constant(1, d);
    p.stages[1].realizations.push_back(s2);
  }
  p.stages[1].lower = Vector::Zero(2);
  p.stages[1].upper = Vector::Constant(2, mssp::kInf);
  return p;
}

int run_oracle_check() {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok,
                    const std::string& detail) {
    if (ok) {
      std::cout << "ok: " << name << '\n';
    } else {
      std::cout << "FAIL: " << name << " (" << detail << ")\n";
      ++failures;
    }
  };

  auto p = builtin_newsvendor();
  double truth = mssp::oracle::extensive_solve(p).value;
  report("extensive newsvendor optimum", std::abs(truth - 3.0) <= 1e-9,
         "value " + fmt(truth));

  mssp::SddpConfig c;
  c.max_iterations = 80;
  c.seed = 1;
  c.upper_bound_paths = 0;
  auto r = mssp::run_sddp(p, c);
  report("sddp reaches the extensive optimum",
         std::abs(r.lower_bound - truth) <= 1e-6,
         "lb " + fmt(r.lower_bound));

  mssp::DualConfig dc;
  dc.max_iterations = 120;
  auto dr = mssp::run_dual_sddp(p, c, dc);
  bool sandwich = dr.primal_lower_bound <= truth + 1e-7 &&
                  dr.upper_bound >= truth - 1e-7 &&
                  dr.upper_bound - dr.primal_lower_bound <= 1e-4 * truth;
  report("dual bound sandwiches the optimum", sandwich,
         "[" + fmt(dr.primal_lower_bound) + ", " + fmt(dr.upper_bound) + "]");

  mssp::lp::LpProblem unit;
  unit.c = Vector::Constant(1, 1.0);
  unit.A = mssp::Matrix::Constant(1, 1, 1.0);
  unit.b = Vector::Constant(1, 1.0);
  unit.lower = Vector::Zero(1);
  unit.upper = Vector::Constant(1, 10.0);
  auto sol = mssp::lp::solve(unit);
  report("lp unit example",
         sol.status == mssp::lp::LpStatus::Optimal &&
             std::abs(sol.value - 1.0) <= 1e-9 &&
             std::abs(sol.duals[0] - 1.0) <= 1e-9,
         "value " + fmt(sol.value));

  bool trunc_ok = mssp::truncation_horizon(0.5, 1.0, 2.0) == 0;
  int t = mssp::truncation_horizon(0.9, 1.0, 1e-3);
  trunc_ok = trunc_ok && 1.0 * std::pow(0.9, t) / 0.1 <= 1e-3 &&
             (t == 0 || 1.0 * std::pow(0.9, t - 1) / 0.1 > 1e-3);
  report("truncation horizon is minimal", trunc_ok, "T " + std::to_string(t));

  return failures == 0 ? kExitOk : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex multistage stochastic optimization toolkit"};
  app.require_subcommand(1);

  SolveOptions opt;
  auto* solve = app.add_subcommand("solve", "Solve a problem file");
  solve->add_option("--problem", opt.problem_path, "problem file (JSON)")
      ->required();
  solve->add_option("--method", opt.method,
                    "sddp|eddp|dual|dsa|stationary|periodic");
  solve->add_option("--iters", opt.iters, "iteration budget");
  solve->add_option("--seed", opt.seed, "master seed (MSSP_SEED overrides)");
  solve->add_option("--gap-tol", opt.gap_tol, "gap stop tolerance");
  solve->add_option("--risk-file", opt.risk_file,
                    "risk document overriding the problem file's block");
  solve->add_option("--out", opt.out_dir, "report directory");
  solve->add_option("--checkpoint", opt.checkpoint, "cut-pool dump file");
  solve->add_option("--threads", opt.threads,
                    "worker cap (MSSP_THREADS overrides; execution is serial)");
  solve->add_option("--epsilon", opt.epsilon,
                    "explorative / truncation tolerance");
  solve->add_option("--gamma", opt.gamma, "discount factor");
  solve->add_option("--period", opt.period, "expected phase count");
  solve->add_option("--kappa", opt.kappa, "stage cost bound override");
  solve->add_option("--x-lb", opt.x_lb, "state box lower (stationary)");
  solve->add_option("--x-ub", opt.x_ub, "state box upper (stationary)");
  solve->add_option("--n1", opt.n1, "outer loop size (dsa)");
  solve->add_option("--n2", opt.n2, "middle loop size (dsa)");
  solve->add_option("--n3", opt.n3, "inner loop size (dsa)");
  solve->add_option("--mode", opt.mode, "dsa schedule: general|strong");

  std::string sim_problem, sim_out = ".";
  int sim_paths = 2000, sim_iters = 100;
  double sim_z = 2.0;
  std::uint64_t sim_seed = 0;
  auto* simulate =
      app.add_subcommand("simulate", "Policy simulation and statistical bound");
  simulate->add_option("--problem", sim_problem, "problem file")->required();
  simulate->add_option("--paths", sim_paths, "Monte Carlo paths");
  simulate->add_option("--z-alpha", sim_z, "confidence multiplier");
  simulate->add_option("--iters", sim_iters, "training iterations");
  simulate->add_option("--seed", sim_seed, "master seed");
  simulate->add_option("--out", sim_out, "report directory");

  std::string bound_problem;
  int bound_iters = 100;
  std::uint64_t bound_seed = 0;
  double bound_gap = 0.0;
  auto* bound = app.add_subcommand("bound", "Print an LB/UB/gap table");
  bound->add_option("--problem", bound_problem, "problem file")->required();
  bound->add_option("--iters", bound_iters, "iteration budget");
  bound->add_option("--seed", bound_seed, "master seed");
  bound->add_option("--gap-tol", bound_gap, "gap stop tolerance");

  std::string series_path, lattice_out;
  int clusters = 3, period = 1;
  std::uint64_t fit_seed = 0;
  auto* fit = app.add_subcommand("fit-lattice",
                                 "Quantize a historical series into a lattice");
  fit->add_option("--series", series_path, "CSV, one time step per row")
      ->required();
  fit->add_option("--clusters", clusters, "centers per phase");
  fit->add_option("--period", period, "phase count");
  fit->add_option("--seed", fit_seed, "master seed");
  fit->add_option("--out", lattice_out, "output file (default stdout)");

  bool check = false;
  auto* oracle = app.add_subcommand("oracle", "Desk-scale cross-validation");
  oracle->add_flag("--check", check, "run the bundled fixture checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve->parsed()) return run_solve(opt);
    if (simulate->parsed())
      return run_simulate(sim_problem, sim_paths, sim_z, sim_iters, sim_seed,
                          sim_out);
    if (bound->parsed())
      return run_bound(bound_problem, bound_iters, bound_seed, bound_gap);
    if (fit->parsed())
      return run_fit_lattice(series_path, clusters, period, fit_seed,
                             lattice_out);
    if (oracle->parsed()) {
      if (!check) {
        std::cerr << "oracle: nothing to do (use --check)\n";
        return kExitUsage;
      }
      return run_oracle_check();
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation failure: " << e.what() << '\n';
    return kExitValidation;
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitUsage;
}
