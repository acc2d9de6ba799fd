#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "problems.hpp"
#include "riemopt/result_io.hpp"
#include "riemopt/solver.hpp"
#include "riemopt/stats/harness.hpp"

namespace {

using namespace riemopt;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitCheckFailed = 3;
constexpr int kExitUsage = 64;
constexpr int kExitIo = 74;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const std::string& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

std::vector<std::string> problem_names() {
  std::vector<std::string> names;
  for (const auto& p : cli::problem_catalog()) names.push_back(p.name);
  return names;
}

std::vector<std::string> study_names() {
  std::vector<std::string> names;
  for (auto s : stats::all_studies()) names.emplace_back(stats::study_name(s));
  return names;
}

std::string help_footer() {
  std::ostringstream out;
  out << "\nProblems:\n";
  for (const auto& p : cli::problem_catalog()) {
    out << "  " << p.name << std::string(p.name.size() < 18 ? 18 - p.name.size() : 1, ' ')
        << p.summary << '\n';
  }
  out << "\nMethods:\n  " << join(method_names()) << '\n';
  out << "\nStudies:\n  " << join(study_names()) << '\n';
  out << "\nManifold grammar (--manifold):\n"
         "  euclidean:n | sphere:p | stiefel:p,d | grassmann:p,d | spd:p\n"
         "  product:(spec;spec;...)   e.g. product:(sphere:3;spd:3)\n";
  out << "\nExit codes: 0 converged, 2 stopped before tolerance, 1 error,\n"
         "  3 derivative check failed, 64 usage error, 74 I/O error.\n";
  return out.str();
}

void add_solver_options(CLI::App* cmd, SolverConfig& c, int& line_search) {
  cmd->add_option("--tolerance", c.tolerance, "Stop when |gf|/|gf0| reaches this");
  cmd->add_option("--max-iteration", c.max_iteration);
  cmd->add_option("--min-iteration", c.min_iteration);
  cmd->add_option("--output-gap", c.output_gap);
  cmd->add_option("--debug", c.debug, "Verbosity 0..3");
  cmd->add_flag("--is-check-params", c.is_check_params, "Print the parameter block");
  cmd->add_flag("--is-check-grad-hess", c.is_check_grad_hess,
                "Print derivative ladders before solving");
  cmd->add_option("--line-search-ls", line_search, "0 = Armijo, 1 = Wolfe");
  cmd->add_option("--ls-alpha", c.ls_alpha);
  cmd->add_option("--ls-beta", c.ls_beta);
  cmd->add_option("--initstepsize", c.init_stepsize);
  cmd->add_option("--minstepsize", c.min_stepsize);
  cmd->add_option("--maxstepsize", c.max_stepsize);
  cmd->add_option("--accuracy", c.accuracy);
  cmd->add_option("--finalstepsize", c.final_stepsize);
  cmd->add_option("--num-pre-funs", c.num_pre_funs);
  cmd->add_option("--init-steptype", c.init_step_type);
  cmd->add_option("--nu", c.nu);
  cmd->add_option("--mu", c.mu);
  cmd->add_flag("--isconvex", c.is_convex);
  cmd->add_option("--length-sy", c.length_sy);
  cmd->add_option("--tr-initial-radius", c.tr_initial_radius);
  cmd->add_option("--tr-max-radius", c.tr_max_radius);
  cmd->add_option("--tr-kappa", c.tr_kappa);
  cmd->add_option("--tr-theta", c.tr_theta);
}

Method require_method(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) {
    throw UsageError("unknown method '" + name + "'; valid methods: " + join(method_names()));
  }
  return *m;
}

void require_problem(const std::string& name) {
  if (!cli::is_problem(name)) {
    throw UsageError("unknown problem '" + name + "'; valid problems: " +
                     join(problem_names()));
  }
}

Point read_point(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read x0 file '" + path + "'");
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    for (char& ch : token) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream cells(token);
    double v = 0.0;
    while (cells >> v) values.push_back(v);
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

struct RunOptions {
  std::string problem;
  std::string method = "LRBFGS";
  std::string manifold;
  std::uint64_t seed = 1234;
  std::string x0;
  std::string out = "-";
  std::string format = "json";
  bool corrupt_gradient = false;
  int line_search = 0;
  SolverConfig config;
};

// Resolves the problem, manifold override and starting point.
cli::BundledProblem prepare(const RunOptions& o, std::optional<Point>& x0) {
  require_problem(o.problem);
  cli::BundledProblem bp = cli::make_problem(o.problem, o.seed, o.corrupt_gradient);
  x0 = bp.x0;
  if (!o.manifold.empty()) {
    Manifold m = Manifold::parse(o.manifold);
    if (m.ambient_len() != bp.manifold.ambient_len()) {
      throw UsageError("manifold '" + o.manifold + "' has " +
                       std::to_string(m.ambient_len()) + " coordinates, problem '" +
                       o.problem + "' expects " +
                       std::to_string(bp.manifold.ambient_len()));
    }
    bp.manifold = std::move(m);
    if (!bp.manifold.is_point(*x0, 1e-8)) x0.reset();
  }
  if (!o.x0.empty()) {
    x0 = read_point(o.x0);
    if (x0->size() != bp.manifold.ambient_len()) {
      throw UsageError("x0 has " + std::to_string(x0->size()) + " values, expected " +
                       std::to_string(bp.manifold.ambient_len()));
    }
  }
  return bp;
}

int cmd_run(RunOptions& o) {
  o.config.method = require_method(o.method);
  if (o.format != "json" && o.format != "csv") {
    throw UsageError("unknown format '" + o.format + "'; use json or csv");
  }
  o.config.line_search = static_cast<LineSearchKind>(o.line_search);
  o.config.seed = o.seed;
  try {
    o.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (o.out == "-") o.config.log = &std::cerr;
  std::optional<Point> x0;
  const cli::BundledProblem bp = prepare(o, x0);

  ResultDocument doc;
  doc.problem = bp.name;
  doc.manifold = bp.manifold.to_string();
  doc.result = solve(bp.problem, bp.manifold, o.config, x0);
  write_text(o.out, format_result(doc, o.format == "json" ? ResultFormat::kJson
                                                          : ResultFormat::kCsv));
  return doc.result.stop_reason == StopReason::kGradientTolerance ? kExitOk
                                                                  : kExitNotConverged;
}

int cmd_check(RunOptions& o) {
  require_method(o.method);
  std::optional<Point> x0;
  const cli::BundledProblem bp = prepare(o, x0);
  if (!x0) x0 = [&] {
    Rng rng(o.seed);
    return bp.manifold.random_point(rng);
  }();
  const GradHessCheck check = check_grad_hess(bp.problem, bp.manifold, *x0, o.seed);
  std::ostringstream out;
  out << "# ladder at x0\n" << format_check_report(check.at_start);
  out << "# ladder at the solution\n" << format_check_report(check.at_solution);
  write_text(o.out, out.str());
  return check.at_start.longest_grad_run() >= 3 ? kExitOk : kExitCheckFailed;
}

struct BenchOptions {
  std::string study;
  stats::StudyOptions study_options;
  std::string out;
  std::string summary;
  bool timing = false;
};

int cmd_bench(const BenchOptions& o) {
  const auto study = stats::parse_study(o.study);
  if (!study) {
    throw UsageError("unknown study '" + o.study + "'; valid studies: " +
                     join(study_names()));
  }
  const std::vector<stats::BenchRow> rows = stats::run_study(*study, o.study_options);
  const std::string table = stats::format_summary(*study, rows);
  if (!o.out.empty()) write_text(o.out, stats::format_rows(rows, o.timing));
  if (!o.summary.empty()) write_text(o.summary, table);
  std::cout << table;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riemopt: optimization over Riemannian matrix manifolds"};
  app.footer(help_footer());
  app.require_subcommand(1);

  RunOptions run;
  CLI::App* run_cmd = app.add_subcommand("run", "Solve a bundled problem");
  run_cmd->add_option("--problem", run.problem, "Problem name")->required();
  run_cmd->add_option("--method", run.method, "Solver method")->capture_default_str();
  run_cmd->add_option("--manifold", run.manifold, "Override the search space");
  run_cmd->add_option("--seed", run.seed, "Instance seed")->capture_default_str();
  run_cmd->add_option("--x0", run.x0, "File with the starting point (flat, column-major)");
  run_cmd->add_option("--out", run.out, "Result path, - for stdout")->capture_default_str();
  run_cmd->add_option("--format", run.format, "json or csv")->capture_default_str();
  run_cmd->add_flag("--corrupt-gradient", run.corrupt_gradient)->group("");
  add_solver_options(run_cmd, run.config, run.line_search);

  RunOptions check;
  CLI::App* check_cmd =
      app.add_subcommand("check", "Print finite-difference ladders for the derivatives");
  check_cmd->add_option("--problem", check.problem, "Problem name")->required();
  check_cmd->add_option("--method", check.method, "Validated only")->capture_default_str();
  check_cmd->add_option("--manifold", check.manifold, "Override the search space");
  check_cmd->add_option("--seed", check.seed, "Instance and direction seed")
      ->capture_default_str();
  check_cmd->add_option("--x0", check.x0, "File with the point to check");
  check_cmd->add_option("--out", check.out, "Report path, - for stdout")
      ->capture_default_str();
  check_cmd->add_flag("--corrupt-gradient", check.corrupt_gradient)->group("");

  BenchOptions bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run a simulation study");
  bench_cmd->add_option("study", bench.study, "Study name")->required();
  bench_cmd->add_option("--reps", bench.study_options.reps)->capture_default_str();
  bench_cmd->add_option("--seed", bench.study_options.seed, "Base seed")
      ->capture_default_str();
  bench_cmd->add_option("--n", bench.study_options.n, "Sample size (0 = study default)");
  bench_cmd->add_option("--p", bench.study_options.p, "PFC predictors (0 = 10)");
  bench_cmd->add_option("--restarts", bench.study_options.restarts)->capture_default_str();
  bench_cmd->add_option("--workers", bench.study_options.workers, "0 = all cores");
  bench_cmd->add_option("--out", bench.out, "Per-replication rows (CSV)");
  bench_cmd->add_option("--summary", bench.summary, "Summary table path");
  bench_cmd->add_flag("--timing", bench.timing, "Write seconds instead of NA");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*check_cmd) return cmd_check(check);
    if (*bench_cmd) return cmd_bench(bench);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}
