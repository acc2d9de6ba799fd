// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Thresholds are the documented ones; nothing here is tuned to pass.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "problems.hpp"
#include "riemopt/manifold.hpp"
#include "riemopt/problem.hpp"
#include "riemopt/solver.hpp"
#include "riemopt/stats/brockett.hpp"
#include "riemopt/stats/harness.hpp"
#include "riemopt/stats/made.hpp"
#include "riemopt/stats/mvn.hpp"
#include "riemopt/stats/pfc.hpp"

#ifndef RIEMOPT_CLI_PATH
#error "RIEMOPT_CLI_PATH must name the riemopt executable"
#endif

using namespace riemopt;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects failure notes for one criterion.
struct Verdict {
  std::vector<std::string> failures;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  bool ok() const { return failures.empty(); }
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const Method kMandatory[] = {Method::kRSD, Method::kRCG, Method::kRBFGS, Method::kLRBFGS,
                             Method::kRTRNewton};

// ------------------------------------------------------------------------ 1

Verdict brockett_oracle_match() {
  Verdict v;
  const auto inst = stats::brockett_random(150, 5, 1234);
  const double fstar = stats::brockett_oracle(inst).f;
  std::ostringstream detail;
  for (Method m : kMandatory) {
    SolverConfig cfg;
    cfg.method = m;
    cfg.tolerance = 1e-8;
    cfg.max_iteration = 20000;
    const auto t0 = Clock::now();
    const OptimResult r = solve(stats::brockett_problem(inst), stats::brockett_manifold(inst),
                                cfg, stats::brockett_identity_start(150, 5));
    const double secs = seconds_since(t0);
    const double rel = std::abs(r.fval - fstar) / std::abs(fstar);
    detail << method_name(m) << fmt(" rel=%.1e t=%.2fs; ", rel, secs);
    v.require(rel <= 1e-6, std::string(method_name(m)) + fmt(" relative gap %.2e", rel));
    v.require(secs < 5.0, std::string(method_name(m)) + fmt(" took %.2f s", secs));
  }
  v.detail = detail.str();
  return v;
}

// ------------------------------------------------------------------------ 2

struct Ladder {
  std::vector<double> grad;
  std::vector<double> hess;
};

int longest_unit_run(const std::vector<double>& ratios) {
  int best = 0;
  int run = 0;
  for (double r : ratios) {
    run = std::abs(r - 1.0) <= 0.01 ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

Verdict derivative_diagnostic() {
  Verdict v;
  const std::string cmd = std::string(RIEMOPT_CLI_PATH) + " check --problem brockett 2>/dev/null";
  const auto t0 = Clock::now();
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    v.require(false, "could not start the command-line tool");
    return v;
  }
  std::string text;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) text.append(buf, n);
  const int status = pclose(pipe);
  const double secs = seconds_since(t0);

  std::vector<Ladder> ladders;
  std::istringstream in(text);
  std::string line;
  const std::string grad_key = "(fy-fx)/<gfx,eta>:";
  const std::string hess_key = "Hessian eta>:";
  while (std::getline(in, line)) {
    if (line.rfind("# ladder", 0) == 0) {
      ladders.emplace_back();
      continue;
    }
    const auto g = line.find(grad_key);
    const auto h = line.find(hess_key);
    if (ladders.empty() || g == std::string::npos || h == std::string::npos) continue;
    ladders.back().grad.push_back(std::strtod(line.c_str() + g + grad_key.size(), nullptr));
    ladders.back().hess.push_back(std::strtod(line.c_str() + h + hess_key.size(), nullptr));
  }
  v.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "check exited nonzero");
  if (ladders.size() != 2) {
    v.require(false, "expected two ladders in the check output");
    return v;
  }
  const int grad_run = longest_unit_run(ladders[0].grad);
  const int hess_run = longest_unit_run(ladders[1].hess);
  v.detail = fmt("gradient run %.0f, Hessian run %.0f, %.2f s", grad_run, hess_run, secs);
  v.require(grad_run >= 5, fmt("gradient run %.0f < 5", grad_run));
  v.require(hess_run >= 3, fmt("Hessian run %.0f < 3", hess_run));
  v.require(secs < 2.0, fmt("took %.2f s", secs));
  return v;
}

// ------------------------------------------------------------------------ 3

Verdict mvn_mle() {
  Verdict v;
  const stats::MvnParams truth = stats::mvn_truth(3);
  std::vector<double> mu_err;
  std::vector<double> sigma_err;
  double worst_norm = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Matrix data = stats::mvn_simulate(400, truth, seed);
    SolverConfig cfg;
    cfg.tolerance = 1e-8;
    const OptimResult r =
        solve(stats::mvn_problem(data), stats::mvn_manifold(3), cfg, stats::mvn_start(3));
    const stats::MvnParams fit = stats::mvn_unpack(r.xopt, 3);
    worst_norm = std::max(worst_norm, std::abs(fit.mu.norm() - 1.0));
    mu_err.push_back((fit.mu - truth.mu).norm());
    sigma_err.push_back((sym(fit.sigma) - truth.sigma).norm());
  }
  const double mu_med = median(mu_err);
  const double sigma_med = median(sigma_err);
  v.detail = fmt("max | |mu|-1 | %.1e, median mu error %.3f, median Sigma error %.3f",
                 worst_norm, mu_med, sigma_med);
  v.require(worst_norm <= 1e-10, fmt("|mu| off by %.2e", worst_norm));
  v.require(mu_med < 0.15, fmt("median mu error %.3f", mu_med));
  v.require(sigma_med < 0.6, fmt("median Sigma error %.3f", sigma_med));
  return v;
}

// ------------------------------------------------------------------------ 4

Verdict pfc_parity() {
  Verdict v;
  const auto t0 = Clock::now();
  std::ostringstream detail;
  const std::map<stats::Study, std::vector<std::string>> d_metrics = {
      {stats::Study::kPfcUnstructured, {"d_delta"}},
      {stats::Study::kPfcEnvelope, {"d_omega", "d_omega0"}}};
  for (const auto& [study, metrics] : d_metrics) {
    stats::StudyOptions opt;
    opt.reps = 100;
    opt.n = 300;
    const auto rows = stats::run_study(study, opt);
    const double rho_c = stats::summarize(rows, "Classical", "rho").mean;
    const double rho_m = stats::summarize(rows, "Manifold", "rho").mean;
    detail << stats::study_name(study) << fmt(": rho %.3f vs %.3f", rho_c, rho_m);
    v.require(std::abs(rho_c - rho_m) < 0.02,
              std::string(stats::study_name(study)) + fmt(" rho %.3f vs %.3f", rho_c, rho_m));
    for (const std::string& metric : metrics) {
      const double c = stats::summarize(rows, "Classical", metric).mean;
      const double m = stats::summarize(rows, "Manifold", metric).mean;
      const double rel = std::abs(c - m) / std::max(std::abs(c), 1e-300);
      detail << ", " << metric << fmt(" %.3f vs %.3f", c, m);
      v.require(rel < 0.05, metric + fmt(" %.3f vs %.3f", c, m));
    }
    detail << "; ";
  }
  const double secs = seconds_since(t0);
  detail << fmt("%.0f s", secs);
  v.require(secs < 600.0, fmt("took %.0f s", secs));
  v.detail = detail.str();
  return v;
}

// ------------------------------------------------------------------------ 5

Verdict envelope_logistic() {
  Verdict v;
  const auto t0 = Clock::now();
  stats::StudyOptions opt;
  opt.reps = 20;
  const auto rows = stats::run_study(stats::Study::kEnvelopeGlm, opt);
  std::ostringstream detail;
  for (const char* method : {"Algorithm-1", "Product-manifold"}) {
    for (const char* coord : {"beta1", "beta2"}) {
      const double mean = stats::summarize(rows, method, coord).mean;
      detail << method << " " << coord << fmt(" %.3f; ", mean);
      v.require(std::abs(mean - 0.25) <= 0.05,
                std::string(method) + " " + coord + fmt(" mean %.3f", mean));
    }
  }
  double abs_err = 0.0;
  int count = 0;
  for (const stats::BenchRow& r : rows) {
    if (r.method == "GLM" && (r.metric == "beta1" || r.metric == "beta2")) {
      abs_err += std::abs(r.value - 0.25);
      ++count;
    }
  }
  abs_err /= std::max(count, 1);
  const double secs = seconds_since(t0);
  detail << fmt("GLM mean absolute error %.3f; %.0f s", abs_err, secs);
  v.require(count == 40, "missing GLM rows");
  v.require(abs_err > 0.25, fmt("GLM mean absolute error %.3f", abs_err));
  v.require(secs < 300.0, fmt("took %.0f s", secs));
  v.detail = detail.str();
  return v;
}

// ------------------------------------------------------------------------ 6

std::vector<Manifold> geometry_variants() {
  return {Manifold::euclidean(4),
          Manifold::sphere(5),
          Manifold::stiefel(6, 3),
          Manifold::grassmann(6, 2),
          Manifold::spd(3),
          Manifold::product({Manifold::sphere(3), Manifold::stiefel(4, 2), Manifold::spd(2)})};
}

Verdict geometry_suite() {
  Verdict v;
  Rng rng(2024);
  double worst_idem = 0.0;
  double worst_tangency = 0.0;
  double worst_product = 0.0;
  for (const Manifold& m : geometry_variants()) {
    const std::string name = m.to_string();
    for (int trial = 0; trial < 20; ++trial) {
      const Point x = m.random_point(rng);
      const Tangent eta = m.proj_tangent(x, rng.normal_vector(x.size()));
      const Tangent w = m.proj_tangent(x, rng.normal_vector(x.size()));

      v.require(m.retract(x, Tangent::Zero(x.size())) == x, name + ": retract(x, 0) != x");

      for (double t : {1e-3, 1e-4, 1e-5}) {
        const double err = ((m.retract(x, t * eta) - x) / t - eta).norm();
        v.require(err <= 50.0 * t * (1.0 + eta.squaredNorm()),
                  name + fmt(": slope error %.2e at t=%.0e", err, t));
      }

      const Vector raw = rng.normal_vector(x.size());
      const Tangent p1 = m.proj_tangent(x, raw);
      const double idem = (m.proj_tangent(x, p1) - p1).norm();
      worst_idem = std::max(worst_idem, idem);
      v.require(idem <= 1e-12, name + fmt(": projection idempotence %.2e", idem));

      const Point y = m.retract(x, eta);
      const Tangent moved = m.transport(x, eta, y, w);
      const double tangency = (m.proj_tangent(y, moved) - moved).norm();
      worst_tangency = std::max(worst_tangency, tangency);
      v.require(tangency <= 1e-10, name + fmt(": transport tangency %.2e", tangency));

      if (m.kind() == ManifoldKind::kProduct) {
        Point y_parts(x.size());
        Tangent moved_parts(x.size());
        Tangent proj_parts(x.size());
        double inner_parts = 0.0;
        for (std::size_t i = 0; i < m.components().size(); ++i) {
          const Manifold& c = m.components()[i];
          const Eigen::Index off = m.offset(i);
          const Eigen::Index len = c.ambient_len();
          y_parts.segment(off, len) = c.retract(x.segment(off, len), eta.segment(off, len));
          moved_parts.segment(off, len) =
              c.transport(x.segment(off, len), eta.segment(off, len), y.segment(off, len),
                          w.segment(off, len));
          proj_parts.segment(off, len) = c.proj_tangent(x.segment(off, len), raw.segment(off, len));
          inner_parts += c.inner(x.segment(off, len), eta.segment(off, len), w.segment(off, len));
        }
        const double diff = std::max({(y - y_parts).norm(), (moved - moved_parts).norm(),
                                      (p1 - proj_parts).norm(),
                                      std::abs(m.inner(x, eta, w) - inner_parts)});
        worst_product = std::max(worst_product, diff);
        v.require(diff <= 1e-12, fmt("product differs from components by %.2e", diff));
      }
    }
  }
  v.detail = fmt("6 variants x 20 triples; worst idempotence %.1e, tangency %.1e, product %.1e",
                 worst_idem, worst_tangency, worst_product);
  if (v.failures.size() > 5) v.failures.resize(5);
  return v;
}

// ------------------------------------------------------------------------ 7

// Wraps a problem so every callback is counted and every point where a
// gradient is requested (each accepted iterate) is recorded.
struct Instrumented {
  std::shared_ptr<std::uint64_t> nf = std::make_shared<std::uint64_t>(0);
  std::shared_ptr<std::uint64_t> ng = std::make_shared<std::uint64_t>(0);
  std::shared_ptr<std::uint64_t> nh = std::make_shared<std::uint64_t>(0);
  std::shared_ptr<std::vector<Point>> iterates = std::make_shared<std::vector<Point>>();
  Problem problem;

  explicit Instrumented(const Problem& inner)
      : problem(make(inner, nf, ng, nh, iterates)) {}

  static Problem make(const Problem& inner, std::shared_ptr<std::uint64_t> nf,
                      std::shared_ptr<std::uint64_t> ng, std::shared_ptr<std::uint64_t> nh,
                      std::shared_ptr<std::vector<Point>> iterates) {
    return Problem([inner, nf](const Point& x) { ++*nf; return inner.objective(x); },
                   [inner, ng, iterates](const Point& x) {
                     ++*ng;
                     iterates->push_back(x);
                     return inner.egrad(x);
                   },
                   [inner, nh](const Point& x, const Tangent& e) {
                     ++*nh;
                     return inner.ehess(x, e);
                   });
  }
};

Verdict solver_properties() {
  Verdict v;
  int runs = 0;
  for (const cli::ProblemInfo& info : cli::problem_catalog()) {
    const cli::BundledProblem bp = cli::make_problem(info.name, 1234);
    for (Method m : kMandatory) {
      SolverConfig cfg;
      cfg.method = m;
      cfg.max_iteration = 300;
      cfg.seed = 7;
      const std::string tag = info.name + "/" + std::string(method_name(m));

      Instrumented a(bp.problem);
      const OptimResult r = solve(a.problem, bp.manifold, cfg, bp.x0);
      Instrumented b(bp.problem);
      const OptimResult s = solve(b.problem, bp.manifold, cfg, bp.x0);
      ++runs;

      if (is_line_search_method(m)) {
        for (std::size_t k = 1; k < r.fun_series.size(); ++k) {
          if (r.fun_series[k] > r.fun_series[k - 1]) {
            v.require(false, tag + fmt(": funSeries rises at %.0f", static_cast<double>(k)));
            break;
          }
        }
      }
      v.require(r.fun_series.size() == static_cast<std::size_t>(r.iter + 1),
                tag + ": series length");
      for (const Point& x : *a.iterates) {
        if (!bp.manifold.is_point(x, 1e-8)) {
          v.require(false, tag + ": infeasible iterate");
          break;
        }
      }
      v.require(bp.manifold.is_point(r.xopt, 1e-8), tag + ": infeasible xopt");
      v.require(r.xopt == s.xopt && r.fun_series == s.fun_series && r.iter == s.iter &&
                    r.num_obj_eval == s.num_obj_eval && r.nR == s.nR && r.nV == s.nV &&
                    r.nVp == s.nVp && r.nH == s.nH,
                tag + ": not deterministic");
      v.require(r.num_obj_eval == *a.nf, tag + ": num.obj.eval != callbacks");
      v.require(r.num_grad_eval == *a.ng, tag + ": num.grad.eval != callbacks");
      v.require(r.nH == *a.nh, tag + ": nH != callbacks");
    }
  }
  v.detail = fmt("%.0f runs over %.0f bundled problems", runs,
                 static_cast<double>(cli::problem_catalog().size()));
  return v;
}

// ------------------------------------------------------------------------ 8

Verdict gradient_cross_checks() {
  Verdict v;
  struct Case {
    std::string name;
    Manifold manifold;
    Problem problem;
  };
  std::vector<Case> cases;
  {
    const auto inst = stats::brockett_random(150, 5, 1234);
    cases.push_back({"brockett", stats::brockett_manifold(inst), stats::brockett_problem(inst)});
  }
  cases.push_back({"mvn", stats::mvn_manifold(3),
                   stats::mvn_problem(stats::mvn_simulate(400, stats::mvn_truth(3), 1234))});
  {
    const Vector beta = (Vector(3) << 1, 0.5, -0.5).finished();
    const stats::MadeData data = stats::made_simulate(147, beta, 1234);
    const Matrix b = beta.normalized();
    const Matrix w = stats::kernel_weights(data.x * b, stats::default_bandwidth(147, 1));
    const stats::LocalFits local = stats::made_local_fits(data, w, b, std::nullopt);
    cases.push_back({"made", Manifold::stiefel(3, 1), stats::made_problem(data, w, local)});
  }
  {
    const auto s = stats::pfc_simulate(300, 10, 1234, stats::PfcStructure::kUnstructured);
    cases.push_back({"pfc-unstructured", stats::pfc_unstructured_manifold(10, 2),
                     stats::pfc_unstructured_problem(s.data)});
  }
  Rng rng(99);
  std::ostringstream detail;
  for (const Case& c : cases) {
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const Point x = c.manifold.random_point(rng);
      const Vector g = c.problem.egrad(x);
      const Vector fd = numeric_egrad(c.problem, x);
      worst = std::max(worst, (g - fd).norm() / std::max(g.norm(), 1e-12));
    }
    detail << c.name << fmt(" %.1e; ", worst);
    v.require(worst <= 1e-4, c.name + fmt(" relative mismatch %.2e", worst));
  }
  v.detail = detail.str();
  return v;
}

// ------------------------------------------------------------------------ 9

Verdict made_recovery() {
  Verdict v;
  stats::StudyOptions opt;
  opt.reps = 20;
  const auto rows = stats::run_study(stats::Study::kMade, opt);
  std::vector<double> rho;
  std::vector<double> corr;
  for (const stats::BenchRow& r : rows) {
    if (r.metric == "rho") rho.push_back(r.value);
    if (r.metric == "correlation") corr.push_back(r.value);
  }
  v.require(rho.size() == 20 && corr.size() == 20, "missing replications");
  if (!v.ok()) return v;
  const double rho_med = median(rho);
  const double corr_min = *std::min_element(corr.begin(), corr.end());
  const double corr_mean = stats::summarize(rows, "MADE", "correlation").mean;
  v.detail = fmt("median rho %.3f, correlation mean %.3f min %.3f", rho_med, corr_mean, corr_min);
  v.require(rho_med < 0.2, fmt("median rho %.3f", rho_med));
  v.require(corr_mean > 0.8, fmt("mean correlation %.3f", corr_mean));
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"1 brockett-oracle-match", brockett_oracle_match},
      {"2 derivative-diagnostic", derivative_diagnostic},
      {"3 mvn-product-mle", mvn_mle},
      {"4 pfc-parity", pfc_parity},
      {"5 envelope-logistic", envelope_logistic},
      {"6 geometry-properties", geometry_suite},
      {"7 solver-properties", solver_properties},
      {"8 gradient-cross-checks", gradient_cross_checks},
      {"9 made-recovery", made_recovery},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    std::printf("%s %s", v.ok() ? "PASS" : "FAIL", name.c_str());
    if (!v.detail.empty()) std::printf(" | %s", v.detail.c_str());
    std::printf("\n");
    for (const std::string& f : v.failures) std::printf("    - %s\n", f.c_str());
    std::fflush(stdout);
    if (!v.ok()) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
