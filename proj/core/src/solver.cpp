#include "riemopt/solver.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <sstream>

#include "solver_internal.hpp"

namespace riemopt {
namespace {

struct MethodEntry {
  Method method;
  std::string_view name;
};

constexpr std::array<MethodEntry, 8> kMethods = {{
    {Method::kRSD, "RSD"},
    {Method::kRCG, "RCG"},
    {Method::kRBFGS, "RBFGS"},
    {Method::kLRBFGS, "LRBFGS"},
    {Method::kRTRNewton, "RTRNewton"},
    {Method::kRTRSD, "RTRSD"},
    {Method::kRTRSR1, "RTRSR1"},
    {Method::kLRTRSR1, "LRTRSR1"},
}};

std::string debug_name(int debug) {
  switch (debug) {
    case 0: return "NOOUTPUT";
    case 1: return "FINALRESULT";
    case 2: return "ITERRESULT";
    default: return "DETAILED";
  }
}

// One `Name : value[YES]` cell of the parameter block.
std::string cell(const std::string& name, const std::string& value, bool ok) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-14s:%15s[%s]", name.c_str(), value.c_str(),
                ok ? "YES" : "NO");
  return buf;
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

class ParamBlock {
 public:
  void section(const std::string& title) {
    flush();
    out_ << title << '\n';
  }
  void add(const std::string& name, const std::string& value, bool ok = true) {
    cells_.push_back(cell(name, value, ok));
    if (cells_.size() == 2) flush();
  }
  std::string str() {
    flush();
    return out_.str();
  }

 private:
  void flush() {
    if (cells_.empty()) return;
    out_ << cells_[0];
    if (cells_.size() > 1) out_ << ",\t" << cells_[1];
    out_ << '\n';
    cells_.clear();
  }
  std::ostringstream out_;
  std::vector<std::string> cells_;
};

}  // namespace

std::string_view method_name(Method method) {
  for (const MethodEntry& e : kMethods) {
    if (e.method == method) return e.name;
  }
  return "UNKNOWN";
}

std::optional<Method> parse_method(std::string_view name) {
  for (const MethodEntry& e : kMethods) {
    if (e.name == name) return e.method;
  }
  return std::nullopt;
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const MethodEntry& e : kMethods) v.emplace_back(e.name);
    return v;
  }();
  return names;
}

bool is_line_search_method(Method method) {
  return method == Method::kRSD || method == Method::kRCG ||
         method == Method::kRBFGS || method == Method::kLRBFGS;
}

std::string_view stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::kGradientTolerance: return "gradient_tolerance";
    case StopReason::kMaxIteration: return "max_iteration";
    case StopReason::kLineSearchFailure: return "line_search_failure";
    case StopReason::kTrustRegionFailure: return "trust_region_failure";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid solver parameter: " + what);
  };
  if (!(tolerance > 0.0)) fail("Tolerance must be > 0");
  if (max_iteration < 0) fail("Max_Iteration must be >= 0");
  if (min_iteration < 0) fail("Min_Iteration must be >= 0");
  if (output_gap < 1) fail("OutputGap must be >= 1");
  if (debug < 0 || debug > 3) fail("DEBUG must be in 0..3");
  if (!(ls_alpha > 0.0 && ls_alpha < ls_beta && ls_beta < 1.0)) {
    fail("need 0 < LS_alpha < LS_beta < 1");
  }
  if (!(min_stepsize > 0.0 && min_stepsize <= init_stepsize &&
        init_stepsize <= max_stepsize)) {
    fail("need 0 < Minstepsize <= Initstepsize <= Maxstepsize");
  }
  if (length_sy < 1) fail("LengthSY must be >= 1");
  if (init_step_type != "QUADINTMOD") {
    fail("InitSteptype '" + init_step_type +
         "' is not supported (only QUADINTMOD)");
  }
  if (!(tr_initial_radius > 0.0 && tr_initial_radius <= tr_max_radius)) {
    fail("need 0 < tr_initial_radius <= tr_max_radius");
  }
  if (!(tr_kappa > 0.0 && tr_kappa < 1.0)) fail("tr_kappa must be in (0,1)");
  if (!(tr_theta > 0.0)) fail("tr_theta must be > 0");
  if (!(nu >= 0.0)) fail("nu must be >= 0");
}

std::string format_solver_params(const SolverConfig& c) {
  ParamBlock b;
  b.section("GENERAL PARAMETERS:");
  b.add("Stop_Criterion", "GRAD_F_0");
  b.add("Tolerance", num(c.tolerance), c.tolerance > 0.0);
  b.add("Max_Iteration", num(c.max_iteration), c.max_iteration >= 0);
  b.add("Min_Iteration", num(c.min_iteration), c.min_iteration >= 0);
  b.add("OutputGap", num(c.output_gap), c.output_gap >= 1);
  b.add("DEBUG", debug_name(c.debug), c.debug >= 0 && c.debug <= 3);

  const bool ls_ok = c.ls_alpha > 0.0 && c.ls_alpha < c.ls_beta && c.ls_beta < 1.0;
  const bool step_ok = c.min_stepsize > 0.0 && c.min_stepsize <= c.init_stepsize &&
                       c.init_stepsize <= c.max_stepsize;
  if (is_line_search_method(c.method)) {
    b.section("LINE SEARCH TYPE METHODS PARAMETERS:");
    b.add("LineSearch_LS",
          c.line_search == LineSearchKind::kWolfe ? "WOLFE" : "ARMIJO");
    b.add("LS_alpha", num(c.ls_alpha), ls_ok);
    b.add("LS_beta", num(c.ls_beta), ls_ok);
    b.add("Initstepsize", num(c.init_stepsize), step_ok);
    b.add("Minstepsize", num(c.min_stepsize), step_ok);
    b.add("Maxstepsize", num(c.max_stepsize), step_ok);
    b.add("Accuracy", num(c.accuracy), c.accuracy >= 0.0);
    b.add("Finalstepsize", num(c.final_stepsize), c.final_stepsize > 0.0);
    b.add("Num_pre_funs", num(c.num_pre_funs), c.num_pre_funs >= 0);
    b.add("InitSteptype", c.init_step_type, c.init_step_type == "QUADINTMOD");
  } else {
    b.section("TRUST REGION TYPE METHODS PARAMETERS:");
    b.add("initial_radius", num(c.tr_initial_radius), c.tr_initial_radius > 0.0);
    b.add("max_radius", num(c.tr_max_radius),
          c.tr_max_radius >= c.tr_initial_radius);
    b.add("kappa", num(c.tr_kappa), c.tr_kappa > 0.0 && c.tr_kappa < 1.0);
    b.add("theta", num(c.tr_theta), c.tr_theta > 0.0);
  }

  switch (c.method) {
    case Method::kLRBFGS:
    case Method::kLRTRSR1:
      b.section(std::string(method_name(c.method)) + " METHOD PARAMETERS:");
      b.add("nu", num(c.nu), c.nu >= 0.0);
      b.add("mu", num(c.mu));
      b.add("isconvex", num(c.is_convex ? 1 : 0));
      b.add("LengthSY", num(c.length_sy), c.length_sy >= 1);
      break;
    case Method::kRBFGS:
    case Method::kRTRSR1:
      b.section(std::string(method_name(c.method)) + " METHOD PARAMETERS:");
      b.add("nu", num(c.nu), c.nu >= 0.0);
      b.add("mu", num(c.mu));
      b.add("isconvex", num(c.is_convex ? 1 : 0));
      break;
    default:
      break;
  }
  return b.str();
}

namespace detail {

Run::Run(const Problem& problem, const Manifold& manifold,
         const SolverConfig& config, Point x0)
    : problem_(problem),
      manifold_(manifold),
      config_(config),
      log_(config.log ? config.log : &std::cout),
      start_(std::chrono::steady_clock::now()),
      x_(std::move(x0)) {
  f_ = value(x_);
  if (!std::isfinite(f_)) {
    throw SolverError("objective is not finite at the starting point");
  }
  refresh_gradient();
  gnorm0_ = gnorm_;
}

double Run::value(const Point& y) const {
  const double v = problem_.objective(y);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

Point Run::retract(const Point& x, const Tangent& eta) {
  ++n_r_;
  return manifold_.retract(x, eta);
}

Tangent Run::transport(const Point& x, const Tangent& eta, const Point& y,
                       const Tangent& v) {
  ++n_v_;
  return manifold_.transport(x, eta, y, v);
}

Tangent Run::hess(const Tangent& eta) const {
  return manifold_.proj_tangent(
      x_, manifold_.ehess2rhess(x_, egrad_, problem_.ehess(x_, eta), eta));
}

void Run::refresh_gradient() {
  egrad_ = problem_.egrad(x_);
  grad_ = manifold_.egrad2rgrad(x_, egrad_);
  gnorm_ = manifold_.norm(x_, grad_);
}

void Run::move_to(Point y, double fy) {
  x_ = std::move(y);
  f_ = fy;
  refresh_gradient();
}

void Run::move_to(Point y, double fy, Vector egrad_y) {
  x_ = std::move(y);
  f_ = fy;
  egrad_ = std::move(egrad_y);
  grad_ = manifold_.egrad2rgrad(x_, egrad_);
  gnorm_ = manifold_.norm(x_, grad_);
}

double Run::seconds() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
      .count();
}

bool Run::should_stop(int iter) {
  if (iter >= config_.min_iteration) {
    const double ratio = gnorm_ / std::max(gnorm0_, 1e-30);
    if (ratio <= config_.tolerance || gnorm_ < 1e-15) {
      reason_ = StopReason::kGradientTolerance;
      return true;
    }
  }
  if (iter >= config_.max_iteration) {
    reason_ = StopReason::kMaxIteration;
    return true;
  }
  return false;
}

void Run::record(int iter, double step) {
  fun_series_.push_back(f_);
  grad_series_.push_back(gnorm_);
  time_series_.push_back(seconds());
  if (config_.debug >= 1 && iter % config_.output_gap == 0) {
    char line[160];
    std::snprintf(line, sizeof(line), "i:%d,f:%.6e,|gf|:%.3e,step:%.3e\n", iter,
                  f_, gnorm_, step);
    log() << line;
  }
}

OptimResult Run::finish(int iter, StopReason reason) {
  reason_ = reason;
  OptimResult r;
  r.xopt = x_;
  r.fval = f_;
  r.normgf = gnorm_;
  r.normgfgf0 = gnorm0_ > 0.0 ? gnorm_ / gnorm0_ : 0.0;
  r.iter = iter;
  const EvalCounts counts = problem_.counts();
  r.num_obj_eval = counts.objective;
  r.num_grad_eval = counts.gradient;
  r.nH = counts.hessian;
  r.nR = n_r_;
  r.nV = n_v_;
  r.nVp = n_vp_;
  r.elapsed = seconds();
  r.fun_series = fun_series_;
  r.grad_series = grad_series_;
  r.time_series = time_series_;
  r.method = config_.method;
  r.stop_reason = reason;
  if (config_.debug >= 1) {
    char line[200];
    std::snprintf(line, sizeof(line),
                  "%s: iter:%d,f:%.6e,|gf|:%.3e,|gf/gf0|:%.3e,time:%.3g,"
                  "nf:%llu,ng:%llu,nR:%llu,nV:%llu,nVp:%llu,nH:%llu,stop:%s\n",
                  std::string(method_name(r.method)).c_str(), r.iter, r.fval,
                  r.normgf, r.normgfgf0, r.elapsed,
                  static_cast<unsigned long long>(r.num_obj_eval),
                  static_cast<unsigned long long>(r.num_grad_eval),
                  static_cast<unsigned long long>(r.nR),
                  static_cast<unsigned long long>(r.nV),
                  static_cast<unsigned long long>(r.nVp),
                  static_cast<unsigned long long>(r.nH),
                  std::string(stop_reason_name(reason)).c_str());
    log() << line;
  }
  return r;
}

}  // namespace detail

OptimResult solve(const Problem& problem, const Manifold& manifold,
                  const SolverConfig& config, const std::optional<Point>& x0) {
  config.validate();
  Point start;
  if (x0) {
    if (!manifold.is_point(*x0, 1e-8)) {
      throw DomainError("x0 is not a feasible point of " + manifold.to_string());
    }
    start = *x0;
  } else {
    Rng rng(config.seed);
    start = manifold.random_point(rng);
  }

  std::ostream& log = config.log ? *config.log : std::cout;
  if (config.is_check_params) log << format_solver_params(config);
  if (config.is_check_grad_hess) {
    const GradHessCheck check =
        check_grad_hess(problem, manifold, start, config.seed + 1);
    log << format_check_report(check.at_start);
    log << format_check_report(check.at_solution);
  }

  problem.reset_counts();
  detail::Run run(problem, manifold, config, std::move(start));
  if (is_line_search_method(config.method)) return detail::run_line_search(run);
  return detail::run_trust_region(run);
}

}  // namespace riemopt
