#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "riemopt/manifold.hpp"
#include "riemopt/problem.hpp"

namespace riemopt {

enum class Method {
  kRSD,        // steepest descent
  kRCG,        // conjugate gradients (Polak-Ribiere+)
  kRBFGS,      // dense BFGS
  kLRBFGS,     // limited-memory BFGS
  kRTRNewton,  // trust-region Newton, truncated CG
  kRTRSD,      // trust region with identity model Hessian
  kRTRSR1,     // trust region with dense SR1 model Hessian
  kLRTRSR1,    // trust region with limited-memory SR1 model Hessian
};

std::string_view method_name(Method method);
std::optional<Method> parse_method(std::string_view name);
const std::vector<std::string>& method_names();
bool is_line_search_method(Method method);

enum class LineSearchKind { kArmijo = 0, kWolfe = 1 };

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solver parameters. Names follow the classic ROPTLIB-style parameter
/// block; `accuracy`, `num_pre_funs`, `mu` and `is_convex` are accepted and
/// echoed but have no effect. `final_stepsize` only matters after a line
/// search failure.
struct SolverConfig {
  Method method = Method::kLRBFGS;

  double tolerance = 1e-4;
  int max_iteration = 1000;
  int min_iteration = 0;
  int output_gap = 1;
  int debug = 0;
  bool is_check_params = false;
  bool is_check_grad_hess = false;

  LineSearchKind line_search = LineSearchKind::kArmijo;
  double ls_alpha = 1e-4;
  double ls_beta = 0.999;
  double init_stepsize = 1.0;
  double min_stepsize = 2.220446049250313e-16;
  double max_stepsize = 1000.0;
  double accuracy = 0.0;
  double final_stepsize = 1.0;
  int num_pre_funs = 0;
  std::string init_step_type = "QUADINTMOD";

  double nu = 1e-4;
  double mu = 1.0;
  bool is_convex = false;
  int length_sy = 4;

  double tr_initial_radius = 1.0;
  double tr_max_radius = 1000.0;
  double tr_kappa = 0.1;
  double tr_theta = 1.0;

  /// Seed for the random starting point when no x0 is given, and for the
  /// derivative-check direction.
  std::uint64_t seed = 0;

  /// Destination of the parameter block and DEBUG lines; stdout when null.
  std::ostream* log = nullptr;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

enum class StopReason {
  kGradientTolerance,
  kMaxIteration,
  kLineSearchFailure,
  kTrustRegionFailure,
};

std::string_view stop_reason_name(StopReason reason);

struct OptimResult {
  Point xopt;
  double fval = 0.0;
  double normgf = 0.0;
  double normgfgf0 = 0.0;
  int iter = 0;
  std::uint64_t num_obj_eval = 0;
  std::uint64_t num_grad_eval = 0;
  std::uint64_t nR = 0;   // retractions
  std::uint64_t nV = 0;   // single-vector transports
  std::uint64_t nVp = 0;  // transports of stored memory vectors or operators
  std::uint64_t nH = 0;   // Hessian actions
  double elapsed = 0.0;
  std::vector<double> fun_series;
  std::vector<double> grad_series;
  std::vector<double> time_series;

  Method method = Method::kLRBFGS;
  StopReason stop_reason = StopReason::kMaxIteration;
};

/// Minimizes `problem` over `manifold`. Without x0 a random point drawn with
/// config.seed is used. Stops when ||grad f(x_k)|| / ||grad f(x_0)|| falls to
/// config.tolerance (or below 1e-15 absolutely), or at max_iteration.
OptimResult solve(const Problem& problem, const Manifold& manifold,
                  const SolverConfig& config,
                  const std::optional<Point>& x0 = std::nullopt);

/// Parameter block in the classic `NAME : value[YES]` two-column layout.
std::string format_solver_params(const SolverConfig& config);

// ---------------------------------------------------------------------------
// Building blocks, exposed for testing.

struct LineSearchResult {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;  // phi'(step); NaN when not evaluated (Armijo)
  bool success = false;
  bool wolfe = false;  // curvature condition verified
  int evaluations = 0;
};

struct LinePoint {
  double value;
  double slope;
};

/// Largest t = t_init / 2^j with phi(t) <= phi(0) + alpha t phi'(0) and
/// t >= min_stepsize.
LineSearchResult armijo_backtracking(const std::function<double(double)>& phi,
                                     double phi0, double dphi0, double t_init,
                                     const SolverConfig& config);

/// Bracket-and-zoom search for a step satisfying sufficient decrease and
/// |phi'(t)| <= ls_beta |phi'(0)|.
LineSearchResult wolfe_search(const std::function<LinePoint(double)>& phi,
                              double phi0, double dphi0, double t_init,
                              const SolverConfig& config);

/// QUADINTMOD initial step: 2 (f_k - f_{k-1}) / phi'(0), clamped to
/// [min_stepsize, max_stepsize]; init_stepsize on the first iteration.
double initial_step(double f_current, double f_previous, double dphi0,
                    bool first_iteration, const SolverConfig& config);

/// Polak-Ribiere+ coefficient, already clamped at zero.
double polak_ribiere_plus(const Manifold& manifold, const Point& x,
                          const Tangent& grad, const Tangent& prev_grad_moved,
                          double prev_grad_sqnorm);

/// -g + beta * prev_dir_moved, reset to -g if not a descent direction.
Tangent cg_direction(const Manifold& manifold, const Point& x,
                     const Tangent& grad, const Tangent& prev_dir_moved,
                     double beta);

struct CurvaturePair {
  Tangent s;
  Tangent y;
};

/// Two-loop recursion over pairs already expressed at x (oldest first).
/// Pairs failing <s,y> > nu ||s|| ||y|| are skipped; the initial scaling
/// uses the newest accepted pair. Falls back to -g if the result is not a
/// descent direction.
Tangent lbfgs_direction(const Manifold& manifold, const Point& x,
                        const std::vector<CurvaturePair>& memory,
                        const Tangent& grad, double nu);

struct TcgResult {
  Tangent eta;
  Tangent heta;
  double model_value = 0.0;  // <g, eta> + <eta, H eta> / 2
  bool hit_boundary = false;
  bool negative_curvature = false;
  int inner_iterations = 0;
};

/// Steihaug-Toint truncated CG on m(eta) = <g,eta> + <eta,H eta>/2 within
/// ||eta|| <= radius.
TcgResult truncated_cg(const Manifold& manifold, const Point& x,
                       const Tangent& grad,
                       const std::function<Tangent(const Tangent&)>& hess,
                       double radius, double kappa, double theta,
                       int max_inner);

}  // namespace riemopt
