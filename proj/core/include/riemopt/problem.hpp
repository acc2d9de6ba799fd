#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "riemopt/manifold.hpp"

namespace riemopt {

struct EvalCounts {
  std::uint64_t objective = 0;
  std::uint64_t gradient = 0;
  std::uint64_t hessian = 0;
};

class NumericDerivativeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An objective with optional Euclidean gradient and Hessian-action
/// callbacks. Missing derivatives fall back to central differences.
///
/// Callbacks receive the flat point; reshaping into matrices is up to the
/// problem author. The objective may return +inf to mark an infeasible
/// point. Counters tally every derivative request (analytic or numeric) and
/// every objective callback invocation, including those made by finite
/// differencing.
class Problem {
 public:
  using Objective = std::function<double(const Point&)>;
  using Gradient = std::function<Vector(const Point&)>;
  using HessianAction = std::function<Vector(const Point&, const Tangent&)>;

  explicit Problem(Objective objective, Gradient egrad = nullptr,
                   HessianAction ehess = nullptr);

  Problem(const Problem& other);
  Problem& operator=(const Problem& other);

  double objective(const Point& x) const;
  Vector egrad(const Point& x) const;
  Vector ehess(const Point& x, const Tangent& eta) const;

  bool has_gradient() const { return static_cast<bool>(egrad_); }
  bool has_hessian() const { return static_cast<bool>(ehess_); }

  /// Drop the analytic derivatives so the numeric fallbacks are used.
  Problem without_gradient() const;
  Problem without_hessian() const;

  EvalCounts counts() const;
  void reset_counts() const;

 private:
  Objective objective_;
  Gradient egrad_;
  HessianAction ehess_;
  mutable std::atomic<std::uint64_t> n_objective_{0};
  mutable std::atomic<std::uint64_t> n_gradient_{0};
  mutable std::atomic<std::uint64_t> n_hessian_{0};
};

/// Central differences in ambient coordinates with
/// h_i = cbrt(eps) * max(1, |x_i|).
Vector numeric_egrad(const Problem& problem, const Point& x);

/// Central difference of the gradient along eta with
/// h = cbrt(eps) / max(||eta||, 1e-12).
Vector numeric_ehess_action(const Problem& problem, const Point& x,
                            const Tangent& eta);

/// Riemannian gradient and Hessian action built from the Euclidean sources.
Tangent riemannian_grad(const Problem& problem, const Manifold& manifold,
                        const Point& x);
Tangent riemannian_hess(const Problem& problem, const Manifold& manifold,
                        const Point& x, const Vector& egrad, const Tangent& eta);

struct CheckRow {
  int index = 0;
  double eta_norm = 0.0;
  double grad_ratio = 0.0;
  double hess_ratio = 0.0;
};

/// One derivative-check ladder: |eta| starts at 100 and halves for 35 rows.
struct CheckReport {
  static constexpr int kRows = 35;
  static constexpr double kStartNorm = 100.0;

  std::vector<CheckRow> rows;

  /// Longest run of consecutive rows whose ratio lies in [lo, hi].
  int longest_grad_run(double lo = 0.99, double hi = 1.01) const;
  int longest_hess_run(double lo = 0.99, double hi = 1.01) const;
};

/// Ladder at x along a seeded random tangent direction of norm 100.
/// Rows report (f(y)-f(x))/<grad f, eta> and
/// (f(y)-f(x)-<grad f, eta>)/<eta/2, Hess f[eta]> with y = R_x(eta).
/// A zero denominator or infeasible retraction yields NaN for that row.
CheckReport check_ladder(const Problem& problem, const Manifold& manifold,
                         const Point& x, std::uint64_t seed = 1);

struct GradHessCheck {
  CheckReport at_start;
  CheckReport at_solution;
  Point solution;
};

/// The two-ladder diagnostic: one at x0 and one at the point returned by a
/// short LRBFGS run from x0, where the gradient is near zero and the
/// Hessian ratio becomes informative.
GradHessCheck check_grad_hess(const Problem& problem, const Manifold& manifold,
                              const Point& x0, std::uint64_t seed = 1);

/// Renders a ladder in the classic one-line-per-row format, e.g.
/// `i:0,|eta|:1.000e+02,(fy-fx)/<gfx,eta>:...,(fy-fx-<gfx,eta>)/<0.5 eta, Hessian eta>:...`
std::string format_check_report(const CheckReport& report);

}  // namespace riemopt
