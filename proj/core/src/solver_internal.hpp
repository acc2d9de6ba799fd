#pragma once

#include <chrono>
#include <cstdint>
#include <ostream>

#include "riemopt/solver.hpp"

namespace riemopt::detail {

/// Bookkeeping shared by every solver family: current iterate, counters,
/// series, stopping rule and debug output.
class Run {
 public:
  Run(const Problem& problem, const Manifold& manifold,
      const SolverConfig& config, Point x0);

  const Problem& problem() const { return problem_; }
  const Manifold& manifold() const { return manifold_; }
  const SolverConfig& config() const { return config_; }
  std::ostream& log() const { return *log_; }

  /// Objective value; +inf when the callback reports a non-finite value.
  double value(const Point& y) const;
  Vector egrad(const Point& y) const { return problem_.egrad(y); }

  /// Retraction counted in nR. Throws StepInfeasibleError.
  Point retract(const Point& x, const Tangent& eta);

  /// Single-vector transport counted in nV.
  Tangent transport(const Point& x, const Tangent& eta, const Point& y,
                    const Tangent& v);
  void count_memory_transports(std::uint64_t n) { n_vp_ += n; }

  /// Riemannian Hessian action at the current iterate.
  Tangent hess(const Tangent& eta) const;

  /// Moves the iterate to y and recomputes the gradient there.
  void move_to(Point y, double fy);
  void move_to(Point y, double fy, Vector egrad_y);

  const Point& x() const { return x_; }
  double f() const { return f_; }
  const Vector& egrad_x() const { return egrad_; }
  const Tangent& grad() const { return grad_; }
  double gnorm() const { return gnorm_; }

  /// True when iteration `iter` should not start. Sets the stop reason.
  bool should_stop(int iter);

  /// Appends the current state to the series after iteration `iter` and
  /// emits a DEBUG line when due. `step` is a step size or radius.
  void record(int iter, double step);

  OptimResult finish(int iter, StopReason reason);

  StopReason stop_reason() const { return reason_; }

 private:
  void refresh_gradient();
  double seconds() const;

  const Problem& problem_;
  const Manifold& manifold_;
  const SolverConfig& config_;
  std::ostream* log_;
  std::chrono::steady_clock::time_point start_;

  Point x_;
  double f_ = 0.0;
  Vector egrad_;
  Tangent grad_;
  double gnorm_ = 0.0;
  double gnorm0_ = 0.0;

  std::uint64_t n_r_ = 0;
  std::uint64_t n_v_ = 0;
  std::uint64_t n_vp_ = 0;

  std::vector<double> fun_series_;
  std::vector<double> grad_series_;
  std::vector<double> time_series_;
  StopReason reason_ = StopReason::kMaxIteration;
};

OptimResult run_line_search(Run& run);
OptimResult run_trust_region(Run& run);

}  // namespace riemopt::detail
