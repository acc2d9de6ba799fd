#include "riemopt/problem.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "riemopt/solver.hpp"

namespace riemopt {
namespace {

const double kCbrtEps = std::cbrt(std::numeric_limits<double>::epsilon());

double central_difference(const Problem& problem, Point& probe, Eigen::Index i,
                          double h) {
  const double xi = probe(i);
  probe(i) = xi + h;
  const double fp = problem.objective(probe);
  probe(i) = xi - h;
  const double fm = problem.objective(probe);
  probe(i) = xi;
  return (fp - fm) / (2.0 * h);
}

int longest_run(const std::vector<CheckRow>& rows, double lo, double hi,
                double CheckRow::*field) {
  int best = 0;
  int current = 0;
  for (const CheckRow& row : rows) {
    const double v = row.*field;
    if (std::isfinite(v) && v >= lo && v <= hi) {
      best = std::max(best, ++current);
    } else {
      current = 0;
    }
  }
  return best;
}

}  // namespace

Problem::Problem(Objective objective, Gradient egrad, HessianAction ehess)
    : objective_(std::move(objective)),
      egrad_(std::move(egrad)),
      ehess_(std::move(ehess)) {
  if (!objective_) throw std::invalid_argument("Problem: objective is required");
}

Problem::Problem(const Problem& other)
    : objective_(other.objective_),
      egrad_(other.egrad_),
      ehess_(other.ehess_) {}

Problem& Problem::operator=(const Problem& other) {
  if (this != &other) {
    objective_ = other.objective_;
    egrad_ = other.egrad_;
    ehess_ = other.ehess_;
    reset_counts();
  }
  return *this;
}

double Problem::objective(const Point& x) const {
  n_objective_.fetch_add(1, std::memory_order_relaxed);
  return objective_(x);
}

Vector Problem::egrad(const Point& x) const {
  n_gradient_.fetch_add(1, std::memory_order_relaxed);
  if (egrad_) return egrad_(x);
  return numeric_egrad(*this, x);
}

Vector Problem::ehess(const Point& x, const Tangent& eta) const {
  n_hessian_.fetch_add(1, std::memory_order_relaxed);
  if (ehess_) return ehess_(x, eta);
  return numeric_ehess_action(*this, x, eta);
}

Problem Problem::without_gradient() const {
  return Problem(objective_, nullptr, ehess_);
}

Problem Problem::without_hessian() const {
  return Problem(objective_, egrad_, nullptr);
}

EvalCounts Problem::counts() const {
  return {n_objective_.load(), n_gradient_.load(), n_hessian_.load()};
}

void Problem::reset_counts() const {
  n_objective_.store(0);
  n_gradient_.store(0);
  n_hessian_.store(0);
}

Vector numeric_egrad(const Problem& problem, const Point& x) {
  Vector g(x.size());
  Point probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double h = kCbrtEps * std::max(1.0, std::abs(x(i)));
    double gi = central_difference(problem, probe, i, h);
    if (!std::isfinite(gi)) {
      h /= 10.0;
      gi = central_difference(problem, probe, i, h);
      if (!std::isfinite(gi)) {
        throw NumericDerivativeError(
            "numeric_egrad: objective is not finite near coordinate " +
            std::to_string(i));
      }
    }
    g(i) = gi;
  }
  return g;
}

Vector numeric_ehess_action(const Problem& problem, const Point& x,
                            const Tangent& eta) {
  const double eta_norm = eta.norm();
  if (eta_norm == 0.0) return Vector::Zero(x.size());
  const double h = kCbrtEps / std::max(eta_norm, 1e-12);
  const Vector gp = problem.egrad(x + h * eta);
  const Vector gm = problem.egrad(x - h * eta);
  return (gp - gm) / (2.0 * h);
}

Tangent riemannian_grad(const Problem& problem, const Manifold& manifold,
                        const Point& x) {
  return manifold.egrad2rgrad(x, problem.egrad(x));
}

Tangent riemannian_hess(const Problem& problem, const Manifold& manifold,
                        const Point& x, const Vector& egrad,
                        const Tangent& eta) {
  return manifold.ehess2rhess(x, egrad, problem.ehess(x, eta), eta);
}

int CheckReport::longest_grad_run(double lo, double hi) const {
  return longest_run(rows, lo, hi, &CheckRow::grad_ratio);
}

int CheckReport::longest_hess_run(double lo, double hi) const {
  return longest_run(rows, lo, hi, &CheckRow::hess_ratio);
}

CheckReport check_ladder(const Problem& problem, const Manifold& manifold,
                         const Point& x, std::uint64_t seed) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  Rng rng(seed);
  Tangent direction =
      manifold.proj_tangent(x, rng.normal_vector(manifold.ambient_len()));
  direction *= CheckReport::kStartNorm / manifold.norm(x, direction);

  const double fx = problem.objective(x);
  const Vector egrad = problem.egrad(x);
  const Tangent grad = manifold.egrad2rgrad(x, egrad);

  CheckReport report;
  report.rows.reserve(CheckReport::kRows);
  Tangent eta = direction;
  for (int i = 0; i < CheckReport::kRows; ++i) {
    CheckRow row;
    row.index = i;
    row.eta_norm = manifold.norm(x, eta);
    row.grad_ratio = kNaN;
    row.hess_ratio = kNaN;
    try {
      const Point y = manifold.retract(x, eta);
      const double fy = problem.objective(y);
      const double slope = manifold.inner(x, grad, eta);
      const Tangent heta = manifold.ehess2rhess(x, egrad, problem.ehess(x, eta), eta);
      const double curvature = manifold.inner(x, 0.5 * eta, heta);
      if (slope != 0.0) row.grad_ratio = (fy - fx) / slope;
      if (curvature != 0.0) row.hess_ratio = (fy - fx - slope) / curvature;
    } catch (const StepInfeasibleError&) {
      // row stays NaN
    }
    report.rows.push_back(row);
    eta *= 0.5;
  }
  return report;
}

GradHessCheck check_grad_hess(const Problem& problem, const Manifold& manifold,
                              const Point& x0, std::uint64_t seed) {
  GradHessCheck out;
  out.at_start = check_ladder(problem, manifold, x0, seed);

  SolverConfig config;
  config.method = Method::kLRBFGS;
  config.tolerance = 1e-8;
  config.max_iteration = 5000;
  const OptimResult result = solve(problem, manifold, config, x0);
  out.solution = result.xopt;
  out.at_solution = check_ladder(problem, manifold, result.xopt, seed + 1);
  return out;
}

std::string format_check_report(const CheckReport& report) {
  std::string out;
  char line[256];
  for (const CheckRow& row : report.rows) {
    std::snprintf(line, sizeof(line),
                  "i:%d,|eta|:%.3e,(fy-fx)/<gfx,eta>:%.3e,"
                  "(fy-fx-<gfx,eta>)/<0.5 eta, Hessian eta>:%.3e\n",
                  row.index, row.eta_norm, row.grad_ratio, row.hess_ratio);
    out += line;
  }
  return out;
}

}  // namespace riemopt
