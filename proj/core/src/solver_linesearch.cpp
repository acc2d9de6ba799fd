#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "riemopt/solver.hpp"
#include "solver_internal.hpp"

namespace riemopt {
namespace {

constexpr int kMaxBracket = 40;
constexpr int kMaxZoom = 40;

bool armijo_ok(double value, double phi0, double dphi0, double t,
               const SolverConfig& c) {
  return value <= phi0 + c.ls_alpha * t * dphi0;
}

// Minimizer of the cubic matching values and slopes at a and b; NaN when the
// interpolant has no interior minimum.
double cubic_minimizer(double a, double fa, double da, double b, double fb,
                       double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double denom = db - da + 2.0 * d2;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return b - (b - a) * (db + d2 - d1) / denom;
}

}  // namespace

LineSearchResult armijo_backtracking(const std::function<double(double)>& phi,
                                     double phi0, double dphi0, double t_init,
                                     const SolverConfig& config) {
  LineSearchResult r;
  r.slope = std::numeric_limits<double>::quiet_NaN();
  double t = std::min(t_init, config.max_stepsize);
  while (t >= config.min_stepsize) {
    const double v = phi(t);
    ++r.evaluations;
    if (armijo_ok(v, phi0, dphi0, t, config)) {
      r.step = t;
      r.value = v;
      r.success = true;
      return r;
    }
    t *= 0.5;
  }
  r.step = 0.0;
  r.value = phi0;
  return r;
}

LineSearchResult wolfe_search(const std::function<LinePoint(double)>& phi,
                              double phi0, double dphi0, double t_init,
                              const SolverConfig& config) {
  LineSearchResult r;
  const double curv = config.ls_beta * std::abs(dphi0);

  auto accept = [&](double t, const LinePoint& p, bool wolfe) {
    r.step = t;
    r.value = p.value;
    r.slope = p.slope;
    r.success = true;
    r.wolfe = wolfe;
    return r;
  };

  // Zoom inside [lo, hi]; lo always satisfies sufficient decrease.
  auto zoom = [&](double lo, LinePoint plo, double hi, LinePoint phi_hi) {
    for (int k = 0; k < kMaxZoom; ++k) {
      const double left = std::min(lo, hi);
      const double width = std::abs(hi - lo);
      if (width < config.min_stepsize) break;
      double t = std::numeric_limits<double>::quiet_NaN();
      if (std::isfinite(phi_hi.value) && std::isfinite(phi_hi.slope)) {
        t = cubic_minimizer(lo, plo.value, plo.slope, hi, phi_hi.value,
                            phi_hi.slope);
      }
      if (!std::isfinite(t) || t < left + 0.1 * width ||
          t > left + 0.9 * width) {
        t = 0.5 * (lo + hi);
      }
      const LinePoint p = phi(t);
      ++r.evaluations;
      if (!armijo_ok(p.value, phi0, dphi0, t, config) || p.value >= plo.value) {
        hi = t;
        phi_hi = p;
      } else {
        if (std::abs(p.slope) <= curv) return accept(t, p, true);
        if (p.slope * (hi - lo) >= 0.0) {
          hi = lo;
          phi_hi = plo;
        }
        lo = t;
        plo = p;
      }
    }
    if (lo > 0.0) return accept(lo, plo, false);
    r.step = 0.0;
    r.value = phi0;
    r.success = false;
    return r;
  };

  double t_prev = 0.0;
  LinePoint p_prev{phi0, dphi0};
  double t = std::clamp(t_init, config.min_stepsize, config.max_stepsize);
  for (int i = 0; i < kMaxBracket; ++i) {
    const LinePoint p = phi(t);
    ++r.evaluations;
    if (!armijo_ok(p.value, phi0, dphi0, t, config) ||
        (i > 0 && p.value >= p_prev.value)) {
      return zoom(t_prev, p_prev, t, p);
    }
    if (std::abs(p.slope) <= curv) return accept(t, p, true);
    if (p.slope >= 0.0) return zoom(t, p, t_prev, p_prev);
    if (t >= config.max_stepsize) return accept(t, p, false);
    t_prev = t;
    p_prev = p;
    t = std::min(2.0 * t, config.max_stepsize);
  }
  return accept(t_prev, p_prev, false);
}

double initial_step(double f_current, double f_previous, double dphi0,
                    bool first_iteration, const SolverConfig& config) {
  if (first_iteration || !std::isfinite(f_previous) || dphi0 >= 0.0) {
    return config.init_stepsize;
  }
  const double t = 2.0 * (f_current - f_previous) / dphi0;
  if (!std::isfinite(t)) return config.init_stepsize;
  return std::min(config.max_stepsize, std::max(config.min_stepsize, t));
}

double polak_ribiere_plus(const Manifold& manifold, const Point& x,
                          const Tangent& grad, const Tangent& prev_grad_moved,
                          double prev_grad_sqnorm) {
  if (!(prev_grad_sqnorm > 0.0)) return 0.0;
  const double beta =
      manifold.inner(x, grad, grad - prev_grad_moved) / prev_grad_sqnorm;
  return std::isfinite(beta) ? std::max(0.0, beta) : 0.0;
}

Tangent cg_direction(const Manifold& manifold, const Point& x,
                     const Tangent& grad, const Tangent& prev_dir_moved,
                     double beta) {
  Tangent eta = -grad;
  if (beta != 0.0) eta += beta * prev_dir_moved;
  if (!(manifold.inner(x, eta, grad) < 0.0)) return -grad;
  return eta;
}

Tangent lbfgs_direction(const Manifold& manifold, const Point& x,
                        const std::vector<CurvaturePair>& memory,
                        const Tangent& grad, double nu) {
  struct Used {
    const CurvaturePair* pair;
    double rho;
    double alpha;
  };
  std::vector<Used> used;
  used.reserve(memory.size());
  for (const CurvaturePair& pair : memory) {
    const double sy = manifold.inner(x, pair.s, pair.y);
    const double bound = nu * manifold.norm(x, pair.s) * manifold.norm(x, pair.y);
    if (sy > bound && sy > 0.0) used.push_back({&pair, 1.0 / sy, 0.0});
  }

  Tangent q = grad;
  for (auto it = used.rbegin(); it != used.rend(); ++it) {
    it->alpha = it->rho * manifold.inner(x, it->pair->s, q);
    q -= it->alpha * it->pair->y;
  }
  if (!used.empty()) {
    const CurvaturePair& last = *used.back().pair;
    q *= manifold.inner(x, last.s, last.y) / manifold.inner(x, last.y, last.y);
  }
  for (Used& u : used) {
    const double b = u.rho * manifold.inner(x, u.pair->y, q);
    q += (u.alpha - b) * u.pair->s;
  }
  Tangent eta = -q;
  if (!(manifold.inner(x, eta, grad) < 0.0)) return -grad;
  return eta;
}

namespace detail {
namespace {

// The last point visited by the line search, reused once a step is accepted.
struct Trial {
  double t = -1.0;
  Point y;
  double f = 0.0;
  bool has_egrad = false;
  Vector egrad;
};

// Dense inverse-Hessian approximation in ambient coordinates, acting on the
// tangent space at the current iterate.
class DenseBfgs {
 public:
  bool empty() const { return h_.size() == 0; }
  void reset() { h_.resize(0, 0); }

  Tangent apply(const Manifold& m, const Point& x, const Tangent& g) const {
    if (empty()) return g;
    return m.proj_tangent(x, h_ * g);
  }

  // H <- P_y H P_x (projection transport on both sides).
  void transport(const Manifold& m, const Point& x, const Point& y) {
    if (empty()) return;
    Matrix ht = h_.transpose();
    m.proj_columns(x, ht);
    h_ = ht.transpose();
    m.proj_columns(y, h_);
  }

  void update(const Manifold& m, const Point& x, const Tangent& s,
              const Tangent& yv) {
    const double sy = m.inner(x, s, yv);
    if (empty()) {
      const Eigen::Index n = s.size();
      h_ = (sy / m.inner(x, yv, yv)) * Matrix::Identity(n, n);
    }
    const double rho = 1.0 / sy;
    const Vector s_flat = m.dual(x, s);
    const Vector y_flat = m.dual(x, yv);
    const Vector u = h_ * yv;
    const Vector w = h_.transpose() * y_flat;
    const double c = y_flat.dot(u);
    h_.noalias() -= rho * u * s_flat.transpose();
    h_.noalias() -= rho * s * w.transpose();
    h_.noalias() += (rho * rho * c + rho) * s * s_flat.transpose();
  }

 private:
  Matrix h_;
};

bool pair_ok(const Manifold& m, const Point& x, const Tangent& s,
             const Tangent& y, double nu) {
  const double sy = m.inner(x, s, y);
  return sy > 0.0 && sy > nu * m.norm(x, s) * m.norm(x, y);
}

}  // namespace

OptimResult run_line_search(Run& run) {
  const SolverConfig& cfg = run.config();
  const Manifold& m = run.manifold();
  const Method method = cfg.method;
  const bool quasi_newton = method == Method::kRBFGS || method == Method::kLRBFGS;

  std::deque<CurvaturePair> memory;
  DenseBfgs dense;
  Tangent prev_dir;
  Tangent prev_grad;
  double prev_grad_sq = 0.0;
  bool have_prev = false;
  double f_prev = std::numeric_limits<double>::quiet_NaN();
  int failures = 0;
  int iter = 0;

  run.record(0, 0.0);
  while (!run.should_stop(iter)) {
    const Point x = run.x();
    const Tangent g = run.grad();
    const double fx = run.f();

    Tangent eta;
    switch (method) {
      case Method::kRSD:
        eta = -g;
        break;
      case Method::kRCG: {
        double beta = 0.0;
        if (have_prev) beta = polak_ribiere_plus(m, x, g, prev_grad, prev_grad_sq);
        eta = have_prev ? cg_direction(m, x, g, prev_dir, beta) : Tangent(-g);
        break;
      }
      case Method::kLRBFGS:
        eta = lbfgs_direction(m, x, {memory.begin(), memory.end()}, g, cfg.nu);
        break;
      case Method::kRBFGS:
        eta = -dense.apply(m, x, g);
        if (!(m.inner(x, eta, g) < 0.0)) {
          dense.reset();
          eta = -g;
        }
        break;
      default:
        throw SolverError("line search driver called with a trust-region method");
    }
    const double dphi0 = m.inner(x, g, eta);

    bool first = !std::isfinite(f_prev);
    double t0 = initial_step(fx, f_prev, dphi0, first, cfg);
    if (quasi_newton && !first && !(memory.empty() && dense.empty())) {
      t0 = std::min(1.0, 1.01 * t0);
      t0 = std::max(t0, cfg.min_stepsize);
    }

    Trial trial;
    auto visit = [&](double t) -> double {
      trial = Trial{};
      trial.t = t;
      try {
        trial.y = run.retract(x, t * eta);
      } catch (const StepInfeasibleError&) {
        trial.f = std::numeric_limits<double>::infinity();
        return trial.f;
      }
      trial.f = run.value(trial.y);
      return trial.f;
    };

    LineSearchResult ls;
    if (cfg.line_search == LineSearchKind::kWolfe) {
      auto phi = [&](double t) -> LinePoint {
        const double v = visit(t);
        if (!std::isfinite(v)) return {v, std::numeric_limits<double>::quiet_NaN()};
        trial.egrad = run.egrad(trial.y);
        trial.has_egrad = true;
        const Tangent gy = m.egrad2rgrad(trial.y, trial.egrad);
        const Tangent moved = run.transport(x, t * eta, trial.y, eta);
        return {v, m.inner(trial.y, gy, moved)};
      };
      ls = wolfe_search(phi, fx, dphi0, t0, cfg);
    } else {
      ls = armijo_backtracking(visit, fx, dphi0, t0, cfg);
    }

    double step = ls.step;
    bool moved = false;
    if (ls.success) {
      failures = 0;
      if (trial.t != step) visit(step);
      moved = true;
    } else {
      ++failures;
      memory.clear();
      dense.reset();
      have_prev = false;
      step = cfg.final_stepsize * cfg.min_stepsize;
      if (std::isfinite(visit(step)) && trial.f <= fx) moved = true;
    }

    if (moved) {
      const Tangent step_vec = step * eta;
      const Point y = trial.y;
      if (trial.has_egrad) {
        run.move_to(trial.y, trial.f, trial.egrad);
      } else {
        run.move_to(trial.y, trial.f);
      }
      const Tangent& gy = run.grad();

      switch (method) {
        case Method::kRCG:
          prev_dir = run.transport(x, step_vec, y, eta);
          prev_grad = run.transport(x, step_vec, y, g);
          prev_grad_sq = m.inner(x, g, g);
          have_prev = true;
          break;
        case Method::kLRBFGS: {
          for (CurvaturePair& pair : memory) {
            pair.s = m.transport(x, step_vec, y, pair.s);
            pair.y = m.transport(x, step_vec, y, pair.y);
          }
          run.count_memory_transports(2 * memory.size());
          CurvaturePair pair{run.transport(x, step_vec, y, step_vec),
                             gy - run.transport(x, step_vec, y, g)};
          if (pair_ok(m, y, pair.s, pair.y, cfg.nu)) {
            memory.push_back(std::move(pair));
            while (static_cast<int>(memory.size()) > cfg.length_sy) {
              memory.pop_front();
            }
          }
          break;
        }
        case Method::kRBFGS: {
          dense.transport(m, x, y);
          if (!dense.empty()) run.count_memory_transports(1);
          const Tangent s = run.transport(x, step_vec, y, step_vec);
          const Tangent yv = gy - run.transport(x, step_vec, y, g);
          if (pair_ok(m, y, s, yv, cfg.nu)) dense.update(m, y, s, yv);
          break;
        }
        default:
          break;
      }
      f_prev = fx;
    } else {
      f_prev = std::numeric_limits<double>::quiet_NaN();
    }

    ++iter;
    run.record(iter, step);
    if (failures >= 2) return run.finish(iter, StopReason::kLineSearchFailure);
  }
  return run.finish(iter, run.stop_reason());
}

}  // namespace detail
}  // namespace riemopt
