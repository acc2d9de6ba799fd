#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "riemopt/solver.hpp"
#include "solver_internal.hpp"

namespace riemopt {

TcgResult truncated_cg(const Manifold& manifold, const Point& x,
                       const Tangent& grad,
                       const std::function<Tangent(const Tangent&)>& hess,
                       double radius, double kappa, double theta,
                       int max_inner) {
  TcgResult out;
  out.eta = Tangent::Zero(grad.size());
  out.heta = Tangent::Zero(grad.size());

  Tangent r = grad;
  double rr = manifold.inner(x, r, r);
  const double r0 = std::sqrt(rr);
  if (r0 == 0.0) return out;
  const double stop = r0 * std::min(kappa, std::pow(r0, theta));

  Tangent delta = -r;
  double ee = 0.0;  // <eta, eta>
  for (int j = 0; j < std::max(max_inner, 1); ++j) {
    const Tangent hd = hess(delta);
    const double dhd = manifold.inner(x, delta, hd);
    ++out.inner_iterations;
    if (!std::isfinite(dhd)) {
      out.model_value = std::numeric_limits<double>::quiet_NaN();
      return out;
    }
    const double alpha = rr / dhd;
    const double ed = manifold.inner(x, out.eta, delta);
    const double dd = manifold.inner(x, delta, delta);
    const double ee_new = ee + 2.0 * alpha * ed + alpha * alpha * dd;
    if (dhd <= 0.0 || ee_new >= radius * radius) {
      const double disc = ed * ed + dd * (radius * radius - ee);
      const double tau = (-ed + std::sqrt(std::max(disc, 0.0))) / dd;
      out.eta += tau * delta;
      out.heta += tau * hd;
      out.hit_boundary = true;
      out.negative_curvature = dhd <= 0.0;
      break;
    }
    out.eta += alpha * delta;
    out.heta += alpha * hd;
    ee = ee_new;
    r += alpha * hd;
    const double rr_new = manifold.inner(x, r, r);
    if (std::sqrt(rr_new) <= stop) break;
    delta = -r + (rr_new / rr) * delta;
    rr = rr_new;
  }
  out.model_value = manifold.inner(x, grad, out.eta) +
                    0.5 * manifold.inner(x, out.eta, out.heta);
  return out;
}

namespace detail {
namespace {

constexpr double kSr1Skip = 1e-8;
constexpr int kMaxRejections = 10;

// Dense SR1 model Hessian acting on the tangent space at the iterate.
class DenseSr1 {
 public:
  Tangent apply(const Manifold& m, const Point& x, const Tangent& v) const {
    if (b_.size() == 0) return v;
    // Transport is not an isometry for every metric, so B is only
    // self-adjoint at the point where it was last updated. Use its
    // self-adjoint part at x.
    const Tangent bv = m.proj_tangent(x, b_ * v);
    const Tangent adj = m.sharp(x, b_.transpose() * m.dual(x, v));
    return 0.5 * (bv + adj);
  }

  void transport(const Manifold& m, const Point& x, const Point& y) {
    if (b_.size() == 0) return;
    Matrix bt = b_.transpose();
    m.proj_columns(x, bt);
    b_ = bt.transpose();
    m.proj_columns(y, b_);
  }

  bool active() const { return b_.size() != 0; }

  void update(const Manifold& m, const Point& x, const Tangent& s,
              const Tangent& y) {
    if (b_.size() == 0) {
      const double sy = m.inner(x, s, y);
      const double scale = sy > 0.0 ? m.inner(x, y, y) / sy : 1.0;
      b_ = scale * Matrix::Identity(s.size(), s.size());
    }
    const Tangent w = y - apply(m, x, s);
    const double ws = m.inner(x, w, s);
    if (std::abs(ws) < kSr1Skip * m.norm(x, s) * m.norm(x, w)) return;
    b_.noalias() += (w / ws) * m.dual(x, w).transpose();
  }

 private:
  Matrix b_;
};

// Compact limited-memory SR1: B v = gamma v + Psi M^{-1} <Psi, v>.
class LimitedSr1 {
 public:
  explicit LimitedSr1(int capacity) : capacity_(capacity) {}

  std::size_t size() const { return pairs_.size(); }

  void transport(const Manifold& m, const Point& x, const Tangent& step,
                 const Point& y) {
    for (CurvaturePair& p : pairs_) {
      p.s = m.transport(x, step, y, p.s);
      p.y = m.transport(x, step, y, p.y);
    }
  }

  void add(const Manifold& m, const Point& x, CurvaturePair pair) {
    const Tangent w = pair.y - apply(m, x, pair.s);
    const double ws = m.inner(x, w, pair.s);
    if (std::abs(ws) < kSr1Skip * m.norm(x, pair.s) * m.norm(x, w)) return;
    pairs_.push_back(std::move(pair));
    while (static_cast<int>(pairs_.size()) > capacity_) pairs_.pop_front();
    stale_ = true;
  }

  void mark_stale() { stale_ = true; }

  Tangent apply(const Manifold& m, const Point& x, const Tangent& v) {
    if (stale_) rebuild(m, x);
    Tangent out = gamma_ * v;
    if (psi_.cols() == 0) return out;
    Vector coeffs(psi_.cols());
    for (Eigen::Index k = 0; k < psi_.cols(); ++k) coeffs(k) = psi_flat_.col(k).dot(v);
    out += psi_ * minv_.solve(coeffs);
    return out;
  }

 private:
  void rebuild(const Manifold& m, const Point& x) {
    stale_ = false;
    gamma_ = 1.0;
    psi_.resize(0, 0);
    if (pairs_.empty()) return;
    const CurvaturePair& last = pairs_.back();
    const double sy = m.inner(x, last.s, last.y);
    if (sy > 0.0) gamma_ = m.inner(x, last.y, last.y) / sy;

    while (!pairs_.empty()) {
      const Eigen::Index k = static_cast<Eigen::Index>(pairs_.size());
      const Eigen::Index n = pairs_.front().s.size();
      Matrix sy_inner(k, k);
      Matrix ss_inner(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
          sy_inner(i, j) = m.inner(x, pairs_[i].s, pairs_[j].y);
          ss_inner(i, j) = m.inner(x, pairs_[i].s, pairs_[j].s);
        }
      }
      Matrix mm = Matrix::Zero(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
          if (i == j) {
            mm(i, j) = sy_inner(i, i);
          } else if (i > j) {
            mm(i, j) = sy_inner(i, j);
            mm(j, i) = sy_inner(i, j);
          }
        }
      }
      mm -= gamma_ * ss_inner;
      Eigen::JacobiSVD<Matrix> svd(mm);
      const auto& sv = svd.singularValues();
      if (sv(0) > 0.0 && sv(k - 1) > 1e-8 * sv(0)) {
        psi_.resize(n, k);
        psi_flat_.resize(n, k);
        for (Eigen::Index i = 0; i < k; ++i) {
          psi_.col(i) = pairs_[i].y - gamma_ * pairs_[i].s;
          psi_flat_.col(i) = m.dual(x, psi_.col(i));
        }
        minv_.compute(mm);
        return;
      }
      pairs_.pop_front();
    }
  }

  int capacity_;
  std::deque<CurvaturePair> pairs_;
  bool stale_ = true;
  double gamma_ = 1.0;
  Matrix psi_;
  Matrix psi_flat_;
  Eigen::PartialPivLU<Matrix> minv_;
};

}  // namespace

OptimResult run_trust_region(Run& run) {
  const SolverConfig& cfg = run.config();
  const Manifold& m = run.manifold();
  const Method method = cfg.method;
  const int max_inner = static_cast<int>(std::max<Eigen::Index>(m.intrinsic_dim(), 1));
  const double eps = std::numeric_limits<double>::epsilon();

  DenseSr1 dense;
  LimitedSr1 limited(cfg.length_sy);
  double radius = cfg.tr_initial_radius;
  int rejections = 0;
  int iter = 0;

  run.record(0, radius);
  while (!run.should_stop(iter)) {
    const Point x = run.x();
    const Tangent g = run.grad();
    const double fx = run.f();

    std::function<Tangent(const Tangent&)> hess;
    switch (method) {
      case Method::kRTRNewton:
        hess = [&](const Tangent& v) { return run.hess(v); };
        break;
      case Method::kRTRSD:
        hess = [](const Tangent& v) { return v; };
        break;
      case Method::kRTRSR1:
        hess = [&](const Tangent& v) { return dense.apply(m, x, v); };
        break;
      case Method::kLRTRSR1:
        hess = [&](const Tangent& v) { return limited.apply(m, x, v); };
        break;
      default:
        throw SolverError("trust-region driver called with a line-search method");
    }

    const TcgResult tcg =
        truncated_cg(m, x, g, hess, radius, cfg.tr_kappa, cfg.tr_theta, max_inner);

    bool accepted = false;
    double rho = 0.0;
    Point y;
    double fy = std::numeric_limits<double>::infinity();
    if (std::isfinite(tcg.model_value)) {
      try {
        y = run.retract(x, tcg.eta);
        fy = run.value(y);
      } catch (const StepInfeasibleError&) {
        fy = std::numeric_limits<double>::infinity();
      }
      if (std::isfinite(fy)) {
        const double reg = eps * std::max(1.0, std::abs(fx)) * 1e3;
        rho = ((fx - fy) + reg) / (-tcg.model_value + reg);
        accepted = rho > 0.1 && fy <= fx;
      }
    }

    if (!std::isfinite(fy) || rho < 0.25) {
      radius *= 0.25;
    } else if (rho > 0.75 && tcg.hit_boundary) {
      radius = std::min(2.0 * radius, cfg.tr_max_radius);
    }

    if (accepted) {
      rejections = 0;
      run.move_to(y, fy);
      if (method == Method::kRTRSR1 || method == Method::kLRTRSR1) {
        const Tangent s = run.transport(x, tcg.eta, y, tcg.eta);
        const Tangent yv = run.grad() - run.transport(x, tcg.eta, y, g);
        if (method == Method::kRTRSR1) {
          if (dense.active()) {
            dense.transport(m, x, y);
            run.count_memory_transports(1);
          }
          dense.update(m, y, s, yv);
        } else {
          limited.transport(m, x, tcg.eta, y);
          run.count_memory_transports(2 * limited.size());
          limited.mark_stale();
          limited.add(m, y, CurvaturePair{s, yv});
        }
      }
    } else {
      ++rejections;
      // A rejected trial still carries curvature information; without it a
      // poor SR1 model never improves as the radius shrinks.
      if ((method == Method::kRTRSR1 || method == Method::kLRTRSR1) && std::isfinite(fy)) {
        const Tangent gy = m.egrad2rgrad(y, run.egrad(y));
        const Tangent yv = run.transport(y, -tcg.eta, x, gy) - g;
        if (method == Method::kRTRSR1) {
          dense.update(m, x, tcg.eta, yv);
        } else {
          limited.add(m, x, CurvaturePair{tcg.eta, yv});
        }
      }
    }

    ++iter;
    run.record(iter, radius);
    if (rejections >= kMaxRejections) {
      return run.finish(iter, StopReason::kTrustRegionFailure);
    }
  }
  return run.finish(iter, run.stop_reason());
}

}  // namespace detail
}  // namespace riemopt
