#include "riemopt/stats/made.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "riemopt/solver.hpp"

namespace riemopt::stats {
namespace {

constexpr double kThetaClamp = 30.0;
constexpr double kRidge = 1e-8;

double clamp_theta(double t) { return std::clamp(t, -kThetaClamp, kThetaClamp); }

double unit_loglik(Family family, double y, double theta) {
  return y * theta - cumulant(family, theta);
}

double unit_deviance(Family family, double y, double theta) {
  const double mu = cumulant_d1(family, theta);
  if (family == Family::kPoisson) {
    const double ylogy = y > 0.0 ? y * std::log(y / mu) : 0.0;
    return 2.0 * (ylogy - (y - mu));
  }
  const double eps = 1e-300;
  return -2.0 * (y * std::log(std::max(mu, eps)) +
                 (1.0 - y) * std::log(std::max(1.0 - mu, eps)));
}

double link(Family family, double mean) {
  if (family == Family::kPoisson) return std::log(std::max(mean, 1e-8));
  const double m = std::clamp(mean, 1e-8, 1.0 - 1e-8);
  return std::log(m / (1.0 - m));
}

// Maximizes sum_i w_i (y_i theta_i - b(theta_i)) with theta = design * c by
// damped Newton steps.
Vector weighted_newton(Family family, const Vector& y, const Vector& w,
                       const Matrix& design, Vector c, int max_iter) {
  auto objective = [&](const Vector& coef) {
    const Vector theta = design * coef;
    double v = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (w(i) > 0.0) v += w(i) * unit_loglik(family, y(i), clamp_theta(theta(i)));
    }
    return v;
  };
  double current = objective(c);
  const Eigen::Index k = c.size();
  for (int it = 0; it < max_iter; ++it) {
    const Vector theta = design * c;
    Vector score = Vector::Zero(k);
    Matrix info = Matrix::Zero(k, k);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (w(i) <= 0.0) continue;
      const double t = clamp_theta(theta(i));
      const auto row = design.row(i).transpose();
      score += w(i) * (y(i) - cumulant_d1(family, t)) * row;
      info += w(i) * cumulant_d2(family, t) * row * row.transpose();
    }
    if (score.norm() < 1e-10) break;
    info.diagonal().array() += kRidge;
    const Vector step = info.ldlt().solve(score);
    if (!step.allFinite()) break;
    double scale = 1.0;
    bool improved = false;
    for (int h = 0; h < 30; ++h) {
      const Vector trial = c + scale * step;
      const double v = objective(trial);
      if (v >= current) {
        c = trial;
        improved = v > current;
        current = v;
        break;
      }
      scale *= 0.5;
    }
    if (!improved || scale * step.norm() < 1e-12) break;
  }
  return c;
}

Matrix standardize(const Matrix& x, Vector& mean, Vector& sd) {
  const double n = static_cast<double>(x.rows());
  mean = x.colwise().mean().transpose();
  Matrix z = x;
  z.rowwise() -= mean.transpose();
  sd = (z.colwise().squaredNorm() / std::max(n - 1.0, 1.0)).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    if (!(sd(j) > 0.0)) throw std::invalid_argument("made: constant predictor column");
    z.col(j) /= sd(j);
  }
  return z;
}

}  // namespace

double cumulant(Family family, double theta) {
  if (family == Family::kPoisson) return std::exp(theta);
  return theta > 0.0 ? theta + std::log1p(std::exp(-theta)) : std::log1p(std::exp(theta));
}

double cumulant_d1(Family family, double theta) {
  if (family == Family::kPoisson) return std::exp(theta);
  return 1.0 / (1.0 + std::exp(-theta));
}

double cumulant_d2(Family family, double theta) {
  if (family == Family::kPoisson) return std::exp(theta);
  const double m = 1.0 / (1.0 + std::exp(-theta));
  return m * (1.0 - m);
}

Matrix kernel_weights(const Matrix& z, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("kernel_weights: h must be > 0");
  const Eigen::Index n = z.rows();
  Matrix w(n, n);
  const double scale = -0.5 / (h * h);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      w(j, i) = std::exp(scale * (z.row(i) - z.row(j)).squaredNorm());
    }
    w.row(j) /= w.row(j).sum();
  }
  return w;
}

double default_bandwidth(Eigen::Index n, Eigen::Index d) {
  return std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
}

Problem made_problem(const MadeData& data, const Matrix& weights,
                     const LocalFits& local) {
  const Eigen::Index n = data.x.rows();
  const Eigen::Index p = data.x.cols();
  const Eigen::Index d = data.d;
  const Matrix x = data.x;
  const Vector y = data.y;
  const Family family = data.family;
  const Matrix w = weights;
  const LocalFits lf = local;

  // theta(i, j) for anchor j.
  auto thetas = [=](const Matrix& b) {
    const Matrix t = x * (b * lf.gamma);  // T(i, j) = X_i^T B gamma_j
    Matrix theta(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      theta.col(j) = (t.col(j).array() - t(j, j) + lf.alpha(j)).matrix();
    }
    return theta;
  };
  auto objective = [=](const Point& bv) {
    const Matrix theta = thetas(as_matrix(bv, p, d));
    double q = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        q += w(j, i) * unit_loglik(family, y(i), clamp_theta(theta(i, j)));
      }
    }
    return -q;
  };
  auto gradient = [=](const Point& bv) {
    const Matrix theta = thetas(as_matrix(bv, p, d));
    Matrix r(n, n);  // r(j, i) = w_ji (Y_i - b'(theta_ij))
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = theta(i, j);
        const double resid = std::abs(t) < kThetaClamp ? y(i) - cumulant_d1(family, t) : 0.0;
        r(j, i) = w(j, i) * resid;
      }
    }
    Matrix v = r * x;  // rows v_j = sum_i r_ji X_i - (sum_i r_ji) X_j
    const Vector rowsum = r.rowwise().sum();
    for (Eigen::Index j = 0; j < n; ++j) v.row(j) -= rowsum(j) * x.row(j);
    const Matrix g = -(v.transpose() * lf.gamma.transpose());
    return as_vector(g);
  };
  return Problem(objective, gradient);
}

LocalFits made_local_fits(const MadeData& data, const Matrix& weights,
                          const Matrix& b, const std::optional<LocalFits>& start) {
  const Eigen::Index n = data.x.rows();
  const Eigen::Index d = data.d;
  const Matrix z = data.x * b;
  LocalFits out;
  out.alpha.resize(n);
  out.gamma.resize(d, n);
  Matrix design(n, d + 1);
  design.col(0).setOnes();
  for (Eigen::Index j = 0; j < n; ++j) {
    design.rightCols(d) = z.rowwise() - z.row(j);
    const Vector w = weights.row(j).transpose();
    Vector c(d + 1);
    if (start) {
      c(0) = start->alpha(j);
      c.tail(d) = start->gamma.col(j);
    } else {
      c.setZero();
      c(0) = link(data.family, w.dot(data.y));
    }
    c = weighted_newton(data.family, data.y, w, design, c, 50);
    out.alpha(j) = c(0);
    out.gamma.col(j) = c.tail(d);
  }
  return out;
}

double made_deviance(const MadeData& data, const Matrix& weights,
                     const Matrix& b, const LocalFits& local) {
  const Eigen::Index n = data.x.rows();
  const Matrix t = data.x * (b * local.gamma);
  double dev = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double theta = clamp_theta(local.alpha(j) + t(i, j) - t(j, j));
      dev += weights(j, i) * unit_deviance(data.family, data.y(i), theta);
    }
  }
  return dev;
}

double null_deviance(const Vector& y, Family family) {
  const double theta = link(family, y.mean());
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) dev += unit_deviance(family, y(i), theta);
  return dev;
}

MadeFit made_fit(const MadeData& data, const std::optional<Matrix>& b0,
                 const MadeOptions& options) {
  const Eigen::Index n = data.x.rows();
  const Eigen::Index p = data.x.cols();
  const Eigen::Index d = data.d;
  if (data.y.size() != n) throw std::invalid_argument("made_fit: size mismatch");
  if (d < 1 || d >= p) throw std::invalid_argument("made_fit: need 1 <= d < p");

  Vector mean;
  Vector sd;
  MadeData zdata = data;
  zdata.x = standardize(data.x, mean, sd);
  const double h = options.bandwidth.value_or(default_bandwidth(n, d));

  Matrix b;
  if (b0) {
    b = thin_qr(sd.asDiagonal() * (*b0)).q;
  } else {
    const GlmFit glm = glm_fit(zdata.y, zdata.x, data.family);
    Matrix start = Matrix::Zero(p, d);
    start.col(0) = glm.beta;
    for (Eigen::Index k = 1; k < d; ++k) start(k % p, k) = 1.0;
    if (start.col(0).norm() == 0.0) start(0, 0) = 1.0;
    b = thin_qr(start).q;
  }

  Matrix weights = kernel_weights(zdata.x, h);
  if (options.refined) weights = kernel_weights(zdata.x * b, h);

  SolverConfig config;
  config.method = Method::kRCG;
  config.tolerance = 1e-6;
  config.max_iteration = 200;
  const Manifold stiefel = Manifold::stiefel(p, d);

  std::optional<LocalFits> local;
  MadeFit fit;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    local = made_local_fits(zdata, weights, b, local);
    const OptimResult res =
        solve(made_problem(zdata, weights, *local), stiefel, config, as_vector(b));
    const Matrix b_new = thin_qr(as_matrix(res.xopt, p, d)).q;
    const double change = (b - b_new * (b_new.transpose() * b)).norm();
    b = b_new;
    fit.sweeps = sweep + 1;
    if (options.refined) weights = kernel_weights(zdata.x * b, h);
    if (change < options.tolerance) break;
  }
  local = made_local_fits(zdata, weights, b, local);

  fit.local = *local;
  fit.deviance = made_deviance(zdata, weights, b, fit.local);
  fit.fitted.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    fit.fitted(j) = cumulant_d1(data.family, fit.local.alpha(j));
  }
  fit.b = thin_qr(sd.cwiseInverse().asDiagonal() * b).q;
  return fit;
}

MadeData made_simulate(Eigen::Index n, const Vector& beta, std::uint64_t seed) {
  Rng rng(seed);
  MadeData data;
  data.family = Family::kPoisson;
  data.d = 1;
  data.x = rng.normal_matrix(n, beta.size());
  data.y.resize(n);
  const Vector theta = data.x * beta;
  for (Eigen::Index i = 0; i < n; ++i) {
    data.y(i) = static_cast<double>(rng.poisson(std::exp(clamp_theta(theta(i)))));
  }
  return data;
}

GlmFit glm_fit(const Vector& y, const Matrix& x, Family family) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  Matrix design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = x;

  GlmFit fit;
  Vector c = Vector::Zero(p + 1);
  c(0) = link(family, y.mean());
  auto loglik = [&](const Vector& coef) {
    const Vector theta = design * coef;
    double v = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) v += unit_loglik(family, y(i), clamp_theta(theta(i)));
    return v;
  };
  double current = loglik(c);
  for (int it = 0; it < 100; ++it) {
    const Vector theta = design * c;
    Vector score = Vector::Zero(p + 1);
    Matrix info = Matrix::Zero(p + 1, p + 1);
    double max_weight = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = clamp_theta(theta(i));
      const double wt = cumulant_d2(family, t);
      max_weight = std::max(max_weight, wt);
      const auto row = design.row(i).transpose();
      score += (y(i) - cumulant_d1(family, t)) * row;
      info += wt * row * row.transpose();
    }
    fit.iterations = it;
    if (score.norm() < 1e-8) {
      fit.converged = true;
      break;
    }
    if (max_weight < 1e-10) {
      fit.separated = true;
      break;
    }
    Eigen::LDLT<Matrix> ldlt(info);
    Vector step = ldlt.solve(score);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      info.diagonal().array() += kRidge;
      step = info.ldlt().solve(score);
    }
    double scale = 1.0;
    bool moved = false;
    for (int h = 0; h < 40; ++h) {
      const Vector trial = c + scale * step;
      const double v = loglik(trial);
      if (v >= current) {
        c = trial;
        current = v;
        moved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!moved) break;
  }
  const Vector theta = design * c;
  if ((theta.array().abs() >= kThetaClamp).any()) fit.separated = true;
  fit.alpha = c(0);
  fit.beta = c.tail(p);
  fit.loglik = current;
  return fit;
}

}  // namespace riemopt::stats
