#include "riemopt/stats/envglm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace riemopt::stats {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SolverConfig envglm_config() {
  SolverConfig c;
  c.method = Method::kLRBFGS;
  c.tolerance = 1e-6;
  c.max_iteration = 2000;
  return c;
}

}  // namespace

EnvGlmData envglm_data(const Vector& y, const Matrix& x, Eigen::Index u) {
  if (y.size() != x.rows()) throw std::invalid_argument("envglm_data: size mismatch");
  if (u < 1 || u > x.cols()) throw std::invalid_argument("envglm_data: need 1 <= u <= p");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) {
      throw std::invalid_argument("envglm_data: responses must be 0 or 1");
    }
  }
  EnvGlmData data;
  data.y = y;
  data.x = x;
  data.u = u;
  Matrix c = x;
  c.rowwise() -= x.colwise().mean();
  data.s_x = sym(c.transpose() * c / static_cast<double>(x.rows()));
  return data;
}

Vector envglm_true_beta() { return Vector::Constant(2, 0.25); }

EnvGlmData envglm_simulate(Eigen::Index n, std::uint64_t seed) {
  const Vector beta = envglm_true_beta();
  const Vector v1 = beta.normalized();
  Vector v2(2);
  v2 << -v1(1), v1(0);
  const Matrix sigma = 10.0 * v1 * v1.transpose() + 0.1 * v2 * v2.transpose();
  Rng rng(seed);
  const Matrix x = rng.normal_matrix(n, 2) * chol(sigma).transpose();
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double prob = cumulant_d1(Family::kBernoulli, x.row(i).dot(beta));
    y(i) = rng.uniform() < prob ? 1.0 : 0.0;
  }
  return envglm_data(y, x, 1);
}

GlmFit glm_logistic_fit(const Vector& y, const Matrix& x) {
  return glm_fit(y, x, Family::kBernoulli);
}

double envglm_loglik(const EnvGlmData& data, const Matrix& gamma, double alpha,
                     const Vector& eta) {
  double penalty = 0.0;
  try {
    penalty = logdet_spd(gamma.transpose() * data.s_x * gamma) +
              logdet_spd(gamma.transpose() * inverse_spd(data.s_x) * gamma) +
              logdet_spd(data.s_x);
  } catch (const NotPositiveDefiniteError&) {
    return -kInf;
  } catch (const SingularMatrixError&) {
    return -kInf;
  }
  const Vector theta = (data.x * (gamma * eta)).array() + alpha;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    ll += data.y(i) * theta(i) - cumulant(Family::kBernoulli, theta(i));
  }
  return ll - 0.5 * static_cast<double>(data.n()) * penalty;
}

double envglm_profile_loglik(const EnvGlmData& data, const Matrix& gamma) {
  const GlmFit glm = glm_logistic_fit(data.y, data.x * gamma);
  return envglm_loglik(data, gamma, glm.alpha, glm.beta);
}

Problem envglm_gamma_problem(const EnvGlmData& data, double alpha, const Vector& eta) {
  const Eigen::Index p = data.p();
  const Eigen::Index u = data.u;
  return Problem([data, alpha, eta, p, u](const Point& x) {
    return -envglm_loglik(data, as_matrix(x, p, u), alpha, eta);
  });
}

Manifold envglm_joint_manifold(Eigen::Index p, Eigen::Index u) {
  return Manifold::product({Manifold::grassmann(p, u), Manifold::euclidean(u + 1)});
}

Problem envglm_joint_problem(const EnvGlmData& data) {
  const Eigen::Index p = data.p();
  const Eigen::Index u = data.u;
  return Problem([data, p, u](const Point& x) {
    const Matrix gamma = as_matrix(x.head(p * u), p, u);
    const double alpha = x(p * u);
    const Vector eta = x.tail(u);
    return -envglm_loglik(data, gamma, alpha, eta);
  });
}

EnvGlmFit envglm_fit(const EnvGlmData& data, EnvGlmMode mode, int restarts,
                     std::uint64_t seed) {
  if (restarts < 1) throw std::invalid_argument("envglm_fit: restarts must be >= 1");
  const Eigen::Index p = data.p();
  const Eigen::Index u = data.u;
  const Manifold grassmann = Manifold::grassmann(p, u);
  const SolverConfig config = envglm_config();
  Rng rng(seed);

  EnvGlmFit best;
  best.loglik = -kInf;
  for (int r = 0; r < restarts; ++r) {
    Matrix gamma = as_matrix(grassmann.random_point(rng), p, u);
    GlmFit glm = glm_logistic_fit(data.y, data.x * gamma);
    EnvGlmFit fit;

    if (mode == EnvGlmMode::kGrassmannProfile) {
      Vector beta = gamma * glm.beta;
      for (int outer = 0; outer < 100; ++outer) {
        const OptimResult res =
            solve(envglm_gamma_problem(data, glm.alpha, glm.beta), grassmann,
                  config, as_vector(gamma));
        gamma = as_matrix(res.xopt, p, u);
        glm = glm_logistic_fit(data.y, data.x * gamma);
        const Vector beta_new = gamma * glm.beta;
        const double change = (beta_new - beta).norm();
        beta = beta_new;
        if (change < 1e-6) break;
      }
      fit.gamma = gamma;
      fit.alpha = glm.alpha;
      fit.eta = glm.beta;
    } else {
      Point x0(p * u + u + 1);
      x0.head(p * u) = as_vector(gamma);
      x0(p * u) = glm.alpha;
      x0.tail(u) = glm.beta;
      const OptimResult res = solve(envglm_joint_problem(data),
                                    envglm_joint_manifold(p, u), config, x0);
      fit.gamma = as_matrix(res.xopt.head(p * u), p, u);
      fit.alpha = res.xopt(p * u);
      fit.eta = res.xopt.tail(u);
    }
    fit.beta = fit.gamma * fit.eta;
    fit.loglik = envglm_loglik(data, fit.gamma, fit.alpha, fit.eta);
    if (fit.loglik > best.loglik) best = fit;
  }
  return best;
}

}  // namespace riemopt::stats
