#pragma once

#include "riemopt/manifold.hpp"
#include "riemopt/problem.hpp"
#include "riemopt/solver.hpp"
#include "riemopt/stats/made.hpp"

namespace riemopt::stats {

/// Binary responses, predictors (n x p) and the envelope dimension u.
struct EnvGlmData {
  Vector y;
  Matrix x;
  Eigen::Index u = 1;
  Matrix s_x;  // sample covariance of x

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
};

EnvGlmData envglm_data(const Vector& y, const Matrix& x, Eigen::Index u);

/// Logistic design: X ~ N(0, 10 v1 v1^T + 0.1 v2 v2^T) with v1 = beta/|beta|,
/// Y ~ Bernoulli(logit^{-1}(beta^T X)), beta = (0.25, 0.25), u = 1.
EnvGlmData envglm_simulate(Eigen::Index n, std::uint64_t seed);
Vector envglm_true_beta();

/// Logistic regression by iteratively reweighted least squares: stops when
/// the score norm is below 1e-8 or after 100 iterations. Linear predictors
/// are clamped to |theta| <= 30; vanishing weights flag separation.
GlmFit glm_logistic_fit(const Vector& y, const Matrix& x);

/// L_n(Gamma) at fixed (alpha, eta):
/// sum_i C(alpha + eta^T Gamma^T X_i)
///   - (n/2)(log|G^T S G| + log|G^T S^{-1} G| + log|S|).
/// -inf when a log-determinant is undefined.
double envglm_loglik(const EnvGlmData& data, const Matrix& gamma, double alpha,
                     const Vector& eta);

/// L_n(Gamma) with (alpha, eta) refit by the GLM of Y on Gamma^T X.
double envglm_profile_loglik(const EnvGlmData& data, const Matrix& gamma);

enum class EnvGlmMode {
  kGrassmannProfile,  // alternate GLM fits and Grassmann solves in Gamma
  kProductJoint,      // one solve over Grassmann(p, u) x Euclidean(u + 1)
};

/// -L_n on Grassmann(p, u) with (alpha, eta) fixed; numeric gradient.
Problem envglm_gamma_problem(const EnvGlmData& data, double alpha, const Vector& eta);

/// -L_n on Product(Grassmann(p, u), Euclidean(u + 1)), points
/// [vec(Gamma); alpha; eta]; numeric gradient.
Problem envglm_joint_problem(const EnvGlmData& data);
Manifold envglm_joint_manifold(Eigen::Index p, Eigen::Index u);

struct EnvGlmFit {
  Vector beta;
  Matrix gamma;
  double alpha = 0.0;
  Vector eta;
  double loglik = 0.0;
};

/// Best of `restarts` random starts (seeded) by likelihood.
EnvGlmFit envglm_fit(const EnvGlmData& data, EnvGlmMode mode, int restarts,
                     std::uint64_t seed);

}  // namespace riemopt::stats
