#pragma once

#include <optional>

#include "riemopt/manifold.hpp"
#include "riemopt/problem.hpp"

namespace riemopt::stats {

enum class Family { kPoisson, kBernoulli };

/// Cumulant b(theta) and its first two derivatives.
double cumulant(Family family, double theta);
double cumulant_d1(Family family, double theta);
double cumulant_d2(Family family, double theta);

/// Response, predictors (n x p) and the reduction dimension.
struct MadeData {
  Vector y;
  Matrix x;
  Eigen::Index d = 1;
  Family family = Family::kPoisson;
};

/// W(j, i) = K_h(z_i - z_j) / sum_k K_h(z_k - z_j) with a Gaussian kernel and
/// H = h^2 I. Rows sum to one.
Matrix kernel_weights(const Matrix& z, double h);

/// n^{-1/(d+4)}.
double default_bandwidth(Eigen::Index n, Eigen::Index d);

/// Local parameters: alpha(j) and gamma.col(j) for each anchor j.
struct LocalFits {
  Vector alpha;  // n
  Matrix gamma;  // d x n
};

/// -Q(alpha, gamma, B) over Stiefel(p, d) with alpha, gamma and the weights
/// held fixed. Analytic gradient.
Problem made_problem(const MadeData& data, const Matrix& weights,
                     const LocalFits& local);

/// Newton-Raphson on every local likelihood with B fixed. Starts from
/// `start` when given.
LocalFits made_local_fits(const MadeData& data, const Matrix& weights,
                          const Matrix& b, const std::optional<LocalFits>& start);

struct MadeOptions {
  bool refined = false;
  double tolerance = 1e-5;
  int max_sweeps = 50;
  std::optional<double> bandwidth;  // default_bandwidth when unset
};

struct MadeFit {
  Matrix b;        // p x d, original predictor scale, orthonormal columns
  LocalFits local;
  Vector fitted;   // b'(alpha_j), the fitted mean at each observation
  double deviance = 0.0;
  int sweeps = 0;
};

/// Alternating fit on standardized predictors: local Newton-Raphson, a
/// Stiefel RCG step in B, then optionally refined weights on B^T X. Stops
/// when ||(I - B_new B_new^T) B_old||_F < tolerance or after max_sweeps.
/// Without b0 the start is the normalized slope of a plain GLM fit.
MadeFit made_fit(const MadeData& data, const std::optional<Matrix>& b0,
                 const MadeOptions& options = {});

/// sum_j sum_i W(j, i) dev(Y_i, theta_ij), with dev the unit deviance.
double made_deviance(const MadeData& data, const Matrix& weights,
                     const Matrix& b, const LocalFits& local);

/// Deviance of the intercept-only model.
double null_deviance(const Vector& y, Family family);

/// Poisson single-index design: X ~ N(0, I_p), Y ~ Poisson(exp(beta^T X)).
MadeData made_simulate(Eigen::Index n, const Vector& beta, std::uint64_t seed);

/// Intercept and slopes of a plain GLM fit by Fisher scoring.
struct GlmFit {
  double alpha = 0.0;
  Vector beta;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  bool separated = false;
};

GlmFit glm_fit(const Vector& y, const Matrix& x, Family family);

}  // namespace riemopt::stats
