#pragma once

#include "riemopt/manifold.hpp"
#include "riemopt/problem.hpp"

namespace riemopt::stats {

/// f(X) = tr(X^T B X D) over Stiefel(n, p) with D = diag(mu).
struct BrockettInstance {
  Matrix b;   // symmetric n x n
  Vector mu;  // non-increasing, non-negative
};

/// B = G + G^T with standard normal G, D = diag(p, p-1, ..., 1).
BrockettInstance brockett_random(Eigen::Index n, Eigen::Index p, std::uint64_t seed);

/// Throws std::invalid_argument when B is not symmetric or mu is not a
/// non-increasing non-negative sequence.
void validate(const BrockettInstance& inst);

Manifold brockett_manifold(const BrockettInstance& inst);

/// Analytic gradient 2BXD and Hessian action 2 B mat(eta) D.
Problem brockett_problem(const BrockettInstance& inst);

/// First p columns of the n x n identity.
Point brockett_identity_start(Eigen::Index n, Eigen::Index p);

struct BrockettOptimum {
  Point x;
  double f = 0.0;
};

/// Eigenvectors of the p smallest eigenvalues, the smallest paired with the
/// largest weight.
BrockettOptimum brockett_oracle(const BrockettInstance& inst);

}  // namespace riemopt::stats
