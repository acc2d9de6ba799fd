#pragma once

#include "riemopt/manifold.hpp"
#include "riemopt/problem.hpp"

namespace riemopt::stats {

/// Mean on the unit sphere, covariance on the SPD cone. Points are
/// [mu; vec(Sigma)].
struct MvnParams {
  Vector mu;
  Matrix sigma;
};

/// mu = 1/sqrt(p) in every coordinate, Sigma = 2I + 0.1 (all entries).
MvnParams mvn_truth(Eigen::Index p);

/// n draws (rows) from N(mu, Sigma).
Matrix mvn_simulate(Eigen::Index n, const MvnParams& truth, std::uint64_t seed);

Manifold mvn_manifold(Eigen::Index p);

/// Negative log-likelihood with analytic gradient. Sigma is symmetrized
/// before use; a non-SPD block yields +inf.
Problem mvn_problem(const Matrix& data);

Point mvn_pack(const MvnParams& params);
MvnParams mvn_unpack(const Point& x, Eigen::Index p);

/// mu = e1, Sigma = I.
Point mvn_start(Eigen::Index p);

}  // namespace riemopt::stats
