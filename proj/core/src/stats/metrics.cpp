#include "riemopt/stats/metrics.hpp"

#include "riemopt/manifold.hpp"

namespace riemopt::stats {
namespace {

void require_orthonormal(const Matrix& g, const char* name) {
  const Matrix gram = g.transpose() * g;
  if ((gram - Matrix::Identity(g.cols(), g.cols())).norm() > 1e-8) {
    throw DomainError(std::string("subspace_distance: ") + name +
                      " is not semi-orthogonal");
  }
}

}  // namespace

double subspace_distance(const Matrix& gamma, const Matrix& gamma_hat) {
  if (gamma.rows() != gamma_hat.rows()) {
    throw DomainError("subspace_distance: row counts differ");
  }
  require_orthonormal(gamma, "gamma");
  require_orthonormal(gamma_hat, "gamma_hat");
  const Matrix resid = gamma - gamma_hat * (gamma_hat.transpose() * gamma);
  return resid.norm();
}

double cov_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("cov_distance: shape mismatch");
  }
  return (a - b).squaredNorm();
}

}  // namespace riemopt::stats
