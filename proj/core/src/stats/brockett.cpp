#include "riemopt/stats/brockett.hpp"

#include <stdexcept>

namespace riemopt::stats {

BrockettInstance brockett_random(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  if (p < 1 || p > n) throw std::invalid_argument("brockett: need 1 <= p <= n");
  Rng rng(seed);
  const Matrix g = rng.normal_matrix(n, n);
  BrockettInstance inst;
  inst.b = g + g.transpose();
  inst.mu.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) inst.mu(i) = static_cast<double>(p - i);
  return inst;
}

void validate(const BrockettInstance& inst) {
  const Matrix& b = inst.b;
  if (b.rows() != b.cols()) throw std::invalid_argument("brockett: B must be square");
  if (inst.mu.size() < 1 || inst.mu.size() > b.rows()) {
    throw std::invalid_argument("brockett: need 1 <= p <= n");
  }
  if ((b - b.transpose()).norm() > 1e-10 * std::max(1.0, b.norm())) {
    throw std::invalid_argument("brockett: B must be symmetric");
  }
  for (Eigen::Index i = 0; i < inst.mu.size(); ++i) {
    if (inst.mu(i) < 0.0 || (i > 0 && inst.mu(i) > inst.mu(i - 1))) {
      throw std::invalid_argument(
          "brockett: D must be non-increasing and non-negative");
    }
  }
}

Manifold brockett_manifold(const BrockettInstance& inst) {
  return Manifold::stiefel(inst.b.rows(), inst.mu.size());
}

Problem brockett_problem(const BrockettInstance& inst) {
  validate(inst);
  const Eigen::Index n = inst.b.rows();
  const Eigen::Index p = inst.mu.size();
  const Matrix b = inst.b;
  const Vector mu = inst.mu;
  auto objective = [b, mu, n, p](const Point& x) {
    const Eigen::Map<const Matrix> xm(x.data(), n, p);
    const Matrix bx = b * xm;
    double f = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) f += mu(j) * xm.col(j).dot(bx.col(j));
    return f;
  };
  auto gradient = [b, mu, n, p](const Point& x) {
    const Eigen::Map<const Matrix> xm(x.data(), n, p);
    Matrix g = 2.0 * (b * xm) * mu.asDiagonal();
    return as_vector(g);
  };
  auto hessian = [b, mu, n, p](const Point&, const Tangent& eta) {
    const Eigen::Map<const Matrix> em(eta.data(), n, p);
    Matrix h = 2.0 * (b * em) * mu.asDiagonal();
    return as_vector(h);
  };
  return Problem(objective, gradient, hessian);
}

Point brockett_identity_start(Eigen::Index n, Eigen::Index p) {
  return as_vector(Matrix::Identity(n, p));
}

BrockettOptimum brockett_oracle(const BrockettInstance& inst) {
  validate(inst);
  const Eigen::Index n = inst.b.rows();
  const Eigen::Index p = inst.mu.size();
  const SymEig eig = sym_eig(inst.b);
  Matrix x(n, p);
  BrockettOptimum out;
  for (Eigen::Index j = 0; j < p; ++j) {
    x.col(j) = eig.vectors.col(j);
    out.f += inst.mu(j) * eig.values(j);
  }
  out.x = as_vector(x);
  return out;
}

}  // namespace riemopt::stats
