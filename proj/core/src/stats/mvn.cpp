#include "riemopt/stats/mvn.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace riemopt::stats {

MvnParams mvn_truth(Eigen::Index p) {
  MvnParams t;
  t.mu = Vector::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
  t.sigma = Matrix::Constant(p, p, 0.1) + 2.0 * Matrix::Identity(p, p);
  return t;
}

Matrix mvn_simulate(Eigen::Index n, const MvnParams& truth, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix l = chol(truth.sigma);
  Matrix z = rng.normal_matrix(n, truth.mu.size());
  Matrix y = z * l.transpose();
  y.rowwise() += truth.mu.transpose();
  return y;
}

Manifold mvn_manifold(Eigen::Index p) {
  return Manifold::product({Manifold::sphere(p), Manifold::spd(p)});
}

Point mvn_pack(const MvnParams& params) {
  const Eigen::Index p = params.mu.size();
  Point x(p + p * p);
  x.head(p) = params.mu;
  x.tail(p * p) = as_vector(params.sigma);
  return x;
}

MvnParams mvn_unpack(const Point& x, Eigen::Index p) {
  MvnParams out;
  out.mu = x.head(p);
  out.sigma = sym(as_matrix(x.segment(p, p * p), p, p));
  return out;
}

Point mvn_start(Eigen::Index p) {
  MvnParams start;
  start.mu = Vector::Unit(p, 0);
  start.sigma = Matrix::Identity(p, p);
  return mvn_pack(start);
}

Problem mvn_problem(const Matrix& data) {
  const Eigen::Index n = data.rows();
  const Eigen::Index p = data.cols();
  if (n <= p) throw std::invalid_argument("mvn_problem: need n > p");
  const Vector total = data.colwise().sum().transpose();
  const Matrix cross = data.transpose() * data;
  const double dn = static_cast<double>(n);
  const double constant = 0.5 * dn * static_cast<double>(p) * std::log(2.0 * std::numbers::pi);

  // S = sum_i (y_i - mu)(y_i - mu)^T from the sufficient statistics.
  auto scatter = [total, cross, dn](const Vector& mu) {
    Matrix s = cross - total * mu.transpose() - mu * total.transpose();
    s += dn * mu * mu.transpose();
    return s;
  };

  auto objective = [=](const Point& x) {
    const MvnParams par = mvn_unpack(x, p);
    Matrix l;
    try {
      l = chol(par.sigma);
    } catch (const NotPositiveDefiniteError&) {
      return std::numeric_limits<double>::infinity();
    }
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    const Matrix s = scatter(par.mu);
    const Matrix half = solve_tri(l, s);  // L^{-1} S
    const Matrix inner = solve_tri(l, half.transpose());
    return constant + 0.5 * dn * logdet + 0.5 * inner.trace();
  };

  auto gradient = [=](const Point& x) {
    const MvnParams par = mvn_unpack(x, p);
    const Matrix sinv = inverse_spd(par.sigma);
    const Vector resid_sum = total - dn * par.mu;
    const Matrix s = scatter(par.mu);
    Vector g(p + p * p);
    g.head(p) = -sinv * resid_sum;
    const Matrix gs = 0.5 * dn * sinv - 0.5 * sinv * s * sinv;
    g.tail(p * p) = as_vector(gs);
    return g;
  };

  return Problem(objective, gradient);
}

}  // namespace riemopt::stats
