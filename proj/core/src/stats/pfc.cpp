#include "riemopt/stats/pfc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace riemopt::stats {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix centered(const Matrix& m) {
  Matrix c = m;
  c.rowwise() -= m.colwise().mean();
  return c;
}

Point pack(std::initializer_list<const Matrix*> blocks) {
  Eigen::Index len = 0;
  for (const Matrix* b : blocks) len += b->size();
  Point x(len);
  Eigen::Index at = 0;
  for (const Matrix* b : blocks) {
    x.segment(at, b->size()) = Eigen::Map<const Vector>(b->data(), b->size());
    at += b->size();
  }
  return x;
}

struct UnstructuredTerms {
  double value;
  Matrix grad_gamma;
  Matrix grad_delta;
};

// Negative log-likelihood and, when wanted, its Euclidean gradient.
std::optional<UnstructuredTerms> unstructured_terms(const PfcData& data,
                                                    const Matrix& gamma,
                                                    const Matrix& delta_raw,
                                                    bool want_gradient) {
  const Matrix delta = sym(delta_raw);
  Matrix l;
  try {
    l = chol(delta);
  } catch (const NotPositiveDefiniteError&) {
    return std::nullopt;
  }
  const Eigen::LLT<Matrix> llt(delta);
  const Matrix dinv = llt.solve(Matrix::Identity(delta.rows(), delta.cols()));
  const Matrix a = dinv * gamma;            // D^{-1} G
  const Matrix m = gamma.transpose() * a;   // G^T D^{-1} G
  Eigen::LLT<Matrix> mllt(sym(m));
  if (mllt.info() != Eigen::Success) return std::nullopt;
  const Matrix minv = mllt.solve(Matrix::Identity(m.rows(), m.cols()));
  const Matrix amin = a * minv;             // A M^{-1}
  const Matrix sf_amin = data.sigma_fit * amin;
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  const double tr_s = (data.sigma.cwiseProduct(dinv)).sum();
  const double tr_fit = (a.cwiseProduct(sf_amin)).sum();  // tr(A^T S_f A M^{-1})
  const double half_n = 0.5 * static_cast<double>(data.n());

  UnstructuredTerms out;
  out.value = half_n * (logdet + tr_s - tr_fit);
  if (!std::isfinite(out.value)) return std::nullopt;
  if (!want_gradient) return out;

  const Matrix c = amin.transpose() * sf_amin;  // M^{-1} A^T S_f A M^{-1}
  const Matrix dinv_sf_amin = dinv * sf_amin;
  const Matrix dh_dgamma = 2.0 * dinv_sf_amin - 2.0 * a * c;
  const Matrix dh_ddelta =
      sym(-2.0 * dinv_sf_amin * a.transpose() + a * c * a.transpose());
  out.grad_gamma = -half_n * dh_dgamma;
  out.grad_delta = half_n * (dinv - dinv * data.sigma * dinv - dh_ddelta);
  return out;
}

}  // namespace

PfcData pfc_data(const Matrix& x, const Matrix& f, Eigen::Index d) {
  if (x.rows() != f.rows()) throw std::invalid_argument("pfc_data: row mismatch");
  if (d < 1 || d >= x.cols()) throw std::invalid_argument("pfc_data: need 1 <= d < p");
  PfcData data;
  data.x = centered(x);
  data.f = centered(f);
  data.d = d;
  const double n = static_cast<double>(x.rows());
  data.sigma = sym(data.x.transpose() * data.x / n);
  // Xhat = F (F^T F)^{-1} F^T X.
  const Matrix ftf = data.f.transpose() * data.f;
  const Matrix coef = ftf.ldlt().solve(data.f.transpose() * data.x);
  const Matrix xhat = data.f * coef;
  data.sigma_fit = sym(xhat.transpose() * xhat / n);
  data.sigma_res = sym(data.sigma - data.sigma_fit);
  return data;
}

Matrix leading_eigenvectors(const Matrix& a, Eigen::Index d) {
  const SymEig eig = sym_eig(a);
  const Eigen::Index p = a.rows();
  Matrix v(p, d);
  for (Eigen::Index j = 0; j < d; ++j) v.col(j) = eig.vectors.col(p - 1 - j);
  return v;
}

PfcSample pfc_simulate(Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                       PfcStructure structure,
                       const std::optional<Matrix>& delta_override) {
  constexpr Eigen::Index d = 2;
  if (p < 3) throw std::invalid_argument("pfc_simulate: need p >= 3");
  Rng rng(seed);
  PfcSample sample;
  PfcTruth& truth = sample.truth;

  const Vector y = 3.0 * rng.normal_vector(n);
  Matrix f(n, 2);
  f.col(0) = y;
  f.col(1) = y.cwiseAbs();
  f = centered(f);

  const Matrix u = rng.normal_matrix(p, p);
  const Matrix delta_u = u.transpose() * u;
  if (structure == PfcStructure::kUnstructured) {
    const Matrix v = rng.normal_matrix(p, p);
    truth.gamma = leading_eigenvectors(v * v.transpose(), d);
    truth.delta = delta_u;
  } else {
    const SymEig eig = sym_eig(delta_u);
    truth.gamma.resize(p, d);
    truth.gamma0.resize(p, p - d);
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto col = eig.vectors.col(p - 1 - j);
      if (j < d) {
        truth.gamma.col(j) = col;
      } else {
        truth.gamma0.col(j - d) = col;
      }
    }
    const Matrix a = rng.normal_matrix(d, d);
    const Matrix a0 = rng.normal_matrix(p - d, p - d);
    truth.omega = a * a.transpose() + 0.1 * Matrix::Identity(d, d);
    truth.omega0 = a0 * a0.transpose() + 0.1 * Matrix::Identity(p - d, p - d);
    truth.delta = truth.gamma * truth.omega * truth.gamma.transpose() +
                  truth.gamma0 * truth.omega0 * truth.gamma0.transpose();
  }
  if (delta_override) truth.delta = *delta_override;
  truth.delta = sym(truth.delta);

  const Matrix l = chol(truth.delta);
  const Matrix e = rng.normal_matrix(n, p) * l.transpose();
  const Matrix x = f * truth.gamma.transpose() + e;
  sample.data = pfc_data(x, f, d);
  return sample;
}

Manifold pfc_unstructured_manifold(Eigen::Index p, Eigen::Index d) {
  return Manifold::product({Manifold::grassmann(p, d), Manifold::spd(p)});
}

Problem pfc_unstructured_problem(const PfcData& data, bool analytic_gradient) {
  const Eigen::Index p = data.p();
  const Eigen::Index d = data.d;
  auto split = [p, d](const Point& x) {
    return std::pair<Matrix, Matrix>{as_matrix(x.head(p * d), p, d),
                                     as_matrix(x.segment(p * d, p * p), p, p)};
  };
  auto objective = [data, split](const Point& x) {
    const auto [g, dl] = split(x);
    const auto t = unstructured_terms(data, g, dl, false);
    return t ? t->value : kInf;
  };
  if (!analytic_gradient) return Problem(objective);
  auto gradient = [data, split, p, d](const Point& x) {
    const auto [g, dl] = split(x);
    const auto t = unstructured_terms(data, g, dl, true);
    if (!t) throw DomainError("pfc gradient requested at an infeasible point");
    Vector out(p * d + p * p);
    out.head(p * d) = as_vector(t->grad_gamma);
    out.tail(p * p) = as_vector(t->grad_delta);
    return out;
  };
  return Problem(objective, gradient);
}

Manifold pfc_envelope_manifold(Eigen::Index p, Eigen::Index d) {
  return Manifold::product(
      {Manifold::grassmann(p, d), Manifold::spd(d), Manifold::spd(p - d)});
}

double pfc_envelope_objective(const PfcData& data, const Matrix& gamma,
                              const Matrix& gamma0, const Matrix& omega,
                              const Matrix& omega0, EnvelopeTraceForm form) {
  Matrix lw;
  Matrix lw0;
  try {
    lw = chol(omega);
    lw0 = chol(omega0);
  } catch (const NotPositiveDefiniteError&) {
    return kInf;
  }
  const double half_n = 0.5 * static_cast<double>(data.n());
  const double logdets = 2.0 * (lw.diagonal().array().log().sum() +
                                lw0.diagonal().array().log().sum());
  const Matrix m = gamma.transpose() * data.sigma_res * gamma;
  const Matrix m0 = gamma0.transpose() * data.sigma * gamma0;
  const Eigen::LLT<Matrix> llt(sym(omega));
  const Eigen::LLT<Matrix> llt0(sym(omega0));
  const double t1 = llt.solve(m).trace();
  const double t0 = llt0.solve(m0).trace();
  double v = 0.0;
  if (form == EnvelopeTraceForm::kStandard) {
    v = half_n * (logdets + t1 + t0);
  } else {
    v = half_n * logdets + t1 - t0;
  }
  return std::isfinite(v) ? v : kInf;
}

Matrix envelope_completion(const Matrix& gamma, const std::optional<Matrix>& reference) {
  if (!reference) return orthonormal_completion(thin_qr(gamma).q);
  const Matrix r = *reference - gamma * (gamma.transpose() * *reference);
  return r * inv_sqrt_spd(sym(r.transpose() * r));
}

Problem pfc_envelope_problem(const PfcData& data, EnvelopeTraceForm form,
                             const std::optional<Matrix>& reference) {
  const Eigen::Index p = data.p();
  const Eigen::Index d = data.d;
  const Eigen::Index q = p - d;
  auto objective = [data, form, reference, p, d, q](const Point& x) {
    const Matrix g = as_matrix(x.head(p * d), p, d);
    const Matrix w = as_matrix(x.segment(p * d, d * d), d, d);
    const Matrix w0 = as_matrix(x.segment(p * d + d * d, q * q), q, q);
    Matrix g0;
    try {
      g0 = envelope_completion(g, reference);
    } catch (const SingularMatrixError&) {
      return kInf;
    } catch (const NotPositiveDefiniteError&) {
      return kInf;
    }
    return pfc_envelope_objective(data, g, g0, w, w0, form);
  };
  return Problem(objective);
}

PfcFit pfc_unstructured_classical(const PfcData& data) {
  const Eigen::Index p = data.p();
  const Eigen::Index d = data.d;
  const Matrix root = sqrt_spd(data.sigma_res);
  const Matrix inv_root = inv_sqrt_spd(data.sigma_res);
  const SymEig eig = sym_eig(inv_root * data.sigma_fit * inv_root);
  // Descending order.
  Matrix v(p, p);
  Vector lambda(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    v.col(j) = eig.vectors.col(p - 1 - j);
    lambda(j) = eig.values(p - 1 - j);
  }
  Vector k = Vector::Zero(p);
  for (Eigen::Index j = d; j < p; ++j) k(j) = std::max(lambda(j), 0.0);

  PfcFit fit;
  fit.delta = sym(root * (Matrix::Identity(p, p) + v * k.asDiagonal() * v.transpose()) * root);
  fit.gamma = thin_qr(fit.delta * inv_root * v.leftCols(d)).q;
  const auto t = unstructured_terms(data, fit.gamma, fit.delta, false);
  fit.objective = t ? t->value : kInf;
  return fit;
}

PfcFit pfc_unstructured_manifold_fit(const PfcData& data, const SolverConfig& config) {
  const Eigen::Index p = data.p();
  const Eigen::Index d = data.d;
  const Matrix g0 = leading_eigenvectors(data.sigma, d);
  const Matrix d0 = data.sigma;
  const Problem problem = pfc_unstructured_problem(data);
  const Manifold manifold = pfc_unstructured_manifold(p, d);
  const OptimResult res = solve(problem, manifold, config, pack({&g0, &d0}));
  PfcFit fit;
  fit.gamma = as_matrix(res.xopt.head(p * d), p, d);
  fit.delta = sym(as_matrix(res.xopt.segment(p * d, p * p), p, p));
  fit.objective = res.fval;
  fit.iterations = res.iter;
  return fit;
}

PfcFit pfc_envelope_classical(const PfcData& data, const SolverConfig& config) {
  const Eigen::Index p = data.p();
  const Eigen::Index d = data.d;
  const Matrix sres = data.sigma_res;
  const Matrix sinv = inverse_spd(data.sigma);
  auto objective = [sres, sinv, p, d](const Point& x) {
    const Matrix g = as_matrix(x, p, d);
    try {
      return logdet_spd(g.transpose() * sres * g) +
             logdet_spd(g.transpose() * sinv * g);
    } catch (const NotPositiveDefiniteError&) {
      return kInf;
    }
  };
  auto gradient = [sres, sinv, p, d](const Point& x) {
    const Matrix g = as_matrix(x, p, d);
    const Matrix a = sres * g;
    const Matrix b = sinv * g;
    const Matrix grad = 2.0 * a * inverse_spd(g.transpose() * a) +
                        2.0 * b * inverse_spd(g.transpose() * b);
    return as_vector(grad);
  };
  const Matrix start = leading_eigenvectors(data.sigma_fit, d);
  const OptimResult res = solve(Problem(objective, gradient),
                                Manifold::grassmann(p, d), config, as_vector(start));

  PfcFit fit;
  fit.gamma = as_matrix(res.xopt, p, d);
  fit.gamma0 = orthonormal_completion(thin_qr(fit.gamma).q);
  fit.omega = sym(fit.gamma.transpose() * sres * fit.gamma);
  fit.omega0 = sym(fit.gamma0.transpose() * data.sigma * fit.gamma0);
  fit.delta = fit.gamma * fit.omega * fit.gamma.transpose() +
              fit.gamma0 * fit.omega0 * fit.gamma0.transpose();
  fit.objective =
      pfc_envelope_objective(data, fit.gamma, fit.gamma0, fit.omega, fit.omega0);
  fit.iterations = res.iter;
  return fit;
}

PfcFit pfc_envelope_manifold_fit(const PfcData& data, const SolverConfig& config) {
  const Eigen::Index p = data.p();
  const Eigen::Index d = data.d;
  const Eigen::Index q = p - d;
  const Matrix g = leading_eigenvectors(data.sigma_fit, d);
  const Matrix g0 = orthonormal_completion(thin_qr(g).q);
  const Matrix w = sym(g.transpose() * data.sigma_res * g);
  const Matrix w0 = sym(g0.transpose() * data.sigma * g0);
  const Point x0 = pack({&g, &w, &w0});

  const OptimResult res =
      solve(pfc_envelope_problem(data, EnvelopeTraceForm::kStandard, g0),
            pfc_envelope_manifold(p, d), config, x0);
  PfcFit fit;
  fit.gamma = as_matrix(res.xopt.head(p * d), p, d);
  fit.gamma0 = envelope_completion(fit.gamma, g0);
  fit.omega = sym(as_matrix(res.xopt.segment(p * d, d * d), d, d));
  fit.omega0 = sym(as_matrix(res.xopt.segment(p * d + d * d, q * q), q, q));
  fit.delta = fit.gamma * fit.omega * fit.gamma.transpose() +
              fit.gamma0 * fit.omega0 * fit.gamma0.transpose();
  fit.objective = res.fval;
  fit.iterations = res.iter;
  return fit;
}

SolverConfig pfc_default_config() {
  SolverConfig c;
  c.method = Method::kLRBFGS;
  c.tolerance = 1e-7;
  c.max_iteration = 3000;
  return c;
}

}  // namespace riemopt::stats
