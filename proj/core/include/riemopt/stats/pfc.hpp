#pragma once

#include <optional>

#include "riemopt/manifold.hpp"
#include "riemopt/problem.hpp"
#include "riemopt/solver.hpp"

namespace riemopt::stats {

/// Centered predictors and basis functions with the PFC moment matrices.
struct PfcData {
  Matrix x;          // n x p, centered
  Matrix f;          // n x r, centered
  Eigen::Index d = 1;
  Matrix sigma;      // X^T X / n
  Matrix sigma_fit;  // Xhat^T Xhat / n with Xhat = P_F X
  Matrix sigma_res;  // sigma - sigma_fit

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
};

/// Centers both matrices and computes the moments.
PfcData pfc_data(const Matrix& x, const Matrix& f, Eigen::Index d);

enum class PfcStructure { kUnstructured, kEnvelope };

struct PfcTruth {
  Matrix gamma;   // p x d
  Matrix delta;   // p x p
  Matrix gamma0;  // p x (p - d), envelope only
  Matrix omega;   // d x d, envelope only
  Matrix omega0;  // (p - d) x (p - d), envelope only
};

struct PfcSample {
  PfcData data;
  PfcTruth truth;
};

/// Simulation design with d = 2: Y ~ N(0, 9), F = centered (Y, |Y|),
/// X = F Gamma^T + E with rows of E ~ N(0, Delta).
///
/// Unstructured: Gamma holds the leading two eigenvectors of V V^T and
/// Delta = U^T U (V, U standard normal). Envelope: Gamma and Gamma0 are the
/// leading two and remaining eigenvectors of U^T U, Omega = A A^T + 0.1 I
/// and Omega0 likewise. `delta_override` replaces Delta in either case.
PfcSample pfc_simulate(Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                       PfcStructure structure,
                       const std::optional<Matrix>& delta_override = std::nullopt);

/// Product(Grassmann(p, d), SPD(p)); points are [vec(Gamma); vec(Delta)].
Manifold pfc_unstructured_manifold(Eigen::Index p, Eigen::Index d);

/// Negative unstructured log-likelihood
///   (n/2) [log|D| + tr(S D^{-1}) - tr(S_fit D^{-1} G (G^T D^{-1} G)^{-1} G^T D^{-1})].
/// Non-SPD Delta or singular G^T D^{-1} G gives +inf.
Problem pfc_unstructured_problem(const PfcData& data, bool analytic_gradient = true);

/// How the trace terms of the envelope likelihood are combined.
enum class EnvelopeTraceForm {
  /// (n/2)[log|W| + log|W0| + tr(G^T S_res G W^{-1}) + tr(G0^T S G0 W0^{-1})].
  kStandard,
  /// (n/2)[log|W| + log|W0|] + tr(G^T S_res G W^{-1}) - tr(G0^T S G0 W0^{-1}).
  /// Unbounded below in W0; kept for comparison only.
  kAsPrinted,
};

/// Product(Grassmann(p, d), SPD(d), SPD(p - d)); points are
/// [vec(Gamma); vec(Omega); vec(Omega0)].
Manifold pfc_envelope_manifold(Eigen::Index p, Eigen::Index d);

/// Orthonormal basis of span(Gamma)^perp. Without a reference this is the
/// Householder completion, which can flip sign as Gamma moves. With a
/// reference R0 it is the polar factor of (I - Gamma Gamma^T) R0, smooth in
/// Gamma while the projection stays full rank.
Matrix envelope_completion(const Matrix& gamma,
                           const std::optional<Matrix>& reference = std::nullopt);

/// Negative envelope log-likelihood with Gamma0 = envelope_completion(Gamma,
/// reference). Gradient by finite differences.
Problem pfc_envelope_problem(const PfcData& data,
                             EnvelopeTraceForm form = EnvelopeTraceForm::kStandard,
                             const std::optional<Matrix>& reference = std::nullopt);

/// Negative envelope log-likelihood at an explicit completion Gamma0.
double pfc_envelope_objective(const PfcData& data, const Matrix& gamma,
                              const Matrix& gamma0, const Matrix& omega,
                              const Matrix& omega0,
                              EnvelopeTraceForm form = EnvelopeTraceForm::kStandard);

struct PfcFit {
  Matrix gamma;
  Matrix delta;   // full covariance estimate (both structures)
  Matrix gamma0;  // envelope only
  Matrix omega;   // envelope only
  Matrix omega0;  // envelope only
  double objective = 0.0;  // negative log-likelihood at the estimate
  int iterations = 0;
};

/// Leading d eigenvectors of a symmetric matrix.
Matrix leading_eigenvectors(const Matrix& a, Eigen::Index d);

/// Closed-form unstructured MLE: Delta = S_res^{1/2}(I + V K V^T)S_res^{1/2},
/// span(Gamma) = span(Delta S_res^{-1/2} V_d), where V holds the eigenvectors
/// of S_res^{-1/2} S_fit S_res^{-1/2} and K keeps eigenvalues d+1.. only.
PfcFit pfc_unstructured_classical(const PfcData& data);

/// Joint LRBFGS over the product manifold from Gamma = leading eigenvectors
/// of S and Delta = S.
PfcFit pfc_unstructured_manifold_fit(const PfcData& data, const SolverConfig& config);

/// Grassmann LRBFGS on log|G^T S_res G| + log|G^T S^{-1} G| followed by the
/// closed forms Omega = G^T S_res G, Omega0 = G0^T S G0.
PfcFit pfc_envelope_classical(const PfcData& data, const SolverConfig& config);

/// Joint LRBFGS over Grassmann x SPD x SPD starting from the leading
/// eigenvectors of S_fit and the matching moment blocks of S_res and S.
PfcFit pfc_envelope_manifold_fit(const PfcData& data, const SolverConfig& config);

/// Solver settings used by the PFC harness.
SolverConfig pfc_default_config();

}  // namespace riemopt::stats
