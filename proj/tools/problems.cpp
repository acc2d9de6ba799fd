#include "problems.hpp"

#include <stdexcept>

#include "riemopt/numkernel.hpp"
#include "riemopt/stats/brockett.hpp"
#include "riemopt/stats/envglm.hpp"
#include "riemopt/stats/made.hpp"
#include "riemopt/stats/mvn.hpp"
#include "riemopt/stats/pfc.hpp"

namespace riemopt::cli {
namespace {

using namespace riemopt::stats;

BundledProblem brockett(std::uint64_t seed) {
  const BrockettInstance inst = brockett_random(150, 5, seed);
  return {"brockett", brockett_manifold(inst), brockett_problem(inst),
          brockett_identity_start(150, 5), brockett_oracle(inst).f};
}

BundledProblem mvn(std::uint64_t seed) {
  const Matrix data = mvn_simulate(400, mvn_truth(3), seed);
  return {"mvn", mvn_manifold(3), mvn_problem(data), mvn_start(3), std::nullopt};
}

// x^T A x on the unit sphere; the minimum is the smallest eigenvalue of A.
BundledProblem rayleigh(std::uint64_t seed) {
  const Eigen::Index p = 20;
  Rng rng(seed);
  const Matrix g = rng.normal_matrix(p, p);
  const Matrix a = g + g.transpose();
  Problem problem([a](const Point& x) { return x.dot(a * x); },
                  [a](const Point& x) { return Vector(2.0 * a * x); },
                  [a](const Point&, const Tangent& v) { return Vector(2.0 * a * v); });
  return {"rayleigh", Manifold::sphere(p), problem, Vector::Unit(p, 0),
          sym_eig(a).values(0)};
}

BundledProblem pfc_unstructured(std::uint64_t seed) {
  const PfcData data =
      pfc_simulate(300, 10, seed, PfcStructure::kUnstructured).data;
  const Eigen::Index p = data.p();
  const Eigen::Index d = data.d;
  Point x0(p * d + p * p);
  x0.head(p * d) = as_vector(leading_eigenvectors(data.sigma, d));
  x0.tail(p * p) = as_vector(data.sigma);
  return {"pfc-unstructured", pfc_unstructured_manifold(p, d),
          pfc_unstructured_problem(data), x0,
          pfc_unstructured_classical(data).objective};
}

BundledProblem pfc_envelope(std::uint64_t seed) {
  const PfcData data = pfc_simulate(300, 10, seed, PfcStructure::kEnvelope).data;
  const Eigen::Index p = data.p();
  const Eigen::Index d = data.d;
  const Eigen::Index q = p - d;
  const Matrix g = leading_eigenvectors(data.sigma_fit, d);
  const Matrix g0 = envelope_completion(g);
  Point x0(p * d + d * d + q * q);
  x0.head(p * d) = as_vector(g);
  x0.segment(p * d, d * d) = as_vector(sym(g.transpose() * data.sigma_res * g));
  x0.tail(q * q) = as_vector(sym(g0.transpose() * data.sigma * g0));
  return {"pfc-envelope", pfc_envelope_manifold(p, d),
          pfc_envelope_problem(data, EnvelopeTraceForm::kStandard, g0), x0,
          std::nullopt};
}

BundledProblem envelope_glm(std::uint64_t seed) {
  const EnvGlmData data = envglm_simulate(150, seed);
  const Eigen::Index p = data.p();
  const Eigen::Index u = data.u;
  Matrix gamma = Matrix::Zero(p, u);
  gamma(0, 0) = 1.0;
  const GlmFit glm = glm_logistic_fit(data.y, data.x * gamma);
  Point x0(p * u + u + 1);
  x0.head(p * u) = as_vector(gamma);
  x0(p * u) = glm.alpha;
  x0.tail(u) = glm.beta;
  return {"envelope-glm", envglm_joint_manifold(p, u), envglm_joint_problem(data),
          x0, std::nullopt};
}

// Deviance in B with the local fits and weights frozen at the GLM start.
BundledProblem made(std::uint64_t seed) {
  Vector beta(3);
  beta << 1.0, 0.5, -0.5;
  const MadeData data = made_simulate(147, beta, seed);
  const GlmFit glm = glm_fit(data.y, data.x, data.family);
  const Matrix b0 = glm.beta.normalized();
  const Matrix weights = kernel_weights(data.x, default_bandwidth(data.x.rows(), 1));
  const LocalFits local = made_local_fits(data, weights, b0, std::nullopt);
  return {"made", Manifold::stiefel(3, 1), made_problem(data, weights, local),
          as_vector(b0), std::nullopt};
}

}  // namespace

const std::vector<ProblemInfo>& problem_catalog() {
  static const std::vector<ProblemInfo> catalog = {
      {"brockett", "tr(X^T B X D) on stiefel:150,5, x0 = identity columns"},
      {"mvn", "normal likelihood, mean on sphere:3, covariance on spd:3, n = 400"},
      {"rayleigh", "x^T A x on sphere:20"},
      {"pfc-unstructured", "PFC likelihood on grassmann:10,2 x spd:10, n = 300"},
      {"pfc-envelope", "envelope PFC on grassmann:10,2 x spd:2 x spd:8, n = 300"},
      {"envelope-glm", "envelope logistic model on grassmann:2,1 x euclidean:2"},
      {"made", "MADE local deviance in B on stiefel:3,1, n = 147"},
  };
  return catalog;
}

bool is_problem(const std::string& name) {
  for (const ProblemInfo& info : problem_catalog()) {
    if (info.name == name) return true;
  }
  return false;
}

BundledProblem make_problem(const std::string& name, std::uint64_t seed,
                            bool corrupt_gradient) {
  BundledProblem out = [&] {
    if (name == "brockett") return brockett(seed);
    if (name == "mvn") return mvn(seed);
    if (name == "rayleigh") return rayleigh(seed);
    if (name == "pfc-unstructured") return pfc_unstructured(seed);
    if (name == "pfc-envelope") return pfc_envelope(seed);
    if (name == "envelope-glm") return envelope_glm(seed);
    if (name == "made") return made(seed);
    throw std::invalid_argument("unknown problem '" + name + "'");
  }();
  if (corrupt_gradient) {
    const Problem inner = out.problem;
    out.problem = Problem([inner](const Point& x) { return inner.objective(x); },
                          [inner](const Point& x) { return Vector(1.5 * inner.egrad(x)); },
                          [inner](const Point& x, const Tangent& v) { return inner.ehess(x, v); });
  }
  return out;
}

}  // namespace riemopt::cli
