#pragma once

// Dense linear-algebra facade. Every factorization used by the rest of the
// library goes through this header so the backend (Eigen) stays swappable.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace riemopt {

/// Column-major dense matrix. Flat points reshape into these by copy only.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ThinQr {
  Matrix q;  // p x d, orthonormal columns
  Matrix r;  // d x d, upper triangular with positive diagonal
};

/// Thin QR of a p x d matrix (p >= d), sign-fixed so diag(R) > 0.
/// Throws SingularMatrixError when a diagonal entry of R falls below
/// 1e-12 * ||A||_F.
ThinQr thin_qr(const Matrix& a);

/// Orthonormal completion: a p x (p - d) matrix Q0 with [Q Q0] orthogonal,
/// taken from the trailing columns of a full Householder QR of `q`.
Matrix orthonormal_completion(const Matrix& q);

struct SymEig {
  Vector values;   // ascending
  Matrix vectors;  // columns are the matching eigenvectors
};

/// Eigendecomposition of sym(A) = (A + A^T) / 2.
SymEig sym_eig(const Matrix& a);

enum class Side { kLeft, kRight };

/// Lower Cholesky factor of sym(A). Throws NotPositiveDefiniteError.
Matrix chol(const Matrix& a);

/// A^{-1} B for symmetric positive definite A.
Matrix solve_spd(const Matrix& a, const Matrix& b);

/// Triangular solve with a lower-triangular L:
/// kLeft returns L^{-1} B, kRight returns B L^{-1}.
Matrix solve_tri(const Matrix& lower, const Matrix& b, Side side = Side::kLeft);

/// log|A| for symmetric positive definite A, computed as 2 sum log L_ii.
double logdet_spd(const Matrix& a);

/// Inverse of a symmetric positive definite matrix (symmetrized output).
Matrix inverse_spd(const Matrix& a);

/// Symmetric square root and inverse square root via sym_eig.
Matrix sqrt_spd(const Matrix& a);
Matrix inv_sqrt_spd(const Matrix& a);

inline Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Reshape a flat column-major vector into rows x cols (copy).
Matrix as_matrix(const Eigen::Ref<const Vector>& v, Eigen::Index rows,
                 Eigen::Index cols);

/// Flatten a matrix column-major (copy).
Vector as_vector(const Matrix& m);

/// Deterministic stream of uniform and normal deviates.
///
/// Streams are reproducible within one build of the standard library; they
/// do not replicate any other environment's generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Stream for replication `index` of a study seeded with `base_seed`.
  static Rng for_replication(std::uint64_t base_seed, std::uint64_t index) {
    return Rng(base_seed + index);
  }

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }
  long poisson(double mean) { return std::poisson_distribution<long>(mean)(engine_); }

  Vector normal_vector(Eigen::Index n);
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace riemopt
