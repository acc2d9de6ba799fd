#include "riemopt/numkernel.hpp"

#include <cmath>

namespace riemopt {
namespace {

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    throw NonFiniteInputError(std::string(what) + ": non-finite input");
  }
}

}  // namespace

ThinQr thin_qr(const Matrix& a) {
  require_finite(a, "thin_qr");
  const Eigen::Index p = a.rows();
  const Eigen::Index d = a.cols();
  if (p < d) {
    throw std::invalid_argument("thin_qr: matrix has more columns than rows");
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  Matrix q = qr.householderQ() * Matrix::Identity(p, d);

  const double scale = a.norm();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (std::abs(r(j, j)) <= 1e-12 * scale || scale == 0.0) {
      throw SingularMatrixError("thin_qr: matrix is rank deficient");
    }
    if (r(j, j) < 0.0) {
      r.row(j) *= -1.0;
      q.col(j) *= -1.0;
    }
  }
  return {std::move(q), std::move(r)};
}

Matrix orthonormal_completion(const Matrix& q) {
  const Eigen::Index p = q.rows();
  const Eigen::Index d = q.cols();
  Eigen::HouseholderQR<Matrix> qr(q);
  Matrix full = qr.householderQ();
  return full.rightCols(p - d);
}

SymEig sym_eig(const Matrix& a) {
  require_finite(a, "sym_eig");
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(a));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("sym_eig: eigensolver did not converge");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

Matrix chol(const Matrix& a) {
  require_finite(a, "chol");
  Eigen::LLT<Matrix> llt(sym(a));
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("chol: matrix is not positive definite");
  }
  Matrix l = llt.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) {
      throw NotPositiveDefiniteError("chol: non-positive pivot");
    }
  }
  return l;
}

Matrix solve_spd(const Matrix& a, const Matrix& b) {
  const Matrix l = chol(a);
  Matrix y = l.triangularView<Eigen::Lower>().solve(b);
  return l.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix solve_tri(const Matrix& lower, const Matrix& b, Side side) {
  if (side == Side::kLeft) {
    return lower.triangularView<Eigen::Lower>().solve(b);
  }
  // B L^{-1} = (L^{-T} B^T)^T
  Matrix bt = b.transpose();
  Matrix xt = lower.transpose().triangularView<Eigen::Upper>().solve(bt);
  return xt.transpose();
}

double logdet_spd(const Matrix& a) {
  const Matrix l = chol(a);
  return 2.0 * l.diagonal().array().log().sum();
}

Matrix inverse_spd(const Matrix& a) {
  return sym(solve_spd(a, Matrix::Identity(a.rows(), a.cols())));
}

Matrix sqrt_spd(const Matrix& a) {
  const SymEig e = sym_eig(a);
  if (e.values.minCoeff() < 0.0) {
    throw NotPositiveDefiniteError("sqrt_spd: negative eigenvalue");
  }
  return e.vectors * e.values.array().sqrt().matrix().asDiagonal() *
         e.vectors.transpose();
}

Matrix inv_sqrt_spd(const Matrix& a) {
  const SymEig e = sym_eig(a);
  if (e.values.minCoeff() <= 0.0) {
    throw NotPositiveDefiniteError("inv_sqrt_spd: non-positive eigenvalue");
  }
  return e.vectors * e.values.array().rsqrt().matrix().asDiagonal() *
         e.vectors.transpose();
}

Matrix as_matrix(const Eigen::Ref<const Vector>& v, Eigen::Index rows,
                 Eigen::Index cols) {
  if (v.size() != rows * cols) {
    throw std::invalid_argument("as_matrix: size mismatch");
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Vector as_vector(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Vector Rng::normal_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Matrix Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  // column-major fill order
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
  }
  return m;
}

}  // namespace riemopt
