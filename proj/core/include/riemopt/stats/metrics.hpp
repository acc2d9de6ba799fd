#pragma once

#include "riemopt/numkernel.hpp"

namespace riemopt::stats {

/// ||(I - G_hat G_hat^T) G||_F for semi-orthogonal p x d inputs. Throws
/// riemopt::DomainError when either input is not orthonormal to 1e-8.
double subspace_distance(const Matrix& gamma, const Matrix& gamma_hat);

/// tr((A - B)^T (A - B)).
double cov_distance(const Matrix& a, const Matrix& b);

}  // namespace riemopt::stats
