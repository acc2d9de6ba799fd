#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "riemopt/numkernel.hpp"

namespace riemopt {

/// A location on a manifold, stored as flat ambient coordinates. Matrix
/// variables are stored column-major.
using Point = Vector;

/// A tangent vector in ambient coordinates. The anchor point is passed
/// alongside it to every operation.
using Tangent = Vector;

/// Raised when an operation receives a point that is not on the manifold.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a retraction leaves the manifold (only possible on SPD).
/// Solvers treat it as a rejected step.
class StepInfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ManifoldKind { kEuclidean, kSphere, kStiefel, kGrassmann, kSpd, kProduct };

/// Search space description plus its embedded geometry.
///
/// Retractions: Euclidean x + eta; Sphere normalization; Stiefel and
/// Grassmann the Q factor of a sign-fixed QR; SPD the second-order map
/// X + eta + eta X^{-1} eta / 2. Metrics are the embedded ones except SPD,
/// which uses the affine-invariant metric tr(X^{-1} U X^{-1} V). Vector
/// transport is projection onto the destination tangent space (identity on
/// SPD). Grassmann points are Stiefel representatives; objectives must be
/// invariant under X -> XO.
class Manifold {
 public:
  static Manifold euclidean(Eigen::Index n);
  static Manifold sphere(Eigen::Index p);
  static Manifold stiefel(Eigen::Index p, Eigen::Index d);
  static Manifold grassmann(Eigen::Index p, Eigen::Index d);
  static Manifold spd(Eigen::Index p);
  static Manifold product(std::vector<Manifold> components);

  /// Parses `euclidean:n`, `sphere:p`, `stiefel:p,d`, `grassmann:p,d`,
  /// `spd:p` and `product:(spec;spec;...)`.
  static Manifold parse(std::string_view text);
  std::string to_string() const;

  ManifoldKind kind() const { return kind_; }
  Eigen::Index rows() const { return p_; }
  Eigen::Index cols() const { return d_; }
  const std::vector<Manifold>& components() const { return components_; }
  /// Start of component `i` inside a product point.
  Eigen::Index offset(std::size_t i) const { return offsets_.at(i); }

  Eigen::Index ambient_len() const { return ambient_len_; }
  Eigen::Index intrinsic_dim() const;

  Point random_point(Rng& rng) const;

  bool is_point(const Point& x, double tol = 1e-10) const;
  bool is_tangent(const Point& x, const Tangent& v, double tol = 1e-8) const;

  Tangent proj_tangent(const Point& x, const Vector& v) const;

  /// Projects every column of `columns` (ambient_len rows) in place.
  void proj_columns(const Point& x, Eigen::Ref<Matrix> columns) const;

  Point retract(const Point& x, const Tangent& eta) const;

  double inner(const Point& x, const Tangent& u, const Tangent& v) const;
  double norm(const Point& x, const Tangent& u) const;

  /// Ambient vector w with inner(x, v, u) == w.dot(u) for tangent u.
  Vector dual(const Point& x, const Tangent& v) const;

  /// Inverse of dual: the tangent v with inner(x, v, u) == w.dot(u) for
  /// tangent u.
  Tangent sharp(const Point& x, const Vector& w) const;

  Tangent transport(const Point& x, const Tangent& eta, const Point& y,
                    const Tangent& v) const;

  Tangent egrad2rgrad(const Point& x, const Vector& egrad) const;
  Tangent ehess2rhess(const Point& x, const Vector& egrad,
                      const Vector& ehess_eta, const Tangent& eta) const;

  bool operator==(const Manifold& other) const;

 private:
  Manifold(ManifoldKind kind, Eigen::Index p, Eigen::Index d);

  void require_point(const Point& x) const;

  ManifoldKind kind_;
  Eigen::Index p_ = 0;
  Eigen::Index d_ = 0;
  Eigen::Index ambient_len_ = 0;
  std::vector<Manifold> components_;
  std::vector<Eigen::Index> offsets_;
};

}  // namespace riemopt
