#include "riemopt/manifold.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace riemopt {
namespace {

using ConstMap = Eigen::Map<const Matrix>;

Matrix spd_solve(const Eigen::LLT<Matrix>& llt, const Matrix& b) {
  return llt.solve(b);
}

Eigen::LLT<Matrix> spd_factor(const Matrix& x) {
  Eigen::LLT<Matrix> llt(sym(x));
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("SPD point is not positive definite");
  }
  return llt;
}

class SpecParser {
 public:
  explicit SpecParser(std::string_view text) : text_(text) {}

  Manifold parse_all() {
    Manifold m = parse_one();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return m;
  }

 private:
  Manifold parse_one() {
    skip_ws();
    const std::string name = parse_name();
    expect(':');
    if (name == "product") {
      expect('(');
      std::vector<Manifold> parts;
      parts.push_back(parse_one());
      skip_ws();
      while (peek() == ';') {
        ++pos_;
        parts.push_back(parse_one());
        skip_ws();
      }
      expect(')');
      return Manifold::product(std::move(parts));
    }
    const Eigen::Index a = parse_int();
    if (name == "euclidean") return Manifold::euclidean(a);
    if (name == "sphere") return Manifold::sphere(a);
    if (name == "spd") return Manifold::spd(a);
    if (name == "stiefel" || name == "grassmann") {
      expect(',');
      const Eigen::Index b = parse_int();
      return name == "stiefel" ? Manifold::stiefel(a, b)
                               : Manifold::grassmann(a, b);
    }
    fail("unknown manifold '" + name + "'");
  }

  std::string parse_name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) fail("expected a manifold name");
    std::string name(text_.substr(start, pos_ - start));
    for (char& c : name) c = static_cast<char>(std::tolower(c));
    return name;
  }

  Eigen::Index parse_int() {
    skip_ws();
    long long value = 0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) fail("expected an integer");
    pos_ += static_cast<std::size_t>(ptr - first);
    return static_cast<Eigen::Index>(value);
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument("manifold spec '" + std::string(text_) +
                                "' at offset " + std::to_string(pos_) + ": " +
                                why);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Manifold::Manifold(ManifoldKind kind, Eigen::Index p, Eigen::Index d)
    : kind_(kind), p_(p), d_(d) {}

Manifold Manifold::euclidean(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("euclidean: n must be >= 1");
  Manifold m(ManifoldKind::kEuclidean, n, 1);
  m.ambient_len_ = n;
  return m;
}

Manifold Manifold::sphere(Eigen::Index p) {
  if (p < 1) throw std::invalid_argument("sphere: p must be >= 1");
  Manifold m(ManifoldKind::kSphere, p, 1);
  m.ambient_len_ = p;
  return m;
}

Manifold Manifold::stiefel(Eigen::Index p, Eigen::Index d) {
  if (d < 1 || d > p) throw std::invalid_argument("stiefel: need 1 <= d <= p");
  Manifold m(ManifoldKind::kStiefel, p, d);
  m.ambient_len_ = p * d;
  return m;
}

Manifold Manifold::grassmann(Eigen::Index p, Eigen::Index d) {
  if (d < 1 || d > p) {
    throw std::invalid_argument("grassmann: need 1 <= d <= p");
  }
  Manifold m(ManifoldKind::kGrassmann, p, d);
  m.ambient_len_ = p * d;
  return m;
}

Manifold Manifold::spd(Eigen::Index p) {
  if (p < 1) throw std::invalid_argument("spd: p must be >= 1");
  Manifold m(ManifoldKind::kSpd, p, p);
  m.ambient_len_ = p * p;
  return m;
}

Manifold Manifold::product(std::vector<Manifold> components) {
  if (components.empty()) {
    throw std::invalid_argument("product: needs at least one component");
  }
  Manifold m(ManifoldKind::kProduct, 0, 0);
  Eigen::Index offset = 0;
  for (const Manifold& c : components) {
    m.offsets_.push_back(offset);
    offset += c.ambient_len();
  }
  m.ambient_len_ = offset;
  m.components_ = std::move(components);
  return m;
}

Manifold Manifold::parse(std::string_view text) {
  return SpecParser(text).parse_all();
}

std::string Manifold::to_string() const {
  std::ostringstream os;
  switch (kind_) {
    case ManifoldKind::kEuclidean: os << "euclidean:" << p_; break;
    case ManifoldKind::kSphere: os << "sphere:" << p_; break;
    case ManifoldKind::kStiefel: os << "stiefel:" << p_ << ',' << d_; break;
    case ManifoldKind::kGrassmann: os << "grassmann:" << p_ << ',' << d_; break;
    case ManifoldKind::kSpd: os << "spd:" << p_; break;
    case ManifoldKind::kProduct:
      os << "product:(";
      for (std::size_t i = 0; i < components_.size(); ++i) {
        if (i) os << ';';
        os << components_[i].to_string();
      }
      os << ')';
      break;
  }
  return os.str();
}

bool Manifold::operator==(const Manifold& other) const {
  return to_string() == other.to_string();
}

Eigen::Index Manifold::intrinsic_dim() const {
  switch (kind_) {
    case ManifoldKind::kEuclidean: return p_;
    case ManifoldKind::kSphere: return p_ - 1;
    case ManifoldKind::kStiefel: return p_ * d_ - d_ * (d_ + 1) / 2;
    case ManifoldKind::kGrassmann: return d_ * (p_ - d_);
    case ManifoldKind::kSpd: return p_ * (p_ + 1) / 2;
    case ManifoldKind::kProduct: {
      Eigen::Index total = 0;
      for (const Manifold& c : components_) total += c.intrinsic_dim();
      return total;
    }
  }
  return 0;
}

Point Manifold::random_point(Rng& rng) const {
  switch (kind_) {
    case ManifoldKind::kEuclidean: return rng.normal_vector(p_);
    case ManifoldKind::kSphere: {
      Vector v = rng.normal_vector(p_);
      return v / v.norm();
    }
    case ManifoldKind::kStiefel:
    case ManifoldKind::kGrassmann:
      return as_vector(thin_qr(rng.normal_matrix(p_, d_)).q);
    case ManifoldKind::kSpd: {
      const Matrix a = rng.normal_matrix(p_, p_);
      return as_vector(sym(a * a.transpose()) + 0.1 * Matrix::Identity(p_, p_));
    }
    case ManifoldKind::kProduct: {
      Point x(ambient_len_);
      for (std::size_t i = 0; i < components_.size(); ++i) {
        x.segment(offsets_[i], components_[i].ambient_len()) =
            components_[i].random_point(rng);
      }
      return x;
    }
  }
  return {};
}

bool Manifold::is_point(const Point& x, double tol) const {
  if (x.size() != ambient_len_ || !x.allFinite()) return false;
  switch (kind_) {
    case ManifoldKind::kEuclidean: return true;
    case ManifoldKind::kSphere: return std::abs(x.norm() - 1.0) <= tol;
    case ManifoldKind::kStiefel:
    case ManifoldKind::kGrassmann: {
      ConstMap xm(x.data(), p_, d_);
      return (xm.transpose() * xm - Matrix::Identity(d_, d_)).norm() <= tol;
    }
    case ManifoldKind::kSpd: {
      ConstMap xm(x.data(), p_, p_);
      if ((xm - xm.transpose()).norm() > tol * std::max(1.0, xm.norm())) {
        return false;
      }
      Eigen::SelfAdjointEigenSolver<Matrix> es(sym(xm), Eigen::EigenvaluesOnly);
      return es.info() == Eigen::Success && es.eigenvalues()(0) > 0.0;
    }
    case ManifoldKind::kProduct:
      for (std::size_t i = 0; i < components_.size(); ++i) {
        const Manifold& c = components_[i];
        if (!c.is_point(x.segment(offsets_[i], c.ambient_len()), tol)) {
          return false;
        }
      }
      return true;
  }
  return false;
}

bool Manifold::is_tangent(const Point& x, const Tangent& v, double tol) const {
  if (v.size() != ambient_len_) return false;
  const double scale = std::max(1.0, v.norm());
  switch (kind_) {
    case ManifoldKind::kEuclidean: return true;
    case ManifoldKind::kSphere: return std::abs(x.dot(v)) <= tol * scale;
    case ManifoldKind::kStiefel: {
      ConstMap xm(x.data(), p_, d_), vm(v.data(), p_, d_);
      const Matrix s = xm.transpose() * vm;
      return (s + s.transpose()).norm() <= tol * scale;
    }
    case ManifoldKind::kGrassmann: {
      ConstMap xm(x.data(), p_, d_), vm(v.data(), p_, d_);
      return (xm.transpose() * vm).norm() <= tol * scale;
    }
    case ManifoldKind::kSpd: {
      ConstMap vm(v.data(), p_, p_);
      return (vm - vm.transpose()).norm() <= tol * scale;
    }
    case ManifoldKind::kProduct:
      for (std::size_t i = 0; i < components_.size(); ++i) {
        const Manifold& c = components_[i];
        const Eigen::Index len = c.ambient_len();
        if (!c.is_tangent(x.segment(offsets_[i], len),
                          v.segment(offsets_[i], len), tol)) {
          return false;
        }
      }
      return true;
  }
  return false;
}

void Manifold::require_point(const Point& x) const {
  if (x.size() != ambient_len_) {
    throw DomainError("point has " + std::to_string(x.size()) +
                      " coordinates, manifold " + to_string() + " needs " +
                      std::to_string(ambient_len_));
  }
  constexpr double kTol = 1e-6;
  switch (kind_) {
    case ManifoldKind::kSphere:
      if (std::abs(x.norm() - 1.0) > kTol) {
        throw DomainError("point is not on the sphere");
      }
      break;
    case ManifoldKind::kStiefel:
    case ManifoldKind::kGrassmann: {
      ConstMap xm(x.data(), p_, d_);
      if ((xm.transpose() * xm - Matrix::Identity(d_, d_)).norm() > kTol) {
        throw DomainError("point does not have orthonormal columns");
      }
      break;
    }
    case ManifoldKind::kSpd: {
      ConstMap xm(x.data(), p_, p_);
      if ((xm - xm.transpose()).norm() > kTol * std::max(1.0, xm.norm())) {
        throw DomainError("SPD point is not symmetric");
      }
      break;
    }
    default:
      break;
  }
}

Tangent Manifold::proj_tangent(const Point& x, const Vector& v) const {
  require_point(x);
  if (v.size() != ambient_len_) {
    throw std::invalid_argument("proj_tangent: vector length mismatch");
  }
  switch (kind_) {
    case ManifoldKind::kEuclidean: return v;
    case ManifoldKind::kSphere: return v - x.dot(v) * x;
    case ManifoldKind::kStiefel: {
      ConstMap xm(x.data(), p_, d_), vm(v.data(), p_, d_);
      const Matrix xtv = xm.transpose() * vm;
      return as_vector(vm - xm * sym(xtv));
    }
    case ManifoldKind::kGrassmann: {
      ConstMap xm(x.data(), p_, d_), vm(v.data(), p_, d_);
      return as_vector(vm - xm * (xm.transpose() * vm));
    }
    case ManifoldKind::kSpd: {
      ConstMap vm(v.data(), p_, p_);
      return as_vector(sym(vm));
    }
    case ManifoldKind::kProduct: {
      Tangent out(ambient_len_);
      for (std::size_t i = 0; i < components_.size(); ++i) {
        const Manifold& c = components_[i];
        const Eigen::Index len = c.ambient_len();
        out.segment(offsets_[i], len) = c.proj_tangent(
            x.segment(offsets_[i], len), v.segment(offsets_[i], len));
      }
      return out;
    }
  }
  return v;
}

void Manifold::proj_columns(const Point& x, Eigen::Ref<Matrix> columns) const {
  if (columns.rows() != ambient_len_) {
    throw std::invalid_argument("proj_columns: row count mismatch");
  }
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return;
    case ManifoldKind::kSphere: {
      const Eigen::RowVectorXd xtc = x.transpose() * columns;
      columns.noalias() -= x * xtc;
      return;
    }
    case ManifoldKind::kStiefel:
    case ManifoldKind::kGrassmann: {
      ConstMap xm(x.data(), p_, d_);
      Matrix vm(p_, d_);
      for (Eigen::Index j = 0; j < columns.cols(); ++j) {
        for (Eigen::Index c = 0; c < d_; ++c) {
          vm.col(c) = columns.col(j).segment(c * p_, p_);
        }
        Matrix xtv = xm.transpose() * vm;
        if (kind_ == ManifoldKind::kStiefel) xtv = sym(xtv);
        vm.noalias() -= xm * xtv;
        for (Eigen::Index c = 0; c < d_; ++c) {
          columns.col(j).segment(c * p_, p_) = vm.col(c);
        }
      }
      return;
    }
    case ManifoldKind::kSpd: {
      Matrix vm(p_, p_);
      for (Eigen::Index j = 0; j < columns.cols(); ++j) {
        for (Eigen::Index c = 0; c < p_; ++c) {
          vm.col(c) = columns.col(j).segment(c * p_, p_);
        }
        vm = sym(vm);
        for (Eigen::Index c = 0; c < p_; ++c) {
          columns.col(j).segment(c * p_, p_) = vm.col(c);
        }
      }
      return;
    }
    case ManifoldKind::kProduct:
      for (std::size_t i = 0; i < components_.size(); ++i) {
        const Manifold& c = components_[i];
        const Eigen::Index len = c.ambient_len();
        c.proj_columns(x.segment(offsets_[i], len),
                       columns.middleRows(offsets_[i], len));
      }
      return;
  }
}

Point Manifold::retract(const Point& x, const Tangent& eta) const {
  if (eta.size() != ambient_len_) {
    throw std::invalid_argument("retract: tangent length mismatch");
  }
  if ((eta.array() == 0.0).all()) return x;
  switch (kind_) {
    case ManifoldKind::kEuclidean: return x + eta;
    case ManifoldKind::kSphere: {
      const Vector y = x + eta;
      return y / y.norm();
    }
    case ManifoldKind::kStiefel:
    case ManifoldKind::kGrassmann: {
      const Vector y = x + eta;
      try {
        return as_vector(thin_qr(as_matrix(y, p_, d_)).q);
      } catch (const SingularMatrixError&) {
        throw StepInfeasibleError("retract: X + eta is rank deficient");
      } catch (const NonFiniteInputError&) {
        throw StepInfeasibleError("retract: non-finite step");
      }
    }
    case ManifoldKind::kSpd: {
      ConstMap xm(x.data(), p_, p_), em(eta.data(), p_, p_);
      const Matrix e = sym(em);
      Matrix y;
      try {
        const Eigen::LLT<Matrix> llt = spd_factor(xm);
        y = sym(xm + e + 0.5 * e * spd_solve(llt, e));
      } catch (const NotPositiveDefiniteError&) {
        throw StepInfeasibleError("retract: base point is not SPD");
      }
      if (!y.allFinite()) throw StepInfeasibleError("retract: non-finite step");
      Eigen::LLT<Matrix> check(y);
      if (check.info() != Eigen::Success) {
        throw StepInfeasibleError("retract: result is not positive definite");
      }
      return as_vector(y);
    }
    case ManifoldKind::kProduct: {
      Point y(ambient_len_);
      for (std::size_t i = 0; i < components_.size(); ++i) {
        const Manifold& c = components_[i];
        const Eigen::Index len = c.ambient_len();
        y.segment(offsets_[i], len) = c.retract(x.segment(offsets_[i], len),
                                                eta.segment(offsets_[i], len));
      }
      return y;
    }
  }
  return x;
}

double Manifold::inner(const Point& x, const Tangent& u, const Tangent& v) const {
  switch (kind_) {
    case ManifoldKind::kSpd: {
      ConstMap xm(x.data(), p_, p_), um(u.data(), p_, p_), vm(v.data(), p_, p_);
      const Eigen::LLT<Matrix> llt = spd_factor(xm);
      const Matrix a = spd_solve(llt, um);
      const Matrix b = spd_solve(llt, vm);
      return (a.transpose().array() * b.array()).sum();  // tr(A B)
    }
    case ManifoldKind::kProduct: {
      double total = 0.0;
      for (std::size_t i = 0; i < components_.size(); ++i) {
        const Manifold& c = components_[i];
        const Eigen::Index len = c.ambient_len();
        total += c.inner(x.segment(offsets_[i], len),
                         u.segment(offsets_[i], len),
                         v.segment(offsets_[i], len));
      }
      return total;
    }
    default:
      return u.dot(v);
  }
}

double Manifold::norm(const Point& x, const Tangent& u) const {
  return std::sqrt(std::max(0.0, inner(x, u, u)));
}

Vector Manifold::dual(const Point& x, const Tangent& v) const {
  switch (kind_) {
    case ManifoldKind::kSpd: {
      ConstMap xm(x.data(), p_, p_), vm(v.data(), p_, p_);
      const Eigen::LLT<Matrix> llt = spd_factor(xm);
      const Matrix a = spd_solve(llt, vm);
      return as_vector(sym(spd_solve(llt, a.transpose())));
    }
    case ManifoldKind::kProduct: {
      Vector out(ambient_len_);
      for (std::size_t i = 0; i < components_.size(); ++i) {
        const Manifold& c = components_[i];
        const Eigen::Index len = c.ambient_len();
        out.segment(offsets_[i], len) =
            c.dual(x.segment(offsets_[i], len), v.segment(offsets_[i], len));
      }
      return out;
    }
    default:
      return v;
  }
}

Tangent Manifold::sharp(const Point& x, const Vector& w) const {
  switch (kind_) {
    case ManifoldKind::kSpd: {
      ConstMap xm(x.data(), p_, p_), wm(w.data(), p_, p_);
      return as_vector(sym(xm * sym(wm) * xm));
    }
    case ManifoldKind::kProduct: {
      Tangent out(ambient_len_);
      for (std::size_t i = 0; i < components_.size(); ++i) {
        const Manifold& c = components_[i];
        const Eigen::Index len = c.ambient_len();
        out.segment(offsets_[i], len) =
            c.sharp(x.segment(offsets_[i], len), w.segment(offsets_[i], len));
      }
      return out;
    }
    default:
      return proj_tangent(x, w);
  }
}

Tangent Manifold::transport(const Point& x, const Tangent& eta, const Point& y,
                            const Tangent& v) const {
  switch (kind_) {
    case ManifoldKind::kEuclidean:
    case ManifoldKind::kSpd:
      return v;
    case ManifoldKind::kProduct: {
      Tangent out(ambient_len_);
      for (std::size_t i = 0; i < components_.size(); ++i) {
        const Manifold& c = components_[i];
        const Eigen::Index len = c.ambient_len();
        const Eigen::Index off = offsets_[i];
        out.segment(off, len) =
            c.transport(x.segment(off, len), eta.segment(off, len),
                        y.segment(off, len), v.segment(off, len));
      }
      return out;
    }
    default:
      return proj_tangent(y, v);
  }
}

Tangent Manifold::egrad2rgrad(const Point& x, const Vector& egrad) const {
  switch (kind_) {
    case ManifoldKind::kSpd: {
      ConstMap xm(x.data(), p_, p_), gm(egrad.data(), p_, p_);
      return as_vector(sym(xm * sym(gm) * xm));
    }
    case ManifoldKind::kProduct: {
      Tangent out(ambient_len_);
      for (std::size_t i = 0; i < components_.size(); ++i) {
        const Manifold& c = components_[i];
        const Eigen::Index len = c.ambient_len();
        out.segment(offsets_[i], len) = c.egrad2rgrad(
            x.segment(offsets_[i], len), egrad.segment(offsets_[i], len));
      }
      return out;
    }
    default:
      return proj_tangent(x, egrad);
  }
}

Tangent Manifold::ehess2rhess(const Point& x, const Vector& egrad,
                              const Vector& ehess_eta,
                              const Tangent& eta) const {
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return ehess_eta;
    case ManifoldKind::kSphere:
      return proj_tangent(x, ehess_eta) - x.dot(egrad) * eta;
    case ManifoldKind::kStiefel: {
      ConstMap xm(x.data(), p_, d_), gm(egrad.data(), p_, d_),
          hm(ehess_eta.data(), p_, d_), em(eta.data(), p_, d_);
      const Matrix xtg = xm.transpose() * gm;
      const Matrix corrected = hm - em * sym(xtg);
      return proj_tangent(x, as_vector(corrected));
    }
    case ManifoldKind::kGrassmann: {
      ConstMap xm(x.data(), p_, d_), gm(egrad.data(), p_, d_),
          em(eta.data(), p_, d_);
      const Matrix xtg = xm.transpose() * gm;
      return proj_tangent(x, ehess_eta) - as_vector(em * xtg);
    }
    case ManifoldKind::kSpd: {
      ConstMap xm(x.data(), p_, p_), gm(egrad.data(), p_, p_),
          hm(ehess_eta.data(), p_, p_), em(eta.data(), p_, p_);
      const Matrix term1 = xm * sym(hm) * xm;
      const Matrix term2 = sym(em * sym(gm) * xm);
      return as_vector(sym(term1) + term2);
    }
    case ManifoldKind::kProduct: {
      Tangent out(ambient_len_);
      for (std::size_t i = 0; i < components_.size(); ++i) {
        const Manifold& c = components_[i];
        const Eigen::Index len = c.ambient_len();
        const Eigen::Index off = offsets_[i];
        out.segment(off, len) = c.ehess2rhess(
            x.segment(off, len), egrad.segment(off, len),
            ehess_eta.segment(off, len), eta.segment(off, len));
      }
      return out;
    }
  }
  return ehess_eta;
}

}  // namespace riemopt
