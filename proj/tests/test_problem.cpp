#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "riemopt/problem.hpp"
#include "riemopt/stats/brockett.hpp"

namespace riemopt {
namespace {

TEST(NumericEgrad, HalfSquaredNorm) {
  const Problem p([](const Point& x) { return 0.5 * x.squaredNorm(); });
  const Point x = (Vector(3) << 1, 2, 3).finished();
  EXPECT_LT((numeric_egrad(p, x) - x).norm(), 1e-8);
}

TEST(NumericEgrad, ConstantIsZero) {
  const Problem p([](const Point&) { return 7.0; });
  EXPECT_LT(numeric_egrad(p, Vector::Ones(4)).norm(), 1e-10);
}

TEST(NumericEgrad, BrockettMatchesAnalytic) {
  const auto inst = stats::brockett_random(12, 3, 5);
  const Problem p = stats::brockett_problem(inst);
  Rng rng(1);
  const Manifold m = stats::brockett_manifold(inst);
  for (int i = 0; i < 10; ++i) {
    const Point x = m.random_point(rng);
    const Vector g = p.egrad(x);
    EXPECT_LT((numeric_egrad(p, x) - g).norm(), 1e-5 * g.norm());
  }
}

TEST(NumericEgrad, ShrinksStepOnceNearBoundary) {
  // log(x) is finite only for x > 0; the default step at x = 4e-6 crosses zero.
  const Problem p([](const Point& x) { return x(0) > 0 ? std::log(x(0)) : INFINITY; });
  const Point x = Vector::Constant(1, 4e-6);
  EXPECT_NEAR(numeric_egrad(p, x)(0), 1.0 / 4e-6, 1e-2 / 4e-6);
  const Problem q([](const Point& x) { return x(0) > 0 ? std::log(x(0)) : INFINITY; });
  EXPECT_THROW(numeric_egrad(q, Vector::Constant(1, 1e-8)), NumericDerivativeError);
}

TEST(NumericEhess, QuadraticAndZeroDirection) {
  Matrix a(3, 3);
  a << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  const Problem p([a](const Point& x) { return 0.5 * x.dot(a * x); },
                  [a](const Point& x) { return Vector(a * x); });
  const Point x = Vector::Ones(3);
  const Tangent eta = (Vector(3) << 1, -2, 0.5).finished();
  const Vector want = a * eta;
  EXPECT_LT((numeric_ehess_action(p, x, eta) - want).norm(), 1e-6 * want.norm());
  EXPECT_LT(numeric_ehess_action(p, x, Tangent::Zero(3)).norm(), 1e-12);
}

TEST(NumericEhess, BrockettMatchesKroneckerAction) {
  const auto inst = stats::brockett_random(10, 3, 6);
  const Problem p = stats::brockett_problem(inst).without_hessian();
  const Manifold m = stats::brockett_manifold(inst);
  Rng rng(2);
  const Point x = m.random_point(rng);
  const Tangent eta = rng.normal_vector(30);
  const Vector want = as_vector(2.0 * inst.b * as_matrix(eta, 10, 3) * inst.mu.asDiagonal());
  EXPECT_LT((p.ehess(x, eta) - want).norm(), 1e-4 * want.norm());
}

TEST(Problem, CountersMatchCallbacks) {
  std::atomic<int> nf{0};
  std::atomic<int> ng{0};
  std::atomic<int> nh{0};
  const Problem p([&](const Point& x) { ++nf; return x.squaredNorm(); },
                  [&](const Point& x) { ++ng; return Vector(2.0 * x); },
                  [&](const Point&, const Tangent& v) { ++nh; return Vector(2.0 * v); });
  const Point x = Vector::Ones(3);
  p.objective(x);
  p.objective(x);
  p.egrad(x);
  p.ehess(x, x);
  EXPECT_EQ(p.counts().objective, 2u);
  EXPECT_EQ(p.counts().gradient, 1u);
  EXPECT_EQ(p.counts().hessian, 1u);
  EXPECT_EQ(nf.load(), 2);
  p.reset_counts();
  EXPECT_EQ(p.counts().objective, 0u);
}

TEST(Problem, NumericFallbackCountsObjectiveProbes) {
  std::atomic<int> nf{0};
  const Problem p([&](const Point& x) { ++nf; return x.squaredNorm(); });
  p.egrad(Vector::Ones(4));
  EXPECT_EQ(p.counts().gradient, 1u);
  EXPECT_EQ(p.counts().objective, static_cast<std::uint64_t>(nf.load()));
  EXPECT_EQ(nf.load(), 8);
}

TEST(CheckLadder, ShapeAndFormat) {
  const auto inst = stats::brockett_random(20, 3, 7);
  const CheckReport r = check_ladder(stats::brockett_problem(inst),
                                     stats::brockett_manifold(inst),
                                     stats::brockett_identity_start(20, 3));
  ASSERT_EQ(r.rows.size(), 35u);
  EXPECT_DOUBLE_EQ(r.rows[0].eta_norm, 100.0);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(r.rows[i].eta_norm, r.rows[i - 1].eta_norm / 2);
    EXPECT_EQ(r.rows[i].index, static_cast<int>(i));
  }
  const std::string text = format_check_report(r);
  EXPECT_EQ(text.rfind("i:0,|eta|:1.000e+02,(fy-fx)/<gfx,eta>:", 0), 0u);
  EXPECT_NE(text.find(",(fy-fx-<gfx,eta>)/<0.5 eta, Hessian eta>:"), std::string::npos);
  EXPECT_NE(text.find("\ni:34,|eta|:"), std::string::npos);
}

TEST(CheckGradHess, BrockettPlateaus) {
  const auto inst = stats::brockett_random(40, 4, 8);
  const GradHessCheck c = check_grad_hess(stats::brockett_problem(inst),
                                          stats::brockett_manifold(inst),
                                          stats::brockett_identity_start(40, 4));
  EXPECT_GE(c.at_start.longest_grad_run(), 5);
  EXPECT_GE(c.at_solution.longest_hess_run(), 3);
}

TEST(CheckGradHess, WrongGradientHasNoPlateau) {
  const auto inst = stats::brockett_random(40, 4, 8);
  const Problem good = stats::brockett_problem(inst);
  const Problem bad([good](const Point& x) { return good.objective(x); },
                    [good](const Point& x) { return Vector(2.0 * good.egrad(x)); });
  const CheckReport r = check_ladder(bad, stats::brockett_manifold(inst),
                                     stats::brockett_identity_start(40, 4));
  EXPECT_EQ(r.longest_grad_run(), 0);
}

}  // namespace
}  // namespace riemopt
