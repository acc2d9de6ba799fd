#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include "riemopt/solver.hpp"
#include "riemopt/stats/brockett.hpp"

namespace riemopt {
namespace {

const Method kMandatory[] = {Method::kRSD, Method::kRCG, Method::kRBFGS, Method::kLRBFGS,
                             Method::kRTRNewton};
const Method kAll[] = {Method::kRSD,       Method::kRCG,   Method::kRBFGS,  Method::kLRBFGS,
                       Method::kRTRNewton, Method::kRTRSD, Method::kRTRSR1, Method::kLRTRSR1};

Problem sphere_quadratic(const Matrix& a) {
  return Problem([a](const Point& x) { return x.dot(a * x); },
                 [a](const Point& x) { return Vector(2.0 * a * x); },
                 [a](const Point&, const Tangent& v) { return Vector(2.0 * a * v); });
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : kAll) EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_FALSE(parse_method("NOPE"));
  EXPECT_EQ(method_names().size(), 8u);
  EXPECT_TRUE(is_line_search_method(Method::kRCG));
  EXPECT_FALSE(is_line_search_method(Method::kRTRNewton));
}

TEST(SolverConfig, DefaultsAndValidation) {
  SolverConfig c;
  EXPECT_EQ(c.method, Method::kLRBFGS);
  EXPECT_DOUBLE_EQ(c.tolerance, 1e-4);
  EXPECT_EQ(c.max_iteration, 1000);
  EXPECT_DOUBLE_EQ(c.ls_beta, 0.999);
  EXPECT_EQ(c.length_sy, 4);
  EXPECT_NO_THROW(c.validate());

  SolverConfig bad = c;
  bad.ls_alpha = 0.5;
  bad.ls_beta = 0.4;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.tolerance = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.length_sy = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.init_stepsize = 1e4;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.init_step_type = "BBSTEP";
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(SolverConfig, ParameterBlock) {
  SolverConfig c;
  const std::string text = format_solver_params(c);
  EXPECT_NE(text.find("GENERAL PARAMETERS:"), std::string::npos);
  EXPECT_NE(text.find("Stop_Criterion:       GRAD_F_0[YES]"), std::string::npos);
  EXPECT_NE(text.find("LS_alpha      :         0.0001[YES]"), std::string::npos);
  EXPECT_NE(text.find("LengthSY      :              4[YES]"), std::string::npos);
  c.method = Method::kRTRNewton;
  EXPECT_NE(format_solver_params(c).find("TRUST REGION TYPE METHODS PARAMETERS:"),
            std::string::npos);
}

TEST(Armijo, ExactMinimizerAcceptedImmediately) {
  SolverConfig c;
  const auto r = armijo_backtracking([](double t) { return (t - 1) * (t - 1); }, 1.0, -2.0,
                                     1.0, c);
  EXPECT_TRUE(r.success);
  EXPECT_DOUBLE_EQ(r.step, 1.0);
}

TEST(Armijo, SufficientDecreaseHolds) {
  SolverConfig c;
  auto phi = [](double t) { return t * t * t - t; };
  const auto r = armijo_backtracking(phi, 0.0, -1.0, 1.0, c);
  ASSERT_TRUE(r.success);
  EXPECT_LE(phi(r.step), 0.0 + c.ls_alpha * r.step * -1.0);
}

TEST(Armijo, FailsBelowMinStepsize) {
  SolverConfig c;
  c.min_stepsize = 1e-3;
  const auto r = armijo_backtracking([](double t) { return t; }, 0.0, -1.0, 1.0, c);
  EXPECT_FALSE(r.success);
}

TEST(Wolfe, ExactMinimizerAccepted) {
  SolverConfig c;
  auto phi = [](double t) { return LinePoint{(t - 1) * (t - 1), 2 * (t - 1)}; };
  const auto r = wolfe_search(phi, 1.0, -2.0, 1.0, c);
  EXPECT_TRUE(r.success);
  EXPECT_TRUE(r.wolfe);
  EXPECT_DOUBLE_EQ(r.step, 1.0);
}

// Both Wolfe inequalities at steps returned along steepest-descent lines of a
// Brockett instance.
TEST(Wolfe, BrockettStepsSatisfyBothConditions) {
  const auto inst = stats::brockett_random(20, 3, 11);
  const Problem p = stats::brockett_problem(inst);
  const Manifold m = stats::brockett_manifold(inst);
  SolverConfig c;
  c.line_search = LineSearchKind::kWolfe;
  c.ls_beta = 0.9;
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Point x = m.random_point(rng);
    const Tangent g = m.egrad2rgrad(x, p.egrad(x));
    const Tangent eta = -g;
    const double f0 = p.objective(x);
    const double d0 = m.inner(x, g, eta);
    auto phi = [&](double t) {
      const Point y = m.retract(x, t * eta);
      const Tangent gy = m.egrad2rgrad(y, p.egrad(y));
      return LinePoint{p.objective(y), m.inner(y, gy, m.transport(x, t * eta, y, eta))};
    };
    const auto r = wolfe_search(phi, f0, d0, 1.0, c);
    ASSERT_TRUE(r.success);
    ASSERT_TRUE(r.wolfe);
    const LinePoint at = phi(r.step);
    EXPECT_LE(at.value, f0 + c.ls_alpha * r.step * d0);
    EXPECT_LE(std::abs(at.slope), c.ls_beta * std::abs(d0));
  }
}

TEST(InitialStep, QuadIntMod) {
  SolverConfig c;
  EXPECT_DOUBLE_EQ(initial_step(5.0, 6.0, -1.0, true, c), c.init_stepsize);
  EXPECT_DOUBLE_EQ(initial_step(5.0, 6.0, -4.0, false, c), 2.0 * (5.0 - 6.0) / -4.0);
  EXPECT_DOUBLE_EQ(initial_step(5.0, 5.0, -4.0, false, c), c.min_stepsize);
  EXPECT_DOUBLE_EQ(initial_step(0.0, 1e9, -1.0, false, c), c.max_stepsize);
}

TEST(ConjugateGradient, PolakRibierePlusClamps) {
  const Manifold m = Manifold::euclidean(3);
  const Point x = Vector::Zero(3);
  const Tangent g = (Vector(3) << 1, 2, 3).finished();
  EXPECT_DOUBLE_EQ(polak_ribiere_plus(m, x, g, g, g.squaredNorm()), 0.0);
  const Tangent prev = (Vector(3) << 1, 0, 0).finished();
  EXPECT_NEAR(polak_ribiere_plus(m, x, g, prev, 1.0), g.dot(g - prev), 1e-15);
  const Tangent opposite = 2.0 * g;
  EXPECT_DOUBLE_EQ(polak_ribiere_plus(m, x, g, opposite, 1.0), 0.0);
}

TEST(ConjugateGradient, ResetsWhenNotDescent) {
  const Manifold m = Manifold::euclidean(2);
  const Point x = Vector::Zero(2);
  const Tangent g = Vector::Unit(2, 0);
  EXPECT_EQ(cg_direction(m, x, g, Vector::Zero(2), 0.0), -g);
  const Tangent uphill = 10.0 * g;
  EXPECT_EQ(cg_direction(m, x, g, uphill, 1.0), -g);
  const Tangent side = Vector::Unit(2, 1);
  EXPECT_EQ(cg_direction(m, x, g, side, 0.5), Vector(-g + 0.5 * side));
}

TEST(Lbfgs, EmptyMemoryIsSteepestDescent) {
  const Manifold m = Manifold::euclidean(3);
  const Tangent g = Vector::Ones(3);
  EXPECT_EQ(lbfgs_direction(m, Vector::Zero(3), {}, g, 1e-4), -g);
}

TEST(Lbfgs, SkipsPairsWithoutCurvature) {
  const Manifold m = Manifold::euclidean(3);
  const Point x = Vector::Zero(3);
  const Tangent g = (Vector(3) << 1, -2, 0.5).finished();
  CurvaturePair good{Vector::Unit(3, 0), 2.0 * Vector::Unit(3, 0) + 0.1 * Vector::Unit(3, 1)};
  CurvaturePair flat{Vector::Unit(3, 2), Vector::Unit(3, 1)};
  const Tangent with = lbfgs_direction(m, x, {good, flat}, g, 1e-4);
  const Tangent without = lbfgs_direction(m, x, {good}, g, 1e-4);
  EXPECT_LT((with - without).norm(), 1e-15);
}

// The two-loop operator satisfies the secant equation for the newest pair.
TEST(Lbfgs, SecantEquationForNewestPair) {
  const int n = 5;
  Rng rng(4);
  const Matrix q = rng.normal_matrix(n, n);
  const Matrix a = q * q.transpose() + Matrix::Identity(n, n);
  const Manifold m = Manifold::euclidean(n);
  std::vector<CurvaturePair> memory;
  for (int i = 0; i < 3; ++i) {
    const Vector s = rng.normal_vector(n);
    memory.push_back({s, a * s});
  }
  const Tangent d = lbfgs_direction(m, Vector::Zero(n), memory, memory.back().y, 1e-4);
  EXPECT_LT((d + memory.back().s).norm(), 1e-10 * memory.back().s.norm());
}

TEST(TruncatedCg, ZeroGradient) {
  const Manifold m = Manifold::euclidean(3);
  const auto r = truncated_cg(m, Vector::Zero(3), Vector::Zero(3),
                              [](const Tangent& v) { return v; }, 1.0, 0.1, 1.0, 3);
  EXPECT_EQ(r.eta.norm(), 0.0);
  EXPECT_EQ(r.model_value, 0.0);
}

TEST(TruncatedCg, IdentityModelTakesNewtonStep) {
  const Manifold m = Manifold::euclidean(3);
  const Tangent g = (Vector(3) << 0.1, -0.2, 0.3).finished();
  const auto r = truncated_cg(m, Vector::Zero(3), g, [](const Tangent& v) { return v; }, 1.0,
                              0.1, 1.0, 3);
  EXPECT_LT((r.eta + g).norm(), 1e-15);
  EXPECT_FALSE(r.hit_boundary);
}

TEST(TruncatedCg, NegativeCurvatureHitsBoundaryWithCauchyDecrease) {
  const Manifold m = Manifold::euclidean(3);
  Matrix h = Vector::LinSpaced(3, -1.0, 2.0).asDiagonal();
  const Tangent g = (Vector(3) << 1, 1, 1).finished();
  auto hess = [&](const Tangent& v) { return Tangent(h * v); };
  const double radius = 0.5;
  const auto r = truncated_cg(m, Vector::Zero(3), g, hess, radius, 0.1, 1.0, 3);
  EXPECT_NEAR(r.eta.norm(), radius, 1e-12);
  EXPECT_TRUE(r.hit_boundary);
  auto model = [&](const Tangent& e) { return g.dot(e) + 0.5 * e.dot(h * e); };
  EXPECT_NEAR(r.model_value, model(r.eta), 1e-12);
  double best_cauchy = 0.0;
  for (double tau = 0.0; tau <= radius / g.norm(); tau += 1e-4) {
    best_cauchy = std::min(best_cauchy, model(-tau * g));
  }
  EXPECT_LE(r.model_value, best_cauchy + 1e-12);
}

TEST(Solve, EuclideanQuadraticEveryMandatoryMethod) {
  const Vector c = (Vector(5) << 1, -2, 3, 0.5, -1).finished();
  const Problem p([c](const Point& x) { return (x - c).squaredNorm(); },
                  [c](const Point& x) { return Vector(2.0 * (x - c)); },
                  [](const Point&, const Tangent& v) { return Vector(2.0 * v); });
  for (Method method : kMandatory) {
    SolverConfig cfg;
    cfg.method = method;
    cfg.tolerance = 1e-8;
    const OptimResult r = solve(p, Manifold::euclidean(5), cfg, Vector::Zero(5));
    EXPECT_LT((r.xopt - c).norm(), 1e-6) << method_name(method);
    EXPECT_EQ(r.stop_reason, StopReason::kGradientTolerance) << method_name(method);
  }
}

TEST(Solve, SphereSmallestEigenvalue) {
  const Matrix a = Vector::LinSpaced(5, 1, 5).asDiagonal();
  Rng rng(5);
  for (Method method : kAll) {
    SolverConfig cfg;
    cfg.method = method;
    cfg.tolerance = 1e-8;
    cfg.max_iteration = 5000;
    const Point x0 = Vector::Ones(5).normalized();
    const OptimResult r = solve(sphere_quadratic(a), Manifold::sphere(5), cfg, x0);
    EXPECT_NEAR(r.fval, 1.0, 1e-8) << method_name(method);
    EXPECT_NEAR(std::abs(r.xopt(0)), 1.0, 1e-4) << method_name(method);
  }
}

TEST(Solve, BrockettSmallAllMethodsAgreeWithOracle) {
  const auto inst = stats::brockett_random(20, 3, 12);
  const auto oracle = stats::brockett_oracle(inst);
  for (Method method : kAll) {
    SolverConfig cfg;
    cfg.method = method;
    cfg.tolerance = 1e-8;
    cfg.max_iteration = 10000;
    const OptimResult r = solve(stats::brockett_problem(inst), stats::brockett_manifold(inst),
                                cfg, stats::brockett_identity_start(20, 3));
    EXPECT_NEAR(r.fval, oracle.f, 1e-4) << method_name(method);
  }
}

TEST(Solve, RtrNewtonConvergesQuickly) {
  const auto inst = stats::brockett_random(60, 4, 13);
  SolverConfig cfg;
  cfg.method = Method::kRTRNewton;
  cfg.tolerance = 1e-6;
  cfg.max_iteration = 100;
  const OptimResult r = solve(stats::brockett_problem(inst), stats::brockett_manifold(inst),
                              cfg, stats::brockett_identity_start(60, 4));
  EXPECT_EQ(r.stop_reason, StopReason::kGradientTolerance);
  EXPECT_LE(r.normgfgf0, 1e-6);
  EXPECT_GT(r.nH, 0u);
}

TEST(Solve, RcgFiniteTerminationOnConvexQuadratic) {
  const int n = 10;
  Rng rng(6);
  const Matrix q = rng.normal_matrix(n, n);
  const Matrix a = q * q.transpose() + Matrix::Identity(n, n);
  const Vector b = rng.normal_vector(n);
  const Problem p([a, b](const Point& x) { return 0.5 * x.dot(a * x) - b.dot(x); },
                  [a, b](const Point& x) { return Vector(a * x - b); });
  SolverConfig cfg;
  cfg.method = Method::kRCG;
  cfg.line_search = LineSearchKind::kWolfe;
  cfg.ls_alpha = 1e-5;
  cfg.ls_beta = 1e-4;
  cfg.tolerance = 1e-12;
  cfg.max_iteration = 12;
  const OptimResult r = solve(p, Manifold::euclidean(n), cfg, Vector::Zero(n));
  EXPECT_LT(r.normgf, 1e-8);
  EXPECT_LE(r.iter, n + 2);
}

TEST(Solve, SeriesAndRatios) {
  const auto inst = stats::brockett_random(20, 3, 14);
  for (Method method : kAll) {
    SolverConfig cfg;
    cfg.method = method;
    const OptimResult r = solve(stats::brockett_problem(inst), stats::brockett_manifold(inst),
                                cfg, stats::brockett_identity_start(20, 3));
    const auto len = static_cast<std::size_t>(r.iter + 1);
    EXPECT_EQ(r.fun_series.size(), len);
    EXPECT_EQ(r.grad_series.size(), len);
    EXPECT_EQ(r.time_series.size(), len);
    EXPECT_NEAR(r.normgfgf0, r.normgf / r.grad_series.front(), 1e-15);
    EXPECT_DOUBLE_EQ(r.fval, r.fun_series.back());
    for (std::size_t i = 1; i < len; ++i) {
      EXPECT_LE(r.fun_series[i], r.fun_series[i - 1]) << method_name(method);
      EXPECT_GE(r.time_series[i], r.time_series[i - 1]);
    }
  }
}

TEST(Solve, MinAndMaxIteration) {
  const auto inst = stats::brockett_random(20, 3, 15);
  SolverConfig cfg;
  cfg.tolerance = 1e10;
  cfg.min_iteration = 5;
  OptimResult r = solve(stats::brockett_problem(inst), stats::brockett_manifold(inst), cfg,
                        stats::brockett_identity_start(20, 3));
  EXPECT_EQ(r.iter, 5);
  cfg.tolerance = 1e-12;
  cfg.min_iteration = 0;
  cfg.max_iteration = 3;
  r = solve(stats::brockett_problem(inst), stats::brockett_manifold(inst), cfg,
            stats::brockett_identity_start(20, 3));
  EXPECT_EQ(r.iter, 3);
  EXPECT_EQ(r.stop_reason, StopReason::kMaxIteration);
}

TEST(Solve, CountersMatchCallbacks) {
  const auto inst = stats::brockett_random(20, 3, 16);
  const Problem inner = stats::brockett_problem(inst);
  for (Method method : kAll) {
    std::atomic<std::uint64_t> nf{0};
    std::atomic<std::uint64_t> ng{0};
    std::atomic<std::uint64_t> nh{0};
    const Problem p([&](const Point& x) { ++nf; return inner.objective(x); },
                    [&](const Point& x) { ++ng; return inner.egrad(x); },
                    [&](const Point& x, const Tangent& v) { ++nh; return inner.ehess(x, v); });
    SolverConfig cfg;
    cfg.method = method;
    const OptimResult r = solve(p, stats::brockett_manifold(inst), cfg,
                                stats::brockett_identity_start(20, 3));
    EXPECT_EQ(r.num_obj_eval, nf.load()) << method_name(method);
    EXPECT_EQ(r.num_grad_eval, ng.load()) << method_name(method);
    EXPECT_EQ(r.nH, nh.load()) << method_name(method);
    EXPECT_GT(r.nR, 0u);
  }
}

TEST(Solve, TransportCounters) {
  const auto inst = stats::brockett_random(20, 3, 17);
  SolverConfig cfg;
  cfg.method = Method::kRSD;
  OptimResult r = solve(stats::brockett_problem(inst), stats::brockett_manifold(inst), cfg,
                        stats::brockett_identity_start(20, 3));
  EXPECT_EQ(r.nV, 0u);
  EXPECT_EQ(r.nVp, 0u);
  cfg.method = Method::kLRBFGS;
  r = solve(stats::brockett_problem(inst), stats::brockett_manifold(inst), cfg,
            stats::brockett_identity_start(20, 3));
  EXPECT_GT(r.nV, 0u);
  EXPECT_GT(r.nVp, 0u);
}

TEST(Solve, DeterministicUnderFixedSeed) {
  const auto inst = stats::brockett_random(20, 3, 18);
  for (Method method : kAll) {
    SolverConfig cfg;
    cfg.method = method;
    cfg.seed = 99;
    const OptimResult a = solve(stats::brockett_problem(inst), stats::brockett_manifold(inst), cfg);
    const OptimResult b = solve(stats::brockett_problem(inst), stats::brockett_manifold(inst), cfg);
    EXPECT_EQ(a.xopt, b.xopt) << method_name(method);
    EXPECT_EQ(a.iter, b.iter);
    EXPECT_EQ(a.fun_series, b.fun_series);
    EXPECT_EQ(a.num_obj_eval, b.num_obj_eval);
    EXPECT_EQ(a.nR, b.nR);
    EXPECT_EQ(a.nV, b.nV);
    EXPECT_EQ(a.nVp, b.nVp);
  }
}

TEST(Solve, RejectsBadStarts) {
  const auto inst = stats::brockett_random(10, 2, 19);
  SolverConfig cfg;
  EXPECT_THROW(solve(stats::brockett_problem(inst), stats::brockett_manifold(inst), cfg,
                     Vector::Ones(20)),
               DomainError);
  const Problem nan_objective([](const Point&) { return std::numeric_limits<double>::quiet_NaN(); });
  EXPECT_THROW(solve(nan_objective, Manifold::sphere(3), cfg, Vector::Unit(3, 0)), SolverError);
}

TEST(Solve, CheckParamsAndDebugOutput) {
  const auto inst = stats::brockett_random(10, 2, 20);
  std::ostringstream log;
  SolverConfig cfg;
  cfg.is_check_params = true;
  cfg.debug = 1;
  cfg.log = &log;
  solve(stats::brockett_problem(inst), stats::brockett_manifold(inst), cfg,
        stats::brockett_identity_start(10, 2));
  EXPECT_NE(log.str().find("GENERAL PARAMETERS:"), std::string::npos);
  EXPECT_NE(log.str().find("i:0,f:"), std::string::npos);
}

TEST(Solve, InfeasibleSpdStepsAreRejected) {
  // f(X) = tr(X) - log|X| is minimized at I; huge initial steps leave the cone.
  const Problem p(
      [](const Point& x) {
        const Matrix m = as_matrix(x, 3, 3);
        try {
          return m.trace() - logdet_spd(m);
        } catch (const NotPositiveDefiniteError&) {
          return std::numeric_limits<double>::infinity();
        }
      },
      [](const Point& x) {
        const Matrix m = as_matrix(x, 3, 3);
        return as_vector(Matrix::Identity(3, 3) - inverse_spd(m));
      });
  for (Method method : kAll) {
    SolverConfig cfg;
    cfg.method = method;
    cfg.tolerance = 1e-8;
    cfg.init_stepsize = 100.0;
    cfg.tr_initial_radius = 100.0;
    cfg.max_iteration = 2000;
    const Point x0 = as_vector(Vector::LinSpaced(3, 0.2, 5.0).asDiagonal().toDenseMatrix());
    const OptimResult r = solve(p, Manifold::spd(3), cfg, x0);
    EXPECT_NEAR(r.fval, 3.0, 1e-6) << method_name(method) << " " << stop_reason_name(r.stop_reason) << " " << r.iter;
  }
}

}  // namespace
}  // namespace riemopt
