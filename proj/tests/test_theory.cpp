#include <cmath>

#include <gtest/gtest.h>

#include "mistp/data.hpp"
#include "mistp/theory.hpp"

using namespace mistp;

namespace {

FunctionalProblem constant_components(std::vector<double> vals) {
  const std::size_t n = vals.size();
  return FunctionalProblem(n, 1, [vals](std::size_t i, const Vector&) { return vals[i]; });
}

/// f(x) = x^2 / 2 in one dimension with L = 1.
FunctionalProblem half_square() {
  return FunctionalProblem(
      1, 1, [](std::size_t, const Vector& x) { return 0.5 * x[0] * x[0]; },
      [](std::size_t, const Vector& x, Vector& g) { g = x; }, std::vector<double>{1.0});
}

RidgeProblem ridge(std::size_t n, std::size_t d, std::uint64_t seed) {
  const Dataset ds = synthetic_regression(n, d, 0.5, seed);
  return RidgeProblem(ds.features, ds.labels, 1.0 / static_cast<double>(n));
}

BoundInputs nonconvex_example() {
  BoundInputs in;
  in.f0 = 10.0;
  in.f_star = 0.0;
  in.mu_d = 1.0;
  in.epsilon = 0.1;
  in.L = 1.0;
  return in;
}

BoundInputs convex_example() {
  BoundInputs in;
  in.f0 = 1.0;
  in.f_star = 0.0;
  in.mu_d = 1.0;
  in.epsilon = 0.1;
  in.L = 1.0;
  in.r0 = 1.0;
  return in;
}

}  // namespace

TEST(Enumeration, Binomial) {
  EXPECT_EQ(binomial(5, 2), 10.0);
  EXPECT_EQ(binomial(8, 4), 70.0);
  EXPECT_EQ(binomial(3, 4), 0.0);
  std::size_t count = 0;
  for_each_subset(6, 3, [&](const std::vector<std::size_t>&) { ++count; });
  EXPECT_EQ(count, 20u);
}

TEST(Enumeration, ThreeComponentExample) {
  const auto p = constant_components({0.0, 3.0, 6.0});
  const Vector x = Vector::Zero(1);
  EXPECT_DOUBLE_EQ(enumerate_minibatch_mean(p, x, 2), 3.0);
  EXPECT_DOUBLE_EQ(enumerate_minibatch_mean(p, x, 1), 3.0);
  EXPECT_DOUBLE_EQ(enumerate_minibatch_mean(p, x, 3), 3.0);
}

TEST(Enumeration, UnbiasedOnRandomRidge) {
  RngStream rng(4);
  for (std::size_t n = 2; n <= 8; ++n) {
    const auto p = ridge(n, 3, 100 + n);
    for (int t = 0; t < 5; ++t) {
      const Vector x = rng.normal_vector(3);
      const double f = full_value(p, x);
      for (std::size_t tau = 1; tau <= n; ++tau) EXPECT_NEAR(enumerate_minibatch_mean(p, x, tau), f, 1e-12);
    }
  }
}

TEST(Enumeration, GuardAgainstBlowup) {
  const auto p = constant_components(std::vector<double>(40, 1.0));
  EXPECT_THROW(enumerate_minibatch_mean(p, Vector::Zero(1), 20), InstanceTooLarge);
  EXPECT_THROW(minibatch_variance(p, Vector::Zero(1), 20), InstanceTooLarge);
  EXPECT_THROW(enumerate_minibatch_mean(p, Vector::Zero(1), 41), InvalidBatchSize);
  EXPECT_NO_THROW(enumerate_minibatch_mean(p, Vector::Zero(1), 3));
}

TEST(Variance, ThreeComponentExample) {
  const auto p = constant_components({0.0, 3.0, 6.0});
  const VarianceReport r = minibatch_variance(p, Vector::Zero(1), 2);
  EXPECT_DOUBLE_EQ(r.b_stat, 6.0);
  EXPECT_DOUBLE_EQ(r.closed_form, 1.5);
  EXPECT_DOUBLE_EQ(r.exact_variance, 1.5);
  EXPECT_DOUBLE_EQ(r.bound, 3.0);
  EXPECT_DOUBLE_EQ(closed_form_variance(p, Vector::Zero(1), 2), 1.5);
}

TEST(Variance, FullBatchAndEqualComponentsAreZero) {
  const auto p = constant_components({0.0, 3.0, 6.0});
  EXPECT_EQ(minibatch_variance(p, Vector::Zero(1), 3).exact_variance, 0.0);
  EXPECT_EQ(closed_form_variance(p, Vector::Zero(1), 3), 0.0);
  const auto q = constant_components({2.5, 2.5, 2.5, 2.5});
  for (std::size_t tau = 1; tau <= 4; ++tau) EXPECT_EQ(minibatch_variance(q, Vector::Zero(1), tau).exact_variance, 0.0);
}

TEST(Variance, ClosedFormAndBoundOnRandomRidge) {
  RngStream rng(5);
  for (std::size_t n = 2; n <= 8; ++n) {
    const auto p = ridge(n, 3, 200 + n);
    std::vector<Vector> probes;
    for (int t = 0; t < 5; ++t) probes.push_back(rng.normal_vector(3));
    for (const Vector& x : probes) {
      for (std::size_t tau = 1; tau <= n; ++tau) {
        const VarianceReport r = minibatch_variance(p, x, tau, probes);
        EXPECT_NEAR(r.exact_variance, r.closed_form, 1e-12) << "n=" << n << " tau=" << tau;
        EXPECT_LE(r.exact_variance, r.bound + 1e-12);
        EXPECT_GE(r.a_stat, r.b_stat);
      }
    }
  }
}

TEST(Variance, NeedsTwoComponents) {
  EXPECT_THROW(minibatch_variance(constant_components({1.0}), Vector::Zero(1), 1), InvalidArgument);
}

TEST(Descent, ZeroStepFullBatchCollapses) {
  const auto p = ridge(6, 2, 3);
  RngStream rng(1);
  const Vector x = Vector::Ones(2);
  const DescentCheck c = check_descent_lemma(p, x, 0.0, 6, DirectionDistribution::coordinate_basis(2), 100, rng);
  EXPECT_EQ(c.lhs, full_value(p, x));
  EXPECT_EQ(c.rhs, full_value(p, x));
  EXPECT_EQ(c.slack, 0.0);
  EXPECT_TRUE(c.passed);
}

TEST(Descent, OneDimensionalQuadraticIsTight) {
  RngStream rng(2);
  const DescentCheck c =
      check_descent_lemma(half_square(), Vector::Ones(1), 0.1, 1, DirectionDistribution::coordinate_basis(1), 10000, rng);
  EXPECT_NEAR(c.lhs, 0.405, 1e-15);
  EXPECT_NEAR(c.rhs, 0.405, 1e-15);
  EXPECT_EQ(c.lhs_se, 0.0);
  EXPECT_TRUE(c.passed);
}

TEST(Descent, SlackWithinThreeStandardErrorsOnRidge) {
  const auto p = ridge(50, 5, 9);
  const auto dist = DirectionDistribution::coordinate_basis(5);
  RngStream rng(10);
  for (int t = 0; t < 50; ++t) {
    const Vector x = rng.normal_vector(5);
    const double alpha = std::pow(10.0, -3.0 + 2.0 * rng.uniform01());
    const std::size_t tau = std::vector<std::size_t>{1, 5, 10, 25, 50}[rng.index(5)];
    const DescentCheck c = check_descent_lemma(p, x, alpha, tau, dist, 10000, rng);
    EXPECT_GE(c.slack, -3.0 * c.lhs_se - 1e-12 * (1.0 + std::abs(c.rhs))) << "alpha=" << alpha << " tau=" << tau;
  }
}

TEST(Descent, VarianceTermDominatesForSingleComponentBatches) {
  const auto p = ridge(30, 4, 21);
  const auto dist = DirectionDistribution::coordinate_basis(4);
  RngStream rng(11);
  for (int t = 0; t < 5; ++t) {
    const Vector x = 3.0 * rng.normal_vector(4);
    const DescentCheck c = check_descent_lemma(p, x, 0.01, 1, dist, 10000, rng);
    EXPECT_GE(c.slack, 0.0);
  }
}

TEST(Descent, RequiresGradients) {
  const FunctionalProblem p(2, 1, [](std::size_t, const Vector& x) { return x[0]; });
  RngStream rng(1);
  EXPECT_THROW(check_descent_lemma(p, Vector::Zero(1), 0.1, 1, DirectionDistribution::coordinate_basis(1), 100, rng),
               UnsupportedMethod);
}

TEST(Bounds, NonconvexWorkedExample) {
  const auto in = nonconvex_example();
  EXPECT_DOUBLE_EQ(optimal_stepsize(1.0, 0.1, 1.0), 0.1);
  EXPECT_EQ(nonconvex_iteration_bound(in, 0.1), 1999u);
}

TEST(Bounds, OptimalStepsizeValues) {
  EXPECT_DOUBLE_EQ(optimal_stepsize(0.1, 0.01, 2.0), 5e-4);
  EXPECT_DOUBLE_EQ(optimal_stepsize(1.0, 1.0, 1.0), 1.0);
}

TEST(Bounds, OptimalStepsizeMaximizesDenominator) {
  const double mu = 0.3, eps = 0.2, l = 2.0;
  const double hi = 2.0 * mu * eps / l;
  double best_alpha = 0.0, best = -1e300;
  const int m = 1000;
  for (int i = 1; i <= m; ++i) {
    const double a = hi * i / m;
    const double den = mu * eps * a - 0.5 * l * a * a;
    if (den > best) {
      best = den;
      best_alpha = a;
    }
  }
  EXPECT_LE(std::abs(best_alpha - optimal_stepsize(mu, eps, l)), hi / m);
}

TEST(Bounds, HalvingEpsilonQuadruplesIterations) {
  for (double eps : {0.1, 0.05, 0.02}) {
    auto in = nonconvex_example();
    in.epsilon = eps;
    const std::uint64_t k1 = nonconvex_iteration_bound(in, optimal_stepsize(1.0, eps, 1.0));
    in.epsilon = eps / 2.0;
    const std::uint64_t k2 = nonconvex_iteration_bound(in, optimal_stepsize(1.0, eps / 2.0, 1.0));
    EXPECT_EQ(k2 + 1, 4 * (k1 + 1)) << "eps = " << eps;
  }
}

TEST(Bounds, NonconvexDivergesAsSigmaApproachesLimit) {
  auto in = nonconvex_example();
  const double limit = 0.1 * 0.1 / 2.0;
  std::uint64_t prev = 0;
  for (double frac : {0.0, 0.5, 0.9, 0.99, 0.999, 0.99999}) {
    in.sigma_batch = frac * limit;
    const std::uint64_t k = nonconvex_iteration_bound(in, 0.1);
    EXPECT_GT(k, prev);
    prev = k;
  }
  EXPECT_GT(prev, 100000000u);
  in.sigma_batch = limit;
  EXPECT_THROW(nonconvex_iteration_bound(in, 0.1), BoundInfeasible);
}

TEST(Bounds, NonconvexMonotoneInGapAndEpsilon) {
  auto in = nonconvex_example();
  std::uint64_t prev = 0;
  for (double gap : {1.0, 2.0, 5.0, 10.0, 100.0}) {
    in.f0 = gap;
    const std::uint64_t k = nonconvex_iteration_bound(in, 0.1);
    EXPECT_GE(k, prev);
    prev = k;
  }
  in = nonconvex_example();
  prev = std::numeric_limits<std::uint64_t>::max();
  for (double eps : {0.01, 0.02, 0.05, 0.1, 0.5}) {
    in.epsilon = eps;
    const std::uint64_t k = nonconvex_iteration_bound(in, optimal_stepsize(1.0, eps, 1.0));
    EXPECT_LE(k, prev);
    prev = k;
  }
}

TEST(Bounds, NonconvexStepsizeInterval) {
  auto in = nonconvex_example();
  in.sigma_batch = 0.001;
  const auto [lo, hi] = nonconvex_stepsize_interval(in);
  // Roots of 0.1 a - a^2 / 2 - 0.001 = 0.
  EXPECT_NEAR(lo, 0.1 - std::sqrt(0.008), 1e-15);
  EXPECT_NEAR(hi, 0.1 + std::sqrt(0.008), 1e-15);
  EXPECT_THROW(nonconvex_iteration_bound(in, lo), BoundInfeasible);
  EXPECT_THROW(nonconvex_iteration_bound(in, hi * 1.01), BoundInfeasible);
}

TEST(Bounds, ConvexWorkedExample) {
  const ConvexBound b = convex_iteration_bound(convex_example());
  EXPECT_EQ(b.iterations, 37u);
  EXPECT_DOUBLE_EQ(b.alpha, 0.1);
  EXPECT_EQ(static_cast<std::uint64_t>(std::ceil(10.0 * std::log(40.0))), 37u);
}

TEST(Bounds, ConvexBoundaryGivesZero) {
  auto in = convex_example();
  in.f0 = in.f_star + in.epsilon / 4.0;
  EXPECT_EQ(convex_iteration_bound(in).iterations, 0u);
}

TEST(Bounds, ConvexMonotoneInEpsilon) {
  auto in = convex_example();
  const std::uint64_t k_small = convex_iteration_bound(in).iterations;
  in.epsilon = 0.1 * 10.0;
  EXPECT_LT(convex_iteration_bound(in).iterations, k_small);
}

TEST(Bounds, ConvexPreconditions) {
  auto in = convex_example();
  in.sigma_batch = 0.1 * 0.1 / 4.0;
  EXPECT_THROW(convex_iteration_bound(in), BoundInfeasible);
  in = convex_example();
  in.f0 = in.f_star;
  EXPECT_THROW(convex_iteration_bound(in), BoundInfeasible);
  in = convex_example();
  in.epsilon = 0.0;
  EXPECT_THROW(convex_iteration_bound(in), BoundInfeasible);
}
