#include <array>
#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "mistp/data.hpp"
#include "mistp/harness.hpp"
#include "mistp/optimizers.hpp"

using namespace mistp;

namespace {

/// n copies of f(x) = c/2 ||x||^2.
FunctionalProblem half_squared_norm(std::size_t n, std::size_t d, double c = 1.0) {
  return FunctionalProblem(
      n, d, [c](std::size_t, const Vector& x) { return 0.5 * c * x.squaredNorm(); },
      [c](std::size_t, const Vector& x, Vector& g) { g = c * x; });
}

/// f(x) = c . x for every component.
FunctionalProblem linear(const Vector& c) {
  return FunctionalProblem(
      1, static_cast<std::size_t>(c.size()), [c](std::size_t, const Vector& x) { return c.dot(x); },
      [c](std::size_t, const Vector&, Vector& g) { g = c; });
}

RidgeProblem small_ridge(std::size_t n = 40, std::size_t d = 5, std::uint64_t seed = 12) {
  const Dataset ds = synthetic_regression(n, d, 0.3, seed);
  return RidgeProblem(ds.features, ds.labels, 1.0 / static_cast<double>(n));
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) out[i++] = e;
  return out;
}

OptimizerSpec spec_for(Method m, double alpha, std::size_t tau) {
  OptimizerSpec s;
  s.method = m;
  s.alpha = alpha;
  s.tau = tau;
  return s;
}

}  // namespace

TEST(SampleMinibatch, FullBatchWhenTauEqualsN) {
  RngStream rng(1);
  for (int t = 0; t < 10; ++t) EXPECT_EQ(sample_minibatch(7, 7, rng), MinibatchIndex::full(7));
}

TEST(SampleMinibatch, SubsetFrequenciesAreUniform) {
  RngStream rng(42);
  std::map<std::vector<std::size_t>, int> counts;
  const int m = 60000;
  for (int t = 0; t < m; ++t) ++counts[sample_minibatch(4, 2, rng).indices()];
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [subset, c] : counts) EXPECT_NEAR(static_cast<double>(c) / m, 1.0 / 6.0, 0.01);
}

TEST(SampleMinibatch, SingleIndexFrequencies) {
  RngStream rng(43);
  std::array<int, 5> counts{};
  const int m = 50000;
  for (int t = 0; t < m; ++t) ++counts[sample_minibatch(5, 1, rng).indices()[0]];
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / m, 0.2, 0.01);
}

TEST(SampleMinibatch, Errors) {
  RngStream rng(1);
  EXPECT_THROW(sample_minibatch(3, 4, rng), InvalidBatchSize);
  EXPECT_THROW(sample_minibatch(3, 0, rng), InvalidBatchSize);
}

TEST(SampleMinibatch, WithReplacementAllowsRepeats) {
  RngStream rng(3);
  bool repeated = false;
  for (int t = 0; t < 200 && !repeated; ++t) {
    const MinibatchIndex b = sample_minibatch(3, 3, rng, true);
    EXPECT_EQ(b.size(), 3u);
    for (std::size_t i = 1; i < b.size(); ++i) repeated = repeated || b.indices()[i] == b.indices()[i - 1];
  }
  EXPECT_TRUE(repeated);
}

TEST(ThreePoint, ChoiceOrderAndTies) {
  EXPECT_EQ(three_point_choice(1.0, 2.25, 0.25), 2);
  EXPECT_EQ(three_point_choice(1.0, 1.0, 1.0), 0);
  EXPECT_EQ(three_point_choice(2.0, 1.0, 1.0), 1);
  EXPECT_EQ(three_point_choice(NAN, 3.0, INFINITY), 1);
  EXPECT_EQ(three_point_choice(NAN, NAN, INFINITY), -1);
}

TEST(MistpStep, OneDimensionalQuadratic) {
  const FunctionalProblem p(1, 1, [](std::size_t, const Vector& x) { return x[0] * x[0]; });
  OptimizerState st(vec({1.0}), {1, 2});
  mistp_step(p, st, 0.5, DirectionDistribution::coordinate_basis(1), 1);
  EXPECT_EQ(st.x[0], 0.5);
  EXPECT_EQ(st.last_choice, 2);
  EXPECT_EQ(st.last_batch_value, 0.25);
  EXPECT_EQ(st.queries, 3u);
}

TEST(MistpStep, OrthogonalDirectionOnLinearStays) {
  const auto p = linear(vec({1.0, 0.0}));
  const Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(2, 2);
  // Both basis columns; only e_2 is orthogonal to c, and it must be rejected.
  const auto dist = DirectionDistribution::orthonormal_set(basis);
  OptimizerState st(vec({3.0, 4.0}), {5, 6});
  for (int t = 0; t < 50; ++t) {
    const Vector before = st.x;
    mistp_step(p, st, 0.25, dist, 1);
    if (st.last_direction[1] != 0.0) {
      EXPECT_EQ(st.x, before);
      EXPECT_EQ(st.last_choice, 0);
    }
  }
}

TEST(MistpStep, ZeroStepsizeKeepsIterateButCounts) {
  const auto p = small_ridge();
  OptimizerState st(Vector::Ones(5), {1, 2});
  mistp_step(p, st, 0.0, DirectionDistribution::unit_sphere(5), 7);
  EXPECT_EQ(st.x, Vector::Ones(5));
  EXPECT_EQ(st.queries, 21u);
}

TEST(MistpStep, AllNonFiniteThrows) {
  const FunctionalProblem p(1, 1, [](std::size_t, const Vector&) { return std::numeric_limits<double>::quiet_NaN(); });
  OptimizerState st(vec({0.0}), {1, 2});
  EXPECT_THROW(mistp_step(p, st, 0.1, DirectionDistribution::unit_sphere(1), 1), NumericFailure);
}

TEST(MistpStep, MinibatchValueNeverIncreases) {
  const auto p = small_ridge();
  RngStream init(8);
  OptimizerState st(init.normal_vector(5), {11, 12});
  const auto dist = DirectionDistribution::scaled_gaussian(5);
  for (int t = 0; t < 500; ++t) {
    mistp_step(p, st, 0.3, dist, 4);
    EXPECT_LE(st.last_batch_value, st.last_batch_value_before);
    EXPECT_EQ(eval_minibatch(p, st.last_batch, st.x), st.last_batch_value);
  }
}

TEST(MistpStep, ScaleEquivariantChoice) {
  const auto p = small_ridge();
  const FunctionalProblem scaled(p.num_components(), p.dimension(),
                                 [&p](std::size_t i, const Vector& x) { return 7.5 * p.component_value(i, x); });
  RngStream init(2);
  const Vector x0 = init.normal_vector(5);
  OptimizerState a(x0, {21, 22}), b(x0, {21, 22});
  const auto dist = DirectionDistribution::unit_sphere(5);
  for (int t = 0; t < 200; ++t) {
    mistp_step(p, a, 0.2, dist, 3);
    mistp_step(scaled, b, 0.2, dist, 3);
    ASSERT_EQ(a.last_choice, b.last_choice) << "step " << t;
    ASSERT_EQ(a.x, b.x);
  }
}

TEST(StpStep, MatchesMistpWithFullBatch) {
  const auto p = small_ridge();
  const Vector x0 = Vector::Ones(5);
  OptimizerState a(x0, {3, 4}), b(x0, {3, 4});
  const auto dist = DirectionDistribution::unit_sphere(5);
  for (int t = 0; t < 100; ++t) {
    stp_step(p, a, 0.1, dist);
    mistp_step(p, b, 0.1, dist, p.num_components());
  }
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.queries, 3u * 40 * 100);
}

TEST(StpStep, FullObjectiveIsMonotone) {
  const auto p = half_squared_norm(3, 4, 2.0);
  OptimizerState st(Vector::Constant(4, 3.0), {9, 10});
  const auto dist = DirectionDistribution::scaled_gaussian(4);
  double prev = full_value(p, st.x);
  for (int t = 0; t < 300; ++t) {
    stp_step(p, st, 0.2, dist);
    const double f = full_value(p, st.x);
    EXPECT_LE(f, prev);
    prev = f;
  }
}

TEST(SgdStep, OneDimensionalQuadratic) {
  const auto p = half_squared_norm(1, 1);
  OptimizerState st(vec({1.0}), {1, 2});
  sgd_step(p, st, 0.1, 1);
  EXPECT_DOUBLE_EQ(st.x[0], 0.9);
  EXPECT_EQ(st.queries, 1u);
}

TEST(SgdStep, FixedPointAtRidgeMinimizer) {
  const auto p = small_ridge();
  const Vector xs = p.closed_form_minimizer();
  OptimizerState st(xs, {1, 2});
  sgd_step(p, st, 0.1, p.num_components());
  EXPECT_LE((st.x - xs).norm(), 1e-12);
}

TEST(SgdStep, UnsupportedWithoutGradient) {
  const MlpProblem mlp({2, 3, 2}, Matrix::Ones(2, 2), {0, 1});
  OptimizerState st(Vector::Zero(static_cast<Eigen::Index>(mlp.dimension())), {1, 2});
  EXPECT_THROW(sgd_step(mlp, st, 0.1, 1), UnsupportedMethod);
}

TEST(Rsgf, WorkedExample) {
  const auto p = half_squared_norm(1, 2);
  std::uint64_t q = 0;
  const Vector v = rsgf_gradient_estimate(p, MinibatchIndex::full(1), vec({1.0, 0.0}), 0.1, vec({0.0, 1.0}), q);
  const Vector x_next = vec({1.0, 0.0}) - 1.0 * v;
  EXPECT_NEAR(x_next[0], 1.0, 1e-15);
  EXPECT_NEAR(x_next[1], -0.05, 1e-14);
  EXPECT_EQ(q, 2u);
}

TEST(Rsgf, LinearIsExactForAnyMu) {
  const Vector c = vec({1.0, -2.0, 0.5});
  const auto p = linear(c);
  RngStream rng(4);
  const auto sphere = DirectionDistribution::unit_sphere(3);
  for (double mu : {0.5, 1e-2, 1e-4}) {
    const Vector s = sphere.sample(rng);
    std::uint64_t q = 0;
    const Vector v = rsgf_gradient_estimate(p, MinibatchIndex::full(1), vec({0.3, 0.1, -0.7}), mu, s, q);
    EXPECT_LE((v - c.dot(s) * s).norm(), 1e-10);
  }
}

TEST(Rsgf, MonteCarloMeanIsGradientOverD) {
  const auto p = half_squared_norm(1, 5);
  const Vector x = vec({1.0, -0.5, 2.0, 0.0, 0.3});
  const auto sphere = DirectionDistribution::unit_sphere(5);
  RngStream rng(77);
  Vector acc = Vector::Zero(5);
  std::uint64_t q = 0;
  const int m = 100000;
  for (int t = 0; t < m; ++t) acc += rsgf_gradient_estimate(p, MinibatchIndex::full(1), x, 1e-6, sphere.sample(rng), q);
  const Vector mean = acc / m;
  EXPECT_LE((mean - x / 5.0).norm() / (x / 5.0).norm(), 0.05);
}

TEST(Rsgf, Errors) {
  const auto p = half_squared_norm(1, 2);
  OptimizerState st(Vector::Ones(2), {1, 2});
  EXPECT_THROW(rsgf_step(p, st, 0.1, 0.0, 1), InvalidSmoothing);
  EXPECT_THROW(rsgf_step(p, st, 0.1, -1e-3, 1), InvalidSmoothing);
}

TEST(ZoSvrg, EstimatorWorkedExample) {
  const auto p = half_squared_norm(1, 3);
  std::uint64_t q = 0;
  const Vector v = zo_svrg_gradient_estimate(p, MinibatchIndex::full(1), vec({1.0, 0.0, 0.0}), 0.01, vec({1.0, 0.0, 0.0}), q);
  EXPECT_NEAR(v[0], 3.015, 1e-10);
  EXPECT_EQ(v[1], 0.0);
  EXPECT_EQ(v[2], 0.0);
}

TEST(ZoSvrg, EstimatorIsParallelToDirection) {
  const auto p = small_ridge();
  RngStream rng(6);
  const auto sphere = DirectionDistribution::unit_sphere(5);
  for (int t = 0; t < 20; ++t) {
    const Vector s = sphere.sample(rng);
    std::uint64_t q = 0;
    const Vector v = zo_svrg_gradient_estimate(p, sample_minibatch(40, 5, rng), rng.normal_vector(5), 1e-4, s, q);
    EXPECT_LE((v - v.dot(s) * s).norm(), 1e-12 * (1.0 + v.norm()));
  }
}

TEST(ZoSvrg, MonteCarloMeanIsGradient) {
  const auto p = half_squared_norm(1, 4);
  const Vector x = vec({0.5, -1.0, 2.0, 1.0});
  const auto sphere = DirectionDistribution::unit_sphere(4);
  RngStream rng(5);
  Vector acc = Vector::Zero(4);
  std::uint64_t q = 0;
  const int m = 100000;
  for (int t = 0; t < m; ++t) acc += zo_svrg_gradient_estimate(p, MinibatchIndex::full(1), x, 1e-6, sphere.sample(rng), q);
  EXPECT_LE((acc / m - x).norm() / x.norm(), 0.05);
}

TEST(ZoSvrg, UpdateEqualsSnapshotEstimateAtSnapshot) {
  const auto p = small_ridge();
  OptimizerState st(Vector::Ones(5), {1, 2});
  zo_svrg_step(p, st, 0.05, 1e-4, 4, 10);
  EXPECT_EQ(st.k, 1u);
  // The first step evaluates at x = snapshot, so both minibatch terms cancel exactly.
  EXPECT_EQ(st.last_update, st.snapshot_estimate);
  EXPECT_EQ(st.queries, 2u * 40 + 4u * 4);
}

TEST(ZoSvrg, PeriodOneFullBatchUsesFreshSnapshotEachStep) {
  const auto p = small_ridge(10, 3);
  OptimizerState st(Vector::Ones(3), {1, 2});
  for (int t = 0; t < 5; ++t) {
    const Vector before = st.x;
    zo_svrg_step(p, st, 0.05, 1e-4, 10, 1);
    EXPECT_EQ(st.snapshot, before);
    EXPECT_EQ(st.last_update, st.snapshot_estimate);
  }
  EXPECT_EQ(st.queries, 5u * (2 * 10 + 4 * 10));
}

TEST(ZoCd, QuadraticIsExact) {
  const auto p = half_squared_norm(1, 2);
  OptimizerState st(vec({1.0, 2.0}), {1, 2});
  zo_cd_step(p, st, 0.1, 0.37, 1);
  EXPECT_NEAR(st.x[0], 0.9, 1e-14);
  EXPECT_NEAR(st.x[1], 1.8, 1e-14);
  EXPECT_EQ(st.queries, 4u);
}

TEST(ZoCd, LinearIsExact) {
  const Vector c = vec({2.0, -1.0, 0.25});
  std::uint64_t q = 0;
  const Vector g = zo_cd_gradient_estimate(linear(c), MinibatchIndex::full(1), vec({1.0, 1.0, 1.0}), 0.01, q);
  EXPECT_LE((g - c).norm(), 1e-12);
}

TEST(ZoCd, CloseToExactGradientOnLogistic) {
  const Dataset ds = add_intercept(synthetic_classification(30, 4, 0.0, 2));
  const LogisticProblem p(ds.features, ds.labels, 0.01);
  RngStream rng(8);
  for (int t = 0; t < 20; ++t) {
    const Vector x = rng.normal_vector(5);
    const MinibatchIndex b = sample_minibatch(30, 6, rng);
    std::uint64_t q = 0;
    const Vector g = zo_cd_gradient_estimate(p, b, x, 1e-4, q);
    const Vector exact = minibatch_gradient(p, b, x);
    EXPECT_LE((g - exact).norm(), 1e-6 * (1.0 + exact.norm()));
  }
}

TEST(Run, ZeroBudgetRecordsOnlyStart) {
  const auto p = small_ridge();
  const RunTrace tr = run(spec_for(Method::MiSTP, 0.1, 5), p, Vector::Ones(5), Budget::epochs(0.0), {1, 2});
  ASSERT_EQ(tr.records.size(), 1u);
  EXPECT_EQ(tr.records[0].k, 0u);
  EXPECT_EQ(tr.records[0].queries, 0u);
  EXPECT_EQ(tr.records[0].f, full_value(p, Vector::Ones(5)));
}

TEST(Run, DeterministicTraces) {
  const auto p = small_ridge();
  for (Method m : {Method::MiSTP, Method::STP, Method::SGD, Method::RSGF, Method::ZOSVRG, Method::ZOCD}) {
    const auto spec = spec_for(m, 0.01, 4);
    const RunTrace a = run(spec, p, Vector::Ones(5), Budget::epochs(5.0), {7, 8});
    const RunTrace b = run(spec, p, Vector::Ones(5), Budget::epochs(5.0), {7, 8});
    EXPECT_EQ(a.records, b.records) << to_string(m);
    EXPECT_EQ(a.final_x, b.final_x);
  }
}

TEST(Run, QueryAccountingMatchesIndependentCounter) {
  const auto ridge = small_ridge(30, 4);
  for (Method m : {Method::MiSTP, Method::STP, Method::SGD, Method::RSGF, Method::ZOSVRG, Method::ZOCD}) {
    CountingProblem counted(ridge);
    const auto spec = spec_for(m, 0.01, 4);
    const RunTrace tr = run(spec, counted, Vector::Ones(4), Budget::epochs(12.0), {1, 2});
    ASSERT_FALSE(tr.failed);
    // Recording evaluates f(x_k) in full; subtract that instrumentation.
    const std::uint64_t instrumentation = 30u * tr.records.size();
    std::uint64_t extra = 0;  // f_B re-evaluations for methods that do not compute it
    if (m != Method::MiSTP && m != Method::STP) extra = static_cast<std::uint64_t>(spec.batch_size(30)) * (tr.records.size() - 1);
    EXPECT_EQ(counted.total_calls() - instrumentation - extra, tr.queries) << to_string(m);
    EXPECT_EQ(tr.queries, analytic_queries(spec, 30, 4, tr.iterations)) << to_string(m);
    EXPECT_LE(tr.queries, 12u * 30);
  }
}

TEST(Run, EpochsAreQueriesOverN) {
  const auto p = small_ridge();
  const RunTrace tr = run(spec_for(Method::RSGF, 0.01, 3), p, Vector::Ones(5), Budget::epochs(3.0), {1, 2});
  for (std::size_t i = 1; i < tr.records.size(); ++i) {
    EXPECT_EQ(tr.records[i].epoch, static_cast<double>(tr.records[i].queries) / 40.0);
    EXPECT_GT(tr.records[i].k, tr.records[i - 1].k);
    EXPECT_GE(tr.records[i].epoch, tr.records[i - 1].epoch);
  }
}

TEST(Run, RecordStrideKeepsEndpoints) {
  const auto p = small_ridge();
  RunOptions opts;
  opts.record_stride = 7;
  const RunTrace tr = run(spec_for(Method::MiSTP, 0.1, 5), p, Vector::Ones(5), Budget::iterations(30), {1, 2}, opts);
  ASSERT_FALSE(tr.records.empty());
  EXPECT_EQ(tr.records.front().k, 0u);
  EXPECT_EQ(tr.records.back().k, 30u);
  for (std::size_t i = 1; i + 1 < tr.records.size(); ++i) EXPECT_EQ(tr.records[i].k % 7, 0u);
}

TEST(Run, NumericFailureKeepsPartialTrace) {
  const FunctionalProblem p(2, 1, [](std::size_t, const Vector& x) { return std::exp(std::exp(x[0] * x[0])); },
                            [](std::size_t, const Vector& x, Vector& g) { g = x * 1e300; });
  const RunTrace tr = run(spec_for(Method::SGD, 1.0, 1), p, vec({1.0}), Budget::iterations(10), {1, 2});
  EXPECT_TRUE(tr.failed);
  EXPECT_FALSE(tr.failure.empty());
  EXPECT_GE(tr.records.size(), 1u);
}

TEST(Run, PairedStreamsShareMinibatches) {
  const auto p = small_ridge();
  RunOptions opts;
  opts.capture_batches = true;
  const std::uint64_t seed = 123;
  const RunTrace a =
      run(spec_for(Method::MiSTP, 0.1, 5), p, Vector::Ones(5), Budget::iterations(50), derive_streams(seed, Method::MiSTP, true), opts);
  const RunTrace b =
      run(spec_for(Method::SGD, 0.01, 5), p, Vector::Ones(5), Budget::iterations(50), derive_streams(seed, Method::SGD, true), opts);
  EXPECT_EQ(a.batches, b.batches);
  const RunTrace c =
      run(spec_for(Method::SGD, 0.01, 5), p, Vector::Ones(5), Budget::iterations(50), derive_streams(seed, Method::SGD, false), opts);
  EXPECT_NE(a.batches, c.batches);
}

TEST(Run, BudgetNeverOvershoots) {
  const auto p = small_ridge(40, 5);
  for (std::size_t tau : {1u, 3u, 7u, 40u}) {
    const auto spec = spec_for(Method::ZOSVRG, 0.001, tau);
    const RunTrace tr = run(spec, p, Vector::Ones(5), Budget::epochs(2.5), {1, 2});
    EXPECT_LE(tr.queries, 100u);
    // The next step would not have fit.
    EXPECT_GT(analytic_queries(spec, 40, 5, tr.iterations + 1), 100u) << "tau = " << tau;
  }
}

TEST(Run, InvalidConfigurations) {
  const auto p = small_ridge();
  EXPECT_THROW(run(spec_for(Method::MiSTP, 0.1, 41), p, Vector::Ones(5), Budget::epochs(1.0), {1, 2}), InvalidBatchSize);
  EXPECT_THROW(run(spec_for(Method::MiSTP, 0.1, 4), p, Vector::Ones(4), Budget::epochs(1.0), {1, 2}), ShapeError);
  EXPECT_THROW(run(spec_for(Method::MiSTP, -0.1, 4), p, Vector::Ones(5), Budget::epochs(1.0), {1, 2}), InvalidArgument);
  auto bad_mu = spec_for(Method::RSGF, 0.1, 4);
  bad_mu.mu = 1.5;
  EXPECT_THROW(run(bad_mu, p, Vector::Ones(5), Budget::epochs(1.0), {1, 2}), InvalidSmoothing);
  EXPECT_THROW(parse_method("adam"), InvalidArgument);
}

TEST(Run, MistpReachesFivePercentGapOnRidge) {
  const auto p = small_ridge(100, 5, 4);
  const double f_star = full_value(p, p.closed_form_minimizer());
  const Vector x0 = Vector::Constant(5, 2.0);
  const double gap0 = full_value(p, x0) - f_star;
  auto spec = spec_for(Method::MiSTP, 0.05, 10);
  spec.dist = DirectionKind::UnitSphere;
  const RunTrace tr = run(spec, p, x0, Budget::epochs(300.0), {5, 6});
  double best = gap0;
  for (const auto& r : tr.records) best = std::min(best, r.f - f_star);
  EXPECT_LE(best, 0.05 * gap0);
}

TEST(ZoSvrg, DecreasesRidgeObjectiveOverTwoThousandSteps) {
  const auto p = small_ridge(40, 5, 2);
  auto spec = spec_for(Method::ZOSVRG, 0.01, 4);
  const Vector x0 = Vector::Constant(5, 2.0);
  const RunTrace tr = run(spec, p, x0, Budget::iterations(2000), {3, 4}, RunOptions{500, false});
  ASSERT_FALSE(tr.failed);
  ASSERT_EQ(tr.iterations, 2000u);
  for (std::size_t i = 1; i < tr.records.size(); ++i) EXPECT_LT(tr.records[i].f, tr.records[i - 1].f);
}
