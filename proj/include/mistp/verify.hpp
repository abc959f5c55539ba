#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "mistp/data.hpp"
#include "mistp/directions.hpp"
#include "mistp/objective.hpp"
#include "mistp/theory.hpp"

namespace mistp {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Small random ridge instance, lambda = 1/n.
inline RidgeProblem random_ridge(std::size_t n, std::size_t d, std::uint64_t seed) {
  const Dataset ds = synthetic_regression(n, d, 0.5, seed);
  return RidgeProblem(ds.features, ds.labels, 1.0 / static_cast<double>(n));
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

}  // namespace detail

/// Exact-enumeration oracles, Monte-Carlo checks of the direction constants
/// and the descent inequality, and the worked bound examples.
inline std::vector<CheckResult> run_verification_suite(std::uint64_t seed = 1, std::size_t descent_samples = 10000) {
  std::vector<CheckResult> out;
  RngStream rng(seed);

  {  // unbiasedness and variance closed form over n <= 8
    double worst_mean = 0.0, worst_var = 0.0, worst_bound = -1e300;
    for (std::size_t n : {4u, 6u, 8u}) {
      const RidgeProblem p = random_ridge(n, 3, seed + n);
      std::vector<Vector> probes;
      for (int t = 0; t < 5; ++t) probes.push_back(rng.normal_vector(3));
      for (const Vector& x : probes) {
        const double f = full_value(p, x);
        for (std::size_t tau = 1; tau <= n; ++tau) {
          worst_mean = std::max(worst_mean, std::abs(enumerate_minibatch_mean(p, x, tau) - f));
          const VarianceReport r = minibatch_variance(p, x, tau, probes);
          worst_var = std::max(worst_var, std::abs(r.exact_variance - r.closed_form));
          worst_bound = std::max(worst_bound, r.exact_variance - r.bound);
        }
      }
    }
    out.push_back({"minibatch mean is unbiased (enumeration)", worst_mean <= 1e-12, "max |E f_B - f| = " + detail::fmt(worst_mean)});
    out.push_back({"variance equals B(n-tau)/(tau(n-1))", worst_var <= 1e-12, "max abs error = " + detail::fmt(worst_var)});
    out.push_back({"variance <= A/tau", worst_bound <= 1e-12, "max excess = " + detail::fmt(worst_bound)});
  }

  {  // mu_D lower bound per distribution
    bool ok = true;
    double worst = 1e300;
    for (std::size_t d : {2u, 5u, 20u}) {
      for (DirectionKind k : {DirectionKind::UnitSphere, DirectionKind::ScaledGaussian, DirectionKind::CoordinateBasis,
                              DirectionKind::OrthonormalSet}) {
        const auto dist = DirectionDistribution::make(k, d, &rng);
        const MuDInfo info = dist.mu_d_info();
        for (int t = 0; t < 3; ++t) {
          const Vector g = rng.normal_vector(static_cast<Eigen::Index>(d));
          const double ratio = empirical_mu_d(dist, g, 20000, rng) / (*info.mu_d * dist.norm_d(g));
          worst = std::min(worst, ratio);
          ok = ok && ratio >= 0.95;
        }
      }
    }
    out.push_back({"E|<g,s>| >= 0.95 mu_D ||g||_D", ok, "min ratio = " + detail::fmt(worst)});
  }

  {  // descent inequality on ridge with coordinate directions
    const RidgeProblem p = random_ridge(50, 5, seed + 100);
    const auto dist = DirectionDistribution::coordinate_basis(5);
    bool ok = true;
    double worst = 1e300;
    for (int t = 0; t < 10; ++t) {
      const Vector x = rng.normal_vector(5);
      const double alpha = std::pow(10.0, -3.0 + 2.0 * rng.uniform01());
      const std::size_t tau = std::vector<std::size_t>{5, 10, 50}[rng.index(3)];
      const DescentCheck c = check_descent_lemma(p, x, alpha, tau, dist, descent_samples, rng);
      ok = ok && c.passed;
      worst = std::min(worst, c.slack / std::max(c.lhs_se, 1e-300));
    }
    out.push_back({"one-step descent inequality (coordinate basis)", ok, "min slack/SE = " + detail::fmt(worst)});
  }

  {  // worked bound substitutions
    BoundInputs a;
    a.f0 = 10.0;
    a.f_star = 0.0;
    a.mu_d = 1.0;
    a.epsilon = 0.1;
    a.L = 1.0;
    const std::uint64_t k1 = nonconvex_iteration_bound(a, optimal_stepsize(1.0, 0.1, 1.0));
    out.push_back({"nonconvex bound worked example", k1 == 1999, "K = " + std::to_string(k1)});

    BoundInputs b;
    b.f0 = 1.0;
    b.f_star = 0.0;
    b.mu_d = 1.0;
    b.epsilon = 0.1;
    b.L = 1.0;
    b.r0 = 1.0;
    const ConvexBound cb = convex_iteration_bound(b);
    out.push_back({"convex bound worked example", cb.iterations == 37 && std::abs(cb.alpha - 0.1) < 1e-15,
                   "K = " + std::to_string(cb.iterations) + ", alpha = " + detail::fmt(cb.alpha)});
  }

  {  // exact gradients vs central differences
    const RidgeProblem ridge = random_ridge(10, 4, seed + 7);
    const Dataset cls = add_intercept(synthetic_classification(10, 3, 0.0, seed + 8));
    const LogisticProblem logistic(cls.features, cls.labels, 0.1);
    double worst = 0.0;
    for (const FiniteSumProblem* p : {static_cast<const FiniteSumProblem*>(&ridge), static_cast<const FiniteSumProblem*>(&logistic)}) {
      for (int t = 0; t < 5; ++t) {
        const Vector x = rng.normal_vector(static_cast<Eigen::Index>(p->dimension()));
        const double h = 1e-6 * (1.0 + x.norm());
        for (std::size_t i = 0; i < p->num_components(); ++i) {
          Vector g;
          p->component_gradient(i, x, g);
          Vector fd(x.size());
          for (Eigen::Index j = 0; j < x.size(); ++j) {
            Vector xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            fd[j] = (p->component_value(i, xp) - p->component_value(i, xm)) / (2.0 * h);
          }
          worst = std::max(worst, (g - fd).norm() / std::max(1.0, g.norm()));
        }
      }
    }
    out.push_back({"exact gradients match central differences", worst <= 1e-5, "max rel error = " + detail::fmt(worst)});
  }
  return out;
}

}  // namespace mistp
