#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "mistp/directions.hpp"
#include "mistp/errors.hpp"
#include "mistp/objective.hpp"
#include "mistp/optimizers.hpp"

namespace mistp {

/// Largest number of subsets the enumeration oracles will visit.
inline constexpr double kMaxEnumeratedSubsets = 1e6;

/// C(n, k) in floating point (exact for the sizes the oracles accept).
inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t j = 1; j <= k; ++j) c = c * static_cast<double>(n - k + j) / static_cast<double>(j);
  return std::round(c);
}

/// Calls `visit` with every ascending size-k subset of [0, n), in
/// lexicographic order.
inline void for_each_subset(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& visit) {
  if (k == 0 || k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t j = 0; j < k; ++j) idx[j] = j;
  while (true) {
    visit(idx);
    std::size_t j = k;
    while (j > 0 && idx[j - 1] == n - k + (j - 1)) --j;
    if (j == 0) return;
    ++idx[j - 1];
    for (std::size_t t = j; t < k; ++t) idx[t] = idx[t - 1] + 1;
  }
}

namespace detail {

inline void guard_enumeration(std::size_t n, std::size_t tau) {
  if (tau < 1 || tau > n) throw InvalidBatchSize("tau outside [1, n]");
  if (binomial(n, tau) > kMaxEnumeratedSubsets)
    throw InstanceTooLarge("C(" + std::to_string(n) + ", " + std::to_string(tau) + ") subsets exceed the enumeration limit");
}

inline std::vector<double> component_values(const FiniteSumProblem& p, const Vector& x) {
  check_point(p, x);
  std::vector<double> v(p.num_components());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = p.component_value(i, x);
  return v;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Exact E_B[f_B(x)] over all C(n, tau) equally likely subsets.
inline double enumerate_minibatch_mean(const FiniteSumProblem& p, const Vector& x, std::size_t tau) {
  const std::size_t n = p.num_components();
  detail::guard_enumeration(n, tau);
  const auto vals = detail::component_values(p, x);
  long double total = 0.0L;
  std::size_t count = 0;
  for_each_subset(n, tau, [&](const std::vector<std::size_t>& b) {
    long double s = 0.0L;
    for (std::size_t i : b) s += vals[i];
    total += s / static_cast<long double>(tau);
    ++count;
  });
  return static_cast<double>(total / static_cast<long double>(count));
}

/// Minibatch deviation statistics at one point.
struct VarianceReport {
  /// E_B[(f(x) - f_B(x))^2], enumerated.
  double exact_variance = 0.0;
  /// B (n - tau) / (tau (n - 1)).
  double closed_form = 0.0;
  /// A / tau.
  double bound = 0.0;
  /// B = (1/n) sum_i (f_i(x) - f(x))^2.
  double b_stat = 0.0;
  /// Max of the B statistic over the probe set (a lower estimate of the sup).
  double a_stat = 0.0;
  double f = 0.0;
};

/// (1/n) sum_i (f_i(x) - f(x))^2.
inline double component_spread(const FiniteSumProblem& p, const Vector& x) {
  const auto vals = detail::component_values(p, x);
  const double f = detail::mean_of(vals);
  double s = 0.0;
  for (double v : vals) s += (v - f) * (v - f);
  return s / static_cast<double>(vals.size());
}

/// B (n - tau) / (tau (n - 1)) without enumeration; 0 when tau == n.
inline double closed_form_variance(const FiniteSumProblem& p, const Vector& x, std::size_t tau) {
  const std::size_t n = p.num_components();
  if (tau < 1 || tau > n) throw InvalidBatchSize("tau outside [1, n]");
  if (tau == n) return 0.0;
  const double b = component_spread(p, x);
  return b * static_cast<double>(n - tau) / (static_cast<double>(tau) * static_cast<double>(n - 1));
}

/// Enumerates E_B[(f - f_B)^2] and the quantities it is compared against.
/// `probes` are the points over which A is maximized; x is always included.
inline VarianceReport minibatch_variance(const FiniteSumProblem& p, const Vector& x, std::size_t tau,
                                         const std::vector<Vector>& probes = {}) {
  const std::size_t n = p.num_components();
  if (n < 2) throw InvalidArgument("minibatch variance needs n >= 2");
  detail::guard_enumeration(n, tau);

  const auto vals = detail::component_values(p, x);
  VarianceReport r;
  r.f = detail::mean_of(vals);

  long double acc = 0.0L;
  std::size_t count = 0;
  for_each_subset(n, tau, [&](const std::vector<std::size_t>& b) {
    long double s = 0.0L;
    for (std::size_t i : b) s += vals[i];
    const long double dev = s / static_cast<long double>(tau) - r.f;
    acc += dev * dev;
    ++count;
  });
  r.exact_variance = static_cast<double>(acc / static_cast<long double>(count));

  double b = 0.0;
  for (double v : vals) b += (v - r.f) * (v - r.f);
  r.b_stat = b / static_cast<double>(n);
  r.closed_form = r.b_stat * static_cast<double>(n - tau) / (static_cast<double>(tau) * static_cast<double>(n - 1));

  r.a_stat = r.b_stat;
  for (const Vector& q : probes) r.a_stat = std::max(r.a_stat, component_spread(p, q));
  r.bound = r.a_stat / static_cast<double>(tau);
  return r;
}

/// Monte-Carlo check of the one-step descent inequality
///   E[f(x_next) | x] <= f(x) - mu_D alpha ||grad f(x)||_D + (L/2) alpha^2 + sigma.
struct DescentCheck {
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
  double sigma_hat = 0.0;
  double slack = 0.0;
  bool passed = false;
};

inline DescentCheck check_descent_lemma(const FiniteSumProblem& p, const Vector& x, double alpha, std::size_t tau,
                                        const DirectionDistribution& dist, std::size_t samples, RngStream& rng,
                                        double se_multiplier = 3.0) {
  if (!p.has_gradient()) throw UnsupportedMethod("descent check needs exact gradients");
  const auto li = p.lipschitz();
  if (!li) throw UnsupportedMethod("descent check needs Lipschitz constants");
  if (samples < 2) throw InvalidArgument("descent check needs at least two samples");
  check_point(p, x);
  const std::size_t n = p.num_components();

  const MuDInfo info = dist.mu_d_info();
  const double l = mean_lipschitz(*li);
  const double f0 = full_value(p, x);
  const Vector g = full_gradient(p, x);

  DescentCheck out;
  out.sigma_hat = std::sqrt(closed_form_variance(p, x, tau));
  out.rhs = f0 - info.mu_d.value_or(0.0) * alpha * dist.norm_d(g) + 0.5 * l * alpha * alpha + out.sigma_hat;

  // Welford accumulation of f(x_next).
  double mean = 0.0, m2 = 0.0;
  for (std::size_t t = 0; t < samples; ++t) {
    const Vector s = dist.sample(rng);
    const MinibatchIndex b = sample_minibatch(n, tau, rng);
    const Vector xp = x + alpha * s;
    const Vector xm = x - alpha * s;
    const int c = three_point_choice(eval_minibatch(p, b, x), eval_minibatch(p, b, xp), eval_minibatch(p, b, xm));
    const double fn = full_value(p, c == 1 ? xp : (c == 2 ? xm : x));
    const double delta = fn - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (fn - mean);
  }
  out.lhs = mean;
  out.lhs_se = std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples));
  out.slack = out.rhs - out.lhs;
  // Absolute rounding allowance for cases where both sides coincide.
  const double rounding = 1e-12 * (1.0 + std::abs(out.rhs));
  out.passed = out.lhs <= out.rhs + se_multiplier * out.lhs_se + rounding;
  return out;
}

// ---------------------------------------------------------------------------
// Complexity bounds

struct BoundInputs {
  double f0 = 0.0;
  double f_star = 0.0;
  double mu_d = 1.0;
  double L = 1.0;
  double epsilon = 1.0;
  double sigma_batch = 0.0;
  /// Level-set radius at x0 (convex bound only).
  double r0 = 1.0;
};

namespace detail {

/// ceil(q), except that q within relative 1e-9 of an integer maps to that
/// integer so rounding noise in the quotient cannot add an iteration.
inline double snapped_ceil(double q) {
  const double r = std::round(q);
  if (std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q))) return r;
  return std::ceil(q);
}

inline void check_common(const BoundInputs& in) {
  if (!(in.epsilon > 0.0)) throw BoundInfeasible("epsilon must be positive");
  if (!(in.L > 0.0)) throw BoundInfeasible("L must be positive");
  if (!(in.mu_d > 0.0)) throw BoundInfeasible("mu_D must be positive");
  if (!(in.sigma_batch >= 0.0)) throw BoundInfeasible("sigma must be non-negative");
}

}  // namespace detail

/// alpha maximizing mu_D eps alpha - (L/2) alpha^2.
inline double optimal_stepsize(double mu_d, double epsilon, double L) { return mu_d * epsilon / L; }

/// Open interval of admissible constant stepsizes for the nonconvex bound.
inline std::pair<double, double> nonconvex_stepsize_interval(const BoundInputs& in) {
  detail::check_common(in);
  const double me = in.mu_d * in.epsilon;
  const double disc = me * me - 2.0 * in.L * in.sigma_batch;
  if (!(disc > 0.0)) throw BoundInfeasible("sigma must be below (mu_D eps)^2 / (2L)");
  const double root = std::sqrt(disc);
  return {(me - root) / in.L, (me + root) / in.L};
}

/// ceil((f0 - f*) / (mu_D eps alpha - (L/2) alpha^2 - sigma)) - 1.
inline std::uint64_t nonconvex_iteration_bound(const BoundInputs& in, double alpha) {
  const auto [lo, hi] = nonconvex_stepsize_interval(in);
  if (!(alpha > lo && alpha < hi)) throw BoundInfeasible("alpha outside the admissible interval");
  const double denom = in.mu_d * in.epsilon * alpha - 0.5 * in.L * alpha * alpha - in.sigma_batch;
  if (!(denom > 0.0)) throw BoundInfeasible("per-iteration decrease is not positive");
  const double k = detail::snapped_ceil((in.f0 - in.f_star) / denom) - 1.0;
  return k <= 0.0 ? 0 : static_cast<std::uint64_t>(k);
}

struct ConvexBound {
  std::uint64_t iterations = 0;
  double alpha = 0.0;
};

/// K = ceil(L R0^2 / (mu_D^2 eps) * ln(4 (f0 - f*) / eps)) at alpha = eps mu_D / (L R0).
inline ConvexBound convex_iteration_bound(const BoundInputs& in) {
  detail::check_common(in);
  if (!(in.r0 > 0.0)) throw BoundInfeasible("R0 must be positive");
  if (!(in.f0 > in.f_star)) throw BoundInfeasible("f0 must exceed f*");
  const double me = in.mu_d * in.epsilon;
  if (!(in.sigma_batch < me * me / (4.0 * in.L * in.r0 * in.r0)))
    throw BoundInfeasible("sigma must be below (mu_D eps)^2 / (4 L R0^2)");
  ConvexBound out;
  out.alpha = in.epsilon * in.mu_d / (in.L * in.r0);
  const double k = in.L * in.r0 * in.r0 / (in.mu_d * in.mu_d * in.epsilon) *
                   std::log(4.0 * (in.f0 - in.f_star) / in.epsilon);
  const double c = detail::snapped_ceil(k);
  out.iterations = c <= 0.0 ? 0 : static_cast<std::uint64_t>(c);
  return out;
}

}  // namespace mistp
