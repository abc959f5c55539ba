#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mistp/directions.hpp"
#include "mistp/errors.hpp"
#include "mistp/objective.hpp"
#include "mistp/rng.hpp"

namespace mistp {

enum class Method { MiSTP, STP, SGD, RSGF, ZOSVRG, ZOCD };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::MiSTP: return "mistp";
    case Method::STP: return "stp";
    case Method::SGD: return "sgd";
    case Method::RSGF: return "rsgf";
    case Method::ZOSVRG: return "zosvrg";
    case Method::ZOCD: return "zocd";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : {Method::MiSTP, Method::STP, Method::SGD, Method::RSGF, Method::ZOSVRG, Method::ZOCD})
    if (s == to_string(m)) return m;
  throw InvalidArgument("unknown method '" + std::string(s) + "'");
}

/// Method identity and its parameters.
struct OptimizerSpec {
  Method method = Method::MiSTP;
  double alpha = 0.1;
  /// Optional per-iteration stepsizes; the last entry persists once exhausted.
  std::vector<double> alpha_schedule;
  std::size_t tau = 1;
  /// Finite-difference / smoothing parameter for RSGF, ZO-SVRG and ZO-CD.
  double mu = 1e-4;
  /// Direction law for MiSTP and STP. RSGF and ZO-SVRG always use the sphere.
  DirectionKind dist = DirectionKind::ScaledGaussian;
  /// ZO-SVRG snapshot period m; 0 means ceil(n / tau).
  std::size_t svrg_epoch_length = 0;
  bool sample_with_replacement = false;

  double stepsize(std::uint64_t k) const {
    if (alpha_schedule.empty()) return alpha;
    return alpha_schedule[std::min<std::size_t>(k, alpha_schedule.size() - 1)];
  }

  /// Batch size actually used on a problem with n components.
  std::size_t batch_size(std::size_t n) const { return method == Method::STP ? n : tau; }

  std::size_t svrg_period(std::size_t n) const {
    if (svrg_epoch_length > 0) return svrg_epoch_length;
    return (n + tau - 1) / tau;
  }

  bool uses_smoothing() const {
    return method == Method::RSGF || method == Method::ZOSVRG || method == Method::ZOCD;
  }

  void validate(std::size_t n) const {
    if (method != Method::STP && (tau < 1 || tau > n))
      throw InvalidBatchSize("tau=" + std::to_string(tau) + " outside [1, " + std::to_string(n) + "]");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("stepsize must be positive");
    for (double a : alpha_schedule)
      if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("stepsize schedule entries must be positive");
    if (uses_smoothing() && !(mu > 0.0 && mu < 1.0))
      throw InvalidSmoothing("smoothing parameter mu must lie in (0, 1)");
  }
};

/// Independent seeds for the direction and minibatch streams.
struct StreamSeeds {
  std::uint64_t directions = 0;
  std::uint64_t batches = 0;

  /// The documented split of one master seed into two streams.
  static StreamSeeds from_master(std::uint64_t seed) {
    return {mix_seed(seed, stream_tag::directions), mix_seed(seed, stream_tag::batches)};
  }
};

/// Mutable per-run state. Owned by exactly one run.
struct OptimizerState {
  Vector x;
  std::uint64_t k = 0;
  RngStream rng_dirs;
  RngStream rng_batch;
  std::uint64_t queries = 0;

  // Diagnostics of the most recent step.
  MinibatchIndex last_batch;
  Vector last_direction;
  /// f_{B_k}(x_{k+1}) when the step computed it (MiSTP/STP), NaN otherwise.
  double last_batch_value = std::numeric_limits<double>::quiet_NaN();
  /// f_{B_k}(x_k) when the step computed it.
  double last_batch_value_before = std::numeric_limits<double>::quiet_NaN();
  /// Three-point choice: 0 = stay, 1 = x + alpha s, 2 = x - alpha s.
  int last_choice = 0;
  /// The update direction of the last gradient-type step (x' = x - alpha * v).
  Vector last_update;

  // ZO-SVRG snapshot.
  bool has_snapshot = false;
  Vector snapshot;
  Vector snapshot_estimate;

  OptimizerState(Vector x0, StreamSeeds seeds)
      : x(std::move(x0)), rng_dirs(seeds.directions), rng_batch(seeds.batches) {}
};

// ---------------------------------------------------------------------------
// Minibatch sampling

/// tau distinct indices drawn uniformly without replacement by a partial
/// Fisher-Yates shuffle; with `with_replacement` each index is an independent
/// uniform draw. tau == n returns the full batch without touching the stream.
inline MinibatchIndex sample_minibatch(std::size_t n, std::size_t tau, RngStream& rng, bool with_replacement = false) {
  if (tau < 1 || tau > n)
    throw InvalidBatchSize("tau=" + std::to_string(tau) + " outside [1, " + std::to_string(n) + "]");
  if (with_replacement) {
    std::vector<std::size_t> idx(tau);
    for (auto& i : idx) i = rng.index(n);
    return MinibatchIndex::with_replacement(std::move(idx), n);
  }
  if (tau == n) return MinibatchIndex::full(n);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t j = 0; j < tau; ++j) {
    const std::size_t r = j + rng.index(n - j);
    std::swap(perm[j], perm[r]);
  }
  perm.resize(tau);
  return MinibatchIndex(std::move(perm), n);
}

namespace detail {

inline double counted_batch_value(const FiniteSumProblem& p, const MinibatchIndex& b, const Vector& x,
                                  std::uint64_t& queries) {
  queries += b.size();
  return eval_minibatch(p, b, x);
}

inline void require_finite_iterate(const OptimizerState& s, std::string_view method) {
  if (!s.x.allFinite())
    throw NumericFailure(std::string(method) + ": iterate became non-finite at k=" + std::to_string(s.k));
}

inline void check_smoothing_unit(double mu) {
  if (!(mu > 0.0 && mu < 1.0)) throw InvalidSmoothing("smoothing parameter mu must lie in (0, 1)");
}

}  // namespace detail

/// Index of argmin {f(x), f(x+), f(x-)} with ties resolved in that order and
/// non-finite candidates excluded. Returns -1 when none is finite.
inline int three_point_choice(double f_stay, double f_plus, double f_minus) {
  int best = -1;
  double best_val = std::numeric_limits<double>::infinity();
  const double vals[3] = {f_stay, f_plus, f_minus};
  for (int c = 0; c < 3; ++c) {
    if (!std::isfinite(vals[c])) continue;
    if (best < 0 || vals[c] < best_val) {
      best = c;
      best_val = vals[c];
    }
  }
  return best;
}

/// Compares f_B at x, x + alpha s and x - alpha s for a fresh direction s and
/// minibatch B and keeps the smallest. Costs 3 tau queries.
inline void three_point_step(const FiniteSumProblem& p, OptimizerState& st, double alpha,
                             const DirectionDistribution& dist, std::size_t tau, bool with_replacement = false) {
  const std::size_t n = p.num_components();
  Vector s = dist.sample(st.rng_dirs);
  MinibatchIndex batch = sample_minibatch(n, tau, st.rng_batch, with_replacement);

  const Vector x_plus = st.x + alpha * s;
  const Vector x_minus = st.x - alpha * s;
  const double f_stay = detail::counted_batch_value(p, batch, st.x, st.queries);
  const double f_plus = detail::counted_batch_value(p, batch, x_plus, st.queries);
  const double f_minus = detail::counted_batch_value(p, batch, x_minus, st.queries);

  const int choice = three_point_choice(f_stay, f_plus, f_minus);
  if (choice < 0)
    throw NumericFailure("three-point step: all candidate values are non-finite at k=" + std::to_string(st.k));

  const double chosen = choice == 0 ? f_stay : (choice == 1 ? f_plus : f_minus);
  assert(!std::isfinite(f_stay) || chosen <= f_stay);
  if (choice == 1) st.x = x_plus;
  if (choice == 2) st.x = x_minus;

  st.last_choice = choice;
  st.last_batch_value_before = f_stay;
  st.last_batch_value = chosen;
  st.last_batch = std::move(batch);
  st.last_direction = std::move(s);
  ++st.k;
}

/// One MiSTP iteration with minibatch size tau.
inline void mistp_step(const FiniteSumProblem& p, OptimizerState& st, double alpha,
                       const DirectionDistribution& dist, std::size_t tau, bool with_replacement = false) {
  three_point_step(p, st, alpha, dist, tau, with_replacement);
}

/// Full-batch three-point step (tau = n). Costs 3n queries.
inline void stp_step(const FiniteSumProblem& p, OptimizerState& st, double alpha, const DirectionDistribution& dist) {
  three_point_step(p, st, alpha, dist, p.num_components());
}

/// Minibatch gradient step using exact component gradients; each gradient
/// counts as one query.
inline void sgd_step(const FiniteSumProblem& p, OptimizerState& st, double alpha, std::size_t tau,
                     bool with_replacement = false) {
  if (!p.has_gradient()) throw UnsupportedMethod("sgd needs exact component gradients");
  MinibatchIndex batch = sample_minibatch(p.num_components(), tau, st.rng_batch, with_replacement);
  Vector g = minibatch_gradient(p, batch, st.x);
  st.queries += batch.size();
  st.x -= alpha * g;
  st.last_update = std::move(g);
  st.last_batch = std::move(batch);
  st.last_batch_value = std::numeric_limits<double>::quiet_NaN();
  st.last_batch_value_before = std::numeric_limits<double>::quiet_NaN();
  ++st.k;
  detail::require_finite_iterate(st, "sgd");
}

/// (f_B(x + mu s) - f_B(x)) / mu * s. Costs 2 tau queries.
inline Vector rsgf_gradient_estimate(const FiniteSumProblem& p, const MinibatchIndex& batch, const Vector& x,
                                     double mu, const Vector& s, std::uint64_t& queries) {
  detail::check_smoothing_unit(mu);
  const double f1 = detail::counted_batch_value(p, batch, x + mu * s, queries);
  const double f0 = detail::counted_batch_value(p, batch, x, queries);
  return ((f1 - f0) / mu) * s;
}

/// Two-point random gradient-free step with s uniform on the unit sphere.
inline void rsgf_step(const FiniteSumProblem& p, OptimizerState& st, double alpha, double mu, std::size_t tau,
                      bool with_replacement = false) {
  detail::check_smoothing_unit(mu);
  const auto sphere = DirectionDistribution::unit_sphere(p.dimension());
  Vector s = sphere.sample(st.rng_dirs);
  MinibatchIndex batch = sample_minibatch(p.num_components(), tau, st.rng_batch, with_replacement);
  Vector v = rsgf_gradient_estimate(p, batch, st.x, mu, s, st.queries);
  st.x -= alpha * v;
  st.last_update = std::move(v);
  st.last_direction = std::move(s);
  st.last_batch = std::move(batch);
  st.last_batch_value = std::numeric_limits<double>::quiet_NaN();
  ++st.k;
  detail::require_finite_iterate(st, "rsgf");
}

/// (d / mu)(f_B(x + mu s) - f_B(x)) s with ||s|| = 1. Costs 2|B| queries.
inline Vector zo_svrg_gradient_estimate(const FiniteSumProblem& p, const MinibatchIndex& batch, const Vector& x,
                                        double mu, const Vector& s, std::uint64_t& queries) {
  detail::check_smoothing_unit(mu);
  const double d = static_cast<double>(p.dimension());
  const double f1 = detail::counted_batch_value(p, batch, x + mu * s, queries);
  const double f0 = detail::counted_batch_value(p, batch, x, queries);
  return (d / mu * (f1 - f0)) * s;
}

/// Variance-reduced zeroth-order step. Every m iterations the snapshot moves
/// to the current iterate and a full-batch estimate is taken (2n queries);
/// each step then costs 4 tau queries, sharing one direction between the two
/// minibatch estimates.
inline void zo_svrg_step(const FiniteSumProblem& p, OptimizerState& st, double alpha, double mu, std::size_t tau,
                         std::size_t period, bool with_replacement = false) {
  detail::check_smoothing_unit(mu);
  if (period == 0) throw InvalidArgument("zo-svrg snapshot period must be positive");
  const std::size_t n = p.num_components();
  const auto sphere = DirectionDistribution::unit_sphere(p.dimension());
  if (!st.has_snapshot || st.k % period == 0) {
    st.snapshot = st.x;
    const Vector s_full = sphere.sample(st.rng_dirs);
    st.snapshot_estimate = zo_svrg_gradient_estimate(p, MinibatchIndex::full(n), st.snapshot, mu, s_full, st.queries);
    st.has_snapshot = true;
  }
  Vector s = sphere.sample(st.rng_dirs);
  MinibatchIndex batch = sample_minibatch(n, tau, st.rng_batch, with_replacement);
  const Vector at_x = zo_svrg_gradient_estimate(p, batch, st.x, mu, s, st.queries);
  const Vector at_snapshot = zo_svrg_gradient_estimate(p, batch, st.snapshot, mu, s, st.queries);
  Vector v = at_x - at_snapshot + st.snapshot_estimate;
  st.x -= alpha * v;
  st.last_update = std::move(v);
  st.last_direction = std::move(s);
  st.last_batch = std::move(batch);
  st.last_batch_value = std::numeric_limits<double>::quiet_NaN();
  ++st.k;
  detail::require_finite_iterate(st, "zosvrg");
}

/// Central differences along every coordinate of f_B. Costs 2 d |B| queries.
inline Vector zo_cd_gradient_estimate(const FiniteSumProblem& p, const MinibatchIndex& batch, const Vector& x,
                                      double mu, std::uint64_t& queries) {
  if (!(mu > 0.0)) throw InvalidSmoothing("smoothing parameter mu must be positive");
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + mu;
    const double fp = detail::counted_batch_value(p, batch, probe, queries);
    probe[i] = x[i] - mu;
    const double fm = detail::counted_batch_value(p, batch, probe, queries);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * mu);
  }
  return g;
}

inline void zo_cd_step(const FiniteSumProblem& p, OptimizerState& st, double alpha, double mu, std::size_t tau,
                       bool with_replacement = false) {
  MinibatchIndex batch = sample_minibatch(p.num_components(), tau, st.rng_batch, with_replacement);
  Vector g = zo_cd_gradient_estimate(p, batch, st.x, mu, st.queries);
  st.x -= alpha * g;
  st.last_update = std::move(g);
  st.last_batch = std::move(batch);
  st.last_batch_value = std::numeric_limits<double>::quiet_NaN();
  ++st.k;
  detail::require_finite_iterate(st, "zocd");
}

/// Queries the next step of `spec` will consume from state `st`.
inline std::uint64_t step_cost(const OptimizerSpec& spec, const FiniteSumProblem& p, const OptimizerState& st) {
  const std::uint64_t n = p.num_components();
  const std::uint64_t d = p.dimension();
  const std::uint64_t tau = spec.batch_size(p.num_components());
  switch (spec.method) {
    case Method::MiSTP:
    case Method::STP: return 3 * tau;
    case Method::SGD: return tau;
    case Method::RSGF: return 2 * tau;
    case Method::ZOCD: return 2 * d * tau;
    case Method::ZOSVRG: {
      const bool snap = !st.has_snapshot || st.k % spec.svrg_period(p.num_components()) == 0;
      return 4 * tau + (snap ? 2 * n : 0);
    }
  }
  return 0;
}

/// Closed-form query total after `iterations` steps of `spec` on a problem
/// of size (n, d).
inline std::uint64_t analytic_queries(const OptimizerSpec& spec, std::size_t n, std::size_t d,
                                      std::uint64_t iterations) {
  const std::uint64_t tau = spec.batch_size(n);
  switch (spec.method) {
    case Method::MiSTP:
    case Method::STP: return 3 * tau * iterations;
    case Method::SGD: return tau * iterations;
    case Method::RSGF: return 2 * tau * iterations;
    case Method::ZOCD: return 2 * d * tau * iterations;
    case Method::ZOSVRG: {
      const std::uint64_t m = spec.svrg_period(n);
      const std::uint64_t snapshots = (iterations + m - 1) / m;
      return 4 * tau * iterations + 2 * n * snapshots;
    }
  }
  return 0;
}

/// Applies one step of the configured method.
inline void step(const OptimizerSpec& spec, const FiniteSumProblem& p, OptimizerState& st,
                 const DirectionDistribution& dist) {
  const double alpha = spec.stepsize(st.k);
  const bool repl = spec.sample_with_replacement;
  switch (spec.method) {
    case Method::MiSTP: mistp_step(p, st, alpha, dist, spec.tau, repl); break;
    case Method::STP: stp_step(p, st, alpha, dist); break;
    case Method::SGD: sgd_step(p, st, alpha, spec.tau, repl); break;
    case Method::RSGF: rsgf_step(p, st, alpha, spec.mu, spec.tau, repl); break;
    case Method::ZOSVRG:
      zo_svrg_step(p, st, alpha, spec.mu, spec.tau, spec.svrg_period(p.num_components()), repl);
      break;
    case Method::ZOCD: zo_cd_step(p, st, alpha, spec.mu, spec.tau, repl); break;
  }
}

// ---------------------------------------------------------------------------
// Run loop

/// Stopping rule. Every limit that is set applies; a step is only taken when
/// it fits entirely inside the query budget.
struct Budget {
  std::optional<double> max_epochs;
  std::optional<std::uint64_t> max_queries;
  std::optional<std::uint64_t> max_iterations;

  static Budget epochs(double e) { return {e, std::nullopt, std::nullopt}; }
  static Budget queries(std::uint64_t q) { return {std::nullopt, q, std::nullopt}; }
  static Budget iterations(std::uint64_t k) { return {std::nullopt, std::nullopt, k}; }

  std::uint64_t query_limit(std::size_t n) const {
    std::uint64_t q = std::numeric_limits<std::uint64_t>::max();
    if (max_epochs) {
      if (!(*max_epochs >= 0.0)) throw InvalidArgument("epoch budget must be non-negative");
      q = std::min(q, static_cast<std::uint64_t>(std::floor(*max_epochs * static_cast<double>(n) + 1e-9)));
    }
    if (max_queries) q = std::min(q, *max_queries);
    return q;
  }
};

struct RunOptions {
  /// Record every `record_stride` iterations; the first and last iterate are
  /// always recorded.
  std::size_t record_stride = 1;
  /// Keep every sampled minibatch in the trace.
  bool capture_batches = false;
};

struct TraceRecord {
  double epoch = 0.0;
  std::uint64_t k = 0;
  /// f(x_k), an instrumentation-only evaluation not counted as queries.
  double f = 0.0;
  /// f_{B_{k-1}}(x_k), the minibatch estimate at the accepted iterate. The
  /// initial record stores f(x_0) since no batch has been drawn yet.
  double f_batch = 0.0;
  std::uint64_t queries = 0;
  /// Stepsize used by the step that produced x_k (alpha_0 for k = 0).
  double stepsize = 0.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct RunTrace {
  std::vector<TraceRecord> records;
  bool failed = false;
  std::string failure;
  Vector final_x;
  std::uint64_t iterations = 0;
  std::uint64_t queries = 0;
  std::vector<MinibatchIndex> batches;
};

/// Iterates `spec` from x0 until the budget is exhausted.
///
/// Deterministic in (spec, problem, x0, budget, seeds). A numeric failure ends
/// the run early with `failed` set and the partial trace kept.
inline RunTrace run(const OptimizerSpec& spec, const FiniteSumProblem& p, const Vector& x0, const Budget& budget,
                    StreamSeeds seeds, const RunOptions& opts = {}) {
  const std::size_t n = p.num_components();
  check_point(p, x0);
  spec.validate(n);
  if (opts.record_stride == 0) throw InvalidArgument("record stride must be positive");
  if (!budget.max_epochs && !budget.max_queries && !budget.max_iterations)
    throw InvalidArgument("run needs at least one budget limit");

  RngStream basis_rng(mix_seed(seeds.directions, 0x0B));
  const DirectionDistribution dist = DirectionDistribution::make(spec.dist, p.dimension(), &basis_rng);

  OptimizerState st(x0, seeds);
  RunTrace trace;
  const double nd = static_cast<double>(n);

  auto record = [&](double fb) {
    TraceRecord r;
    r.k = st.k;
    r.queries = st.queries;
    r.epoch = static_cast<double>(st.queries) / nd;
    r.f = full_value(p, st.x);
    r.f_batch = fb;
    r.stepsize = spec.stepsize(st.k == 0 ? 0 : st.k - 1);
    trace.records.push_back(r);
  };
  auto batch_value_now = [&]() {
    if (std::isfinite(st.last_batch_value)) return st.last_batch_value;
    return eval_minibatch(p, st.last_batch, st.x);
  };

  record(0.0);
  trace.records.front().f_batch = trace.records.front().f;

  const std::uint64_t qlimit = budget.query_limit(n);
  const std::uint64_t klimit = budget.max_iterations.value_or(std::numeric_limits<std::uint64_t>::max());
  try {
    while (st.k < klimit) {
      const std::uint64_t cost = step_cost(spec, p, st);
      if (st.queries > qlimit || cost > qlimit - st.queries) break;
      step(spec, p, st, dist);
      if (opts.capture_batches) trace.batches.push_back(st.last_batch);
      const bool due = st.k % opts.record_stride == 0;
      if (due) record(batch_value_now());
    }
  } catch (const NumericFailure& e) {
    trace.failed = true;
    trace.failure = e.what();
  }
  if (!trace.failed && trace.records.back().k != st.k) record(batch_value_now());

  trace.final_x = st.x;
  trace.iterations = st.k;
  trace.queries = st.queries;
  return trace;
}

}  // namespace mistp
