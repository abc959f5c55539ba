#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mistp/data.hpp"
#include "mistp/errors.hpp"
#include "mistp/objective.hpp"
#include "mistp/optimizers.hpp"

namespace mistp {

enum class ProblemKind { Ridge, Logistic, Mlp };

inline std::string_view to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Ridge: return "ridge";
    case ProblemKind::Logistic: return "logistic";
    case ProblemKind::Mlp: return "mlp";
  }
  return "?";
}

inline ProblemKind parse_problem_kind(std::string_view s) {
  if (s == "ridge") return ProblemKind::Ridge;
  if (s == "logistic") return ProblemKind::Logistic;
  if (s == "mlp") return ProblemKind::Mlp;
  throw InvalidArgument("unknown problem '" + std::string(s) + "'");
}

/// Parsed form of `kind:key=value,...`, e.g. `ridge:n=200,d=10,seed=7`.
struct SyntheticSpec {
  std::string kind = "ridge";
  std::size_t n = 200;
  std::size_t d = 10;
  std::uint64_t seed = 0;
  double noise = 0.5;
  double margin = 0.1;
};

inline SyntheticSpec parse_synthetic_spec(std::string_view text) {
  SyntheticSpec s;
  const auto colon = text.find(':');
  s.kind = std::string(text.substr(0, colon));
  if (s.kind == "regression") s.kind = "ridge";
  if (s.kind == "classification") s.kind = "logistic";
  if (s.kind != "ridge" && s.kind != "logistic")
    throw InvalidArgument("synthetic kind must be ridge/regression or logistic/classification");
  if (colon == std::string_view::npos) return s;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view kv = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) throw InvalidArgument("synthetic spec: expected key=value, got '" + std::string(kv) + "'");
    const std::string key(kv.substr(0, eq));
    const std::string_view val = kv.substr(eq + 1);
    auto parse = [&](auto& out) {
      const auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), out);
      if (ec != std::errc() || ptr != val.data() + val.size() || val.empty())
        throw InvalidArgument("synthetic spec: bad value for '" + key + "'");
    };
    if (key == "n") parse(s.n);
    else if (key == "d") parse(s.d);
    else if (key == "seed") parse(s.seed);
    else if (key == "noise") parse(s.noise);
    else if (key == "margin") parse(s.margin);
    else throw InvalidArgument("synthetic spec: unknown key '" + key + "'");
  }
  return s;
}

struct DataConfig {
  std::string libsvm_path;
  std::string synthetic = "ridge:n=200,d=10,seed=7";
  std::string idx_images;
  std::string idx_labels;
  std::optional<std::size_t> dimension;
  std::optional<std::size_t> limit;
  bool standardize = false;
};

struct MethodConfig {
  OptimizerSpec spec;
  /// Absent means grid search.
  std::optional<double> alpha;
};

struct GridOptions {
  std::vector<double> values{1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  /// Fraction of the run budget each pilot receives.
  double pilot_fraction = 0.2;
  std::size_t pilot_repeats = 3;
  /// Tune on the full budget with the full repeat count.
  bool full_budget = false;
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::Ridge;
  DataConfig data;
  /// Regularization; defaults to 1/n.
  std::optional<double> lambda;
  std::vector<std::size_t> mlp_hidden{16, 8};
  std::vector<MethodConfig> methods;
  std::vector<std::size_t> taus{1};
  std::size_t repeats = 10;
  Budget budget = Budget::epochs(10.0);
  std::uint64_t master_seed = 0;
  std::size_t record_stride = 1;
  std::string output_dir = "out";
  bool paired_sgd = false;
  /// "gaussian" (standard normal, scaled by x0_scale) or "zeros".
  std::string x0_init = "gaussian";
  double x0_scale = 1.0;
  GridOptions grid;
  /// 0 means hardware concurrency.
  std::size_t threads = 0;
};

/// The optimization problem together with the data it was built from.
struct ProblemInstance {
  Dataset data;
  std::unique_ptr<FiniteSumProblem> problem;
  /// Exact minimum where computable (ridge).
  std::optional<double> f_star;
};

/// Maps {-1,+1} labels to classes {0,1}; non-negative integers pass through.
inline std::vector<std::size_t> class_indices(const Vector& labels) {
  std::vector<std::size_t> out(static_cast<std::size_t>(labels.size()));
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const double y = labels[i];
    if (y == -1.0) out[static_cast<std::size_t>(i)] = 0;
    else if (y >= 0.0 && y == std::floor(y)) out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(y);
    else throw InvalidLabel("label " + std::to_string(y) + " is not a class index");
  }
  return out;
}

inline Dataset load_dataset(const ExperimentConfig& cfg) {
  const bool classification = cfg.problem != ProblemKind::Ridge;
  Dataset ds;
  if (!cfg.data.idx_images.empty()) {
    if (cfg.problem != ProblemKind::Mlp) throw InvalidArgument("idx data is only used by the mlp problem");
    const IdxArray images = parse_idx(read_binary_file(cfg.data.idx_images));
    const IdxArray labels = parse_idx(read_binary_file(cfg.data.idx_labels));
    ds.features = idx_images(images);
    const auto cls = idx_labels(labels);
    if (cls.size() != ds.n()) throw ShapeError("idx: image and label counts differ");
    ds.labels.resize(static_cast<Eigen::Index>(cls.size()));
    for (std::size_t i = 0; i < cls.size(); ++i) ds.labels[static_cast<Eigen::Index>(i)] = static_cast<double>(cls[i]);
    ds.provenance = IdxSource{cfg.data.idx_images};
    ds.name = "idx";
  } else if (!cfg.data.libsvm_path.empty()) {
    LibsvmOptions opts;
    opts.dimension = cfg.data.dimension;
    opts.classification = classification;
    ds = load_libsvm(cfg.data.libsvm_path, opts);
  } else {
    const SyntheticSpec s = parse_synthetic_spec(cfg.data.synthetic);
    ds = s.kind == "ridge" ? synthetic_regression(s.n, s.d, s.noise, s.seed)
                           : synthetic_classification(s.n, s.d, s.margin, s.seed);
    if (classification && s.kind == "ridge") throw InvalidArgument("classification problem needs logistic synthetic data");
  }
  if (cfg.data.limit) ds = head(ds, *cfg.data.limit);
  if (cfg.data.standardize) ds = standardize_features(ds);
  return ds;
}

/// Builds the finite-sum problem. Logistic data always receives the intercept
/// column; lambda defaults to 1/n.
inline ProblemInstance build_problem(const ExperimentConfig& cfg) {
  ProblemInstance inst;
  inst.data = load_dataset(cfg);
  const double lambda = cfg.lambda.value_or(1.0 / static_cast<double>(inst.data.n()));
  switch (cfg.problem) {
    case ProblemKind::Ridge: {
      validate_dataset(inst.data, false);
      auto ridge = std::make_unique<RidgeProblem>(inst.data.features, inst.data.labels, lambda);
      inst.f_star = full_value(*ridge, ridge->closed_form_minimizer());
      inst.problem = std::move(ridge);
      break;
    }
    case ProblemKind::Logistic:
      inst.data = add_intercept(inst.data);
      validate_dataset(inst.data, true);
      inst.problem = std::make_unique<LogisticProblem>(inst.data.features, inst.data.labels, lambda);
      break;
    case ProblemKind::Mlp: {
      auto cls = class_indices(inst.data.labels);
      const std::size_t classes = std::max<std::size_t>(2, *std::max_element(cls.begin(), cls.end()) + 1);
      std::vector<std::size_t> layers{inst.data.d()};
      layers.insert(layers.end(), cfg.mlp_hidden.begin(), cfg.mlp_hidden.end());
      layers.push_back(classes);
      inst.problem = std::make_unique<MlpProblem>(layers, inst.data.features, std::move(cls));
      break;
    }
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Seeding

/// Seed of run r: master_seed + r, so adding repeats leaves earlier runs alone.
inline std::uint64_t run_seed(std::uint64_t master_seed, std::size_t r) { return master_seed + r; }

inline std::uint64_t method_salt(Method m) { return static_cast<std::uint64_t>(m) + 1; }

/// Direction and batch streams of one run. With `paired`, SGD draws its
/// minibatches from the MiSTP batch stream.
inline StreamSeeds derive_streams(std::uint64_t seed, Method m, bool paired) {
  const Method batch_owner = (paired && m == Method::SGD) ? Method::MiSTP : m;
  return {StreamSeeds::from_master(mix_seed(seed, method_salt(m))).directions,
          StreamSeeds::from_master(mix_seed(seed, method_salt(batch_owner))).batches};
}

/// Shared starting point of run index r (identical across methods).
inline Vector start_point(const ExperimentConfig& cfg, std::size_t d, std::uint64_t seed) {
  if (cfg.x0_init == "zeros") return Vector::Zero(static_cast<Eigen::Index>(d));
  if (cfg.x0_init != "gaussian") throw InvalidArgument("x0 init must be 'gaussian' or 'zeros'");
  RngStream rng(mix_seed(seed, stream_tag::start_point));
  return cfg.x0_scale * rng.normal_vector(static_cast<Eigen::Index>(d));
}

// ---------------------------------------------------------------------------
// Aggregation

struct Summary {
  double mean = 0.0;
  /// Sample standard deviation (n - 1 denominator); 0 for a single value.
  double std = 0.0;
};

inline Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  for (double a : v) s.mean += a;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double a : v) ss += (a - s.mean) * (a - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

struct Checkpoint {
  std::uint64_t k = 0;
  double epoch = 0.0;
  std::uint64_t queries = 0;
  double mean_f = 0.0;
  double std_f = 0.0;
  double band_lo = 0.0;
  double band_hi = 0.0;
  double mean_fb = 0.0;
  double std_fb = 0.0;
};

/// Runs of one (method, tau) cell and their per-checkpoint statistics.
struct AggregateTrace {
  Method method = Method::MiSTP;
  std::size_t tau = 1;
  double alpha = 0.0;
  std::vector<Checkpoint> checkpoints;
  std::vector<RunTrace> runs;
  std::size_t failed_runs = 0;
};

/// Aligns successful runs by record index and reduces them.
inline std::vector<Checkpoint> aggregate_runs(const std::vector<RunTrace>& runs) {
  std::vector<const RunTrace*> ok;
  for (const auto& r : runs)
    if (!r.failed) ok.push_back(&r);
  if (ok.empty()) return {};
  std::size_t len = ok.front()->records.size();
  for (const auto* r : ok) len = std::min(len, r->records.size());

  std::vector<Checkpoint> out(len);
  std::vector<double> fs(ok.size()), fbs(ok.size());
  for (std::size_t j = 0; j < len; ++j) {
    for (std::size_t r = 0; r < ok.size(); ++r) {
      fs[r] = ok[r]->records[j].f;
      fbs[r] = ok[r]->records[j].f_batch;
    }
    const auto& ref = ok.front()->records[j];
    const Summary sf = summarize(fs), sb = summarize(fbs);
    Checkpoint& c = out[j];
    c.k = ref.k;
    c.epoch = ref.epoch;
    c.queries = ref.queries;
    c.mean_f = sf.mean;
    c.std_f = sf.std;
    c.band_lo = sf.mean - sf.std / 2.0;
    c.band_hi = sf.mean + sf.std / 2.0;
    c.mean_fb = sb.mean;
    c.std_fb = sb.std;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Execution

namespace detail {

/// Runs `fn(i)` for i in [0, count) on up to `threads` workers. Results must
/// be written to pre-sized slots, so output does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline OptimizerSpec cell_spec(const MethodConfig& mc, std::size_t tau, double alpha) {
  OptimizerSpec s = mc.spec;
  s.tau = tau;
  s.alpha = alpha;
  return s;
}

inline Budget scaled_budget(const Budget& b, double fraction) {
  Budget out;
  if (b.max_epochs) out.max_epochs = *b.max_epochs * fraction;
  if (b.max_queries) out.max_queries = static_cast<std::uint64_t>(std::ceil(static_cast<double>(*b.max_queries) * fraction));
  if (b.max_iterations)
    out.max_iterations = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(static_cast<double>(*b.max_iterations) * fraction)));
  return out;
}

}  // namespace detail

/// One seeded run of a configured cell.
inline RunTrace run_cell(const ExperimentConfig& cfg, const ProblemInstance& inst, const OptimizerSpec& spec,
                         std::uint64_t seed, const Budget& budget, bool capture_batches = false) {
  const Vector x0 = start_point(cfg, inst.problem->dimension(), seed);
  RunOptions opts;
  opts.record_stride = cfg.record_stride;
  opts.capture_batches = capture_batches;
  return run(spec, *inst.problem, x0, budget, derive_streams(seed, spec.method, cfg.paired_sgd), opts);
}

struct GridEntry {
  double alpha = 0.0;
  /// Mean final f over pilots; +inf if any pilot diverged or failed.
  double mean_final_f = 0.0;
};

struct GridResult {
  double alpha = 0.0;
  std::vector<GridEntry> table;
};

/// The alpha with the lowest mean final value; non-finite entries rank last
/// and ties go to the earlier grid entry.
inline double select_best_stepsize(const std::vector<GridEntry>& table) {
  const GridEntry* best = nullptr;
  for (const auto& e : table) {
    if (!std::isfinite(e.mean_final_f)) continue;
    if (best == nullptr || e.mean_final_f < best->mean_final_f) best = &e;
  }
  if (best == nullptr) throw NoViableStepsize("every stepsize on the grid diverged");
  return best->alpha;
}

/// Pilot-run grid search over `cfg.grid.values` for one (method, tau) cell.
inline GridResult grid_search_stepsize(const ExperimentConfig& cfg, const ProblemInstance& inst, const MethodConfig& mc,
                                       std::size_t tau) {
  const auto& g = cfg.grid;
  if (g.values.empty()) throw InvalidArgument("stepsize grid is empty");
  const Budget pilot = g.full_budget ? cfg.budget : detail::scaled_budget(cfg.budget, g.pilot_fraction);
  const std::size_t reps = g.full_budget ? cfg.repeats : std::max<std::size_t>(1, g.pilot_repeats);
  const std::uint64_t pilot_master = mix_seed(cfg.master_seed, 0x67726964);

  GridResult out;
  out.table.resize(g.values.size());
  std::vector<double> finals(g.values.size() * reps);
  detail::parallel_for(finals.size(), cfg.threads, [&](std::size_t t) {
    const std::size_t a = t / reps, r = t % reps;
    const OptimizerSpec spec = detail::cell_spec(mc, tau, g.values[a]);
    ExperimentConfig quiet = cfg;
    quiet.record_stride = std::numeric_limits<std::size_t>::max();
    const RunTrace tr = run_cell(quiet, inst, spec, run_seed(pilot_master, r), pilot);
    finals[t] = tr.failed ? std::numeric_limits<double>::infinity() : tr.records.back().f;
  });
  for (std::size_t a = 0; a < g.values.size(); ++a) {
    double sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) sum += finals[a * reps + r];
    const double mean = sum / static_cast<double>(reps);
    out.table[a] = {g.values[a], std::isfinite(mean) ? mean : std::numeric_limits<double>::infinity()};
  }
  out.alpha = select_best_stepsize(out.table);
  return out;
}

struct ExperimentResult {
  std::vector<AggregateTrace> cells;
  std::vector<GridResult> grids;
  std::size_t warnings = 0;
};

/// Every (method, tau) cell, `repeats` runs each, in config order. STP
/// contributes a single full-batch cell.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProblemInstance& inst) {
  if (cfg.repeats < 1) throw InvalidArgument("repeats must be >= 1");
  if (cfg.methods.empty()) throw InvalidArgument("no methods configured");
  const std::size_t n = inst.problem->num_components();
  for (std::size_t t : cfg.taus)
    if (t < 1 || t > n) throw InvalidBatchSize("tau=" + std::to_string(t) + " outside [1, " + std::to_string(n) + "]");

  ExperimentResult res;
  struct CellPlan {
    const MethodConfig* mc;
    std::size_t tau;
  };
  std::vector<CellPlan> plan;
  for (const auto& mc : cfg.methods) {
    if (mc.spec.method == Method::STP) {
      plan.push_back({&mc, n});
      continue;
    }
    if (cfg.taus.empty()) throw InvalidArgument("no batch sizes configured");
    for (std::size_t t : cfg.taus) plan.push_back({&mc, t});
  }

  res.cells.resize(plan.size());
  for (std::size_t c = 0; c < plan.size(); ++c) {
    auto& cell = res.cells[c];
    cell.method = plan[c].mc->spec.method;
    cell.tau = plan[c].tau;
    if (plan[c].mc->alpha) {
      cell.alpha = *plan[c].mc->alpha;
    } else {
      res.grids.push_back(grid_search_stepsize(cfg, inst, *plan[c].mc, plan[c].tau));
      cell.alpha = res.grids.back().alpha;
    }
    cell.runs.resize(cfg.repeats);
  }

  detail::parallel_for(plan.size() * cfg.repeats, cfg.threads, [&](std::size_t t) {
    const std::size_t c = t / cfg.repeats, r = t % cfg.repeats;
    auto& cell = res.cells[c];
    const OptimizerSpec spec = detail::cell_spec(*plan[c].mc, cell.tau, cell.alpha);
    cell.runs[r] = run_cell(cfg, inst, spec, run_seed(cfg.master_seed, r), cfg.budget);
  });

  for (auto& cell : res.cells) {
    for (const auto& r : cell.runs) cell.failed_runs += r.failed ? 1 : 0;
    res.warnings += cell.failed_runs;
    cell.checkpoints = aggregate_runs(cell.runs);
  }
  return res;
}

// ---------------------------------------------------------------------------
// CSV output

inline constexpr const char* kCsvHeader = "method,tau,alpha,run_or_agg,iter,epoch,queries,f_mean,f_std,f_lo,f_hi,fB_mean";

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string aggregate_csv(const AggregateTrace& t) {
  std::string out = std::string(kCsvHeader) + "\n";
  const std::string prefix = std::string(to_string(t.method)) + "," + std::to_string(t.tau) + "," + csv_number(t.alpha) + ",agg,";
  for (const auto& c : t.checkpoints) {
    out += prefix + std::to_string(c.k) + "," + csv_number(c.epoch) + "," + std::to_string(c.queries) + "," +
           csv_number(c.mean_f) + "," + csv_number(c.std_f) + "," + csv_number(c.band_lo) + "," + csv_number(c.band_hi) +
           "," + csv_number(c.mean_fb) + "\n";
  }
  return out;
}

inline std::string runs_csv(const AggregateTrace& t) {
  std::string out = std::string(kCsvHeader) + "\n";
  const std::string prefix = std::string(to_string(t.method)) + "," + std::to_string(t.tau) + "," + csv_number(t.alpha) + ",run";
  for (std::size_t r = 0; r < t.runs.size(); ++r) {
    for (const auto& rec : t.runs[r].records) {
      out += prefix + std::to_string(r) + "," + std::to_string(rec.k) + "," + csv_number(rec.epoch) + "," +
             std::to_string(rec.queries) + "," + csv_number(rec.f) + ",0," + csv_number(rec.f) + "," + csv_number(rec.f) +
             "," + csv_number(rec.f_batch) + "\n";
    }
  }
  return out;
}

inline std::string cell_basename(const AggregateTrace& t) {
  return std::string(to_string(t.method)) + "_tau" + std::to_string(t.tau);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

/// Writes `<method>_tau<tau>.csv` (aggregate) and `<method>_tau<tau>_runs.csv`
/// (per run) for every cell into `dir`. Returns the aggregate file paths.
inline std::vector<std::filesystem::path> export_csv(const std::vector<AggregateTrace>& traces,
                                                     const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& t : traces) {
    const auto base = cell_basename(t);
    write_file(dir / (base + ".csv"), aggregate_csv(t));
    write_file(dir / (base + "_runs.csv"), runs_csv(t));
    written.push_back(dir / (base + ".csv"));
  }
  return written;
}

// ---------------------------------------------------------------------------
// JSON config

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("problem")) c.problem = parse_problem_kind(j.at("problem").get<std::string>());
  if (j.contains("data")) {
    const auto& d = j.at("data");
    c.data.libsvm_path = d.value("libsvm", std::string{});
    c.data.synthetic = d.value("synthetic", c.data.synthetic);
    c.data.idx_images = d.value("idx_images", std::string{});
    c.data.idx_labels = d.value("idx_labels", std::string{});
    if (d.contains("dimension")) c.data.dimension = d.at("dimension").get<std::size_t>();
    if (d.contains("limit")) c.data.limit = d.at("limit").get<std::size_t>();
    c.data.standardize = d.value("standardize", false);
  }
  if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
  if (j.contains("mlp_hidden")) c.mlp_hidden = j.at("mlp_hidden").get<std::vector<std::size_t>>();
  if (j.contains("methods")) {
    for (const auto& m : j.at("methods")) {
      MethodConfig mc;
      if (m.is_string()) {
        mc.spec.method = parse_method(m.get<std::string>());
      } else {
        mc.spec.method = parse_method(m.at("method").get<std::string>());
        if (m.contains("alpha")) mc.alpha = m.at("alpha").get<double>();
        mc.spec.mu = m.value("mu", mc.spec.mu);
        if (m.contains("dist")) mc.spec.dist = parse_direction_kind(m.at("dist").get<std::string>());
        mc.spec.svrg_epoch_length = m.value("svrg_epoch_length", std::size_t{0});
        mc.spec.sample_with_replacement = m.value("with_replacement", false);
      }
      c.methods.push_back(mc);
    }
  }
  if (j.contains("dist")) {
    const auto kind = parse_direction_kind(j.at("dist").get<std::string>());
    for (auto& mc : c.methods) mc.spec.dist = kind;
  }
  if (j.contains("taus")) c.taus = j.at("taus").get<std::vector<std::size_t>>();
  c.repeats = j.value("repeats", c.repeats);
  if (j.contains("epochs") || j.contains("queries") || j.contains("iterations")) {
    c.budget = {};
    if (j.contains("epochs")) c.budget.max_epochs = j.at("epochs").get<double>();
    if (j.contains("queries")) c.budget.max_queries = j.at("queries").get<std::uint64_t>();
    if (j.contains("iterations")) c.budget.max_iterations = j.at("iterations").get<std::uint64_t>();
  }
  c.master_seed = j.value("master_seed", c.master_seed);
  c.record_stride = j.value("record_stride", c.record_stride);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.paired_sgd = j.value("paired_sgd", c.paired_sgd);
  if (j.contains("x0")) {
    c.x0_init = j.at("x0").value("init", c.x0_init);
    c.x0_scale = j.at("x0").value("scale", c.x0_scale);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (g.contains("values")) c.grid.values = g.at("values").get<std::vector<double>>();
    c.grid.pilot_fraction = g.value("pilot_fraction", c.grid.pilot_fraction);
    c.grid.pilot_repeats = g.value("pilot_repeats", c.grid.pilot_repeats);
    c.grid.full_budget = g.value("full_budget", c.grid.full_budget);
  }
  c.threads = j.value("threads", c.threads);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  try {
    return config_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config '" + path + "': " + e.what());
  }
}

}  // namespace mistp
