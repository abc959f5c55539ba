// Command-line front end: run, compare, grid, verify, mlp.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mistp/mistp.hpp"

namespace {

using namespace mistp;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

/// Flags shared by every experiment-style subcommand. Values only override
/// the (file or default) config when given on the command line.
struct CommonFlags {
  std::string config_path;
  std::string problem;
  std::string data;
  std::string synthetic;
  std::string dist;
  std::string out;
  std::string x0;
  double lambda = 0.0;
  double alpha = 0.0;
  double mu = 1e-4;
  double epochs = 0.0;
  std::uint64_t queries = 0;
  std::uint64_t iterations = 0;
  std::uint64_t seed = 0;
  std::size_t repeats = 10;
  std::size_t stride = 1;
  std::size_t threads = 0;
  std::size_t dimension = 0;
  std::size_t limit = 0;
  bool paired = false;
  bool standardize = false;
  bool full_budget_grid = false;
  double pilot_fraction = 0.2;

  CLI::Option* o_problem{};
  CLI::Option* o_data{};
  CLI::Option* o_synthetic{};
  CLI::Option* o_dist{};
  CLI::Option* o_out{};
  CLI::Option* o_x0{};
  CLI::Option* o_lambda{};
  CLI::Option* o_alpha{};
  CLI::Option* o_mu{};
  CLI::Option* o_epochs{};
  CLI::Option* o_queries{};
  CLI::Option* o_iterations{};
  CLI::Option* o_seed{};
  CLI::Option* o_repeats{};
  CLI::Option* o_stride{};
  CLI::Option* o_threads{};
  CLI::Option* o_dimension{};
  CLI::Option* o_limit{};
  CLI::Option* o_pilot{};

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    o_problem = app->add_option("--problem", problem, "ridge | logistic | mlp");
    o_data = app->add_option("--data", data, "LIBSVM data file");
    o_synthetic = app->add_option("--synthetic", synthetic, "e.g. ridge:n=200,d=10,seed=7");
    o_dist = app->add_option("--dist", dist, "sphere | gaussian | coord | ortho");
    o_out = app->add_option("--out", out, "output directory for CSV files");
    o_x0 = app->add_option("--x0", x0, "gaussian | zeros");
    o_lambda = app->add_option("--lambda", lambda, "regularization (default 1/n)");
    o_alpha = app->add_option("--alpha", alpha, "stepsize (omit to grid-search)");
    o_mu = app->add_option("--mu", mu, "smoothing parameter for rsgf/zosvrg/zocd");
    o_epochs = app->add_option("--epochs", epochs, "budget in epochs");
    o_queries = app->add_option("--queries", queries, "budget in component queries");
    o_iterations = app->add_option("--iterations", iterations, "budget in iterations");
    o_seed = app->add_option("--seed", seed, "master seed");
    o_repeats = app->add_option("--repeats", repeats, "runs per configuration");
    o_stride = app->add_option("--record-stride", stride, "record every k iterations");
    o_threads = app->add_option("--threads", threads, "worker threads (0 = all cores)");
    o_dimension = app->add_option("--dimension", dimension, "override LIBSVM dimension");
    o_limit = app->add_option("--limit", limit, "keep only the first N samples");
    o_pilot = app->add_option("--pilot-fraction", pilot_fraction, "grid-search pilot budget fraction");
    app->add_flag("--paired-sgd", paired, "SGD shares MiSTP's minibatch stream");
    app->add_flag("--standardize", standardize, "standardize feature columns");
    app->add_flag("--full-budget-grid", full_budget_grid, "tune stepsizes on full runs");
  }

  ExperimentConfig base() const {
    return config_path.empty() ? ExperimentConfig{} : load_config(config_path);
  }

  void apply(ExperimentConfig& c) const {
    if (*o_problem) c.problem = parse_problem_kind(problem);
    if (*o_data) {
      c.data.libsvm_path = data;
    }
    if (*o_synthetic) {
      c.data.synthetic = synthetic;
      c.data.libsvm_path.clear();
    }
    if (*o_lambda) c.lambda = lambda;
    if (*o_out) c.output_dir = out;
    if (*o_x0) c.x0_init = x0;
    if (*o_epochs || *o_queries || *o_iterations) {
      c.budget = {};
      if (*o_epochs) c.budget.max_epochs = epochs;
      if (*o_queries) c.budget.max_queries = queries;
      if (*o_iterations) c.budget.max_iterations = iterations;
    }
    if (*o_seed) c.master_seed = seed;
    if (*o_repeats) c.repeats = repeats;
    if (*o_stride) c.record_stride = stride;
    if (*o_threads) c.threads = threads;
    if (*o_dimension) c.data.dimension = dimension;
    if (*o_limit) c.data.limit = limit;
    if (*o_pilot) c.grid.pilot_fraction = pilot_fraction;
    if (paired) c.paired_sgd = true;
    if (standardize) c.data.standardize = true;
    if (full_budget_grid) c.grid.full_budget = true;
    for (auto& m : c.methods) apply_method(m);
  }

  void apply_method(MethodConfig& m) const {
    if (*o_alpha) m.alpha = alpha;
    if (*o_mu) m.spec.mu = mu;
    if (*o_dist) m.spec.dist = parse_direction_kind(dist);
  }
};

void print_summary(const ExperimentResult& res, const ProblemInstance& inst) {
  std::printf("problem %s  n=%zu  d=%zu\n", inst.problem->name().c_str(), inst.problem->num_components(),
              inst.problem->dimension());
  if (inst.f_star) std::printf("f* (closed form) = %.10g\n", *inst.f_star);
  for (const auto& g : res.grids) {
    std::printf("grid:");
    for (const auto& e : g.table) std::printf("  a=%g:%.6g", e.alpha, e.mean_final_f);
    std::printf("  -> %g\n", g.alpha);
  }
  std::printf("%-8s %6s %10s %10s %14s %12s %6s\n", "method", "tau", "alpha", "epochs", "queries", "final f", "failed");
  for (const auto& c : res.cells) {
    if (c.checkpoints.empty()) {
      std::printf("%-8s %6zu %10g %10s %14s %12s %6zu\n", std::string(to_string(c.method)).c_str(), c.tau, c.alpha, "-", "-",
                  "-", c.failed_runs);
      continue;
    }
    const auto& last = c.checkpoints.back();
    std::printf("%-8s %6zu %10g %10.4g %14llu %12.6g %6zu\n", std::string(to_string(c.method)).c_str(), c.tau, c.alpha,
                last.epoch, static_cast<unsigned long long>(last.queries), last.mean_f, c.failed_runs);
  }
  if (res.warnings > 0) std::fprintf(stderr, "warning: %zu run(s) failed and were excluded from aggregates\n", res.warnings);
}

int execute(const ExperimentConfig& cfg) {
  const ProblemInstance inst = build_problem(cfg);
  const ExperimentResult res = run_experiment(cfg, inst);
  print_summary(res, inst);
  const auto files = export_csv(res.cells, cfg.output_dir);
  std::printf("wrote %zu aggregate CSV file(s) to %s\n", files.size(), cfg.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minibatch stochastic three points and zeroth-order baselines"};
  app.require_subcommand(1);

  // run
  CommonFlags run_flags;
  std::string run_method = "mistp";
  std::size_t run_tau = 1;
  auto* run_cmd = app.add_subcommand("run", "run a single method");
  run_flags.attach(run_cmd);
  run_cmd->add_option("--method", run_method, "mistp | stp | sgd | rsgf | zosvrg | zocd");
  auto* run_tau_opt = run_cmd->add_option("--tau", run_tau, "minibatch size");

  // compare
  CommonFlags cmp_flags;
  std::string cmp_methods, cmp_taus;
  auto* cmp_cmd = app.add_subcommand("compare", "compare methods and batch sizes");
  cmp_flags.attach(cmp_cmd);
  cmp_cmd->add_option("--methods", cmp_methods, "comma-separated methods");
  cmp_cmd->add_option("--taus", cmp_taus, "comma-separated batch sizes");

  // grid
  CommonFlags grid_flags;
  std::string grid_method = "mistp";
  std::size_t grid_tau = 1;
  auto* grid_cmd = app.add_subcommand("grid", "stepsize grid search");
  grid_flags.attach(grid_cmd);
  grid_cmd->add_option("--method", grid_method, "method to tune");
  grid_cmd->add_option("--tau", grid_tau, "minibatch size");

  // mlp
  CommonFlags mlp_flags;
  std::string mlp_hidden = "16,8";
  std::string mlp_taus = "50";
  std::string idx_images, idx_labels;
  auto* mlp_cmd = app.add_subcommand("mlp", "toy neural-network training with MiSTP");
  mlp_flags.attach(mlp_cmd);
  mlp_cmd->add_option("--hidden", mlp_hidden, "hidden layer widths");
  mlp_cmd->add_option("--taus", mlp_taus, "comma-separated batch sizes");
  mlp_cmd->add_option("--idx-images", idx_images, "IDX image file (unsigned bytes)");
  mlp_cmd->add_option("--idx-labels", idx_labels, "IDX label file");

  // verify
  std::uint64_t verify_seed = 1;
  std::size_t verify_samples = 10000;
  auto* verify_cmd = app.add_subcommand("verify", "run the theory oracle suite");
  verify_cmd->add_option("--seed", verify_seed, "seed");
  verify_cmd->add_option("--samples", verify_samples, "Monte-Carlo samples per descent check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      ExperimentConfig cfg = run_flags.base();
      MethodConfig mc;
      mc.spec.method = parse_method(run_method);
      cfg.methods = {mc};
      if (*run_tau_opt || cfg.taus.empty()) cfg.taus = {run_tau};
      if (!*run_flags.o_repeats && run_flags.config_path.empty()) cfg.repeats = 1;
      run_flags.apply(cfg);
      return execute(cfg);
    }
    if (*cmp_cmd) {
      ExperimentConfig cfg = cmp_flags.base();
      if (!cmp_methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : split_list(cmp_methods)) {
          MethodConfig mc;
          mc.spec.method = parse_method(m);
          cfg.methods.push_back(mc);
        }
      }
      if (cfg.methods.empty()) cfg.methods = {MethodConfig{}};
      if (!cmp_taus.empty()) {
        cfg.taus.clear();
        for (const auto& t : split_list(cmp_taus)) cfg.taus.push_back(std::stoul(t));
      }
      cmp_flags.apply(cfg);
      return execute(cfg);
    }
    if (*grid_cmd) {
      ExperimentConfig cfg = grid_flags.base();
      MethodConfig mc;
      mc.spec.method = parse_method(grid_method);
      grid_flags.apply_method(mc);
      mc.alpha.reset();
      grid_flags.apply(cfg);
      const ProblemInstance inst = build_problem(cfg);
      const GridResult g = grid_search_stepsize(cfg, inst, mc, mc.spec.method == Method::STP ? inst.problem->num_components() : grid_tau);
      std::printf("%-12s %s\n", "alpha", "mean final f");
      for (const auto& e : g.table) std::printf("%-12g %.10g\n", e.alpha, e.mean_final_f);
      std::printf("selected alpha = %g\n", g.alpha);
      return 0;
    }
    if (*mlp_cmd) {
      ExperimentConfig cfg = mlp_flags.base();
      cfg.problem = ProblemKind::Mlp;
      if (mlp_flags.config_path.empty()) {
        cfg.data.synthetic = "classification:n=500,d=10,seed=3,margin=0.1";
        cfg.x0_init = "zeros";
        cfg.budget = Budget::epochs(200.0);
        cfg.record_stride = 10;
      }
      cfg.mlp_hidden.clear();
      for (const auto& h : split_list(mlp_hidden)) cfg.mlp_hidden.push_back(std::stoul(h));
      cfg.taus.clear();
      for (const auto& t : split_list(mlp_taus)) cfg.taus.push_back(std::stoul(t));
      if (!idx_images.empty()) {
        cfg.data.idx_images = idx_images;
        cfg.data.idx_labels = idx_labels;
      }
      if (cfg.methods.empty()) {
        MethodConfig mc;
        mc.spec.method = Method::MiSTP;
        mc.spec.dist = DirectionKind::UnitSphere;
        cfg.methods = {mc};
      }
      mlp_flags.apply(cfg);
      return execute(cfg);
    }
    if (*verify_cmd) {
      const auto results = run_verification_suite(verify_seed, verify_samples);
      bool all = true;
      for (const auto& r : results) {
        std::printf("[%s] %-48s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        all = all && r.passed;
      }
      std::printf("%s\n", all ? "all checks passed" : "some checks FAILED");
      return all ? 0 : 1;
    }
  } catch (const mistp::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
