// MiSTP against full-batch STP on a synthetic ridge problem, printed as a
// small table of f(x_k) - f* by epoch.

#include <cstdio>

#include "mistp/mistp.hpp"

int main() {
  using namespace mistp;

  const Dataset ds = synthetic_regression(200, 10, 0.5, 7);
  const RidgeProblem ridge(ds.features, ds.labels, 1.0 / 200.0);
  const double f_star = full_value(ridge, ridge.closed_form_minimizer());

  RngStream init(42);
  const Vector x0 = init.normal_vector(10);

  OptimizerSpec mistp_spec;
  mistp_spec.method = Method::MiSTP;
  mistp_spec.tau = 20;
  mistp_spec.alpha = 0.1;
  mistp_spec.dist = DirectionKind::UnitSphere;

  OptimizerSpec stp_spec = mistp_spec;
  stp_spec.method = Method::STP;

  RunOptions opts;
  opts.record_stride = 1;
  const RunTrace a = run(mistp_spec, ridge, x0, Budget::epochs(60), StreamSeeds::from_master(1), opts);
  const RunTrace b = run(stp_spec, ridge, x0, Budget::epochs(60), StreamSeeds::from_master(1), opts);

  auto gap_at = [&](const RunTrace& t, double epoch) {
    double g = t.records.front().f - f_star;
    for (const auto& r : t.records) {
      if (r.epoch > epoch) break;
      g = r.f - f_star;
    }
    return g;
  };

  std::printf("%8s %14s %14s\n", "epoch", "MiSTP tau=20", "STP");
  for (double e : {0.0, 5.0, 10.0, 20.0, 40.0, 60.0}) std::printf("%8.0f %14.6g %14.6g\n", e, gap_at(a, e), gap_at(b, e));
  return 0;
}
