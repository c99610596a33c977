// Fit the simulation-study model and print conditional intervals for a few
// large predicted values, plus the density of X given the first of them.
//
//   demo_conditional_interval [seed]

#include <cstdio>
#include <cstdlib>

#include "tlpred/tlpred.hpp"

int main(int argc, char** argv) {
  using namespace tlpred;
  SimulateConfig sc;
  sc.seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
  const auto sim = run_simulate(sc);
  const auto data = CsvTable::from_matrix(sim.x, "x");

  FitConfig fc;
  fc.target = "x7";
  fc.marginal = MarginalMode::Identity;
  fc.quantile = 0.99;
  fc.split.mode = SplitMode::Head;
  fc.split.head_rows = 40000;
  fc.seed = sc.seed;
  const auto doc = run_fit(data, fc);
  std::printf("K = %.2f, joint region [%.3f, %.3f] rad, interval at x_hat = 1: [%.4f, %.4f]\n", doc.k,
              doc.region.theta_lo, doc.region.theta_hi, doc.unit_interval.lo, doc.unit_interval.hi);

  PredictConfig pc;
  pc.rows = RowSelection::Test;
  const auto pred = run_predict(doc, data, pc);
  std::printf("%zu of %zu test rows above the 0.95 quantile of x_hat (%.2f)\n", pred.rows.size(),
              pred.n_candidates, pred.threshold);
  std::printf("%8s %10s %10s %10s %10s\n", "row", "x_hat", "lo", "hi", "x");
  for (std::size_t i = 0; i < std::min<std::size_t>(8, pred.rows.size()); ++i) {
    const auto& r = pred.rows[i];
    std::printf("%8zu %10.2f %10.2f %10.2f %10.2f\n", r.row, r.x_hat, r.interval.lo, r.interval.hi, *r.x_true);
  }
  if (pred.rows.empty()) return 0;

  const ConditionalDensity f(doc.angular_density(), pred.rows.front().x_hat);
  std::printf("\ndensity of X given x_hat = %.2f\n", f.x_hat());
  for (double p : {0.025, 0.25, 0.5, 0.75, 0.975}) {
    const double x = f.quantile(p);
    std::printf("  q%.3f = %10.3f   f = %.5g\n", p, x, f(x));
  }
}
