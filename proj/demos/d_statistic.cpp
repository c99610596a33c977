// Tail behaviour of the prediction error for a small generator: K from the
// exact TPDM, the bound d* with P(D > d*) ~ 0.05, and its empirical level.
//
//   demo_d_statistic [seed] [n]

#include <cstdio>
#include <cstdlib>

#include "tlpred/tlpred.hpp"

int main(int argc, char** argv) {
  using namespace tlpred;
  SimulateConfig sc;
  sc.p = 4;
  sc.q = 10;
  sc.seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
  sc.n = argc > 2 ? std::atol(argv[2]) : 20000;
  const auto sim = run_simulate(sc);

  const auto part = PartitionedTPDM::from(sim.truth, 3);
  const auto w = solve_weights(part);
  const double k = prediction_error_K(part, w);
  const ParetoSpec spec = ParetoSpec::centered();

  std::printf("weights:");
  for (double b : w.b) std::printf(" %.4f", b);
  std::printf("\nK = %.4f\n", k);

  const Eigen::VectorXd xh = predict_rows(w, sim.x.leftCols(3));
  std::vector<double> d(static_cast<std::size_t>(sim.x.rows()));
  for (Eigen::Index t = 0; t < sim.x.rows(); ++t) d[static_cast<std::size_t>(t)] = d_statistic(sim.x(t, 3), xh[t]);

  std::printf("%8s %10s %12s\n", "level", "d*", "P(D <= d*)");
  for (double level : {0.9, 0.95, 0.99}) {
    const double dstar = d_bound(k, level, spec);
    std::size_t below = 0;
    for (double v : d) below += v <= dstar ? 1 : 0;
    std::printf("%8.2f %10.3f %12.4f\n", level, dstar, static_cast<double>(below) / static_cast<double>(d.size()));
  }
}
