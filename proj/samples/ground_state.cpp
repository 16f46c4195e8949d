// Optimizes the eight-parameter dimer ansatz at one bit-flip rate and prints
// the best energy, its ground-state overlap and the distinct minima found.

#include <cstdio>
#include <cstdlib>

#include "noisevqe/optimize.hpp"

int main(int argc, char** argv) {
  using namespace noisevqe;
  const double p_x = argc > 1 ? std::atof(argv[1]) : 0.03;

  const CostContext ctx = make_context(AnsatzVariant::dimer8(), SpinChainSpec{}, NoiseModel{p_x});
  OptimizerConfig cfg;
  cfg.n_starts = 32;
  cfg.seed = 1;

  const SolutionSet set = multi_start(ctx, cfg);
  const auto& best = set.best_record();
  std::printf("p_x = %g  exact E_g = %.12f\n", p_x, ctx.ground_truth->energy);
  std::printf("best energy %.12f  overlap %.6f\n", best.energy_final, overlap(ctx, best.theta_final));
  for (const auto& c : cluster_solutions(set).clusters) {
    std::printf("  minimum at E = %.10f  (%zu starts)\n", c.mean_energy, c.members.size());
  }
  return 0;
}
