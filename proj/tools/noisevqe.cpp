// Command-line driver for the noisy-VQE experiments.
//
//   noisevqe exact --n 2
//   noisevqe scan --variant dimer8 --px-min 0 --px-max 0.12 --px-steps 25 --seed 7
//   noisevqe fold --m-max 40 --p2 0.005
//
// Exit codes: 0 success, 2 usage error, 3 invalid physics parameters,
// 4 numerical failure, 1 anything else (I/O).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noisevqe/io.hpp"

namespace {

using namespace noisevqe;
using nlohmann::json;

struct Options {
  int n = 2;
  int layers = 1;
  std::string variant = "dimer8";
  double px_min = 0.0;
  double px_max = 0.12;
  int px_steps = 25;
  bool scaled = false;
  int starts = 128;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  double coupling = 1.0;
  double field = 1.0;
  unsigned threads = 0;
  std::string method = "continuation";
  int grid = 400;
  double px = 0.0;
  int m_max = 40;
  double p2 = kDefaultFoldRate;
  std::string cnot_channel = "bitflip";
  int max_iter = 1000;
  double gtol = 1e-8;
  int memory = 10;
  bool quiet = false;

  // set while parsing
  bool n_given = false;
  bool layers_given = false;
};

json options_json(const Options& o) {
  return {{"n", o.n},
          {"layers", o.layers},
          {"variant", o.variant},
          {"px-min", o.px_min},
          {"px-max", o.px_max},
          {"px-steps", o.px_steps},
          {"scaled", o.scaled},
          {"starts", o.starts},
          {"seed", o.seed},
          {"coupling", o.coupling},
          {"field", o.field},
          {"method", o.method},
          {"grid", o.grid},
          {"px", o.px},
          {"m-max", o.m_max},
          {"p2", o.p2},
          {"cnot-channel", o.cnot_channel},
          {"max-iter", o.max_iter},
          {"gtol", o.gtol},
          {"memory", o.memory}};
}

OptimizerConfig optimizer_config(const Options& o) {
  OptimizerConfig cfg;
  cfg.n_starts = o.starts;
  cfg.seed = o.seed;
  cfg.max_iterations = o.max_iter;
  cfg.gradient_tolerance = o.gtol;
  cfg.memory_pairs = o.memory;
  cfg.threads = o.threads;
  cfg.validate();
  return cfg;
}

AnsatzVariant resolve_variant(const Options& o) {
  if (o.variant == "general") return parse_variant(o.variant, o.n, o.layers);
  const AnsatzVariant v = parse_variant(o.variant, 2, 1);
  if ((o.n_given && o.n != 2) || (o.layers_given && o.layers != 1)) {
    throw PreconditionError("variant " + o.variant + " is fixed at N = 2 with one layer");
  }
  return v;
}

std::vector<double> px_grid(const Options& o, const AnsatzVariant& v) {
  const double scale = o.scaled ? static_cast<double>(v.num_qubits * v.num_layers) : 1.0;
  auto grid = px_linspace(o.px_min / scale, o.px_max / scale, o.px_steps);
  check_px_grid(grid, v.num_qubits);
  return grid;
}

ScanOptions scan_options(const Options& o, const AnsatzVariant& v) {
  ScanOptions so;
  so.coupling = o.coupling;
  so.field = o.field;
  if (!o.quiet) {
    const double scale = static_cast<double>(v.num_qubits * v.num_layers);
    so.on_row = [scale](const ScanRow& r) {
      std::fprintf(stderr, "  p_x %.6g (scaled %.4g)  best %.10f  overlap %.4f  branches %zu\n",
                   r.p_x, r.p_x * scale, r.best_energy, r.best_overlap,
                   r.branch_energies.size());
    };
  }
  return so;
}

std::filesystem::path out_path(const Options& o, const std::string& file) {
  std::filesystem::create_directories(o.out_dir);
  return std::filesystem::path(o.out_dir) / file;
}

template <class Writer>
std::string write_csv(const Options& o, const std::string& file, Writer&& w) {
  const auto path = out_path(o, file);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  w(os);
  if (!os) throw std::runtime_error("write failed for " + path.string());
  return path.string();
}

void write_manifest(const Options& o, const std::string& command, const OptimizerConfig* cfg,
                    const std::vector<std::string>& outputs, json results) {
  json m{{"software", "noisevqe"},
         {"version", NOISEVQE_VERSION},
         {"command", command},
         {"options", options_json(o)},
         {"outputs", json::array()},
         {"results", std::move(results)}};
  if (cfg) m["optimizer"] = to_json(*cfg);
  for (const auto& p : outputs) m["outputs"].push_back(std::filesystem::path(p).filename().string());
  write_json(out_path(o, "manifest.json").string(), m);
}

// --- subcommands -------------------------------------------------------------

int run_exact(const Options& o) {
  const SpinChainSpec spec{o.n, o.coupling, o.field};
  const GroundTruth gt = exact_ground(build_hamiltonian(spec));
  std::printf("N = %d  J = %g  h = %g\n", o.n, o.coupling, o.field);
  std::printf("E_g = %.15f\n", gt.energy);
  std::printf("degeneracy = %d  gap = %.15f\n", gt.degeneracy, gt.gap);
  std::printf("ground state amplitudes (qubit 0 = most significant bit):\n");
  const auto& amp = gt.state.amplitudes();
  for (Eigen::Index k = 0; k < amp.size(); ++k) {
    if (std::abs(amp(k)) < 1e-12) continue;
    std::string bits;
    for (int q = 0; q < o.n; ++q) bits += (k >> (o.n - 1 - q)) & 1 ? '1' : '0';
    std::printf("  |%s>  %+.15f %+.15fi\n", bits.c_str(), amp(k).real(), amp(k).imag());
  }
  return 0;
}

json scan_summary(const ScanTable& t) {
  json w = json::array();
  for (const auto& s : t.warnings) w.push_back(s);
  return {{"variant", t.metadata.variant.name()},
          {"n", t.metadata.variant.num_qubits},
          {"layers", t.metadata.variant.num_layers},
          {"scale", t.metadata.scale()},
          {"rows", t.rows.size()},
          {"warnings", std::move(w)}};
}

void print_transition(const TransitionReport& rep, double scale) {
  if (rep.threshold_px) {
    std::printf("threshold p_x = %.6f  (scaled %.6f, method %s)\n", *rep.threshold_px,
                *rep.threshold_px * scale, to_string(rep.method));
  } else {
    std::printf("threshold: none (method %s)\n", to_string(rep.method));
  }
  std::printf("branch slopes: low %.6f  high %.6f\n", rep.branch_low_slope, rep.branch_high_slope);
}

int run_scan(const Options& o) {
  const auto variant = resolve_variant(o);
  const auto grid = px_grid(o, variant);
  const auto cfg = optimizer_config(o);
  const auto method = parse_transition_method(o.method);
  const ScanTable table = scan_noise(variant, grid, cfg, scan_options(o, variant));
  const auto csv = write_csv(o, "scan.csv", [&](std::ostream& os) { write_scan_csv(os, table); });
  json results = scan_summary(table);
  if (table.rows.size() >= 4) {
    const auto rep = detect_transition(table, method);
    print_transition(rep, table.metadata.scale());
    results["transition"] = to_json(rep, table.metadata.scale());
  }
  for (const auto& w : table.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  write_manifest(o, "scan", &cfg, {csv}, std::move(results));
  std::printf("wrote %s\n", csv.c_str());
  return 0;
}

int run_distribution(const Options& o) {
  const auto variant = resolve_variant(o);
  const auto grid = px_grid(o, variant);
  const auto cfg = optimizer_config(o);
  const ScanTable table = scan_noise(variant, grid, cfg, scan_options(o, variant));
  const auto csv = write_csv(o, "distribution.csv",
                             [&](std::ostream& os) { write_distribution_csv(os, table); });
  write_manifest(o, "distribution", &cfg, {csv}, scan_summary(table));
  std::printf("wrote %s\n", csv.c_str());
  return 0;
}

int run_compare(const Options& o) {
  const auto variant = resolve_variant(o);
  const auto grid = px_grid(o, variant);
  const auto cfg = optimizer_config(o);
  const auto cmp = compare_perturbative(variant, grid, cfg, scan_options(o, variant));
  const auto csv = write_csv(o, "compare.csv",
                             [&](std::ostream& os) { write_comparison_csv(os, cmp); });
  double worst = 0.0;
  for (std::size_t i = 0; i < cmp.exact.rows.size(); ++i) {
    worst = std::max(worst, std::abs(cmp.exact.rows[i].best_energy -
                                     cmp.perturbative.rows[i].best_energy));
  }
  std::printf("largest |exact - perturbative| optimum gap: %.3e\n", worst);
  json results{{"exact", scan_summary(cmp.exact)},
               {"perturbative", scan_summary(cmp.perturbative)},
               {"max_gap", worst}};
  if (grid.size() >= 4) {
    const double scale = cmp.exact.metadata.scale();
    results["exact"]["transition"] = to_json(detect_transition(cmp.exact), scale);
    results["perturbative"]["transition"] = to_json(detect_transition(cmp.perturbative), scale);
  }
  write_manifest(o, "compare-pert", &cfg, {csv}, std::move(results));
  std::printf("wrote %s\n", csv.c_str());
  return 0;
}

int run_landscape(const Options& o) {
  if (o.grid < 2) throw PreconditionError("landscape grid needs >= 2 points per axis");
  const auto axis = px_linspace(-std::numbers::pi, std::numbers::pi, o.grid);
  const SpinChainSpec spec{2, o.coupling, o.field};
  const LandscapeRaster r = landscape_raster(axis, axis, o.px, spec);
  const auto csv = write_csv(o, "landscape.csv",
                             [&](std::ostream& os) { write_landscape_csv(os, r); });
  const auto basins = landscape_basins(r);
  json b = json::array();
  for (const auto& x : basins) {
    b.push_back({{"t0", axis[static_cast<std::size_t>(x.i)]},
                 {"t1", axis[static_cast<std::size_t>(x.j)]},
                 {"energy", x.energy},
                 {"depth", std::isinf(x.depth) ? json(nullptr) : json(x.depth)}});
  }
  std::printf("grid argmin E = %.10f at (t0, t1) = (%.6f, %.6f); %zu basins\n", r.argmin_energy,
              axis[static_cast<std::size_t>(r.argmin_i)], axis[static_cast<std::size_t>(r.argmin_j)],
              basins.size());
  write_manifest(o, "landscape", nullptr, {csv},
                 {{"argmin_energy", r.argmin_energy},
                  {"argmin", {axis[static_cast<std::size_t>(r.argmin_i)],
                              axis[static_cast<std::size_t>(r.argmin_j)]}},
                  {"basins", std::move(b)}});
  std::printf("wrote %s\n", csv.c_str());
  return 0;
}

int run_fold(const Options& o) {
  if (o.m_max < 0) throw PreconditionError("m-max must be >= 0");
  const auto cfg = optimizer_config(o);
  const SpinChainSpec spec{2, o.coupling, o.field};
  const auto minima = dimer_minima(0.0, cfg, 121, spec);
  if (minima.size() < 2) throw NumericalError("two-parameter landscape has fewer than two minima");
  std::vector<int> ms(static_cast<std::size_t>(o.m_max + 1));
  std::iota(ms.begin(), ms.end(), 0);
  const FoldReport rep = fold_experiment(minima[0].theta_final, minima[1].theta_final, ms, o.p2,
                                         parse_cnot_channel(o.cnot_channel), spec);
  const auto csv = write_csv(o, "fold.csv", [&](std::ostream& os) { write_fold_csv(os, rep); });
  if (rep.crossover_m) {
    std::printf("crossover_m = %d\n", *rep.crossover_m);
  } else {
    std::printf("crossover_m = none\n");
  }
  write_manifest(o, "fold", &cfg, {csv},
                 {{"min1_theta", minima[0].theta_final},
                  {"min2_theta", minima[1].theta_final},
                  {"min1_energy", minima[0].energy_final},
                  {"min2_energy", minima[1].energy_final},
                  {"channel", to_string(rep.channel)},
                  {"crossover_m", rep.crossover_m ? json(*rep.crossover_m) : json(nullptr)}});
  std::printf("wrote %s\n", csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Noise-induced transitions in VQE on Heisenberg chains", "noisevqe"};
  app.set_version_flag("--version", std::string(NOISEVQE_VERSION));
  app.set_config("--config", "", "Flat key = value file; keys match the long flags");
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(1);

  auto* n_opt = app.add_option("--n", o.n, "Number of spins / qubits")->capture_default_str();
  auto* l_opt = app.add_option("--layers", o.layers, "Ansatz layers")->capture_default_str();
  app.add_option("--variant", o.variant, "dimer8, dimer2 or general")
      ->check(CLI::IsMember({"dimer8", "dimer2", "general"}))
      ->capture_default_str();
  app.add_option("--px-min", o.px_min, "Lowest bit-flip rate")->capture_default_str();
  app.add_option("--px-max", o.px_max, "Highest bit-flip rate")->capture_default_str();
  app.add_option("--px-steps", o.px_steps, "Grid points")->capture_default_str();
  app.add_flag("--scaled", o.scaled, "Read --px-min/--px-max as p_x * layers * N");
  app.add_option("--starts", o.starts, "Random starts per p_x")->capture_default_str();
  app.add_option("--seed", o.seed, "Seed of the start-point streams")->capture_default_str();
  app.add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
  app.add_option("--coupling", o.coupling, "Exchange coupling J")->capture_default_str();
  app.add_option("--field", o.field, "Field strength h")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--method", o.method, "Transition detection method")
      ->check(CLI::IsMember({"continuation", "distribution-crossover", "slope-change"}))
      ->capture_default_str();
  app.add_option("--grid", o.grid, "Landscape points per axis")->capture_default_str();
  app.add_option("--px", o.px, "Landscape bit-flip rate")->capture_default_str();
  app.add_option("--m-max", o.m_max, "Largest fold count")->capture_default_str();
  app.add_option("--p2", o.p2, "Per-CNOT error rate for folding")->capture_default_str();
  app.add_option("--cnot-channel", o.cnot_channel, "bitflip or depolarizing")
      ->check(CLI::IsMember({"bitflip", "depolarizing"}))
      ->capture_default_str();
  app.add_option("--max-iter", o.max_iter, "L-BFGS iteration cap")->capture_default_str();
  app.add_option("--gtol", o.gtol, "Gradient infinity-norm tolerance")->capture_default_str();
  app.add_option("--memory", o.memory, "L-BFGS memory pairs")->capture_default_str();
  app.add_flag("--quiet", o.quiet, "No per-row progress on stderr");

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const std::vector<Command> commands{
      {"exact", "Exact ground state of the spin chain", run_exact},
      {"landscape", "Two-parameter dimer cost raster", run_landscape},
      {"scan", "Noise-rate scan with transition detection", run_scan},
      {"compare-pert", "Exact vs leading-order cost optima", run_compare},
      {"fold", "CNOT folding crossover of the two dimer minima", run_fold},
      {"distribution", "All solution energies per noise rate", run_distribution},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  o.n_given = n_opt->count() > 0;
  o.layers_given = l_opt->count() > 0;

  try {
    for (const auto& c : commands) {
      if (app.got_subcommand(c.name)) return c.run(o);
    }
    return 2;
  } catch (const PreconditionError& e) {
    std::fprintf(stderr, "error: invalid parameters: %s\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
