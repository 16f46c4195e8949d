#pragma once

// CSV and JSON emitters. Numbers are printed with 17 significant digits so
// that files round-trip and identical runs give identical bytes.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>  // nlohmann/json, vendored

#include "noisevqe/explab.hpp"

namespace noisevqe {

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_scan_csv(std::ostream& os, const ScanTable& table, int branch_columns = 3) {
  os << "p_x,scaled_px,best_energy,best_overlap,n_branches,unconverged";
  for (int b = 1; b <= branch_columns; ++b) os << ",branch_" << b;
  os << '\n';
  for (const auto& r : table.rows) {
    os << format_number(r.p_x) << ',' << format_number(table.scaled(r.p_x)) << ','
       << format_number(r.best_energy) << ',' << format_number(r.best_overlap) << ','
       << r.branch_energies.size() << ',' << r.unconverged;
    for (int b = 0; b < branch_columns; ++b) {
      const auto k = static_cast<std::size_t>(b);
      os << ',' << (k < r.branch_energies.size() ? format_number(r.branch_energies[k]) : "nan");
    }
    os << '\n';
  }
}

inline void write_distribution_csv(std::ostream& os, const ScanTable& table) {
  os << "p_x,scaled_px,start_index,energy,cluster,cluster_overlap\n";
  for (const auto& r : table.rows) {
    for (std::size_t s = 0; s < r.all_solution_energies.size(); ++s) {
      const int c = r.solution_cluster[s];
      os << format_number(r.p_x) << ',' << format_number(table.scaled(r.p_x)) << ',' << s << ','
         << format_number(r.all_solution_energies[s]) << ',' << c << ','
         << format_number(r.branch_overlaps[static_cast<std::size_t>(c)]) << '\n';
    }
  }
}

inline void write_landscape_csv(std::ostream& os, const LandscapeRaster& raster) {
  os << "t0,t1,energy\n";
  for (std::size_t i = 0; i < raster.t0_grid.size(); ++i) {
    for (std::size_t j = 0; j < raster.t1_grid.size(); ++j) {
      os << format_number(raster.t0_grid[i]) << ',' << format_number(raster.t1_grid[j]) << ','
         << format_number(raster.energies(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(j)))
         << '\n';
    }
  }
}

inline void write_fold_csv(std::ostream& os, const FoldReport& rep) {
  os << "m,energy_min1,energy_min2\n";
  for (std::size_t k = 0; k < rep.m_values.size(); ++k) {
    os << rep.m_values[k] << ',' << format_number(rep.energy_min1[k]) << ','
       << format_number(rep.energy_min2[k]) << '\n';
  }
  os << "# crossover_m," << (rep.crossover_m ? std::to_string(*rep.crossover_m) : "none") << '\n';
}

inline void write_comparison_csv(std::ostream& os, const PerturbativeComparison& cmp) {
  os << "p_x,scaled_px,exact_best,perturbative_best,exact_overlap,perturbative_overlap\n";
  for (std::size_t i = 0; i < cmp.exact.rows.size(); ++i) {
    const auto& e = cmp.exact.rows[i];
    const auto& p = cmp.perturbative.rows[i];
    os << format_number(e.p_x) << ',' << format_number(cmp.exact.scaled(e.p_x)) << ','
       << format_number(e.best_energy) << ',' << format_number(p.best_energy) << ','
       << format_number(e.best_overlap) << ',' << format_number(p.best_overlap) << '\n';
  }
}

// --- JSON -------------------------------------------------------------------

inline nlohmann::json to_json(const CircuitLayout& layout) {
  nlohmann::json slots = nlohmann::json::array();
  for (const auto& s : layout.slots) {
    nlohmann::json j{{"kind", to_string(s.kind)}};
    if (s.qubit >= 0) j[s.kind == SlotKind::Cnot ? "control" : "qubit"] = s.qubit;
    if (s.target >= 0) j["target"] = s.target;
    if (s.param >= 0) j["param"] = s.param;
    if (s.layer >= 0) j["layer"] = s.layer;
    slots.push_back(std::move(j));
  }
  return {{"num_qubits", layout.num_qubits},
          {"num_layers", layout.num_layers},
          {"param_count", layout.param_count},
          {"slots", std::move(slots)}};
}

inline nlohmann::json to_json(const OptimizerConfig& c) {
  return {{"max_iterations", c.max_iterations}, {"gradient_tolerance", c.gradient_tolerance},
          {"memory_pairs", c.memory_pairs},     {"n_starts", c.n_starts},
          {"init_low", c.init_low},             {"init_high", c.init_high},
          {"seed", c.seed},                     {"max_line_search", c.max_line_search},
          {"wolfe_c1", c.wolfe_c1},             {"wolfe_c2", c.wolfe_c2}};
}

inline nlohmann::json to_json(const SolutionSet& set) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : set.records) {
    recs.push_back({{"start_index", r.start_index},
                    {"energy", r.energy_final},
                    {"iterations", r.iterations},
                    {"converged", r.converged},
                    {"theta", r.theta_final}});
  }
  return {{"best", set.best}, {"records", std::move(recs)}};
}

inline nlohmann::json to_json(const TransitionReport& rep, double scale) {
  nlohmann::json j{{"method", to_string(rep.method)},
                   {"requested_method", to_string(rep.requested)},
                   {"branch_low_slope", rep.branch_low_slope},
                   {"branch_high_slope", rep.branch_high_slope}};
  if (rep.threshold_px) {
    j["threshold_px"] = *rep.threshold_px;
    j["threshold_scaled"] = *rep.threshold_px * scale;
  } else {
    j["threshold_px"] = nullptr;
    j["threshold_scaled"] = nullptr;
  }
  return j;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << '\n';
}

}  // namespace noisevqe
