#pragma once

// Experiment drivers: noise-rate scans with transition detection, landscape
// rasters, the perturbative comparison and the gate-folding crossover.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "noisevqe/ansatz.hpp"
#include "noisevqe/cost.hpp"
#include "noisevqe/model.hpp"
#include "noisevqe/noise.hpp"
#include "noisevqe/optimize.hpp"

namespace noisevqe {

// --- scans -------------------------------------------------------------------

struct ScanRow {
  double p_x = 0.0;
  double best_energy = 0.0;
  double best_overlap = 0.0;
  std::vector<double> branch_energies;  // cluster means, ascending
  std::vector<int> branch_sizes;
  std::vector<double> branch_overlaps;  // overlap of each cluster's representative
  std::vector<double> all_solution_energies;  // indexed by start
  std::vector<int> solution_cluster;          // indexed by start
  std::vector<double> best_theta;
  double best_slope = 0.0;  // d(objective)/d(p_x) at best_theta
  int unconverged = 0;
};

struct ScanOptions {
  double coupling = 1.0;
  double field = 1.0;
  CostKind objective = CostKind::Exact;
  double cluster_tolerance = 1e-4;
  /// Called after each finished row, in grid order.
  std::function<void(const ScanRow&)> on_row;
};

struct ScanMetadata {
  AnsatzVariant variant;
  SpinChainSpec spec;
  CostKind objective = CostKind::Exact;
  OptimizerConfig config;
  double cluster_tolerance = 1e-4;

  /// n_layers * N, the factor of the scaled error-rate axis.
  double scale() const { return static_cast<double>(variant.num_layers * variant.num_qubits); }
};

struct ScanTable {
  ScanMetadata metadata;
  std::vector<ScanRow> rows;
  std::vector<std::string> warnings;

  double scaled(double p_x) const { return p_x * metadata.scale(); }

  std::vector<double> px() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.p_x);
    return out;
  }
};

/// `steps` evenly spaced points from lo to hi inclusive.
inline std::vector<double> px_linspace(double lo, double hi, int steps) {
  if (steps < 1) throw PreconditionError("need at least one grid point");
  if (!(hi >= lo)) throw PreconditionError("grid upper bound below lower bound");
  if (steps == 1) return {lo};
  std::vector<double> g(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (steps - 1);
  }
  g.back() = hi;
  return g;
}

inline void check_px_grid(const std::vector<double>& grid, int num_qubits) {
  if (grid.empty()) throw PreconditionError("empty p_x grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    check_bitflip_rate(grid[i], num_qubits);
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw PreconditionError("p_x grid must be strictly ascending");
    }
  }
}

inline CostContext scan_context(const ScanMetadata& meta, double p_x,
                                bool with_ground_truth = true) {
  CostContext ctx = make_context(meta.variant, meta.spec, NoiseModel{p_x}, with_ground_truth);
  ctx.objective = meta.objective;
  ctx.validate();
  return ctx;
}

inline ScanRow scan_row(const CostContext& ctx, const OptimizerConfig& config,
                        double cluster_tolerance) {
  const SolutionSet set = multi_start(ctx, config);
  const MinimaBranches branches = cluster_solutions(set, cluster_tolerance);
  ScanRow row;
  row.p_x = ctx.noise.p_x;
  const auto& best = set.best_record();
  row.best_energy = best.energy_final;
  row.best_theta = best.theta_final;
  row.best_overlap = overlap(ctx, best.theta_final);
  row.best_slope = noise_rate_derivative(ctx, best.theta_final);
  row.all_solution_energies.resize(set.records.size());
  row.solution_cluster.resize(set.records.size());
  for (const auto& r : set.records) {
    row.all_solution_energies[static_cast<std::size_t>(r.start_index)] = r.energy_final;
    row.unconverged += r.converged ? 0 : 1;
  }
  for (std::size_t c = 0; c < branches.clusters.size(); ++c) {
    const auto& cl = branches.clusters[c];
    row.branch_energies.push_back(cl.mean_energy);
    row.branch_sizes.push_back(static_cast<int>(cl.members.size()));
    row.branch_overlaps.push_back(overlap(ctx, cl.representative));
    for (int m : cl.members) row.solution_cluster[static_cast<std::size_t>(m)] = static_cast<int>(c);
  }
  return row;
}

/// Multi-start optimization at every p_x of the grid.
inline ScanTable scan_noise(const AnsatzVariant& variant, const std::vector<double>& px_grid,
                            const OptimizerConfig& config, const ScanOptions& options = {}) {
  config.validate();
  check_px_grid(px_grid, variant.num_qubits);
  if (!(options.cluster_tolerance > 0.0)) {
    throw PreconditionError("clustering tolerance must be > 0");
  }
  ScanTable table;
  table.metadata = {variant,
                    SpinChainSpec{variant.num_qubits, options.coupling, options.field},
                    options.objective,
                    config,
                    options.cluster_tolerance};
  const CostContext base = scan_context(table.metadata, px_grid.front());
  for (double p : px_grid) {
    table.rows.push_back(scan_row(base.with_noise(NoiseModel{p}), config,
                                  options.cluster_tolerance));
    if (options.on_row) options.on_row(table.rows.back());
  }
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    if (table.rows[i].best_energy < table.rows[i - 1].best_energy - 1e-9) {
      table.warnings.push_back("best energy decreases between p_x = " +
                               std::to_string(table.rows[i - 1].p_x) + " and " +
                               std::to_string(table.rows[i].p_x));
    }
  }
  return table;
}

// --- transition detection ---------------------------------------------------

enum class TransitionMethod { Continuation, DistributionCrossover, SlopeChange };

inline const char* to_string(TransitionMethod m) {
  switch (m) {
    case TransitionMethod::Continuation: return "continuation";
    case TransitionMethod::DistributionCrossover: return "distribution-crossover";
    case TransitionMethod::SlopeChange: return "slope-change";
  }
  return "?";
}

inline TransitionMethod parse_transition_method(const std::string& s) {
  if (s == "continuation") return TransitionMethod::Continuation;
  if (s == "distribution-crossover") return TransitionMethod::DistributionCrossover;
  if (s == "slope-change") return TransitionMethod::SlopeChange;
  throw PreconditionError("unknown transition method '" + s + "'");
}

struct TransitionReport {
  std::optional<double> threshold_px;
  double branch_low_slope = 0.0;   // dE/dp_x of the branch that is lowest at small p_x
  double branch_high_slope = 0.0;  // dE/dp_x of the branch that is lowest at large p_x
  TransitionMethod method = TransitionMethod::Continuation;  // method actually used
  TransitionMethod requested = TransitionMethod::Continuation;
  std::vector<double> px;
  std::vector<double> branch_low;  // curves behind the slopes (may hold NaN)
  std::vector<double> branch_high;
};

/// Energies closer than this are treated as the same branch.
inline constexpr double kBranchGapTolerance = 1e-6;
/// Slope-change detection needs the largest slope jump to exceed this many
/// times the median jump.
inline constexpr double kKinkContrast = 8.0;
/// Rows on each side a branch switch is compared against.
inline constexpr std::size_t kKinkWindow = 3;

namespace detail {

inline double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(y[i])) continue;
    sx += x[i];
    sy += y[i];
    n += 1;
  }
  if (n < 2) return 0.0;
  const double mx = sx / n, my = sy / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(y[i])) continue;
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

/// First upward zero crossing of low - high, from clearly below to clearly
/// above, linearly interpolated. NaN entries are skipped.
inline std::optional<double> branch_crossing(const std::vector<double>& x,
                                             const std::vector<double>& low,
                                             const std::vector<double>& high, double tol) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isnan(low[i]) && !std::isnan(high[i])) idx.push_back(i);
  }
  bool below = false;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double d = low[idx[k]] - high[idx[k]];
    if (d < -tol) below = true;
    if (!below || d <= tol) continue;
    // last index before k where the gap is still <= 0
    std::size_t a = k - 1;
    while (a > 0 && low[idx[a]] - high[idx[a]] > 0.0) --a;
    const std::size_t b = a + 1;
    const double da = low[idx[a]] - high[idx[a]];
    const double db = low[idx[b]] - high[idx[b]];
    const double xa = x[idx[a]], xb = x[idx[b]];
    if (db == da) return xa;
    return std::clamp(xa + (xb - xa) * (-da) / (db - da), xa, xb);
  }
  return std::nullopt;
}

inline TransitionReport slope_change(const ScanTable& table, TransitionMethod requested) {
  TransitionReport rep;
  rep.method = TransitionMethod::SlopeChange;
  rep.requested = requested;
  rep.px = table.px();
  std::vector<double> e;
  for (const auto& r : table.rows) e.push_back(r.best_energy);
  rep.branch_low = e;
  rep.branch_high = e;
  const auto& x = rep.px;
  const std::size_t n = x.size();
  // Slope jumps between consecutive segments; a kink is one jump standing
  // far above the rest.
  std::vector<double> jumps;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double s0 = (e[i] - e[i - 1]) / (x[i] - x[i - 1]);
    const double s1 = (e[i + 1] - e[i]) / (x[i + 1] - x[i]);
    jumps.push_back(std::abs(s1 - s0));
  }
  std::vector<double> sorted = jumps;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  const auto k = static_cast<std::size_t>(
      std::max_element(jumps.begin(), jumps.end()) - jumps.begin());
  const std::size_t at = k + 1;
  // Split the rows into two lines just before or just after the kink row,
  // whichever fits better, and intersect the lines.
  struct Fit {
    double slope_a, slope_b, intercept_a, intercept_b, residual;
  };
  auto fit_split = [&](std::size_t last_left) {
    auto line = [&](std::size_t b, std::size_t end, double& slope, double& icpt) {
      const std::vector<double> xs(x.begin() + static_cast<std::ptrdiff_t>(b),
                                   x.begin() + static_cast<std::ptrdiff_t>(end));
      const std::vector<double> es(e.begin() + static_cast<std::ptrdiff_t>(b),
                                   e.begin() + static_cast<std::ptrdiff_t>(end));
      slope = fitted_slope(xs, es);
      double mx = 0, me = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], me += es[i];
      mx /= static_cast<double>(xs.size());
      me /= static_cast<double>(xs.size());
      icpt = me - slope * mx;
      double r = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) r += std::pow(es[i] - icpt - slope * xs[i], 2);
      return r;
    };
    Fit f{};
    f.residual = line(0, last_left + 1, f.slope_a, f.intercept_a) +
                 line(last_left + 1, n, f.slope_b, f.intercept_b);
    return f;
  };
  // Each side needs two rows for a line.
  const bool can_before = at >= 2, can_after = at + 2 < n;
  const Fit fit = !can_after ? fit_split(at - 1)
                  : !can_before ? fit_split(at)
                  : std::min(fit_split(at - 1), fit_split(at),
                             [](const Fit& a, const Fit& b) { return a.residual < b.residual; });
  rep.branch_low_slope = fit.slope_a;
  rep.branch_high_slope = fit.slope_b;
  const double scale = std::max(1.0, std::abs(rep.branch_low_slope));
  if (!(jumps[k] > kKinkContrast * median && jumps[k] > 1e-3 * scale)) return rep;
  double cross = x[at];
  if (fit.slope_a != fit.slope_b) {
    cross = (fit.intercept_b - fit.intercept_a) / (fit.slope_a - fit.slope_b);
  }
  rep.threshold_px = std::clamp(cross, x[at - 1], x[at + 1]);
  return rep;
}


struct BranchSwitch {
  std::size_t row = 0;  // switch lies between row and row + 1
  double px = 0.0;
  double slope_drop = 0.0;
};

/// Energy of the branch through `theta` carried to the rate of `ctx`: the
/// warm-started re-optimization while it stays clear of `other_best`, else
/// the frozen-parameter energy (the branch is no longer a local minimum
/// there and its first-order continuation is theta itself).
inline double carried_energy(const CostContext& ctx, const std::vector<double>& theta,
                             double other_best, const OptimizerConfig& config) {
  const double reopt = minimize_from(ctx, theta, config, 0).energy_final;
  if (reopt > other_best + kBranchGapTolerance) return reopt;
  return objective_value(ctx, theta);
}

// Adjacent rows whose optima lie on different branches: each optimum carried
// to the neighbouring p_x ends strictly above the neighbour's own optimum.
// The crossing of the two branches is interpolated linearly.
inline std::vector<BranchSwitch> branch_switches(const ScanTable& table) {
  const auto& rows = table.rows;
  const CostContext base = scan_context(table.metadata, rows.front().p_x, false);
  std::vector<BranchSwitch> out;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    // The noiseless optimum is degenerate, so its slope says nothing.
    if (rows[i].p_x == 0.0) continue;
    const auto& a = rows[i];
    const auto& b = rows[i + 1];
    const double fwd = carried_energy(base.with_noise(NoiseModel{b.p_x}), a.best_theta,
                                      b.best_energy, table.metadata.config);
    const double bwd = carried_energy(base.with_noise(NoiseModel{a.p_x}), b.best_theta,
                                      a.best_energy, table.metadata.config);
    if (!(fwd > b.best_energy + kBranchGapTolerance && bwd > a.best_energy + kBranchGapTolerance)) {
      continue;
    }
    const double d0 = a.best_energy - bwd;  // < 0
    const double d1 = fwd - b.best_energy;  // > 0
    out.push_back({i, a.p_x + (b.p_x - a.p_x) * (-d0) / (d1 - d0), a.best_slope - b.best_slope});
  }
  return out;
}

/// Median of the finite values within `window` entries of `at`, excluding
/// `at` itself; NaN when there are none.
inline double local_median(const std::vector<double>& v, std::size_t at, std::size_t window) {
  std::vector<double> near;
  const std::size_t lo = at > window ? at - window : 0;
  for (std::size_t i = lo; i < v.size() && i <= at + window; ++i) {
    if (i != at && !std::isnan(v[i])) near.push_back(v[i]);
  }
  if (near.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(near.begin(), near.end());
  return near[near.size() / 2];
}

/// Objective along the grid with the parameters frozen at `theta`.
inline std::vector<double> frozen_branch(const ScanTable& table, const std::vector<double>& theta) {
  const CostContext base = scan_context(table.metadata, table.rows.front().p_x, false);
  std::vector<double> out;
  for (const auto& r : table.rows) out.push_back(objective_value(base.with_noise(NoiseModel{r.p_x}), theta));
  return out;
}

}  // namespace detail

/// Locates the noise-rate threshold where the global minimum switches branch.
///
/// Continuation: adjacent optima are carried to each other's p_x (see
/// carried_energy); where both end above the neighbour's optimum the two
/// belong to different branches. A switch counts when its drop in the noise
/// slope dE/dp_x stands out against the slope changes of the nearby rows;
/// the most prominent one is kept. The noiseless row never counts, as its
/// optimum is degenerate. The report curves hold
/// the best energies on each branch's own side and the frozen-parameter
/// energies of the switching optima beyond it.
///
/// Distribution-crossover follows the cluster means, with clusters assigned
/// to a branch by their ground-state overlap. Both fall
/// back to slope-change detection on the best energy when the scan holds
/// fewer than two persistent branches.
inline TransitionReport detect_transition(const ScanTable& table,
                                          TransitionMethod method = TransitionMethod::Continuation) {
  if (table.rows.size() < 4) throw PreconditionError("transition detection needs >= 4 rows");
  if (method == TransitionMethod::SlopeChange) return detail::slope_change(table, method);

  TransitionReport rep;
  rep.method = method;
  rep.requested = method;
  rep.px = table.px();
  const std::size_t n = rep.px.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  if (method == TransitionMethod::Continuation) {
    const auto switches = detail::branch_switches(table);
    // Slope changes between neighbouring rows; the noiseless row is skipped.
    std::vector<double> changes(n - 1, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (table.rows[i].p_x == 0.0) continue;
      changes[i] = std::abs(table.rows[i].best_slope - table.rows[i + 1].best_slope);
    }
    const detail::BranchSwitch* pick = nullptr;
    double pick_contrast = 0.0;
    for (const auto& s : switches) {
      const double typical = detail::local_median(changes, s.row, kKinkWindow);
      const double floor = 1e-3 * std::max(1.0, std::abs(table.rows[s.row].best_slope));
      if (!(s.slope_drop > floor) || std::isnan(typical)) continue;
      const double contrast = s.slope_drop / std::max(typical, floor);
      if (contrast > kKinkContrast && contrast > pick_contrast) {
        pick = &s;
        pick_contrast = contrast;
      }
    }
    if (!pick) return detail::slope_change(table, method);
    const std::size_t k = pick->row;
    rep.branch_low = detail::frozen_branch(table, table.rows[k].best_theta);
    rep.branch_high = detail::frozen_branch(table, table.rows[k + 1].best_theta);
    for (std::size_t i = 0; i <= k; ++i) rep.branch_low[i] = table.rows[i].best_energy;
    for (std::size_t i = k + 1; i < n; ++i) rep.branch_high[i] = table.rows[i].best_energy;
    rep.branch_low_slope = table.rows[k].best_slope;
    rep.branch_high_slope = table.rows[k + 1].best_slope;
    rep.threshold_px = pick->px;
    return rep;
  }

  const double o_low = table.rows.front().best_overlap;
  const double o_high = table.rows.back().best_overlap;
  if (std::abs(o_low - o_high) < 0.1) return detail::slope_change(table, method);
  rep.branch_low.assign(n, nan);
  rep.branch_high.assign(n, nan);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    for (std::size_t c = 0; c < row.branch_energies.size(); ++c) {
      const double o = row.branch_overlaps[c];
      auto& curve = std::abs(o - o_low) <= std::abs(o - o_high) ? rep.branch_low : rep.branch_high;
      if (std::isnan(curve[i])) curve[i] = row.branch_energies[c];  // lowest cluster wins
    }
  }
  std::size_t both = 0;
  for (std::size_t i = 0; i < n; ++i) {
    both += !std::isnan(rep.branch_low[i]) && !std::isnan(rep.branch_high[i]) ? 1 : 0;
  }
  if (both < 2) return detail::slope_change(table, method);
  rep.branch_low_slope = detail::fitted_slope(rep.px, rep.branch_low);
  rep.branch_high_slope = detail::fitted_slope(rep.px, rep.branch_high);
  rep.threshold_px =
      detail::branch_crossing(rep.px, rep.branch_low, rep.branch_high, kBranchGapTolerance);
  return rep;
}

// --- perturbative comparison -------------------------------------------------

struct PerturbativeComparison {
  ScanTable exact;
  ScanTable perturbative;
};

inline PerturbativeComparison compare_perturbative(const AnsatzVariant& variant,
                                                   const std::vector<double>& px_grid,
                                                   const OptimizerConfig& config,
                                                   ScanOptions options = {}) {
  options.objective = CostKind::Exact;
  ScanTable exact = scan_noise(variant, px_grid, config, options);
  options.objective = CostKind::Perturbative;
  ScanTable pert = scan_noise(variant, px_grid, config, options);
  return {std::move(exact), std::move(pert)};
}

// --- landscape ---------------------------------------------------------------

struct LandscapeRaster {
  std::vector<double> t0_grid;
  std::vector<double> t1_grid;
  Eigen::MatrixXd energies;  // (i, j) <-> (t0_grid[i], t1_grid[j])
  double p_x = 0.0;
  Eigen::Index argmin_i = 0;
  Eigen::Index argmin_j = 0;
  double argmin_energy = 0.0;
};

/// Dense evaluation of the two-parameter dimer cost.
inline LandscapeRaster landscape_raster(const std::vector<double>& t0_grid,
                                        const std::vector<double>& t1_grid, double p_x,
                                        const SpinChainSpec& spec = {}) {
  if (t0_grid.empty() || t1_grid.empty()) throw PreconditionError("empty landscape grid");
  const CostContext ctx = make_context(AnsatzVariant::dimer2(), spec, NoiseModel{p_x}, false);
  LandscapeRaster r{t0_grid, t1_grid, Eigen::MatrixXd(t0_grid.size(), t1_grid.size()), p_x};
  parallel_for(static_cast<int>(t0_grid.size()), 0, [&](int i) {
    std::array<double, 2> t{t0_grid[static_cast<std::size_t>(i)], 0.0};
    for (std::size_t j = 0; j < t1_grid.size(); ++j) {
      t[1] = t1_grid[j];
      r.energies(i, static_cast<Eigen::Index>(j)) = energy(ctx, t);
    }
  });
  r.argmin_energy = r.energies.minCoeff(&r.argmin_i, &r.argmin_j);
  return r;
}

struct Basin {
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  double energy = 0.0;
  double depth = 0.0;  // persistence; +inf for the global basin
};

namespace detail {

inline bool spans_period(const std::vector<double>& g) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return g.size() > 2 && std::abs(g.back() - g.front() - two_pi) <= 1e-9;
}

}  // namespace detail

/// Basins of the raster found by sublevel-set persistence (union-find over
/// grid cells in ascending energy). A grid covering exactly one 2 pi period
/// on an axis is treated as periodic there, so translates merge. Returns
/// basins deeper than `min_depth`, ascending by energy.
inline std::vector<Basin> landscape_basins(const LandscapeRaster& raster, double min_depth = 1e-3) {
  const bool wrap0 = detail::spans_period(raster.t0_grid);
  const bool wrap1 = detail::spans_period(raster.t1_grid);
  // A periodic axis drops its duplicated endpoint.
  const Eigen::Index n0 = raster.energies.rows() - (wrap0 ? 1 : 0);
  const Eigen::Index n1 = raster.energies.cols() - (wrap1 ? 1 : 0);
  const auto cells = static_cast<std::size_t>(n0 * n1);
  auto value = [&](std::size_t c) {
    return raster.energies(static_cast<Eigen::Index>(c) / n1, static_cast<Eigen::Index>(c) % n1);
  };
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return value(a) < value(b); });

  constexpr auto none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> parent(cells, none);
  std::vector<std::size_t> root_min(cells);  // lowest cell of each component
  auto find = [&](std::size_t c) {
    while (parent[c] != c) c = parent[c] = parent[parent[c]];
    return c;
  };
  std::vector<Basin> out;
  for (std::size_t c : order) {
    parent[c] = c;
    root_min[c] = c;
    const Eigen::Index i = static_cast<Eigen::Index>(c) / n1;
    const Eigen::Index j = static_cast<Eigen::Index>(c) % n1;
    const std::array<std::array<Eigen::Index, 2>, 4> nb{{{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}}};
    for (auto [a, b] : nb) {
      if (a < 0 || a >= n0) {
        if (!wrap0) continue;
        a = (a + n0) % n0;
      }
      if (b < 0 || b >= n1) {
        if (!wrap1) continue;
        b = (b + n1) % n1;
      }
      const auto nc = static_cast<std::size_t>(a * n1 + b);
      if (parent[nc] == none) continue;
      std::size_t ra = find(c), rb = find(nc);
      if (ra == rb) continue;
      // the component with the higher minimum dies here
      if (value(root_min[ra]) < value(root_min[rb]) ||
          (value(root_min[ra]) == value(root_min[rb]) && root_min[ra] < root_min[rb])) {
        std::swap(ra, rb);
      }
      const double depth = value(c) - value(root_min[ra]);
      if (depth > min_depth) {
        const std::size_t m = root_min[ra];
        out.push_back({static_cast<Eigen::Index>(m) / n1, static_cast<Eigen::Index>(m) % n1,
                       value(m), depth});
      }
      parent[ra] = rb;
    }
  }
  if (cells > 0) {
    const std::size_t m = root_min[find(order.front())];
    out.push_back({static_cast<Eigen::Index>(m) / n1, static_cast<Eigen::Index>(m) % n1,
                   value(m), std::numeric_limits<double>::infinity()});
  }
  std::sort(out.begin(), out.end(), [](const Basin& a, const Basin& b) {
    return a.energy != b.energy ? a.energy < b.energy : a.depth > b.depth;
  });
  return out;
}

/// Minima of the two-parameter dimer cost: basins of a raster refined by
/// local optimization, ascending by energy, angles wrapped to [-pi, pi).
inline std::vector<SolutionRecord> dimer_minima(double p_x, const OptimizerConfig& config,
                                                int grid = 121, const SpinChainSpec& spec = {}) {
  const auto axis = px_linspace(-std::numbers::pi, std::numbers::pi, grid);
  const LandscapeRaster raster = landscape_raster(axis, axis, p_x, spec);
  const CostContext ctx = make_context(AnsatzVariant::dimer2(), spec, NoiseModel{p_x}, false);
  std::vector<SolutionRecord> out;
  for (const auto& b : landscape_basins(raster)) {
    const std::array<double, 2> t0{axis[static_cast<std::size_t>(b.i)],
                                   axis[static_cast<std::size_t>(b.j)]};
    out.push_back(minimize_from(ctx, t0, config, static_cast<int>(out.size())));
  }
  std::stable_sort(out.begin(), out.end(), [](const SolutionRecord& a, const SolutionRecord& b) {
    return a.energy_final < b.energy_final;
  });
  return out;
}

// --- gate folding ------------------------------------------------------------

inline constexpr double kDefaultFoldRate = 5e-3;

struct FoldReport {
  std::vector<int> m_values;
  std::vector<double> energy_min1;
  std::vector<double> energy_min2;
  std::optional<int> crossover_m;
  double p2 = kDefaultFoldRate;
  CnotChannel channel = CnotChannel::BitFlip;
};

/// Energies of two dimer minima under CNOT folding with per-CNOT noise p2
/// and no layer bit flips. Angles are 2 (two-parameter) or 8 entries.
inline FoldReport fold_experiment(const std::vector<double>& min1_theta,
                                  const std::vector<double>& min2_theta,
                                  const std::vector<int>& m_values,
                                  double p2 = kDefaultFoldRate,
                                  CnotChannel channel = CnotChannel::BitFlip,
                                  const SpinChainSpec& spec = {}) {
  auto full = [](const std::vector<double>& t) {
    if (t.size() == 2) return expand_two_param(t[0], t[1]);
    if (t.size() == 8) return t;
    throw PreconditionError("fold angles need 2 or 8 entries (got " + std::to_string(t.size()) + ")");
  };
  const auto a = full(min1_theta), b = full(min2_theta);
  const NoiseModel noise{0.0, p2, channel};
  noise.validate(2);
  const CircuitLayout base = build_layout(2, 1);
  const HermitianOperator h = build_hamiltonian(spec);
  FoldReport rep;
  rep.m_values = m_values;
  rep.p2 = p2;
  rep.channel = channel;
  for (int m : m_values) {
    const CircuitLayout folded = fold_layout(base, FoldSetting{m});
    const double e1 = expectation(simulate_matrix(folded, a, noise), h.matrix());
    const double e2 = expectation(simulate_matrix(folded, b, noise), h.matrix());
    rep.energy_min1.push_back(e1);
    rep.energy_min2.push_back(e2);
    if (!rep.crossover_m && e1 > e2) rep.crossover_m = m;
  }
  return rep;
}

}  // namespace noisevqe
