#pragma once

// Limited-memory BFGS with a strong-Wolfe line search, multi-start driver and
// energy clustering of the resulting local minima.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include "noisevqe/cost.hpp"

namespace noisevqe {

struct OptimizerConfig {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-8;  // on the infinity norm
  int memory_pairs = 10;
  int n_starts = 128;
  double init_low = -std::numbers::pi;
  double init_high = std::numbers::pi;
  std::uint64_t seed = 0;

  int max_line_search = 40;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  /// Worker threads for multi_start; 0 picks hardware_concurrency.
  unsigned threads = 0;

  void validate() const {
    if (n_starts < 1) throw PreconditionError("n_starts must be >= 1");
    if (max_iterations < 0) throw PreconditionError("max_iterations must be >= 0");
    if (!(gradient_tolerance > 0.0)) throw PreconditionError("gradient tolerance must be > 0");
    if (memory_pairs < 1) throw PreconditionError("memory_pairs must be >= 1");
    if (!(init_high > init_low)) throw PreconditionError("empty initialization range");
    if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
      throw PreconditionError("need 0 < c1 < c2 < 1 for the Wolfe conditions");
    }
  }
};

struct SolutionRecord {
  std::vector<double> theta_final;
  double energy_final = 0.0;
  int start_index = 0;
  int iterations = 0;
  bool converged = false;
};

struct SolutionSet {
  std::vector<SolutionRecord> records;
  std::size_t best = 0;

  const SolutionRecord& best_record() const { return records.at(best); }
};

struct MinimaCluster {
  std::vector<double> representative;  // theta of the lowest member
  double mean_energy = 0.0;
  double min_energy = 0.0;
  double max_energy = 0.0;
  std::vector<int> members;  // start indices
};

struct MinimaBranches {
  std::vector<MinimaCluster> clusters;  // ascending by mean energy
};

/// Callable computing f(x) and writing grad f(x) into g.
template <class F>
concept Objective = requires(F f, std::span<const double> x, std::span<double> g) {
  { f(x, g) } -> std::convertible_to<double>;
};

// --- deterministic counter-based draws ----------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Uniform in [0, 1), a pure function of (seed, stream, draw).
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t draw) {
  std::uint64_t k = splitmix64(seed);
  k = splitmix64(k ^ (stream * 0xD1B54A32D192ED03ull));
  k = splitmix64(k ^ (draw * 0xABC98388FB8FAC03ull));
  return static_cast<double>(k >> 11) * 0x1.0p-53;
}

inline std::vector<double> start_point(const OptimizerConfig& cfg, int dim, int start_index) {
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    x[static_cast<std::size_t>(k)] =
        cfg.init_low + (cfg.init_high - cfg.init_low) *
                           counter_uniform(cfg.seed, static_cast<std::uint64_t>(start_index),
                                           static_cast<std::uint64_t>(k));
  }
  return x;
}

inline double wrap_angle(double a) {
  constexpr double two_pi = 2 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w < 0) w += two_pi;
  w -= std::numbers::pi;
  return w >= std::numbers::pi ? -std::numbers::pi : w;
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct TrialPoint {
  double alpha = 0.0;
  double f = 0.0;
  double dphi = 0.0;
  std::vector<double> x;
  std::vector<double> g;
};

/// Minimizer of the cubic matching (a, fa, da) and (b, fb, db), kept inside
/// the middle 80% of the bracket.
inline double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double width = hi - lo;
  const double d1 = da + db - 3 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  double t = 0.5 * (a + b);
  if (disc >= 0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2 * d2;
    if (denom != 0) t = b - (b - a) * (db + d2 - d1) / denom;
  }
  if (!std::isfinite(t)) t = 0.5 * (a + b);
  return std::clamp(t, lo + 0.1 * width, hi - 0.1 * width);
}

// Strong-Wolfe line search (bracketing + zoom). In the rounding regime,
// where f changes by less than ~1e-12 relative, the sufficient-decrease test
// is relaxed to plain non-increase so that tight gradient tolerances remain
// reachable; accepted values never increase.
template <Objective F>
bool strong_wolfe(F& fg, std::span<const double> x, double f0, std::span<const double> dir,
                  double dphi0, double alpha0, const OptimizerConfig& cfg, TrialPoint& out) {
  const std::size_t n = x.size();
  const double noise_floor = 1e-12 * (1.0 + std::abs(f0));
  auto evaluate = [&](double alpha) {
    TrialPoint t;
    t.alpha = alpha;
    t.x.resize(n);
    t.g.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.x[i] = x[i] + alpha * dir[i];
    t.f = fg(std::span<const double>(t.x), std::span<double>(t.g));
    t.dphi = dot(t.g, dir);
    return t;
  };
  auto sufficient = [&](const TrialPoint& t) {
    if (!std::isfinite(t.f)) return false;
    if (t.f <= f0 + cfg.wolfe_c1 * t.alpha * dphi0) return true;
    return t.f <= f0 && f0 - t.f <= noise_floor;
  };
  auto curvature = [&](const TrialPoint& t) { return std::abs(t.dphi) <= -cfg.wolfe_c2 * dphi0; };

  TrialPoint best;
  best.f = f0;
  bool have_best = false;
  auto remember = [&](const TrialPoint& t) {
    if (std::isfinite(t.f) && t.f < best.f) {
      best = t;
      have_best = true;
    }
  };

  auto zoom = [&](TrialPoint lo, TrialPoint hi, int budget) {
    for (int j = 0; j < budget; ++j) {
      if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, lo.alpha)) break;
      const double a = cubic_step(lo.alpha, lo.f, lo.dphi, hi.alpha, hi.f, hi.dphi);
      TrialPoint t = evaluate(a);
      remember(t);
      if (!sufficient(t) || t.f >= lo.f) {
        hi = std::move(t);
      } else {
        if (curvature(t)) {
          out = std::move(t);
          return true;
        }
        if (t.dphi * (hi.alpha - lo.alpha) >= 0) hi = lo;
        lo = std::move(t);
      }
    }
    return false;
  };

  TrialPoint prev;
  prev.alpha = 0.0;
  prev.f = f0;
  prev.dphi = dphi0;
  prev.x.assign(x.begin(), x.end());
  double alpha = alpha0;
  for (int i = 0; i < cfg.max_line_search; ++i) {
    TrialPoint t = evaluate(alpha);
    remember(t);
    if (!sufficient(t) || (i > 0 && t.f >= prev.f)) {
      if (zoom(prev, t, cfg.max_line_search)) return true;
      break;
    }
    if (curvature(t)) {
      out = std::move(t);
      return true;
    }
    if (t.dphi >= 0) {
      if (zoom(t, prev, cfg.max_line_search)) return true;
      break;
    }
    prev = std::move(t);
    alpha *= 2.0;
  }
  // No strong-Wolfe point; fall back to the lowest value seen, if it improves.
  if (have_best && best.f < f0) {
    out = std::move(best);
    return true;
  }
  return false;
}

}  // namespace detail

/// L-BFGS from theta0. The returned theta is wrapped into [-pi, pi) and the
/// energy re-evaluated there.
template <Objective F>
SolutionRecord local_minimize(F&& fg, std::span<const double> theta0, const OptimizerConfig& cfg,
                              int start_index = 0) {
  cfg.validate();
  using detail::dot;
  const std::size_t n = theta0.size();
  std::vector<double> x(theta0.begin(), theta0.end());
  std::vector<double> g(n);
  double f = fg(std::span<const double>(x), std::span<double>(g));
  if (!std::isfinite(f)) throw NumericalError("objective is not finite at the start point");

  const auto m = static_cast<std::size_t>(cfg.memory_pairs);
  std::vector<std::vector<double>> s_hist, y_hist;
  std::vector<double> rho_hist;
  std::vector<double> dir(n), alpha_buf(m);

  SolutionRecord rec;
  rec.start_index = start_index;
  bool converged = detail::inf_norm(g) <= cfg.gradient_tolerance;
  int it = 0;
  while (!converged && it < cfg.max_iterations) {
    // two-loop recursion
    for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
    const std::size_t k = s_hist.size();
    for (std::size_t j = k; j-- > 0;) {
      alpha_buf[j] = rho_hist[j] * dot(s_hist[j], dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha_buf[j] * y_hist[j][i];
    }
    if (k > 0) {
      const double gamma = dot(s_hist[k - 1], y_hist[k - 1]) / dot(y_hist[k - 1], y_hist[k - 1]);
      for (double& v : dir) v *= gamma;
    }
    for (std::size_t j = 0; j < k; ++j) {
      const double beta = rho_hist[j] * dot(y_hist[j], dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha_buf[j] - beta) * s_hist[j][i];
    }
    double dphi0 = dot(g, dir);
    if (!(dphi0 < 0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
      dphi0 = dot(g, dir);
    }
    const double alpha0 =
        s_hist.empty() ? std::min(1.0, 1.0 / std::sqrt(dot(g, g))) : 1.0;

    detail::TrialPoint step;
    if (!detail::strong_wolfe(fg, x, f, dir, dphi0, alpha0, cfg, step)) {
      if (s_hist.empty()) break;
      // Stale curvature pairs; retry once along steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
      dphi0 = dot(g, dir);
      if (!detail::strong_wolfe(fg, x, f, dir, dphi0, std::min(1.0, 1.0 / std::sqrt(-dphi0)),
                                cfg, step)) {
        break;
      }
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = step.x[i] - x[i];
      y[i] = step.g[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-14 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (s_hist.size() == m) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    x = std::move(step.x);
    g = std::move(step.g);
    f = step.f;
    ++it;
    converged = detail::inf_norm(g) <= cfg.gradient_tolerance;
  }

  for (double& v : x) v = wrap_angle(v);
  rec.energy_final = fg(std::span<const double>(x), std::span<double>(g));
  rec.theta_final = std::move(x);
  rec.iterations = it;
  rec.converged = converged;
  return rec;
}

/// Separate value and gradient callables.
template <class Cost, class Grad>
  requires std::invocable<Cost, std::span<const double>> &&
           std::invocable<Grad, std::span<const double>>
SolutionRecord local_minimize(Cost&& cost, Grad&& grad, std::span<const double> theta0,
                              const OptimizerConfig& cfg, int start_index = 0) {
  auto fg = [&](std::span<const double> x, std::span<double> g) {
    const auto gv = grad(x);
    std::copy(gv.begin(), gv.end(), g.begin());
    return static_cast<double>(cost(x));
  };
  return local_minimize(fg, theta0, cfg, start_index);
}

inline SolutionRecord minimize_from(const CostContext& ctx, std::span<const double> theta0,
                                    const OptimizerConfig& cfg, int start_index = 0) {
  auto fg = [&ctx](std::span<const double> x, std::span<double> g) {
    return value_and_gradient(ctx, x, g);
  };
  return local_minimize(fg, theta0, cfg, start_index);
}

inline std::size_t best_index(const std::vector<SolutionRecord>& records) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto& b = records[best];
    if (r.energy_final < b.energy_final ||
        (r.energy_final == b.energy_final && r.start_index < b.start_index)) {
      best = i;
    }
  }
  return best;
}

/// Runs fn(i) for i in [0, count) on a small worker pool.
template <class Fn>
void parallel_for(int count, unsigned threads, Fn&& fn) {
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max(count, 1)));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline SolutionSet multi_start(const CostContext& ctx, const OptimizerConfig& cfg) {
  cfg.validate();
  ctx.validate();
  const int dim = ctx.dimension();
  SolutionSet set;
  set.records.resize(static_cast<std::size_t>(cfg.n_starts));
  parallel_for(cfg.n_starts, cfg.threads, [&](int i) {
    const auto x0 = start_point(cfg, dim, i);
    set.records[static_cast<std::size_t>(i)] = minimize_from(ctx, x0, cfg, i);
  });
  set.best = best_index(set.records);
  return set;
}

/// Single-linkage clustering on energy_final: sorted energies are split
/// wherever consecutive values differ by more than energy_tol.
inline MinimaBranches cluster_solutions(const SolutionSet& set, double energy_tol = 1e-4) {
  if (!(energy_tol > 0.0)) throw PreconditionError("clustering tolerance must be > 0");
  std::vector<std::size_t> order(set.records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = set.records[a];
    const auto& rb = set.records[b];
    if (ra.energy_final != rb.energy_final) return ra.energy_final < rb.energy_final;
    return ra.start_index < rb.start_index;
  });
  MinimaBranches out;
  double sum = 0.0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto& r = set.records[order[pos]];
    if (out.clusters.empty() || r.energy_final - out.clusters.back().max_energy > energy_tol) {
      if (!out.clusters.empty()) {
        auto& c = out.clusters.back();
        c.mean_energy = sum / static_cast<double>(c.members.size());
      }
      MinimaCluster c;
      c.representative = r.theta_final;
      c.min_energy = r.energy_final;
      out.clusters.push_back(std::move(c));
      sum = 0.0;
    }
    auto& c = out.clusters.back();
    c.members.push_back(r.start_index);
    c.max_energy = r.energy_final;
    sum += r.energy_final;
  }
  if (!out.clusters.empty()) {
    auto& c = out.clusters.back();
    c.mean_energy = sum / static_cast<double>(c.members.size());
  }
  return out;
}

}  // namespace noisevqe
