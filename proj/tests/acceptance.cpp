// Acceptance gate: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit status is the number of
// failed criteria (capped at 100).
//
//   acceptance           chain scan for N = 5 at 32 starts (smoke)
//   acceptance --full    chain scan for N = 5 at 128 starts

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "noisevqe/io.hpp"

using namespace noisevqe;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun cli(const std::string& args) {
  const std::string cmd = std::string(NOISEVQE_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

OptimizerConfig starts(int n, std::uint64_t seed) {
  OptimizerConfig cfg;
  cfg.n_starts = n;
  cfg.seed = seed;
  return cfg;
}

// Best overlap just below and just above the threshold.
double overlap_drop(const ScanTable& t, double threshold) {
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    if (t.rows[i].p_x <= threshold && t.rows[i + 1].p_x > threshold) {
      return t.rows[i].best_overlap - t.rows[i + 1].best_overlap;
    }
  }
  return 0.0;
}

double energy_from(const std::string& out) {
  const auto at = out.find("E_g = ");
  return at == std::string::npos ? std::nan("") : std::strtod(out.c_str() + at + 6, nullptr);
}

// Real part printed for a basis label such as "|01>"; 0 when the label is absent.
double amplitude_from(const std::string& out, const std::string& label) {
  const auto at = out.find(label);
  return at == std::string::npos ? 0.0 : std::strtod(out.c_str() + at + label.size(), nullptr);
}

Outcome exact_ground_truth() {
  Outcome o;
  auto t0 = Clock::now();
  const auto two = cli("exact --n 2");
  const double t2 = seconds_since(t0);
  t0 = Clock::now();
  const auto one = cli("exact --n 1");
  const double t1 = seconds_since(t0);
  const double e2 = energy_from(two.out), e1 = energy_from(one.out);
  o.require(two.code == 0 && one.code == 0, "exit codes 0");
  o.require(std::abs(e2 + 3.0) <= 1e-12, fmt("E(N=2) = %.15f", e2));
  o.require(std::abs(e1 + std::sqrt(3.0)) <= 1e-12, fmt("E(N=1) = %.15f", e1));
  const double a01 = amplitude_from(two.out, "|01>"), a10 = amplitude_from(two.out, "|10>");
  const double a00 = amplitude_from(two.out, "|00>"), a11 = amplitude_from(two.out, "|11>");
  o.require(std::abs(std::abs(a01) - std::sqrt(0.5)) < 1e-12 && std::abs(a01 + a10) < 1e-12 &&
                a00 == 0.0 && a11 == 0.0,
            fmt("singlet amplitudes (%+.6f, %+.6f)", a01, a10));
  o.require(t2 < 1.0 && t1 < 1.0, fmt("runtime %.3f s / %.3f s", t2, t1));
  return o;
}

struct DimerScans {
  ScanTable d8, d2;
  TransitionReport t8, t2;
  double seconds8 = 0;
};

DimerScans run_dimer_scans(std::uint64_t seed) {
  DimerScans s;
  const auto grid = px_linspace(0.0, 0.12, 25);
  auto t0 = Clock::now();
  s.d8 = scan_noise(AnsatzVariant::dimer8(), grid, starts(128, seed));
  s.t8 = detect_transition(s.d8);
  s.seconds8 = seconds_since(t0);
  s.d2 = scan_noise(AnsatzVariant::dimer2(), grid, starts(128, seed));
  s.t2 = detect_transition(s.d2);
  return s;
}

Outcome dimer_transition(const DimerScans& s) {
  Outcome o;
  o.require(s.t8.threshold_px.has_value(), "threshold detected");
  if (!s.t8.threshold_px) return o;
  const double th = *s.t8.threshold_px;
  o.require(th >= 0.05 && th <= 0.09,
            fmt("threshold_px = %.4f via ", th) + to_string(s.t8.method));
  const double drop = overlap_drop(s.d8, th);
  o.require(drop > 0.2, fmt("overlap drop %.3f", drop));
  o.require(s.seconds8 < 600.0, fmt("runtime %.1f s", s.seconds8));
  return o;
}

Outcome dimer_consistency(const DimerScans& s) {
  Outcome o;
  o.require(s.t8.threshold_px && s.t2.threshold_px, "both thresholds detected");
  if (!s.t8.threshold_px || !s.t2.threshold_px) return o;
  const double d = std::abs(*s.t2.threshold_px - *s.t8.threshold_px);
  o.require(d <= 0.02, fmt("two-parameter threshold %.4f, difference %.4f", *s.t2.threshold_px, d));
  return o;
}

Outcome perturbative_equivalence(std::uint64_t seed) {
  Outcome o;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> rate(0.0, 0.5);
  const auto base = make_context(AnsatzVariant::dimer8(), SpinChainSpec{}, NoiseModel{}, false);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> theta(8);
    for (auto& t : theta) t = angle(rng);
    const double p = rate(rng);
    const auto ctx = base.with_noise(NoiseModel{p});
    worst = std::max(worst, std::abs(energy(ctx, theta) - energy_perturbative(ctx, theta, p)));
  }
  o.require(worst <= 1e-10, fmt("single layer: max gap %.2e over 100 samples", worst));

  const auto chain = make_context(AnsatzVariant::general(5, 4), SpinChainSpec{5, 1.0, 1.0},
                                  NoiseModel{}, false);
  for (int k = 0; k < 3; ++k) {
    std::vector<double> theta(74);
    for (auto& t : theta) t = angle(rng);
    auto gap = [&](double p) {
      const auto ctx = chain.with_noise(NoiseModel{p});
      return std::abs(energy(ctx, theta) - energy_perturbative(ctx, theta, p));
    };
    const double ratio = gap(0.004) / gap(0.002);
    o.require(ratio >= 3.5 && ratio <= 4.5, fmt("N=5 halving ratio %.3f", ratio));
  }
  return o;
}

Outcome chain_transition(std::uint64_t seed, int n_starts) {
  Outcome o;
  const auto run = [&](int n, int layers) {
    const auto v = AnsatzVariant::general(n, layers);
    const double scale = static_cast<double>(n * layers);
    const auto t = scan_noise(v, px_linspace(0.0, 0.5 / scale, 25), starts(n_starts, seed));
    return std::pair{t, detect_transition(t)};
  };
  auto t0 = Clock::now();
  const auto [t5, r5] = run(5, 4);
  const double s5 = seconds_since(t0);
  t0 = Clock::now();
  const auto [t3, r3] = run(3, 2);
  const double s3 = seconds_since(t0);
  if (r5.threshold_px) {
    const double scaled = *r5.threshold_px * t5.metadata.scale();
    o.require(scaled >= 0.2 && scaled <= 0.4,
              fmt("N=5 scaled threshold %.4f via ", scaled) + to_string(r5.method));
  } else {
    o.require(false, "N=5 threshold detected");
  }
  o.require(!r3.threshold_px,
            r3.threshold_px ? fmt("N=3 spurious threshold at scaled %.4f", *r3.threshold_px * 6.0)
                            : std::string("N=3 no threshold"));
  const double budget = n_starts >= 128 ? 7200.0 : 900.0;
  o.require(s5 + s3 < budget, std::to_string(n_starts) + fmt(" starts, runtime %.0f s", s5 + s3) +
                                  fmt(" (budget %.0f s)", budget));
  return o;
}

Outcome parameter_counts() {
  Outcome o;
  o.require(param_count(2, 1) == 8, "param_count(2,1) = " + std::to_string(param_count(2, 1)));
  o.require(param_count(5, 4) == 74, "param_count(5,4) = " + std::to_string(param_count(5, 4)));
  o.require(build_layout(5, 4).param_count == 74, "layout agrees");
  return o;
}

Outcome gradient_check(std::uint64_t seed) {
  Outcome o;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  int samples = 0;
  double worst = 0.0;
  for (const auto& v : {AnsatzVariant::dimer2(), AnsatzVariant::dimer8(), AnsatzVariant::general(3, 2)}) {
    const auto base = make_context(v, SpinChainSpec{v.num_qubits, 1.0, 1.0}, NoiseModel{}, false);
    for (double p : {0.0, 0.02, 0.05}) {
      const auto ctx = base.with_noise(NoiseModel{p});
      for (int k = 0; k < 12; ++k, ++samples) {
        std::vector<double> theta(static_cast<std::size_t>(ctx.dimension()));
        for (auto& t : theta) t = angle(rng);
        const auto g = gradient(ctx, theta);
        for (std::size_t i = 0; i < theta.size(); ++i) {
          auto shifted = theta;
          shifted[i] = theta[i] + 1e-5;
          const double up = energy(ctx, shifted);
          shifted[i] = theta[i] - 1e-5;
          const double down = energy(ctx, shifted);
          worst = std::max(worst, std::abs(g[i] - (up - down) / 2e-5));
        }
      }
    }
  }
  o.require(samples >= 100, std::to_string(samples) + " samples");
  o.require(worst <= 1e-6, fmt("max componentwise deviation %.2e", worst));
  return o;
}

Outcome channel_properties(std::uint64_t seed) {
  Outcome o;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double trace_err = 0.0, kraus_err = 0.0;
  for (int n = 1; n <= 5; ++n) {
    const auto d = static_cast<Eigen::Index>(dimension_of(n));
    for (int k = 0; k < 20; ++k) {
      CMatrix a(d, d);
      for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = Complex(g(rng), g(rng));
      CMatrix rho = a * a.adjoint();
      rho /= rho.trace();
      const double p = u(rng) / n;
      CMatrix b = rho;
      apply_bitflip_inplace(b, p, n);
      trace_err = std::max(trace_err, std::abs(b.trace() - Complex(1.0)));
      const auto ck = kraus_completeness(bitflip_kraus(n, p));
      kraus_err = std::max(kraus_err, max_abs(ck - CMatrix::Identity(d, d)));
      if (n >= 2) {
        const double p2 = u(rng);
        CMatrix c = rho;
        apply_depolarizing2_inplace(c, 0, n - 1, p2, n);
        trace_err = std::max(trace_err, std::abs(c.trace() - Complex(1.0)));
        const auto cd = kraus_completeness(depolarizing2_kraus(n, {0, n - 1}, p2));
        kraus_err = std::max(kraus_err, max_abs(cd - CMatrix::Identity(d, d)));
      }
    }
  }
  o.require(trace_err <= 1e-14, fmt("trace error %.2e", trace_err));
  o.require(kraus_err <= 1e-12, fmt("Kraus completeness error %.2e", kraus_err));

  const auto minima = dimer_minima(0.0, starts(1, seed));
  std::vector<int> ms;
  for (int m = 0; m <= 40; ++m) ms.push_back(m);
  double drift = 0.0;
  for (CnotChannel ch : {CnotChannel::BitFlip, CnotChannel::Depolarizing}) {
    const auto rep = fold_experiment(minima.at(0).theta_final, minima.at(1).theta_final, ms, 0.0, ch);
    for (std::size_t k = 0; k < ms.size(); ++k) {
      drift = std::max({drift, std::abs(rep.energy_min1[k] - rep.energy_min1[0]),
                        std::abs(rep.energy_min2[k] - rep.energy_min2[0])});
    }
  }
  o.require(drift <= 1e-10, fmt("fold drift with p2 = 0: %.2e (m <= 40)", drift));
  return o;
}

Outcome fold_crossover(std::uint64_t seed) {
  Outcome o;
  const auto t0 = Clock::now();
  const auto minima = dimer_minima(0.0, starts(1, seed));
  std::vector<int> ms;
  for (int m = 0; m <= 40; ++m) ms.push_back(m);
  const auto rep = fold_experiment(minima.at(0).theta_final, minima.at(1).theta_final, ms);
  const double secs = seconds_since(t0);
  o.require(rep.p2 == 5e-3, fmt("p2 = %.4g", rep.p2));
  o.require(rep.crossover_m.has_value(), rep.crossover_m
                                             ? "crossover_m = " + std::to_string(*rep.crossover_m)
                                             : std::string("crossover_m exists"));
  if (!rep.crossover_m) return o;
  const auto c = static_cast<std::size_t>(*rep.crossover_m);
  bool increasing = true;
  for (std::size_t k = 1; k <= c; ++k) increasing = increasing && rep.energy_min1[k] > rep.energy_min1[k - 1];
  o.require(increasing, "min1 strictly increasing up to the crossover");
  const double s1 = (rep.energy_min1[c] - rep.energy_min1[0]) / static_cast<double>(c);
  const double s2 = (rep.energy_min2[c] - rep.energy_min2[0]) / static_cast<double>(c);
  o.require(s1 > s2, fmt("slopes min1 %.3e, min2 %.3e per fold", s1, s2));
  o.require(secs < 60.0, fmt("runtime %.2f s", secs));
  return o;
}

Outcome determinism(std::uint64_t seed) {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "noisevqe_acceptance_determinism";
  fs::remove_all(root);
  const std::string s = " --seed " + std::to_string(seed) + " --quiet --out-dir ";
  const std::vector<std::pair<std::string, std::string>> runs{
      {"scan --variant dimer8 --px-steps 9 --starts 16", "scan.csv"},
      {"scan --variant general --n 3 --layers 2 --scaled --px-max 0.5 --px-steps 5 --starts 4", "scan.csv"},
      {"distribution --variant dimer2 --px-steps 9 --starts 16", "distribution.csv"},
      {"compare-pert --variant general --n 3 --layers 2 --px-steps 4 --px-max 0.02 --starts 3", "compare.csv"},
      {"landscape --grid 61 --px 0.05", "landscape.csv"},
      {"fold --m-max 40", "fold.csv"},
  };
  int k = 0;
  for (const auto& [args, file] : runs) {
    const fs::path a = root / (std::to_string(k) + "a"), b = root / (std::to_string(k) + "b");
    ++k;
    const int ca = cli(args + s + a.string()).code;
    const int cb = cli(args + s + b.string()).code;
    const std::string fa = slurp(a / file), fb = slurp(b / file);
    const std::string name = args.substr(0, args.find(' '));
    o.require(ca == 0 && cb == 0 && !fa.empty() && fa == fb && slurp(a / "manifest.json") == slurp(b / "manifest.json"),
              name + " " + file + " identical (" + std::to_string(fa.size()) + " bytes)");
  }
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  bool full = false;
  std::uint64_t seed = 7;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--full") == 0) {
      full = true;
    } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
      seed = std::strtoull(argv[++i], nullptr, 10);
    } else {
      std::fprintf(stderr, "usage: acceptance [--full] [--seed N]\n");
      return 2;
    }
  }

  int failed = 0;
  auto report = [&](int id, const char* title, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  };

  report(1, "exact ground truth", exact_ground_truth);
  DimerScans dimers;
  report(2, "dimer transition", [&] {
    dimers = run_dimer_scans(seed);
    return dimer_transition(dimers);
  });
  report(3, "two-parameter consistency", [&] { return dimer_consistency(dimers); });
  report(4, "perturbative equivalence", [&] { return perturbative_equivalence(seed); });
  report(5, full ? "chain transition (128 starts)" : "chain transition (32-start smoke)",
         [&] { return chain_transition(seed, full ? 128 : 32); });
  report(6, "parameter counts", parameter_counts);
  report(7, "gradient correctness", [&] { return gradient_check(seed); });
  report(8, "channel properties", [&] { return channel_properties(seed); });
  report(9, "fold crossover", [&] { return fold_crossover(seed); });
  report(10, "determinism", [&] { return determinism(seed); });

  std::printf("%d of 10 criteria failed\n", failed);
  return std::min(failed, 100);
}
