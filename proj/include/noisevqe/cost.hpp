#pragma once

// Noisy VQE cost E(theta) = Tr(rho(theta) H), its first-order expansion in
// the bit-flip rate, shift-rule gradients and the ground-state overlap.

#include <algorithm>
#include <array>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "noisevqe/ansatz.hpp"
#include "noisevqe/model.hpp"
#include "noisevqe/noise.hpp"
#include "noisevqe/qcore.hpp"

namespace noisevqe {

enum class CostKind { Exact, Perturbative };

struct CostContext {
  CircuitLayout layout;
  HermitianOperator hamiltonian;
  NoiseModel noise;
  std::optional<GroundTruth> ground_truth;
  /// Optional linear reparameterization: full = reparam * free.
  std::optional<Eigen::MatrixXd> reparam;
  /// What local_minimize / multi_start optimize.
  CostKind objective = CostKind::Exact;

  void validate() const {
    if (hamiltonian.num_qubits() != layout.num_qubits) {
      throw DimensionError("Hamiltonian acts on " + std::to_string(hamiltonian.num_qubits()) +
                           " qubits but the layout has " + std::to_string(layout.num_qubits));
    }
    noise.validate(layout.num_qubits);
    if (reparam && reparam->rows() != layout.param_count) {
      throw DimensionError("reparameterization rows do not match the layout");
    }
    if (objective == CostKind::Perturbative && noise.cnot_error != 0.0) {
      throw PreconditionError("perturbative cost covers the layer bit-flip channel only");
    }
  }

  int dimension() const {
    return reparam ? static_cast<int>(reparam->cols()) : layout.param_count;
  }

  std::vector<double> full_parameters(std::span<const double> theta) const {
    if (theta.size() != static_cast<std::size_t>(dimension())) {
      throw PreconditionError("parameter vector has length " + std::to_string(theta.size()) +
                              ", cost expects " + std::to_string(dimension()));
    }
    if (!reparam) return {theta.begin(), theta.end()};
    const Eigen::Map<const Eigen::VectorXd> t(theta.data(), static_cast<Eigen::Index>(theta.size()));
    const Eigen::VectorXd full = *reparam * t;
    return {full.data(), full.data() + full.size()};
  }

  CostContext with_noise(const NoiseModel& n) const {
    CostContext c = *this;
    c.noise = n;
    c.validate();
    return c;
  }
};

/// Context for one of the ansatz variants with the XXX chain Hamiltonian.
inline CostContext make_context(const AnsatzVariant& variant, const SpinChainSpec& spec,
                                const NoiseModel& noise, bool with_ground_truth = true) {
  if (spec.num_spins != variant.num_qubits) {
    throw PreconditionError("spin count does not match the ansatz width");
  }
  HermitianOperator h = build_hamiltonian(spec);
  std::optional<GroundTruth> gt;
  if (with_ground_truth) gt = exact_ground(h);
  CostContext ctx{variant.layout(), std::move(h), noise, std::move(gt), std::nullopt,
                  CostKind::Exact};
  if (variant.kind == VariantKind::Dimer2) ctx.reparam = two_param_constraint();
  ctx.validate();
  return ctx;
}

/// Noisy final state for free parameters theta.
inline CMatrix final_state(const CostContext& ctx, std::span<const double> theta) {
  const auto full = ctx.full_parameters(theta);
  return simulate_matrix(ctx.layout, full, ctx.noise);
}

inline double energy(const CostContext& ctx, std::span<const double> theta) {
  return expectation(final_state(ctx, theta), ctx.hamiltonian.matrix());
}

/// Leading-order cost (1 - nL N p) Tr(rho0 H) + p Tr(rho1 H), with rho1 summed
/// over every single-flip trajectory (one per layer and qubit).
inline double energy_perturbative(const CostContext& ctx, std::span<const double> theta,
                                  double p_x) {
  if (!(p_x >= 0.0)) throw PreconditionError("p_x must be >= 0");
  const auto full = ctx.full_parameters(theta);
  const auto& layout = ctx.layout;
  const int n = layout.num_qubits;
  const CMatrix& h = ctx.hamiltonian.matrix();

  const auto prefixes = simulate_error_free_prefixes(layout, full);
  const double e0 = expectation(simulate_matrix(layout, full, NoiseModel{}), h);
  double e1 = 0.0;
  CMatrix traj;
  for (const auto& prefix : prefixes) {
    for (int j = 0; j < n; ++j) {
      traj = prefix.state;
      kernel::conjugate_x(traj, j, n);
      apply_suffix(traj, layout, full, prefix.suffix_begin);
      e1 += expectation(traj, h);
    }
  }
  const double layers = static_cast<double>(prefixes.size());
  return (1.0 - layers * n * p_x) * e0 + p_x * e1;
}

inline double objective_value(const CostContext& ctx, std::span<const double> theta) {
  return ctx.objective == CostKind::Exact ? energy(ctx, theta)
                                          : energy_perturbative(ctx, theta, ctx.noise.p_x);
}

/// d(objective)/d(p_x) at fixed theta. Each layer channel is affine in p_x
/// with derivative rho -> sum_j X_j rho X_j - N rho, so the exact cost
/// differentiates marker by marker; the perturbative cost is affine in p_x.
inline double noise_rate_derivative(const CostContext& ctx, std::span<const double> theta) {
  if (ctx.objective == CostKind::Perturbative) {
    return energy_perturbative(ctx, theta, 1.0) - energy_perturbative(ctx, theta, 0.0);
  }
  const auto full = ctx.full_parameters(theta);
  const auto& layout = ctx.layout;
  const int n = layout.num_qubits;
  ctx.noise.validate(n);
  const CMatrix& h = ctx.hamiltonian.matrix();
  const auto markers = static_cast<int>(layout.count(SlotKind::NoiseMarker));
  double total = 0.0;
  CMatrix flipped;
  for (int k = 0; k < markers; ++k) {
    CMatrix rho = initial_state(n);
    int seen = 0;
    for (const auto& slot : layout.slots) {
      if (slot.kind == SlotKind::NoiseMarker) {
        if (seen++ == k) {
          CMatrix acc = -static_cast<double>(n) * rho;
          for (int j = 0; j < n; ++j) {
            flipped = rho;
            kernel::conjugate_x(flipped, j, n);
            acc += flipped;
          }
          rho = std::move(acc);
        } else {
          apply_bitflip_inplace(rho, ctx.noise.p_x, n);
        }
        continue;
      }
      apply_gate(rho, slot, full, n);
      if (slot.kind == SlotKind::Cnot) apply_cnot_channel(rho, ctx.noise, slot.qubit, slot.target, n);
    }
    total += kernel::real_trace_product(rho, h);
  }
  return total;
}

namespace detail {

// One forward pass storing the state after every rotation, then one backward
// pass carrying the observable (Heisenberg picture). At rotation k the shifted
// energies satisfy [E(theta + pi/2 e_k) - E(theta - pi/2 e_k)] / 2 =
// (-i/2) Tr(B_k [P_k, rho_k]), which is evaluated directly from the snapshot.
//
// The perturbative objective propagates the pair (sigma0, sigma1): sigma0 is
// the noiseless state and sigma1 collects every single-flip trajectory.
// Both components evolve linearly, so the same shift rule applies.
inline double shift_rule_sweep(const CostContext& ctx, std::span<const double> full,
                               std::span<double> grad_full) {
  const auto& layout = ctx.layout;
  const int n = layout.num_qubits;
  const bool first_order = ctx.objective == CostKind::Perturbative;
  const int ncomp = first_order ? 2 : 1;
  const double px = ctx.noise.p_x;
  const auto d = static_cast<Eigen::Index>(dimension_of(n));
  constexpr double kShift = std::numbers::pi / 2;

  using State = std::array<CMatrix, 2>;
  // Reused across calls: fresh snapshot buffers cost more than the sweep itself.
  thread_local std::vector<State> snaps;
  snaps.resize(layout.slots.size());
  State st;
  st[0] = initial_state(n);
  if (first_order) st[1] = CMatrix::Zero(d, d);

  CMatrix scratch;
  std::size_t markers = 0;
  for (std::size_t i = 0; i < layout.slots.size(); ++i) {
    const auto& slot = layout.slots[i];
    if (slot.kind == SlotKind::NoiseMarker) {
      ++markers;
      if (first_order) {
        for (int j = 0; j < n; ++j) {
          scratch = st[0];
          kernel::conjugate_x(scratch, j, n);
          st[1] += scratch;
        }
      } else {
        apply_bitflip_inplace(st[0], px, n);
      }
      continue;
    }
    for (int c = 0; c < ncomp; ++c) apply_gate(st[static_cast<std::size_t>(c)], slot, full, n);
    if (slot.kind == SlotKind::Cnot && !first_order) {
      apply_cnot_channel(st[0], ctx.noise, slot.qubit, slot.target, n);
    }
    if (slot.is_rotation()) {
      for (int c = 0; c < ncomp; ++c) {
        snaps[i][static_cast<std::size_t>(c)] = st[static_cast<std::size_t>(c)];
      }
    }
  }

  const CMatrix& h = ctx.hamiltonian.matrix();
  State obs;
  if (first_order) {
    obs[0] = (1.0 - static_cast<double>(markers) * n * px) * h;
    obs[1] = px * h;
  } else {
    obs[0] = h;
  }
  double value = 0.0;
  for (int c = 0; c < ncomp; ++c) {
    value += kernel::real_trace_product(st[static_cast<std::size_t>(c)],
                                        obs[static_cast<std::size_t>(c)]);
  }

  std::fill(grad_full.begin(), grad_full.end(), 0.0);
  for (std::size_t i = layout.slots.size(); i-- > 0;) {
    const auto& slot = layout.slots[i];
    switch (slot.kind) {
      case SlotKind::Rx:
      case SlotKind::Rz: {
        double derivative = 0.0;
        for (int c = 0; c < ncomp; ++c) {
          derivative += rotation_derivative(snaps[i][static_cast<std::size_t>(c)],
                                            obs[static_cast<std::size_t>(c)], slot.kind,
                                            slot.qubit, n);
        }
        grad_full[static_cast<std::size_t>(slot.param)] += derivative;
        const double angle = full[static_cast<std::size_t>(slot.param)];
        for (int c = 0; c < ncomp; ++c) {
          apply_rotation(obs[static_cast<std::size_t>(c)], slot.kind, slot.qubit, -angle, n);
        }
        break;
      }
      case SlotKind::Cnot:
        if (!first_order) apply_cnot_channel(obs[0], ctx.noise, slot.qubit, slot.target, n);
        for (int c = 0; c < ncomp; ++c) {
          kernel::conjugate_cnot(obs[static_cast<std::size_t>(c)], slot.qubit, slot.target, n);
        }
        break;
      case SlotKind::NoiseMarker:
        if (first_order) {
          for (int j = 0; j < n; ++j) {
            scratch = obs[1];
            kernel::conjugate_x(scratch, j, n);
            obs[0] += scratch;
          }
        } else {
          apply_bitflip_inplace(obs[0], px, n);
        }
        break;
    }
  }
  return value;
}

inline void chain_rule(const CostContext& ctx, std::span<const double> grad_full,
                       std::span<double> grad) {
  if (!ctx.reparam) {
    std::copy(grad_full.begin(), grad_full.end(), grad.begin());
    return;
  }
  const Eigen::Map<const Eigen::VectorXd> gf(grad_full.data(),
                                             static_cast<Eigen::Index>(grad_full.size()));
  const Eigen::VectorXd g = ctx.reparam->transpose() * gf;
  std::copy(g.data(), g.data() + g.size(), grad.begin());
}

}  // namespace detail

/// Objective value and its shift-rule gradient (w.r.t. the free parameters).
inline double value_and_gradient(const CostContext& ctx, std::span<const double> theta,
                                 std::span<double> grad) {
  if (grad.size() != static_cast<std::size_t>(ctx.dimension())) {
    throw DimensionError("gradient buffer has the wrong length");
  }
  const auto full = ctx.full_parameters(theta);
  ctx.noise.validate(ctx.layout.num_qubits);
  std::vector<double> grad_full(full.size());
  const double value = detail::shift_rule_sweep(ctx, full, grad_full);
  detail::chain_rule(ctx, grad_full, grad);
  return value;
}

inline std::vector<double> gradient(const CostContext& ctx, std::span<const double> theta) {
  std::vector<double> g(static_cast<std::size_t>(ctx.dimension()));
  value_and_gradient(ctx, theta, g);
  return g;
}

/// Shift rule by brute force: two full re-simulations per circuit parameter.
inline std::vector<double> gradient_resimulated(const CostContext& ctx,
                                                std::span<const double> theta) {
  const auto full = ctx.full_parameters(theta);
  CostContext full_ctx = ctx;
  full_ctx.reparam.reset();
  std::vector<double> grad_full(full.size());
  std::vector<double> shifted = full;
  for (std::size_t k = 0; k < full.size(); ++k) {
    shifted[k] = full[k] + std::numbers::pi / 2;
    const double plus = objective_value(full_ctx, shifted);
    shifted[k] = full[k] - std::numbers::pi / 2;
    const double minus = objective_value(full_ctx, shifted);
    shifted[k] = full[k];
    grad_full[k] = 0.5 * (plus - minus);
  }
  std::vector<double> grad(static_cast<std::size_t>(ctx.dimension()));
  detail::chain_rule(ctx, grad_full, grad);
  return grad;
}

inline double overlap(const CostContext& ctx, std::span<const double> theta) {
  if (!ctx.ground_truth) throw PreconditionError("overlap needs a ground truth");
  const CMatrix rho = final_state(ctx, theta);
  const auto& gt = *ctx.ground_truth;
  double f = 0.0;
  if (gt.degenerate) {
    f = trace_product(gt.projector, rho).real();
  } else {
    const auto& phi = gt.state.amplitudes();
    f = (phi.adjoint() * rho * phi)(0, 0).real();
  }
  return std::clamp(f, 0.0, 1.0);
}

}  // namespace noisevqe
