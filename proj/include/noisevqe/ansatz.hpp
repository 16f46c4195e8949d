#pragma once

// Hardware-efficient ansatz on a linear chain.
//
// Layout for N qubits and L layers:
//   RX(q) for q = 0..N-1, then RZ(q) for q = 0..N-1           (2N params)
//   per layer: CNOTs on pairs (0,1),(2,3),... then (1,2),(3,4),...,
//              each CNOT followed by RX(c) RX(t) RZ(c) RZ(t)     (4 params each)
//              then one noise marker
// so param_count = 2N + 4(N-1)L. The control is always the lower qubit.
// Rotations are RX(a) = exp(-i a X / 2) and RZ(a) = exp(-i a Z / 2).

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "noisevqe/circuit.hpp"
#include "noisevqe/noise.hpp"
#include "noisevqe/qcore.hpp"

namespace noisevqe {

inline int param_count(int num_qubits, int num_layers) {
  return 2 * num_qubits + 4 * (num_qubits - 1) * num_layers;
}

inline std::vector<std::pair<int, int>> brick_pairs(int num_qubits) {
  std::vector<std::pair<int, int>> pairs;
  for (int q = 0; q + 1 < num_qubits; q += 2) pairs.emplace_back(q, q + 1);
  for (int q = 1; q + 1 < num_qubits; q += 2) pairs.emplace_back(q, q + 1);
  return pairs;
}

inline CircuitLayout build_layout(int num_qubits, int num_layers) {
  if (num_qubits < 2) {
    throw PreconditionError("ansatz needs N >= 2 (got " + std::to_string(num_qubits) + ")");
  }
  if (num_layers < 1) {
    throw PreconditionError("ansatz needs at least one layer");
  }
  CircuitLayout layout;
  layout.num_qubits = num_qubits;
  layout.num_layers = num_layers;
  int next = 0;
  for (int q = 0; q < num_qubits; ++q) layout.slots.push_back(Slot::rx(q, next++));
  for (int q = 0; q < num_qubits; ++q) layout.slots.push_back(Slot::rz(q, next++));
  const auto pairs = brick_pairs(num_qubits);
  for (int layer = 0; layer < num_layers; ++layer) {
    for (const auto& [c, t] : pairs) {
      layout.slots.push_back(Slot::cnot(c, t));
      layout.slots.push_back(Slot::rx(c, next));
      layout.slots.push_back(Slot::rx(t, next + 1));
      layout.slots.push_back(Slot::rz(c, next + 2));
      layout.slots.push_back(Slot::rz(t, next + 3));
      next += 4;
    }
    layout.slots.push_back(Slot::marker(layer));
  }
  layout.param_count = next;
  return layout;
}

enum class VariantKind { General, Dimer8, Dimer2 };

struct AnsatzVariant {
  VariantKind kind = VariantKind::Dimer8;
  int num_qubits = 2;
  int num_layers = 1;

  static AnsatzVariant general(int n, int layers) { return {VariantKind::General, n, layers}; }
  static AnsatzVariant dimer8() { return {VariantKind::Dimer8, 2, 1}; }
  static AnsatzVariant dimer2() { return {VariantKind::Dimer2, 2, 1}; }

  CircuitLayout layout() const { return build_layout(num_qubits, num_layers); }

  /// Number of free parameters seen by the optimizer.
  int free_parameters() const {
    return kind == VariantKind::Dimer2 ? 2 : param_count(num_qubits, num_layers);
  }

  std::string name() const {
    switch (kind) {
      case VariantKind::Dimer8: return "dimer8";
      case VariantKind::Dimer2: return "dimer2";
      case VariantKind::General: break;
    }
    return "general";
  }
};

inline AnsatzVariant parse_variant(const std::string& name, int n, int layers) {
  if (name == "dimer8") return AnsatzVariant::dimer8();
  if (name == "dimer2") return AnsatzVariant::dimer2();
  if (name == "general") {
    build_layout(n, layers);  // validates
    return AnsatzVariant::general(n, layers);
  }
  throw PreconditionError("unknown variant '" + name + "' (dimer8, dimer2, general)");
}

/// 8 x 2 map (t0, t1) -> (t0, t0, t1, t1, -t0, -t0, -t1, -t1).
inline Eigen::MatrixXd two_param_constraint() {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(8, 2);
  c(0, 0) = c(1, 0) = 1.0;
  c(4, 0) = c(5, 0) = -1.0;
  c(2, 1) = c(3, 1) = 1.0;
  c(6, 1) = c(7, 1) = -1.0;
  return c;
}

inline std::vector<double> expand_two_param(double t0, double t1) {
  return {t0, t0, t1, t1, -t0, -t0, -t1, -t1};
}

inline Mat2 rx_matrix(double angle) {
  const double c = std::cos(angle / 2), s = std::sin(angle / 2);
  Mat2 m;
  m << c, Complex(0, -s), Complex(0, -s), c;
  return m;
}

inline Mat2 rz_matrix(double angle) {
  Mat2 m;
  m << std::polar(1.0, -angle / 2), 0, 0, std::polar(1.0, angle / 2);
  return m;
}

/// rho <- R rho R^dagger for a rotation slot evaluated at `angle`.
inline void apply_rotation(CMatrix& rho, SlotKind kind, int qubit, double angle,
                           int num_qubits) {
  if (kind == SlotKind::Rx) {
    kernel::conjugate_rx(rho, std::cos(angle / 2), std::sin(angle / 2), qubit, num_qubits);
  } else {
    kernel::conjugate_diag_1q(rho, std::polar(1.0, -angle / 2), std::polar(1.0, angle / 2),
                              qubit, num_qubits);
  }
}

/// Re Tr(B R rho R^dagger) for the rotation evaluated at `angle`.
inline double rotated_expectation(const CMatrix& rho, const CMatrix& observable, SlotKind kind,
                                  int qubit, double angle, int num_qubits) {
  if (kind == SlotKind::Rx) {
    return kernel::rotated_expectation(rho, observable, rx_matrix(angle), qubit, num_qubits);
  }
  return kernel::diag_rotated_expectation(rho, observable, std::polar(1.0, -angle / 2),
                                          std::polar(1.0, angle / 2), qubit, num_qubits);
}

/// d/dt Re Tr(B R(angle + t) rho R(angle + t)^dagger) at t = 0, where `rotated` is
/// already R(angle) rho R(angle)^dagger. Equals the +-pi/2 shift difference / 2.
inline double rotation_derivative(const CMatrix& rotated, const CMatrix& observable,
                                  SlotKind kind, int qubit, int num_qubits) {
  return kind == SlotKind::Rx
             ? kernel::x_generator_derivative(rotated, observable, qubit, num_qubits)
             : kernel::z_generator_derivative(rotated, observable, qubit, num_qubits);
}

/// Unitary part of a slot (markers are no-ops here).
inline void apply_gate(CMatrix& rho, const Slot& slot, std::span<const double> theta,
                       int num_qubits) {
  switch (slot.kind) {
    case SlotKind::Rx:
    case SlotKind::Rz:
      apply_rotation(rho, slot.kind, slot.qubit, theta[static_cast<std::size_t>(slot.param)],
                     num_qubits);
      break;
    case SlotKind::Cnot:
      kernel::conjugate_cnot(rho, slot.qubit, slot.target, num_qubits);
      break;
    case SlotKind::NoiseMarker:
      break;
  }
}

inline CMatrix initial_state(int num_qubits) {
  const auto d = static_cast<Eigen::Index>(dimension_of(num_qubits));
  CMatrix rho = CMatrix::Zero(d, d);
  rho(0, 0) = 1.0;
  return rho;
}

inline void check_theta(const CircuitLayout& layout, std::span<const double> theta) {
  if (theta.size() != static_cast<std::size_t>(layout.param_count)) {
    throw PreconditionError("parameter vector has length " + std::to_string(theta.size()) +
                            ", layout expects " + std::to_string(layout.param_count));
  }
}

/// Full noisy evolution from |0...0>, unchecked output (hot path).
inline CMatrix simulate_matrix(const CircuitLayout& layout, std::span<const double> theta,
                               const NoiseModel& noise) {
  check_theta(layout, theta);
  noise.validate(layout.num_qubits);
  const int n = layout.num_qubits;
  CMatrix rho = initial_state(n);
  for (const auto& slot : layout.slots) {
    if (slot.kind == SlotKind::NoiseMarker) {
      apply_bitflip_inplace(rho, noise.p_x, n);
      continue;
    }
    apply_gate(rho, slot, theta, n);
    if (slot.kind == SlotKind::Cnot) apply_cnot_channel(rho, noise, slot.qubit, slot.target, n);
  }
  return rho;
}

inline DensityMatrix simulate(const CircuitLayout& layout, std::span<const double> theta,
                              const NoiseModel& noise) {
  CMatrix rho = simulate_matrix(layout, theta, noise);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(std::move(rho));
}

/// Noiseless state right after a noise marker, plus where the rest of the
/// circuit (the remaining unitary) starts.
struct LayerPrefix {
  int layer = 0;
  std::size_t suffix_begin = 0;  // first slot after the marker
  CMatrix state;
};

inline std::vector<LayerPrefix> simulate_error_free_prefixes(const CircuitLayout& layout,
                                                             std::span<const double> theta) {
  check_theta(layout, theta);
  const int n = layout.num_qubits;
  CMatrix rho = initial_state(n);
  std::vector<LayerPrefix> out;
  for (std::size_t i = 0; i < layout.slots.size(); ++i) {
    const auto& slot = layout.slots[i];
    if (slot.kind == SlotKind::NoiseMarker) {
      out.push_back({slot.layer, i + 1, rho});
      continue;
    }
    apply_gate(rho, slot, theta, n);
  }
  return out;
}

/// Applies the unitary slots [begin, end) to rho; markers are skipped.
inline void apply_suffix(CMatrix& rho, const CircuitLayout& layout,
                         std::span<const double> theta, std::size_t begin) {
  for (std::size_t i = begin; i < layout.slots.size(); ++i) {
    apply_gate(rho, layout.slots[i], theta, layout.num_qubits);
  }
}

}  // namespace noisevqe
