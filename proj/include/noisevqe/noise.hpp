#pragma once

// Noise channels and the CNOT folding rewrite.
//
// The layer channel is the register-correlated single-flip channel
//   rho -> (1 - N p) rho + p sum_j X_j rho X_j,
// one Kraus branch per qubit plus identity; it is not a product of
// independent per-qubit flips. All channels here have Hermitian Kraus
// operators and are unital, so each is its own Hilbert-Schmidt adjoint;
// the gradient engine relies on that when propagating observables backwards.

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "noisevqe/circuit.hpp"
#include "noisevqe/qcore.hpp"

namespace noisevqe {

/// Channel applied after every physical CNOT when NoiseModel::cnot_error > 0.
enum class CnotChannel {
  Depolarizing,  // two-qubit depolarizing on the CNOT pair
  BitFlip,       // single-flip channel restricted to the CNOT pair
};

inline const char* to_string(CnotChannel c) {
  return c == CnotChannel::Depolarizing ? "depolarizing" : "bitflip";
}

inline CnotChannel parse_cnot_channel(const std::string& s) {
  if (s == "depolarizing") return CnotChannel::Depolarizing;
  if (s == "bitflip") return CnotChannel::BitFlip;
  throw PreconditionError("unknown CNOT channel '" + s +
                          "' (expected depolarizing or bitflip)");
}

struct NoiseModel {
  double p_x = 0.0;         // bit-flip rate per layer per register
  double cnot_error = 0.0;  // per-CNOT rate of `cnot_channel`
  CnotChannel cnot_channel = CnotChannel::Depolarizing;

  void validate(int num_qubits) const {
    if (!(p_x >= 0.0) || p_x * num_qubits > 1.0) {
      throw PreconditionError("bit-flip rate p_x = " + std::to_string(p_x) +
                              " outside [0, 1/N] for N = " +
                              std::to_string(num_qubits) + " (channel not CPTP)");
    }
    const double cap = cnot_channel == CnotChannel::BitFlip ? 0.5 : 1.0;
    if (!(cnot_error >= 0.0) || cnot_error > cap) {
      throw PreconditionError("CNOT error rate " + std::to_string(cnot_error) +
                              " outside [0, " + std::to_string(cap) + "]");
    }
  }
};

struct FoldSetting {
  int m = 0;
};

// --- bit flip ---------------------------------------------------------------

inline void check_bitflip_rate(double p_x, int num_qubits) {
  if (!(p_x >= 0.0) || p_x * num_qubits > 1.0) {
    throw PreconditionError("bit-flip rate p_x = " + std::to_string(p_x) +
                            " outside [0, 1/N] (channel not positive)");
  }
}

/// Single-flip channel over the listed qubits:
///   rho -> (1 - k p) rho + p sum_{j in qubits} X_j rho X_j.
inline void apply_bitflip_on(CMatrix& rho, double p, std::span<const int> qubits,
                             int num_qubits) {
  if (p == 0.0) return;
  std::array<std::size_t, 64> masks{};
  for (std::size_t k = 0; k < qubits.size(); ++k) masks[k] = kernel::mask_of(qubits[k], num_qubits);
  thread_local CMatrix src;
  src = rho;
  kernel::bitflip_into(rho, src, p, std::span<const std::size_t>(masks.data(), qubits.size()));
}

inline void apply_bitflip_inplace(CMatrix& rho, double p_x, int num_qubits) {
  check_bitflip_rate(p_x, num_qubits);
  std::array<int, 64> all{};
  for (int q = 0; q < num_qubits; ++q) all[static_cast<std::size_t>(q)] = q;
  apply_bitflip_on(rho, p_x, std::span<const int>(all.data(), static_cast<std::size_t>(num_qubits)),
                   num_qubits);
}

inline DensityMatrix apply_bitflip(const DensityMatrix& rho, double p_x) {
  CMatrix m = rho.matrix();
  apply_bitflip_inplace(m, p_x, rho.num_qubits());
  return DensityMatrix(std::move(m));
}

inline std::vector<CMatrix> bitflip_kraus(int num_qubits, double p_x) {
  check_bitflip_rate(p_x, num_qubits);
  const auto d = static_cast<Eigen::Index>(dimension_of(num_qubits));
  std::vector<CMatrix> ks;
  ks.push_back(std::sqrt(1.0 - num_qubits * p_x) * CMatrix::Identity(d, d));
  for (int j = 0; j < num_qubits; ++j) {
    ks.push_back(std::sqrt(p_x) * embed_single_qubit(pauli::X(), j, num_qubits));
  }
  return ks;
}

// --- two-qubit depolarizing -------------------------------------------------

inline void check_pair(int a, int b, int num_qubits) {
  if (a == b || a < 0 || b < 0 || a >= num_qubits || b >= num_qubits) {
    throw PreconditionError("invalid qubit pair (" + std::to_string(a) + ", " +
                            std::to_string(b) + ")");
  }
}

/// rho -> (1 - p) rho + (p/15) sum_{P != II} P rho P on the pair.
inline void apply_depolarizing2_inplace(CMatrix& rho, int a, int b, double p2,
                                        int num_qubits) {
  check_pair(a, b, num_qubits);
  if (!(p2 >= 0.0) || p2 > 1.0) {
    throw PreconditionError("depolarizing rate outside [0, 1]");
  }
  if (p2 == 0.0) return;
  const std::array<Mat2, 4> paulis{pauli::I(), pauli::X(), pauli::Y(), pauli::Z()};
  CMatrix acc = (1.0 - p2) * rho;
  CMatrix term;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i == 0 && j == 0) continue;
      term = rho;
      if (i != 0) kernel::conjugate_1q(term, paulis[static_cast<std::size_t>(i)], a, num_qubits);
      if (j != 0) kernel::conjugate_1q(term, paulis[static_cast<std::size_t>(j)], b, num_qubits);
      acc += (p2 / 15.0) * term;
    }
  }
  rho = std::move(acc);
}

inline DensityMatrix apply_depolarizing2(const DensityMatrix& rho, std::pair<int, int> pair,
                                         double p2) {
  CMatrix m = rho.matrix();
  apply_depolarizing2_inplace(m, pair.first, pair.second, p2, rho.num_qubits());
  return DensityMatrix(std::move(m));
}

inline std::vector<CMatrix> depolarizing2_kraus(int num_qubits, std::pair<int, int> pair,
                                                double p2) {
  check_pair(pair.first, pair.second, num_qubits);
  const std::array<Mat2, 4> paulis{pauli::I(), pauli::X(), pauli::Y(), pauli::Z()};
  std::vector<CMatrix> ks;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double w = (i == 0 && j == 0) ? 1.0 - p2 : p2 / 15.0;
      ks.push_back(std::sqrt(w) *
                   embed_single_qubit(paulis[static_cast<std::size_t>(i)], pair.first, num_qubits) *
                   embed_single_qubit(paulis[static_cast<std::size_t>(j)], pair.second, num_qubits));
    }
  }
  return ks;
}

/// Sum_k K^dagger K; the identity for a trace-preserving channel.
inline CMatrix kraus_completeness(const std::vector<CMatrix>& kraus) {
  CMatrix acc = CMatrix::Zero(kraus.front().rows(), kraus.front().cols());
  for (const auto& k : kraus) acc += k.adjoint() * k;
  return acc;
}

/// Per-CNOT channel as selected by the noise model. Self-adjoint.
inline void apply_cnot_channel(CMatrix& rho, const NoiseModel& noise, int control,
                               int target, int num_qubits) {
  if (noise.cnot_error == 0.0) return;
  if (noise.cnot_channel == CnotChannel::Depolarizing) {
    apply_depolarizing2_inplace(rho, control, target, noise.cnot_error, num_qubits);
  } else {
    const std::array<int, 2> pair{control, target};
    apply_bitflip_on(rho, noise.cnot_error, pair, num_qubits);
  }
}

// --- folding -----------------------------------------------------------------

/// CNOT -> CNOT (CNOT CNOT)^m. Everything else is copied unchanged.
inline CircuitLayout fold_layout(const CircuitLayout& layout, FoldSetting fold) {
  if (fold.m < 0) throw PreconditionError("fold count must be >= 0");
  CircuitLayout out = layout;
  out.slots.clear();
  out.slots.reserve(layout.slots.size() + layout.count(SlotKind::Cnot) * 2 *
                                              static_cast<std::size_t>(fold.m));
  for (const auto& s : layout.slots) {
    const int copies = s.kind == SlotKind::Cnot ? 2 * fold.m + 1 : 1;
    for (int c = 0; c < copies; ++c) out.slots.push_back(s);
  }
  return out;
}

}  // namespace noisevqe
