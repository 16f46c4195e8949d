#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace noisevqe {

enum class SlotKind { Cnot, Rx, Rz, NoiseMarker };

inline const char* to_string(SlotKind k) {
  switch (k) {
    case SlotKind::Cnot: return "CNOT";
    case SlotKind::Rx: return "RX";
    case SlotKind::Rz: return "RZ";
    case SlotKind::NoiseMarker: return "NOISE";
  }
  return "?";
}

/// One gate slot. Unused fields are -1: a rotation has `qubit` and `param`,
/// a CNOT has `qubit` (control) and `target`, a marker has `layer`.
struct Slot {
  SlotKind kind;
  int qubit = -1;
  int target = -1;
  int param = -1;
  int layer = -1;

  static Slot cnot(int control, int target) { return {SlotKind::Cnot, control, target, -1, -1}; }
  static Slot rx(int qubit, int param) { return {SlotKind::Rx, qubit, -1, param, -1}; }
  static Slot rz(int qubit, int param) { return {SlotKind::Rz, qubit, -1, param, -1}; }
  static Slot marker(int layer) { return {SlotKind::NoiseMarker, -1, -1, -1, layer}; }

  bool is_rotation() const { return kind == SlotKind::Rx || kind == SlotKind::Rz; }

  friend bool operator==(const Slot&, const Slot&) = default;
};

struct CircuitLayout {
  int num_qubits = 0;
  int num_layers = 0;
  int param_count = 0;
  std::vector<Slot> slots;

  std::size_t count(SlotKind kind) const {
    std::size_t n = 0;
    for (const auto& s : slots) n += s.kind == kind ? 1 : 0;
    return n;
  }

  friend bool operator==(const CircuitLayout&, const CircuitLayout&) = default;
};

}  // namespace noisevqe
