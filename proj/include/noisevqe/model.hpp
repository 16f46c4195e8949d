#pragma once

// XXX Heisenberg chain with open boundaries and a uniform field along
// X, Y and Z:
//   H = J sum_a sum_{j<N-1} s^a_j s^a_{j+1} + h sum_a sum_j s^a_j

#include <cmath>
#include <string>

#include "noisevqe/qcore.hpp"

namespace noisevqe {

struct SpinChainSpec {
  int num_spins = 2;
  double coupling = 1.0;  // J
  double field = 1.0;     // h

  void validate() const {
    if (num_spins < 1) {
      throw PreconditionError("spin chain needs N >= 1 (got " +
                              std::to_string(num_spins) + ")");
    }
    if (!std::isfinite(coupling) || !std::isfinite(field)) {
      throw PreconditionError("J and h must be finite");
    }
  }
};

inline HermitianOperator build_hamiltonian(const SpinChainSpec& spec) {
  spec.validate();
  const int n = spec.num_spins;
  const auto d = static_cast<Eigen::Index>(dimension_of(n));
  CMatrix h = CMatrix::Zero(d, d);
  for (const Mat2& p : {pauli::X(), pauli::Y(), pauli::Z()}) {
    for (int j = 0; j + 1 < n; ++j) {
      h += spec.coupling * embed_single_qubit(p, j, n) * embed_single_qubit(p, j + 1, n);
    }
    for (int j = 0; j < n; ++j) h += spec.field * embed_single_qubit(p, j, n);
  }
  // Y x Y products carry i*i; clear the rounding in the anti-Hermitian part.
  h = 0.5 * (h + h.adjoint()).eval();
  return HermitianOperator(std::move(h));
}

struct GroundTruth {
  double energy = 0.0;
  PureState state;
  bool degenerate = false;
  int degeneracy = 1;
  double gap = 0.0;
  /// Projector onto the ground space (rank = degeneracy).
  CMatrix projector;
};

inline constexpr double kDegeneracyTolerance = 1e-9;

inline GroundTruth exact_ground(const HermitianOperator& h,
                                double degeneracy_tol = kDegeneracyTolerance) {
  const Eigensystem es = hermitian_eigensystem(h);
  const auto dim = es.values.size();
  int deg = 1;
  while (deg < dim && es.values(deg) - es.values(0) <= degeneracy_tol) ++deg;

  CVector v = es.vectors.col(0);
  // Fix the global phase: largest-magnitude amplitude real and positive.
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  v *= std::conj(v(arg)) / std::abs(v(arg));
  v.normalize();

  const CMatrix basis = es.vectors.leftCols(deg);
  GroundTruth gt{es.values(0), PureState(std::move(v)), deg > 1, deg,
                 dim > deg ? es.values(deg) - es.values(0) : 0.0,
                 basis * basis.adjoint()};
  return gt;
}

}  // namespace noisevqe
