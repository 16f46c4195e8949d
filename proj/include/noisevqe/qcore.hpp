#pragma once

// Dense complex linear algebra on the 2^N-dimensional operator space.
//
// Qubit ordering: qubit 0 is the MOST significant bit of a basis-state index.
// For N = 3 the basis state |q0 q1 q2> has index q0*4 + q1*2 + q2, and
// embed_single_qubit(op, j, N) = I x ... x op x ... x I with op in tensor
// slot j counted from the left. Every layout, kernel and test relies on this.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "noisevqe/errors.hpp"

namespace noisevqe {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Mat2 = Eigen::Matrix2cd;

struct Tolerances {
  double norm = 1e-12;
  double hermitian = 1e-12;
  double trace = 1e-12;
  double unitary = 1e-10;
  double imaginary = 1e-10;
  double psd = -1e-10;
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

inline std::size_t dimension_of(int num_qubits) {
  return std::size_t{1} << static_cast<unsigned>(num_qubits);
}

inline int qubits_for_dimension(Eigen::Index dim) {
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim || n == 0) {
    throw DimensionError("dimension " + std::to_string(dim) +
                         " is not 2^N with N >= 1");
  }
  return n;
}

namespace pauli {
inline Mat2 I() { return Mat2::Identity(); }
inline Mat2 X() {
  Mat2 m;
  m << 0, 1, 1, 0;
  return m;
}
inline Mat2 Y() {
  Mat2 m;
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}
inline Mat2 Z() {
  Mat2 m;
  m << 1, 0, 0, -1;
  return m;
}
}  // namespace pauli

inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const CMatrix& m) {
  return max_abs(m - m.adjoint());
}

/// Normalized state vector on N qubits.
class PureState {
 public:
  explicit PureState(CVector amplitudes,
                     const Tolerances& tol = default_tolerances())
      : amps_(std::move(amplitudes)),
        num_qubits_(qubits_for_dimension(amps_.size())) {
    if (std::abs(amps_.norm() - 1.0) > tol.norm) {
      throw PreconditionError("state vector is not normalized (|psi| = " +
                              std::to_string(amps_.norm()) + ")");
    }
  }

  static PureState basis(int num_qubits, std::size_t index = 0) {
    CVector v = CVector::Zero(static_cast<Eigen::Index>(dimension_of(num_qubits)));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return PureState(std::move(v));
  }

  const CVector& amplitudes() const { return amps_; }
  int num_qubits() const { return num_qubits_; }

 private:
  CVector amps_;
  int num_qubits_;
};

/// Hermitian, unit-trace operator. Positivity is a test-time check
/// (see min_eigenvalue), not enforced on construction.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix entries,
                         const Tolerances& tol = default_tolerances())
      : rho_(std::move(entries)) {
    if (rho_.rows() != rho_.cols()) {
      throw DimensionError("density matrix must be square");
    }
    num_qubits_ = qubits_for_dimension(rho_.rows());
    if (hermiticity_defect(rho_) > tol.hermitian) {
      throw NumericalError("density matrix is not Hermitian");
    }
    if (std::abs(rho_.trace() - Complex(1.0)) > tol.trace) {
      throw NumericalError("density matrix does not have unit trace");
    }
  }

  static DensityMatrix from_pure(const PureState& psi) {
    const auto& a = psi.amplitudes();
    return DensityMatrix(a * a.adjoint());
  }

  static DensityMatrix maximally_mixed(int num_qubits) {
    const auto d = static_cast<Eigen::Index>(dimension_of(num_qubits));
    return DensityMatrix(CMatrix::Identity(d, d) / static_cast<double>(d));
  }

  const CMatrix& matrix() const { return rho_; }
  int num_qubits() const { return num_qubits_; }
  Eigen::Index dim() const { return rho_.rows(); }

  double purity() const { return (rho_ * rho_).trace().real(); }

 private:
  CMatrix rho_;
  int num_qubits_ = 0;
};

class HermitianOperator {
 public:
  explicit HermitianOperator(CMatrix entries,
                             const Tolerances& tol = default_tolerances())
      : op_(std::move(entries)) {
    if (op_.rows() != op_.cols()) {
      throw DimensionError("operator must be square");
    }
    num_qubits_ = qubits_for_dimension(op_.rows());
    if (hermiticity_defect(op_) > tol.hermitian) {
      throw PreconditionError("operator is not Hermitian");
    }
  }

  const CMatrix& matrix() const { return op_; }
  int num_qubits() const { return num_qubits_; }
  Eigen::Index dim() const { return op_.rows(); }

 private:
  CMatrix op_;
  int num_qubits_ = 0;
};

/// I x ... x op x ... x I with op on tensor slot `site` (qubit 0 leftmost).
inline CMatrix embed_single_qubit(const Mat2& op, int site, int num_qubits) {
  if (num_qubits < 1) throw PreconditionError("num_qubits must be >= 1");
  if (site < 0 || site >= num_qubits) {
    throw PreconditionError("site " + std::to_string(site) +
                            " out of range for " + std::to_string(num_qubits) +
                            " qubits");
  }
  CMatrix out = CMatrix::Ones(1, 1);
  for (int q = 0; q < num_qubits; ++q) {
    const Mat2 factor = q == site ? op : Mat2::Identity();
    // out x factor: each entry of `out` becomes a 2 x 2 block.
    CMatrix next(out.rows() * 2, out.cols() * 2);
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        next.block<2, 2>(2 * r, 2 * c) = out(r, c) * factor;
      }
    }
    out = std::move(next);
  }
  return out;
}

inline bool is_unitary(const CMatrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())) <= tol;
}

/// U rho U^dagger.
inline DensityMatrix apply_unitary(const DensityMatrix& rho, const CMatrix& u,
                                   const Tolerances& tol = default_tolerances()) {
  if (u.rows() != rho.dim() || u.cols() != rho.dim()) {
    throw DimensionError("unitary dimension does not match density matrix");
  }
  if (!is_unitary(u, tol.unitary)) {
    throw PreconditionError("operator is not unitary");
  }
  CMatrix out = u * rho.matrix() * u.adjoint();
  // Symmetrize away the rounding asymmetry of the triple product.
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(std::move(out), tol);
}

/// Tr(A B) without forming the product.
inline Complex trace_product(const CMatrix& a, const CMatrix& b) {
  return a.cwiseProduct(b.transpose()).sum();
}

inline double expectation(const CMatrix& rho, const CMatrix& h,
                          double imag_tol = default_tolerances().imaginary) {
  if (rho.rows() != h.rows() || rho.cols() != h.cols()) {
    throw DimensionError("expectation: dimension mismatch");
  }
  const Complex value = trace_product(rho, h);
  if (std::abs(value.imag()) > imag_tol) {
    throw NumericalError("expectation has imaginary part " +
                         std::to_string(value.imag()));
  }
  return value.real();
}

inline double expectation(const DensityMatrix& rho, const HermitianOperator& h,
                          const Tolerances& tol = default_tolerances()) {
  return expectation(rho.matrix(), h.matrix(), tol.imaginary);
}

struct Eigensystem {
  Eigen::VectorXd values;  // ascending
  CMatrix vectors;         // orthonormal columns
};

inline Eigensystem hermitian_eigensystem(const CMatrix& h,
                                         double tol = default_tolerances().hermitian) {
  if (h.rows() != h.cols()) throw DimensionError("eigensystem: non-square input");
  if (hermiticity_defect(h) > tol) {
    throw PreconditionError("eigensystem: input is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("Hermitian eigensolver failed to converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline Eigensystem hermitian_eigensystem(const HermitianOperator& h) {
  return hermitian_eigensystem(h.matrix());
}

inline double min_eigenvalue(const CMatrix& h) {
  return hermitian_eigensystem(h, 1e-9).values(0);
}

// ---------------------------------------------------------------------------
// In-place kernels on a raw 2^N x 2^N matrix. These avoid building the
// embedded operator and agree with the embedding semantics above.

namespace kernel {

inline std::size_t mask_of(int qubit, int num_qubits) {
  return std::size_t{1} << static_cast<unsigned>(num_qubits - 1 - qubit);
}

// std::complex operator* takes a slow NaN-recovery path under GCC; the
// kernels only ever see finite values.
inline Complex mul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

/// Calls fn(i0, i1) for every index pair differing only in `mask`
/// (i0 has the bit clear), in ascending i0 order.
template <class Fn>
inline void for_each_pair(std::size_t dim, std::size_t mask, Fn&& fn) {
  for (std::size_t base = 0; base < dim; base += 2 * mask) {
    for (std::size_t k = base; k < base + mask; ++k) fn(k, k | mask);
  }
}

/// m <- U_q m U_q^dagger, one pass over 2x2 blocks.
inline void conjugate_1q(CMatrix& m, const Mat2& u, int qubit, int num_qubits) {
  const auto mask = mask_of(qubit, num_qubits);
  const auto d = static_cast<std::size_t>(m.rows());
  const Complex u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
  const Complex w00 = std::conj(u00), w01 = std::conj(u01), w10 = std::conj(u10),
                w11 = std::conj(u11);
  Complex* data = m.data();
  for_each_pair(d, mask, [&](std::size_t j0, std::size_t j1) {
    Complex* c0 = data + j0 * d;
    Complex* c1 = data + j1 * d;
    for_each_pair(d, mask, [&](std::size_t i0, std::size_t i1) {
      const Complex r00 = c0[i0], r10 = c0[i1], r01 = c1[i0], r11 = c1[i1];
      const Complex t00 = mul(u00, r00) + mul(u01, r10);
      const Complex t01 = mul(u00, r01) + mul(u01, r11);
      const Complex t10 = mul(u10, r00) + mul(u11, r10);
      const Complex t11 = mul(u10, r01) + mul(u11, r11);
      c0[i0] = mul(t00, w00) + mul(t01, w01);
      c1[i0] = mul(t00, w10) + mul(t01, w11);
      c0[i1] = mul(t10, w00) + mul(t11, w01);
      c1[i1] = mul(t10, w10) + mul(t11, w11);
    });
  });
}

/// m <- D m D^dagger for diagonal D = diag(d0, d1) on `qubit`.
inline void conjugate_diag_1q(CMatrix& m, Complex d0, Complex d1, int qubit,
                              int num_qubits) {
  const auto mask = mask_of(qubit, num_qubits);
  const auto d = static_cast<std::size_t>(m.rows());
  // Only entries whose row and column differ on `qubit` pick up a phase.
  const Complex up = mul(d0, std::conj(d1));  // row bit 0, column bit 1
  const Complex down = std::conj(up);
  Complex* data = m.data();
  for_each_pair(d, mask, [&](std::size_t j0, std::size_t j1) {
    Complex* c0 = data + j0 * d;
    Complex* c1 = data + j1 * d;
    for_each_pair(d, mask, [&](std::size_t i0, std::size_t i1) {
      c1[i0] = mul(c1[i0], up);
      c0[i1] = mul(c0[i1], down);
    });
  });
}

/// m <- RX m RX^dagger with RX = c I - i s X on `qubit`.
inline void conjugate_rx(CMatrix& m, double c, double s, int qubit, int num_qubits) {
  const auto mask = mask_of(qubit, num_qubits);
  const auto d = static_cast<std::size_t>(m.rows());
  const double cc = c * c, ss = s * s, cs = c * s;
  // i * cs * z
  auto ics = [cs](Complex z) { return Complex(-cs * z.imag(), cs * z.real()); };
  Complex* data = m.data();
  for_each_pair(d, mask, [&](std::size_t j0, std::size_t j1) {
    Complex* c0 = data + j0 * d;
    Complex* c1 = data + j1 * d;
    for_each_pair(d, mask, [&](std::size_t i0, std::size_t i1) {
      const Complex r00 = c0[i0], r10 = c0[i1], r01 = c1[i0], r11 = c1[i1];
      const Complex a = ics(r01 - r10), b = ics(r00 - r11);
      c0[i0] = cc * r00 + ss * r11 + a;
      c1[i1] = cc * r11 + ss * r00 - a;
      c1[i0] = cc * r01 + ss * r10 + b;
      c0[i1] = cc * r10 + ss * r01 - b;
    });
  });
}

/// d/dt Re Tr(B e^{-itP/2} rho e^{itP/2}) at t = 0 for P = X on `qubit`,
/// i.e. (-i/2) Tr(B [X, rho]). B must be Hermitian.
inline double x_generator_derivative(const CMatrix& rho, const CMatrix& b, int qubit,
                                     int num_qubits) {
  const auto mask = mask_of(qubit, num_qubits);
  const auto d = static_cast<std::size_t>(rho.rows());
  const Complex* r = rho.data();
  const Complex* bb = b.data();
  // Im(conj(x) y)
  auto cross = [](Complex x, Complex y) { return x.real() * y.imag() - x.imag() * y.real(); };
  double acc = 0.0;
  for_each_pair(d, mask, [&](std::size_t j0, std::size_t j1) {
    const Complex* c0 = r + j0 * d;
    const Complex* c1 = r + j1 * d;
    const Complex* b0 = bb + j0 * d;
    const Complex* b1 = bb + j1 * d;
    for_each_pair(d, mask, [&](std::size_t i0, std::size_t i1) {
      const Complex u = c0[i1] - c1[i0];  // r10 - r01
      const Complex v = c1[i1] - c0[i0];  // r11 - r00
      acc += cross(b0[i0] - b1[i1], u) + cross(b1[i0] - b0[i1], v);
    });
  });
  return 0.5 * acc;
}

/// Same as x_generator_derivative for P = Z.
inline double z_generator_derivative(const CMatrix& rho, const CMatrix& b, int qubit,
                                     int num_qubits) {
  const auto mask = mask_of(qubit, num_qubits);
  const auto d = static_cast<std::size_t>(rho.rows());
  const Complex* r = rho.data();
  const Complex* bb = b.data();
  auto cross = [](Complex x, Complex y) { return x.real() * y.imag() - x.imag() * y.real(); };
  double acc = 0.0;
  for_each_pair(d, mask, [&](std::size_t j0, std::size_t j1) {
    const Complex* c0 = r + j0 * d;
    const Complex* c1 = r + j1 * d;
    const Complex* b0 = bb + j0 * d;
    const Complex* b1 = bb + j1 * d;
    for_each_pair(d, mask, [&](std::size_t i0, std::size_t i1) {
      acc += cross(b1[i0], c1[i0]) - cross(b0[i1], c0[i1]);
    });
  });
  return acc;
}

/// out <- (1 - k p) src + p sum_q X_q src X_q over the k qubits in `masks`.
/// `out` and `src` must not alias.
inline void bitflip_into(CMatrix& out, const CMatrix& src, double p,
                         std::span<const std::size_t> masks) {
  const auto d = static_cast<std::size_t>(src.rows());
  out.resize(src.rows(), src.cols());
  const double keep = 1.0 - static_cast<double>(masks.size()) * p;
  const Complex* s = src.data();
  Complex* o = out.data();
  for (std::size_t k = 0; k < d * d; ++k) o[k] = keep * s[k];
  for (const std::size_t m : masks) {
    for (std::size_t j = 0; j < d; ++j) {
      const Complex* sc = s + (j ^ m) * d;
      Complex* oc = o + j * d;
      for_each_pair(d, m, [&](std::size_t i0, std::size_t i1) {
        oc[i0] += p * sc[i1];
        oc[i1] += p * sc[i0];
      });
    }
  }
}

/// m <- X_q m X_q.
inline void conjugate_x(CMatrix& m, int qubit, int num_qubits) {
  const auto mask = mask_of(qubit, num_qubits);
  const auto d = static_cast<std::size_t>(m.rows());
  Complex* data = m.data();
  for (std::size_t c = 0; c < d; ++c) {
    const std::size_t cp = c ^ mask;
    if (cp < c) continue;
    Complex* col = data + c * d;
    Complex* colp = data + cp * d;
    for (std::size_t r = 0; r < d; ++r) {
      const std::size_t rp = r ^ mask;
      std::swap(col[r], colp[rp]);
    }
  }
}

/// m <- C m C for the CNOT permutation C (self-inverse).
inline void conjugate_cnot(CMatrix& m, int control, int target, int num_qubits) {
  const auto cmask = mask_of(control, num_qubits);
  const auto tmask = mask_of(target, num_qubits);
  const auto d = static_cast<std::size_t>(m.rows());
  Complex* data = m.data();
  // rows
  for (std::size_t c = 0; c < d; ++c) {
    Complex* col = data + c * d;
    for (std::size_t r = 0; r < d; ++r) {
      if ((r & cmask) && !(r & tmask)) std::swap(col[r], col[r | tmask]);
    }
  }
  // columns
  for (std::size_t c = 0; c < d; ++c) {
    if ((c & cmask) && !(c & tmask)) {
      Complex* a = data + c * d;
      Complex* b = data + (c | tmask) * d;
      for (std::size_t r = 0; r < d; ++r) std::swap(a[r], b[r]);
    }
  }
}

/// Re Tr(A B) for Hermitian B: the real inner product sum Re(A_ij conj(B_ij)).
inline double real_trace_product(const CMatrix& a, const CMatrix& b) {
  const auto n = 2 * a.size();
  const Eigen::Map<const Eigen::VectorXd> av(reinterpret_cast<const double*>(a.data()), n);
  const Eigen::Map<const Eigen::VectorXd> bv(reinterpret_cast<const double*>(b.data()), n);
  return av.dot(bv);
}

/// Re Tr(B U rho U^dagger) for U acting on `qubit`, without forming U rho U^dagger.
/// B must be Hermitian.
inline double rotated_expectation(const CMatrix& rho, const CMatrix& b, const Mat2& u,
                                  int qubit, int num_qubits) {
  const auto mask = mask_of(qubit, num_qubits);
  const auto d = static_cast<std::size_t>(rho.rows());
  const Complex u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
  const Complex w00 = std::conj(u00), w01 = std::conj(u01), w10 = std::conj(u10),
                w11 = std::conj(u11);
  const Complex* r = rho.data();
  const Complex* bb = b.data();
  auto rdot = [](Complex x, Complex y) { return x.real() * y.real() + x.imag() * y.imag(); };
  double acc = 0.0;
  for_each_pair(d, mask, [&](std::size_t j0, std::size_t j1) {
    const Complex* c0 = r + j0 * d;
    const Complex* c1 = r + j1 * d;
    const Complex* b0 = bb + j0 * d;
    const Complex* b1 = bb + j1 * d;
    for_each_pair(d, mask, [&](std::size_t i0, std::size_t i1) {
      const Complex r00 = c0[i0], r10 = c0[i1], r01 = c1[i0], r11 = c1[i1];
      const Complex t00 = mul(u00, r00) + mul(u01, r10);
      const Complex t01 = mul(u00, r01) + mul(u01, r11);
      const Complex t10 = mul(u10, r00) + mul(u11, r10);
      const Complex t11 = mul(u10, r01) + mul(u11, r11);
      acc += rdot(mul(t00, w00) + mul(t01, w01), b0[i0]);
      acc += rdot(mul(t00, w10) + mul(t01, w11), b1[i0]);
      acc += rdot(mul(t10, w00) + mul(t11, w01), b0[i1]);
      acc += rdot(mul(t10, w10) + mul(t11, w11), b1[i1]);
    });
  });
  return acc;
}

/// Re Tr(B D rho D^dagger) for diagonal D = diag(d0, d1) on `qubit`; B Hermitian.
inline double diag_rotated_expectation(const CMatrix& rho, const CMatrix& b, Complex d0,
                                       Complex d1, int qubit, int num_qubits) {
  const auto mask = mask_of(qubit, num_qubits);
  const auto d = static_cast<std::size_t>(rho.rows());
  const Complex up = mul(d0, std::conj(d1));
  const Complex down = std::conj(up);
  const Complex* r = rho.data();
  const Complex* bb = b.data();
  auto rdot = [](Complex x, Complex y) { return x.real() * y.real() + x.imag() * y.imag(); };
  double acc = 0.0;
  for_each_pair(d, mask, [&](std::size_t j0, std::size_t j1) {
    const Complex* c0 = r + j0 * d;
    const Complex* c1 = r + j1 * d;
    const Complex* b0 = bb + j0 * d;
    const Complex* b1 = bb + j1 * d;
    for_each_pair(d, mask, [&](std::size_t i0, std::size_t i1) {
      acc += rdot(c0[i0], b0[i0]) + rdot(c1[i1], b1[i1]);
      acc += rdot(mul(c1[i0], up), b1[i0]) + rdot(mul(c0[i1], down), b0[i1]);
    });
  });
  return acc;
}

}  // namespace kernel

inline CMatrix cnot_matrix(int control, int target, int num_qubits) {
  const CMatrix p0 =
      embed_single_qubit((Mat2() << 1, 0, 0, 0).finished(), control, num_qubits);
  const CMatrix p1 =
      embed_single_qubit((Mat2() << 0, 0, 0, 1).finished(), control, num_qubits);
  return p0 + p1 * embed_single_qubit(pauli::X(), target, num_qubits);
}

}  // namespace noisevqe
