#include <catch_amalgamated.hpp>

#include <random>

#include "noisevqe/qcore.hpp"
#include "oracles.hpp"

using namespace noisevqe;
using Catch::Matchers::WithinAbs;

namespace {

Mat2 random_unitary(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const CMatrix m = oracle::rz(u(rng)) * oracle::rx(u(rng)) * oracle::rz(u(rng));
  return Mat2(m);
}

}  // namespace

TEST_CASE("embedding puts qubit 0 in the most significant bit", "[qcore]") {
  for (int n = 1; n <= 4; ++n) {
    for (int q = 0; q < n; ++q) {
      CHECK(max_abs(embed_single_qubit(pauli::Y(), q, n) - oracle::on_site(oracle::y(), q, n)) == 0.0);
    }
  }
  // X on qubit 0 of two qubits maps |00> (index 0) to |10> (index 2).
  const CMatrix x0 = embed_single_qubit(pauli::X(), 0, 2);
  CHECK(x0(2, 0) == Complex(1.0));
  CHECK_THROWS_AS(embed_single_qubit(pauli::X(), 2, 2), PreconditionError);
  CHECK_THROWS_AS(embed_single_qubit(pauli::X(), -1, 2), PreconditionError);
}

TEST_CASE("value types validate their invariants", "[qcore]") {
  CHECK_THROWS_AS(qubits_for_dimension(3), DimensionError);
  CHECK_THROWS_AS(qubits_for_dimension(1), DimensionError);
  CHECK(qubits_for_dimension(8) == 3);

  CVector v = CVector::Zero(4);
  v(0) = 2.0;
  CHECK_THROWS_AS(PureState(v), PreconditionError);
  CHECK_THROWS_AS(PureState(CVector::Ones(3) / std::sqrt(3.0)), DimensionError);

  CMatrix bad = CMatrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  bad(0, 0) = 1.0;
  CHECK_THROWS_AS(DensityMatrix(bad), NumericalError);
  CHECK_THROWS_AS(DensityMatrix(CMatrix::Identity(2, 2)), NumericalError);
  CHECK_THROWS_AS(HermitianOperator(bad), PreconditionError);
  CHECK_THROWS_AS(DensityMatrix(CMatrix::Identity(2, 3)), DimensionError);

  const auto mixed = DensityMatrix::maximally_mixed(2);
  CHECK_THAT(mixed.purity(), WithinAbs(0.25, 1e-15));
  const auto pure = DensityMatrix::from_pure(PureState::basis(3, 5));
  CHECK_THAT(pure.purity(), WithinAbs(1.0, 1e-15));
  CHECK(pure.matrix()(5, 5) == Complex(1.0));
}

TEST_CASE("apply_unitary matches dense conjugation and rejects non-unitaries", "[qcore]") {
  std::mt19937_64 rng(11);
  const CMatrix rho = oracle::random_density(2, rng);
  const CMatrix u = oracle::cnot(0, 1, 2) * oracle::on_site(oracle::rx(0.7), 1, 2);
  const DensityMatrix out = apply_unitary(DensityMatrix(rho), u);
  CHECK(max_abs(out.matrix() - u * rho * u.adjoint()) < 1e-14);
  CHECK_THROWS_AS(apply_unitary(DensityMatrix(rho), CMatrix::Identity(4, 4) * 2.0), PreconditionError);
  CHECK_THROWS_AS(apply_unitary(DensityMatrix(rho), CMatrix::Identity(2, 2)), DimensionError);
}

TEST_CASE("expectation is real for Hermitian pairs and checks shapes", "[qcore]") {
  std::mt19937_64 rng(5);
  const CMatrix rho = oracle::random_density(3, rng);
  const CMatrix h = oracle::random_hermitian(3, rng);
  CHECK_THAT(expectation(rho, h), WithinAbs((rho * h).trace().real(), 1e-13));
  CHECK_THAT(kernel::real_trace_product(rho, h), WithinAbs((rho * h).trace().real(), 1e-13));
  CHECK_THROWS_AS(expectation(rho, CMatrix::Identity(4, 4)), DimensionError);
  CMatrix anti = CMatrix::Zero(8, 8);
  anti(0, 1) = Complex(0, 1);
  anti(1, 0) = Complex(0, 1);
  CHECK_THROWS_AS(expectation(rho, anti), NumericalError);
}

TEST_CASE("hermitian eigensystem sorts ascending", "[qcore]") {
  std::mt19937_64 rng(3);
  const CMatrix h = oracle::random_hermitian(3, rng);
  const auto es = hermitian_eigensystem(h);
  for (Eigen::Index i = 1; i < es.values.size(); ++i) CHECK(es.values(i) >= es.values(i - 1));
  CHECK(max_abs(es.vectors * es.values.asDiagonal() * es.vectors.adjoint() - h) < 1e-12);
  CHECK_THAT(min_eigenvalue(h), WithinAbs(es.values(0), 1e-12));
}

TEST_CASE("single-qubit kernels match dense conjugation", "[qcore][kernel]") {
  std::mt19937_64 rng(42);
  for (int n = 1; n <= 4; ++n) {
    for (int q = 0; q < n; ++q) {
      const CMatrix rho = oracle::random_density(n, rng);
      const Mat2 u = random_unitary(rng);
      const CMatrix full = oracle::on_site(CMatrix(u), q, n);
      const CMatrix want = full * rho * full.adjoint();

      CMatrix got = rho;
      kernel::conjugate_1q(got, u, q, n);
      CHECK(max_abs(got - want) < 1e-14);

      const double a = std::uniform_real_distribution<double>(-4, 4)(rng);
      const CMatrix rxf = oracle::on_site(oracle::rx(a), q, n);
      got = rho;
      kernel::conjugate_rx(got, std::cos(a / 2), std::sin(a / 2), q, n);
      CHECK(max_abs(got - rxf * rho * rxf.adjoint()) < 1e-14);

      const CMatrix rzf = oracle::on_site(oracle::rz(a), q, n);
      got = rho;
      kernel::conjugate_diag_1q(got, std::polar(1.0, -a / 2), std::polar(1.0, a / 2), q, n);
      CHECK(max_abs(got - rzf * rho * rzf.adjoint()) < 1e-14);

      const CMatrix xf = oracle::on_site(oracle::x(), q, n);
      got = rho;
      kernel::conjugate_x(got, q, n);
      CHECK(max_abs(got - xf * rho * xf) < 1e-15);

      const CMatrix b = oracle::random_hermitian(n, rng);
      CHECK_THAT(kernel::rotated_expectation(rho, b, u, q, n),
                 WithinAbs((b * want).trace().real(), 1e-12));
      CHECK_THAT(kernel::diag_rotated_expectation(rho, b, std::polar(1.0, -a / 2),
                                                  std::polar(1.0, a / 2), q, n),
                 WithinAbs((b * rzf * rho * rzf.adjoint()).trace().real(), 1e-12));
    }
  }
}

TEST_CASE("generator derivatives equal the commutator formula", "[qcore][kernel]") {
  // d/dt Tr(B R(t) rho R(t)^dagger) at t = 0 is (-i/2) Tr(B [P, rho]).
  std::mt19937_64 rng(8);
  for (int n = 1; n <= 3; ++n) {
    for (int q = 0; q < n; ++q) {
      const CMatrix rho = oracle::random_density(n, rng);
      const CMatrix b = oracle::random_hermitian(n, rng);
      const CMatrix xf = oracle::on_site(oracle::x(), q, n);
      const CMatrix zf = oracle::on_site(oracle::z(), q, n);
      const Complex i(0, 1);
      const double dx = (-0.5 * i * (b * (xf * rho - rho * xf)).trace()).real();
      const double dz = (-0.5 * i * (b * (zf * rho - rho * zf)).trace()).real();
      CHECK_THAT(kernel::x_generator_derivative(rho, b, q, n), WithinAbs(dx, 1e-12));
      CHECK_THAT(kernel::z_generator_derivative(rho, b, q, n), WithinAbs(dz, 1e-12));
    }
  }
}

TEST_CASE("CNOT kernel matches the projector form", "[qcore][kernel]") {
  std::mt19937_64 rng(19);
  for (int n = 2; n <= 4; ++n) {
    for (int c = 0; c < n; ++c) {
      for (int t = 0; t < n; ++t) {
        if (c == t) continue;
        const CMatrix rho = oracle::random_density(n, rng);
        const CMatrix u = oracle::cnot(c, t, n);
        CMatrix got = rho;
        kernel::conjugate_cnot(got, c, t, n);
        CHECK(max_abs(got - u * rho * u.adjoint()) < 1e-15);
        CHECK(max_abs(cnot_matrix(c, t, n) - u) == 0.0);
      }
    }
  }
}

TEST_CASE("unitary kernels preserve trace, hermiticity and spectrum", "[qcore][property]") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4;
    CMatrix rho = oracle::random_density(n, rng);
    const double purity = (rho * rho).trace().real();
    for (int k = 0; k < 10; ++k) {
      const int q = static_cast<int>(rng() % static_cast<unsigned>(n));
      kernel::conjugate_1q(rho, random_unitary(rng), q, n);
      if (n > 1) kernel::conjugate_cnot(rho, q, (q + 1) % n, n);
    }
    CHECK_THAT(rho.trace().real(), WithinAbs(1.0, 1e-14));
    CHECK(hermiticity_defect(rho) < 1e-14);
    CHECK_THAT((rho * rho).trace().real(), WithinAbs(purity, 1e-13));
    CHECK(min_eigenvalue(rho) > -1e-14);
  }
}
