#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "noisevqe/ansatz.hpp"
#include "oracles.hpp"

using namespace noisevqe;
using Catch::Matchers::WithinAbs;

TEST_CASE("parameter count follows 2N + 4(N-1)L", "[ansatz]") {
  CHECK(param_count(2, 1) == 8);
  CHECK(param_count(5, 4) == 74);
  CHECK(param_count(3, 2) == 22);
  for (int n = 2; n <= 7; ++n) {
    for (int l = 1; l <= 5; ++l) {
      const auto layout = build_layout(n, l);
      CHECK(layout.param_count == 2 * n + 4 * (n - 1) * l);
      CHECK(layout.count(SlotKind::Cnot) == static_cast<std::size_t>((n - 1) * l));
      CHECK(layout.count(SlotKind::NoiseMarker) == static_cast<std::size_t>(l));
      CHECK(layout.count(SlotKind::Rx) + layout.count(SlotKind::Rz) ==
            static_cast<std::size_t>(layout.param_count));
    }
  }
}

TEST_CASE("layout order: initial rotations, brick CNOTs, marker per layer", "[ansatz]") {
  const auto layout = build_layout(2, 1);
  const std::vector<Slot> want{Slot::rx(0, 0), Slot::rx(1, 1), Slot::rz(0, 2), Slot::rz(1, 3),
                               Slot::cnot(0, 1), Slot::rx(0, 4), Slot::rx(1, 5), Slot::rz(0, 6),
                               Slot::rz(1, 7), Slot::marker(0)};
  CHECK(layout.slots == want);

  const auto five = build_layout(5, 1);
  std::vector<std::pair<int, int>> pairs;
  for (const auto& s : five.slots) {
    if (s.kind == SlotKind::Cnot) pairs.emplace_back(s.qubit, s.target);
  }
  CHECK(pairs == std::vector<std::pair<int, int>>{{0, 1}, {2, 3}, {1, 2}, {3, 4}});
  // every parameter index used exactly once
  std::vector<int> seen(static_cast<std::size_t>(five.param_count), 0);
  for (const auto& s : five.slots) {
    if (s.is_rotation()) ++seen[static_cast<std::size_t>(s.param)];
  }
  for (int c : seen) CHECK(c == 1);
}

TEST_CASE("invalid layouts and parameter vectors are rejected", "[ansatz]") {
  CHECK_THROWS_AS(build_layout(1, 1), PreconditionError);
  CHECK_THROWS_AS(build_layout(3, 0), PreconditionError);
  const auto layout = build_layout(2, 1);
  const std::vector<double> short_theta(7, 0.0);
  CHECK_THROWS_AS(simulate_matrix(layout, short_theta, NoiseModel{}), PreconditionError);
  CHECK_THROWS_AS(parse_variant("ring", 2, 1), PreconditionError);
  CHECK_THROWS_AS(parse_variant("general", 1, 1), PreconditionError);
}

TEST_CASE("variants expose their free parameters", "[ansatz]") {
  CHECK(AnsatzVariant::dimer8().free_parameters() == 8);
  CHECK(AnsatzVariant::dimer2().free_parameters() == 2);
  CHECK(AnsatzVariant::general(5, 4).free_parameters() == 74);
  CHECK(parse_variant("dimer2", 9, 9).name() == "dimer2");
  CHECK(parse_variant("general", 3, 2).num_layers == 2);

  const Eigen::MatrixXd c = two_param_constraint();
  const Eigen::Vector2d t(0.3, -1.1);
  const Eigen::VectorXd full = c * t;
  const auto expanded = expand_two_param(0.3, -1.1);
  for (int k = 0; k < 8; ++k) CHECK(full(k) == expanded[static_cast<std::size_t>(k)]);
  CHECK(expanded == std::vector<double>{0.3, 0.3, -1.1, -1.1, -0.3, -0.3, 1.1, 1.1});
}

TEST_CASE("noiseless simulation equals the state-vector oracle", "[ansatz]") {
  std::mt19937_64 rng(2024);
  for (int n = 2; n <= 4; ++n) {
    for (int l = 1; l <= 2; ++l) {
      const auto layout = build_layout(n, l);
      for (int trial = 0; trial < 5; ++trial) {
        const auto theta = oracle::random_angles(static_cast<std::size_t>(layout.param_count), rng);
        const CVector psi = oracle::run_circuit(layout, theta);
        const CMatrix rho = simulate_matrix(layout, theta, NoiseModel{});
        CHECK(max_abs(rho - psi * psi.adjoint()) < 1e-13);
      }
    }
  }
}

TEST_CASE("rotation conventions: RX(pi) on qubit 0 flips the leading bit", "[ansatz]") {
  CMatrix rho = initial_state(2);
  apply_rotation(rho, SlotKind::Rx, 0, std::numbers::pi, 2);
  CHECK_THAT(rho(2, 2).real(), WithinAbs(1.0, 1e-15));
  // RZ only adds relative phase: |+> picks up exp(i a) on the off-diagonal.
  CMatrix plus = CMatrix::Constant(2, 2, 0.5);
  apply_rotation(plus, SlotKind::Rz, 0, 0.4, 1);
  CHECK(std::abs(plus(0, 1) - 0.5 * std::polar(1.0, -0.4)) < 1e-15);
  CHECK(max_abs(CMatrix(rx_matrix(0.9)) - oracle::rx(0.9)) < 1e-15);
  CHECK(max_abs(CMatrix(rz_matrix(0.9)) - oracle::rz(0.9)) < 1e-15);
}

TEST_CASE("rotation derivative matches a finite difference in the angle", "[ansatz]") {
  std::mt19937_64 rng(6);
  for (int n = 1; n <= 3; ++n) {
    for (int q = 0; q < n; ++q) {
      for (SlotKind kind : {SlotKind::Rx, SlotKind::Rz}) {
        const CMatrix rho = oracle::random_density(n, rng);
        const CMatrix b = oracle::random_hermitian(n, rng);
        const double h = 1e-5;
        auto e = [&](double a) {
          CMatrix r = rho;
          apply_rotation(r, kind, q, a, n);
          return (b * r).trace().real();
        };
        CHECK_THAT(rotation_derivative(rho, b, kind, q, n),
                   WithinAbs((e(h) - e(-h)) / (2 * h), 1e-8));
        // rotated_expectation is the energy after one more rotation
        CHECK_THAT(noisevqe::rotated_expectation(rho, b, kind, q, 0.37, n), WithinAbs(e(0.37), 1e-12));
      }
    }
  }
}

TEST_CASE("error-free prefixes and suffixes recompose the circuit", "[ansatz]") {
  std::mt19937_64 rng(9);
  const auto layout = build_layout(3, 2);
  const auto theta = oracle::random_angles(static_cast<std::size_t>(layout.param_count), rng);
  const auto prefixes = simulate_error_free_prefixes(layout, theta);
  REQUIRE(prefixes.size() == 2);
  const CMatrix whole = simulate_matrix(layout, theta, NoiseModel{});
  for (const auto& p : prefixes) {
    CMatrix r = p.state;
    apply_suffix(r, layout, theta, p.suffix_begin);
    CHECK(max_abs(r - whole) < 1e-13);
  }
  CHECK(prefixes.back().suffix_begin == layout.slots.size());
}
