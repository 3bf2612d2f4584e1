#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <isingvqe/ansatz.hpp>
#include <isingvqe/bipartite.hpp>
#include <isingvqe/circuit.hpp>
#include <isingvqe/exact.hpp>
#include <isingvqe/lattice.hpp>
#include <isingvqe/observables.hpp>

#include "support/oracle.hpp"
#include "support/random_circuit.hpp"

using namespace isingvqe;
using Catch::Approx;
using Catch::Matchers::WithinAbs;

namespace {

StateVector bell() {
  StateVector s = init_basis_state(2, 0);
  apply_gate(s, GateOp::single(Gate::H, 0));
  apply_gate(s, GateOp::cnot(0, 1));
  return s;
}

StateVector ghz(int n) {
  StateVector s = init_basis_state(n, 0);
  apply_gate(s, GateOp::single(Gate::H, 0));
  for (int q = 1; q < n; ++q) apply_gate(s, GateOp::cnot(0, q));
  return s;
}

}  // namespace

TEST_CASE("init_basis_state") {
  const auto s = init_basis_state(1, 0);
  CHECK(s[0] == cplx(1, 0));
  CHECK(s[1] == cplx(0, 0));

  const auto t = init_basis_state(2, 3);
  CHECK(t[3] == cplx(1, 0));
  CHECK(t.norm_squared() == 1.0);

  const auto u = init_basis_state(10, 0);
  CHECK(expectation(u, total_z(10)) == 10.0);

  CHECK_THROWS_AS(init_basis_state(2, 4), DomainError);
  CHECK_THROWS_AS(init_basis_state(0, 0), DomainError);
}

TEST_CASE("apply_gate examples") {
  SECTION("RY(pi) flips |0>") {
    auto s = init_basis_state(1, 0);
    apply_gate(s, GateOp::single(Gate::RY, 0), std::numbers::pi);
    CHECK_THAT(std::abs(s[1]), WithinAbs(1.0, 1e-15));
  }
  SECTION("H then CNOT gives a Bell state") {
    const auto s = bell();
    CHECK_THAT(s[0].real(), WithinAbs(1 / std::sqrt(2.0), 1e-15));
    CHECK_THAT(s[3].real(), WithinAbs(1 / std::sqrt(2.0), 1e-15));
    CHECK(std::abs(s[1]) == 0.0);
    CHECK(std::abs(s[2]) == 0.0);
  }
  SECTION("RZZ on |00> is a phase") {
    auto s = init_basis_state(2, 0);
    apply_gate(s, GateOp::rzz(0, 1), 0.7);
    CHECK_THAT(s[0].real(), WithinAbs(std::cos(0.35), 1e-15));
    CHECK_THAT(s[0].imag(), WithinAbs(-std::sin(0.35), 1e-15));
    CHECK_THAT(std::norm(s[0]), WithinAbs(1.0, 1e-15));
  }
  SECTION("errors") {
    auto s = init_basis_state(2, 0);
    CHECK_THROWS_AS(apply_gate(s, GateOp::single(Gate::X, 2)), DomainError);
    CHECK_THROWS_AS(apply_gate(s, GateOp::cnot(0, 5)), DomainError);
    CHECK_THROWS_AS(apply_gate(s, GateOp::single(Gate::RX, 0)), ContractError);
  }
}

TEST_CASE("every gate kernel matches its dense Kronecker matrix") {
  std::mt19937_64 rng(11);
  const int n = 4;
  const std::vector<GateOp> ops = {GateOp::single(Gate::H, 2),  GateOp::single(Gate::X, 0),
                                   GateOp::single(Gate::Z, 3),  GateOp::single(Gate::RX, 1),
                                   GateOp::single(Gate::RY, 3), GateOp::single(Gate::RZ, 0),
                                   GateOp::cnot(3, 1),          GateOp::cnot(0, 2),
                                   GateOp::rzz(1, 3),           GateOp::rzz(2, 0)};
  for (const auto& op : ops) {
    const auto s0 = oracle::random_state(n, rng);
    auto s = s0;
    const double angle = 0.813;
    apply_gate(s, op, angle);
    const oracle::Vec expect = oracle::gate_matrix(op, angle, n) * oracle::to_vec(s0);
    CHECK((oracle::to_vec(s) - expect).norm() < 1e-13);
    apply_gate_inverse(s, op, angle);
    CHECK((oracle::to_vec(s) - oracle::to_vec(s0)).norm() < 1e-13);
  }
}

TEST_CASE("expectation examples") {
  CHECK(expectation(init_basis_state(1, 0), PauliSum{PauliString(1.0, {{0, Pauli::Z}})}) == 1.0);

  auto plus2 = init_basis_state(2, 0);
  apply_gate(plus2, GateOp::single(Gate::H, 0));
  apply_gate(plus2, GateOp::single(Gate::H, 1));
  CHECK_THAT(expectation(plus2, PauliSum{PauliString(1.0, {{0, Pauli::X}, {1, Pauli::X}})}), WithinAbs(1.0, 1e-15));

  CHECK_THROWS_AS(expectation(plus2, PauliSum{PauliString(1.0, {{2, Pauli::Z}})}), DomainError);

  // Y conventions: <+i|Y|+i> = 1 where |+i> = S H |0> = RX(-pi/2)|0>.
  auto yplus = init_basis_state(1, 0);
  apply_gate(yplus, GateOp::single(Gate::RX, 0), -std::numbers::pi / 2);
  CHECK_THAT(expectation(yplus, PauliSum{PauliString(1.0, {{0, Pauli::Y}})}), WithinAbs(1.0, 1e-15));
}

TEST_CASE("apply_operator examples") {
  const auto one = apply_operator(init_basis_state(1, 0), PauliSum{PauliString(1.0, {{0, Pauli::X}})});
  CHECK(one[1] == cplx(1, 0));
  CHECK(one[0] == cplx(0, 0));

  const auto scaled = apply_operator(init_basis_state(1, 0), PauliSum{PauliString(2.0, {{0, Pauli::Z}})});
  CHECK(scaled.norm_squared() == 4.0);

  // 10-site ring at zero field on |0...0>: frozen against the dense H^2 oracle.
  const auto h = build_tfim(build_lattice(1, {10}), {-1.0, 0.0});
  const auto s = init_basis_state(10, 0);
  const oracle::Mat hd = oracle::dense(h, 10);
  const double h2_oracle = oracle::dense_expectation(oracle::to_vec(s), hd * hd);
  CHECK_THAT(h2_oracle, WithinAbs(100.0, 1e-9));
  CHECK_THAT(apply_operator(s, h).norm_squared(), WithinAbs(100.0, 1e-9));
}

TEST_CASE("inner_product examples") {
  const auto zero = init_basis_state(1, 0);
  const auto one = init_basis_state(1, 1);
  auto plus = zero;
  apply_gate(plus, GateOp::single(Gate::H, 0));
  CHECK(inner_product(zero, zero) == cplx(1, 0));
  CHECK(inner_product(zero, one) == cplx(0, 0));
  CHECK_THAT(inner_product(zero, plus).real(), WithinAbs(1 / std::sqrt(2.0), 1e-15));
  CHECK_THROWS_AS(inner_product(zero, init_basis_state(2, 0)), ContractError);
}

TEST_CASE("reduced_density examples") {
  const int keep0[1] = {0};
  const auto rho = reduced_density(bell(), keep0);
  CHECK_THAT(rho(0, 0).real(), WithinAbs(0.5, 1e-15));
  CHECK_THAT(rho(1, 1).real(), WithinAbs(0.5, 1e-15));
  CHECK(std::abs(rho(0, 1)) < 1e-15);

  // |01> in index notation: qubit 0 = 1, qubit 1 = 0. Qubit 1 is pure |0>.
  const int keep1[1] = {1};
  const auto rho1 = reduced_density(init_basis_state(2, 1), keep1);
  CHECK(rho1(0, 0) == cplx(1, 0));
  CHECK(shannon_bits(density_eigenvalues(rho1)) == 0.0);

  CHECK_THROWS_AS(reduced_density(bell(), std::span<const int>{}), ContractError);
  std::vector<int> big(13);
  for (int i = 0; i < 13; ++i) big[static_cast<std::size_t>(i)] = i;
  CHECK_THROWS_AS(reduced_density(init_basis_state(14, 0), big), ContractError);
  CHECK_NOTHROW(reduced_density(init_basis_state(14, 0), big, 13));
}

TEST_CASE("reduced density matrices are Hermitian, unit trace, positive") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = oracle::random_state(6, rng);
    const int keep[3] = {4, 0, 2};
    const auto rho = reduced_density(s, keep);
    CHECK((rho - rho.adjoint()).norm() < 1e-10);
    CHECK_THAT(rho.trace().real(), WithinAbs(1.0, 1e-10));
    for (double ev : density_eigenvalues(rho)) CHECK(ev >= -1e-10);
  }
}

TEST_CASE("schmidt_spectrum examples") {
  const int a0[1] = {0};
  const auto b = schmidt_spectrum(bell(), a0).coefficients;
  REQUIRE(b.size() == 2);
  CHECK_THAT(b[0], WithinAbs(1 / std::sqrt(2.0), 1e-14));
  CHECK_THAT(b[1], WithinAbs(1 / std::sqrt(2.0), 1e-14));

  const int a01[2] = {0, 1};
  const auto g = schmidt_spectrum(ghz(4), a01).coefficients;
  REQUIRE(g.size() == 4);
  CHECK_THAT(g[0], WithinAbs(1 / std::sqrt(2.0), 1e-14));
  CHECK_THAT(g[1], WithinAbs(1 / std::sqrt(2.0), 1e-14));
  CHECK(g[2] < 1e-14);
  CHECK(g[3] < 1e-14);

  auto prod = init_basis_state(3, 5);
  apply_gate(prod, GateOp::single(Gate::RY, 1), 0.3);
  const int a2[2] = {2, 1};
  const auto p = schmidt_spectrum(prod, a2).coefficients;
  CHECK_THAT(p[0], WithinAbs(1.0, 1e-14));
  CHECK(p[1] < 1e-14);

  CHECK_THROWS_AS(schmidt_spectrum(bell(), std::span<const int>{}), ContractError);
  const int all[2] = {0, 1};
  CHECK_THROWS_AS(schmidt_spectrum(bell(), all), ContractError);
}

TEST_CASE("circuit_gradient examples") {
  const PauliSum z0{PauliString(1.0, {{0, Pauli::Z}})};
  ParametricCircuit ry(1);
  ry.add_param(Gate::RY, 0, 0);
  const double half_pi[1] = {std::numbers::pi / 2};
  CHECK_THAT(circuit_gradient(init_basis_state(1, 0), ry, half_pi, z0)[0], WithinAbs(-1.0, 1e-14));

  const double zero[1] = {0.0};
  CHECK_THAT(circuit_gradient(init_basis_state(2, 0), toy_circuit(2), zero, toy_hamiltonian())[0],
             WithinAbs(1.0, 1e-14));

  const double two[2] = {0.1, 0.2};
  CHECK_THROWS_AS(circuit_gradient(init_basis_state(1, 0), ry, two, z0), ContractError);
}

TEST_CASE("circuit_gradient on a random 4-qubit HVA matches finite differences") {
  std::mt19937_64 rng(2024);
  const auto lat = build_lattice(1, {4});
  const auto c = build_hva(lat, 3);
  const auto h = build_tfim(lat, {-1.0, 0.7});
  const auto x = oracle::random_params(c.n_params(), rng);
  const auto init = init_basis_state(4, 0);
  const auto g = circuit_gradient(init, c, x, h);
  const auto fd = oracle::finite_difference(
      [&](std::span<const double> p) { return expectation(prepare_state(init, c, p), h); }, x, 1e-5);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(std::abs(g[k] - fd[k]) <= std::max(1e-6 * std::abs(fd[k]), 1e-8));
  }
}

TEST_CASE("property: adjoint gradient agrees with finite differences and parameter shift") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> nq(1, 8), nl(1, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = nq(rng);
    const auto c = oracle::random_circuit(n, nl(rng), rng);
    const auto h = oracle::random_pauli_sum(n, 4, rng);
    const auto x = oracle::random_params(c.n_params(), rng);
    const auto init = init_basis_state(n, 0);
    const auto g = circuit_gradient(init, c, x, h);
    const auto fd = oracle::finite_difference(
        [&](std::span<const double> p) { return expectation(prepare_state(init, c, p), h); }, x, 1e-5);
    const auto ps = parameter_shift_gradient(init, c, x, h);
    for (std::size_t k = 0; k < g.size(); ++k) {
      INFO("trial " << trial << " slot " << k);
      CHECK(std::abs(g[k] - fd[k]) <= std::max(1e-6 * std::abs(fd[k]), 1e-8));
      CHECK(std::abs(g[k] - ps[k]) <= 1e-10);
    }
  }
}

TEST_CASE("property: dense-matrix circuit oracle agrees with the kernels") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = oracle::random_circuit(5, 3, rng);
    const auto x = oracle::random_params(c.n_params(), rng);
    const auto s = prepare_state(init_basis_state(5, 0), c, x);
    CHECK((oracle::to_vec(s) - oracle::run_dense(c, x)).norm() < 1e-12);
  }
}

TEST_CASE("property: norm is preserved over long gate sequences") {
  std::mt19937_64 rng(99);
  for (int n : {1, 5, 12, 16}) {
    StateVector s = init_basis_state(n, 0);
    std::uniform_int_distribution<int> gate(0, 7), qubit(0, n - 1);
    std::uniform_real_distribution<double> angle(-6.3, 6.3);
    const int count = n == 16 ? 10000 : 4000;
    for (int i = 0; i < count; ++i) {
      const Gate g = static_cast<Gate>(gate(rng));
      int a = qubit(rng), b = qubit(rng);
      if (is_two_qubit(g)) {
        if (n == 1) continue;
        while (b == a) b = qubit(rng);
      }
      apply_gate(s, GateOp{g, {a, b}}, angle(rng));
    }
    CHECK(std::abs(s.norm_squared() - 1.0) < 1e-10);
  }
}

TEST_CASE("property: Hermitian expectations carry no imaginary residue") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> nq(1, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = nq(rng);
    const auto s = oracle::random_state(n, rng);
    const auto h = oracle::random_pauli_sum(n, 5, rng);
    const StateVector hs = apply_operator(s, h);
    CHECK(std::abs(inner_product(s, hs).imag()) < 1e-10);
    // expectation() itself throws if the residue exceeds 1e-10.
    const double e = expectation(s, h);
    CHECK_THAT(e, WithinAbs(inner_product(s, hs).real(), 1e-10));
    if (n <= 4) CHECK_THAT(e, WithinAbs(oracle::dense_expectation(oracle::to_vec(s), oracle::dense(h, n)), 1e-10));
  }
}

TEST_CASE("property: partial-trace and Schmidt entropies agree") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> nq(2, 9);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = nq(rng);
    const auto s = oracle::random_state(n, rng);
    std::vector<int> qs(static_cast<std::size_t>(n));
    std::iota(qs.begin(), qs.end(), 0);
    std::shuffle(qs.begin(), qs.end(), rng);
    const int k = std::uniform_int_distribution<int>(1, n - 1)(rng);
    const std::span<const int> a(qs.data(), static_cast<std::size_t>(k));
    const double s_pt = shannon_bits(density_eigenvalues(reduced_density(s, a)));
    auto sv = schmidt_spectrum(s, a).coefficients;
    double total = 0;
    for (auto& x : sv) {
      x *= x;
      total += x;
    }
    CHECK_THAT(total, WithinAbs(1.0, 1e-8));
    CHECK_THAT(s_pt, WithinAbs(shannon_bits(sv), 1e-10));
  }
}

TEST_CASE("circuit text format round-trips") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    auto c = oracle::random_circuit(5, 2, rng);
    c.add(GateOp::single(Gate::RX, 2), Binding::fixed(0.1 + trial));
    std::istringstream is(to_text(c));
    const auto back = read_circuit(is);
    CHECK(back == c);
    CHECK(to_text(back) == to_text(c));
  }
  std::istringstream bad("qubits 2\nFOO 0\n");
  CHECK_THROWS_AS(read_circuit(bad), DomainError);
  std::istringstream no_angle("qubits 2\nRX 0\n");
  CHECK_THROWS_AS(read_circuit(no_angle), DomainError);
}
