#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include <isingvqe/exact.hpp>
#include <isingvqe/optimize.hpp>
#include <isingvqe/vqe.hpp>

#include "support/random_circuit.hpp"

using namespace isingvqe;
using Catch::Matchers::WithinAbs;

namespace {

const Lattice ring10 = build_lattice(1, {10});

double wrap_angle(double t) { return std::remainder(t, 2 * std::numbers::pi); }

void check_result_invariants(const VqeProblem& p, const OptResult& r) {
  CHECK_THAT(evaluate_energy(p, r.best_params), WithinAbs(r.best_energy, 1e-10));
  for (std::size_t i = 1; i < r.energy_trace.size(); ++i) CHECK(r.energy_trace[i] <= r.energy_trace[i - 1]);
  CHECK(r.energy_trace.back() == r.best_energy);
}

OptimizerConfig quasi_newton(int restarts = 5, std::uint64_t seed = 1) {
  OptimizerConfig c = default_optimizer(AnsatzKind::HVA);
  c.method = Method::QuasiNewton;
  c.n_restarts = restarts;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("optimizers on smooth test functions") {
  const optim::ValueAndGradient rosen = [](std::span<const double> x, std::span<double> g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  optim::LbfgsOptions lo;
  lo.value_tolerance = 0;
  const auto r = optim::lbfgs(rosen, {-1.2, 1.0}, lo);
  CHECK(r.converged);
  CHECK_THAT(r.x[0], WithinAbs(1.0, 1e-6));
  CHECK_THAT(r.x[1], WithinAbs(1.0, 1e-6));
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);

  const optim::Value quad = [](std::span<const double> x) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i + 1.0) * (x[i] - 0.5) * (x[i] - 0.5);
    return s;
  };
  optim::NelderMeadOptions no;
  no.tolerance = 1e-10;
  const auto q = optim::nelder_mead(quad, {0, 0, 0, 0, 0, 0}, no);
  CHECK(q.converged);
  for (double v : q.x) CHECK_THAT(v, WithinAbs(0.5, 1e-4));
  CHECK(q.value < 1e-8);
  for (std::size_t i = 1; i < q.trace.size(); ++i) CHECK(q.trace[i] <= q.trace[i - 1]);

  optim::LbfgsOptions capped;
  capped.max_iterations = 3;
  capped.value_tolerance = 0;
  CHECK_FALSE(optim::lbfgs(rosen, {-1.2, 1.0}, capped).converged);
}

TEST_CASE("evaluate_energy examples") {
  const VqeProblem toy2(toy_hamiltonian(), toy_circuit(2));
  const double m[1] = {-std::numbers::pi / 2};
  CHECK_THAT(evaluate_energy(toy2, m), WithinAbs(-1.0, 1e-15));

  const VqeProblem toy1(toy_hamiltonian(), toy_circuit(1));
  for (double t : {-2.0, 0.3, 1.7}) {
    const double p[1] = {t};
    CHECK_THAT(evaluate_energy(toy1, p), WithinAbs(0.0, 1e-15));
  }

  const VqeProblem hva(build_tfim(ring10, {-1.0, 0.5}), build_hva(ring10, 4));
  CHECK_THAT(evaluate_energy(hva, std::vector<double>(8, 0.0)), WithinAbs(-5.0, 1e-12));
  CHECK_THROWS_AS(evaluate_energy(hva, std::vector<double>(7, 0.0)), ContractError);

  CHECK_THROWS_AS(VqeProblem(build_tfim(ring10, {-1.0, 0.5}), build_hva(build_lattice(1, {4}), 1)), ContractError);
}

TEST_CASE("OptimizerConfig validation and method names") {
  OptimizerConfig c;
  CHECK_NOTHROW(c.validate());
  c.n_restarts = 0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = {};
  c.gradient_tolerance = 0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = {};
  c.max_iterations = 0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  CHECK(parse_method("quasi_newton") == Method::QuasiNewton);
  CHECK(parse_method("derivative_free") == Method::DerivativeFree);
  CHECK_THROWS_AS(parse_method("adam"), DomainError);
  CHECK(default_optimizer(AnsatzKind::HEA).method == Method::QuasiNewton);
  CHECK(default_optimizer(AnsatzKind::HVA_SB).method == Method::DerivativeFree);
}

TEST_CASE("random_initial_params") {
  const auto a = random_initial_params(50, 0.1, 7, 2);
  CHECK(a == random_initial_params(50, 0.1, 7, 2));
  CHECK(a != random_initial_params(50, 0.1, 7, 3));
  CHECK(a != random_initial_params(50, 0.1, 8, 2));
  for (double v : a) CHECK(std::abs(v) <= 0.1);
}

TEST_CASE("minimize on the two-qubit toy problem") {
  const VqeProblem p(toy_hamiltonian(), toy_circuit(2));
  for (auto method : {Method::QuasiNewton, Method::DerivativeFree}) {
    OptimizerConfig c;
    c.method = method;
    const auto r = minimize(p, c);
    CHECK_THAT(r.best_energy, WithinAbs(-1.0, 1e-8));
    CHECK_THAT(wrap_angle(r.best_params[0]), WithinAbs(-std::numbers::pi / 2, 1e-3));
    CHECK(r.converged);
    check_result_invariants(p, r);
  }
}

TEST_CASE("derivative-free restarts all reach the toy minimum") {
  const VqeProblem p(toy_hamiltonian(), toy_circuit(2));
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (double scale : {0.1, std::numbers::pi}) {
      OptimizerConfig c;
      c.method = Method::DerivativeFree;
      c.n_restarts = 1;
      c.init_scale = scale;
      c.seed = seed;
      const auto r = minimize(p, c);
      CHECK_THAT(r.best_energy, WithinAbs(-1.0, 1e-6));
    }
  }
}

TEST_CASE("minimize on a flat landscape") {
  ParametricCircuit c(2);
  c.add_param(Gate::RY, 0, 0);
  c.add_param(Gate::RX, 1, 1);
  const VqeProblem p(PauliSum{PauliString(-2.5, {})}, c);
  for (auto method : {Method::QuasiNewton, Method::DerivativeFree}) {
    OptimizerConfig cfg;
    cfg.method = method;
    const auto r = minimize(p, cfg);
    CHECK_THAT(r.best_energy, WithinAbs(-2.5, 1e-15));
    CHECK(r.converged);
    CHECK(r.n_iterations <= 2);
  }
}

TEST_CASE("minimize reaches the 10-site critical ground energy with HVA") {
  const VqeProblem p(build_tfim(ring10, {-1.0, 1.0}), build_hva(ring10, 10));
  const auto r = minimize(p, quasi_newton());
  CHECK_THAT(r.best_energy, WithinAbs(-12.78491, 1e-2));
  CHECK(r.best_energy >= -12.78491 - 1e-5);
  check_result_invariants(p, r);
}

TEST_CASE("minimize is deterministic for a fixed seed") {
  const auto lat = build_lattice(1, {6});
  const VqeProblem p(build_tfim(lat, {-1.0, 0.8}), build_hva_sb(lat, 2));
  for (auto method : {Method::QuasiNewton, Method::DerivativeFree}) {
    OptimizerConfig c = quasi_newton(3, 42);
    c.method = method;
    const auto a = minimize(p, c);
    const auto b = minimize(p, c);
    CHECK(a.best_params == b.best_params);
    CHECK(a.best_energy == b.best_energy);
    CHECK(a.energy_trace == b.energy_trace);
    CHECK(a.n_iterations == b.n_iterations);
    CHECK(a.n_evaluations == b.n_evaluations);
    CHECK(a.restart_index == b.restart_index);
  }
}

TEST_CASE("restarts with non-finite energy are dropped") {
  const VqeProblem p(PauliSum{PauliString(std::nan(""), {{0, Pauli::Z}})}, toy_circuit(2));
  for (auto method : {Method::QuasiNewton, Method::DerivativeFree}) {
    OptimizerConfig c;
    c.method = method;
    CHECK_THROWS_AS(minimize(p, c), OptimizationError);
  }
  const VqeProblem ok(toy_hamiltonian(), toy_circuit(2));
  CHECK_THROWS_AS(minimize(ok, OptimizerConfig{}, std::vector<double>{0.0, 1.0}), ContractError);
}

TEST_CASE("VQE energies respect the variational bound") {
  std::mt19937_64 rng(9);
  const std::vector<Lattice> lats = {build_lattice(1, {4}), build_lattice(1, {6}), build_lattice(2, {2, 3})};
  for (const auto& lat : lats) {
    for (double h : {0.3, 1.0, 2.5}) {
      const auto ham = build_tfim(lat, {-1.0, h});
      const double e0 = lowest_eigenpairs(ham, lat.n_sites(), 1)[0].value;
      for (auto kind : {AnsatzKind::HEA, AnsatzKind::HVA, AnsatzKind::HVA_SB}) {
        const VqeProblem p(ham, build_ansatz({kind, 2}, lat));
        OptimizerConfig c = default_optimizer(kind);
        c.n_restarts = 2;
        c.seed = rng();
        const auto r = minimize(p, c);
        INFO(to_string(kind) << " " << lat.extents_string() << " h " << h);
        CHECK(r.best_energy >= e0 - 1e-9);
        check_result_invariants(p, r);
      }
    }
  }
}

TEST_CASE("sweep_field") {
  const auto lat = build_lattice(1, {6});
  const AnsatzSpec spec{AnsatzKind::HVA, 6};
  const auto cfg = quasi_newton(3, 5);

  SECTION("single point equals one minimize call") {
    const double grid[1] = {0.7};
    const auto s = sweep_field(lat, spec, grid, cfg);
    REQUIRE(s.size() == 1);
    const auto r = minimize(VqeProblem(build_tfim(lat, {-1.0, 0.7}), build_ansatz(spec, lat)), cfg);
    CHECK(s[0].result.best_energy == r.best_energy);
    CHECK(s[0].result.best_params == r.best_params);
  }

  SECTION("forward and reverse sweeps agree and match the oracle") {
    std::vector<double> grid;
    for (int i = 0; i <= 8; ++i) grid.push_back(0.25 * i);
    std::vector<double> rev(grid.rbegin(), grid.rend());
    const auto fwd = sweep_field(lat, spec, grid, cfg);
    const auto bwd = sweep_field(lat, spec, rev, cfg);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double e0 = lowest_eigenpairs(build_tfim(lat, {-1.0, grid[i]}), 6, 1)[0].value;
      const double ef = fwd[i].result.best_energy;
      const double eb = bwd[grid.size() - 1 - i].result.best_energy;
      INFO("h " << grid[i]);
      CHECK_FALSE(fwd[i].failed);
      CHECK(std::abs(ef - eb) < 1e-2);
      CHECK(std::abs(ef - e0) < 1e-2);
      CHECK(ef >= e0 - 1e-9);
      if (i > 0) CHECK(fwd[i].result.n_evaluations > 0);
    }
  }

  SECTION("cold parallel sweep matches a sequential sweep without warm starts") {
    const double grid[3] = {0.2, 1.0, 1.8};
    SweepOptions seq;
    seq.warm_start = false;
    SweepOptions par;
    par.cold_parallel = true;
    const auto a = sweep_field(lat, spec, grid, cfg, seq);
    const auto b = sweep_field(lat, spec, grid, cfg, par);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a[i].result.best_energy == b[i].result.best_energy);
      CHECK(a[i].result.restart_index != kWarmStartRestart);
    }
  }

  SECTION("failures are flagged per point") {
    const double grid[2] = {0.5, 1.0};
    SweepOptions bad;
    bad.j_z = std::nan("");
    const auto s = sweep_field(lat, spec, grid, cfg, bad);
    REQUIRE(s.size() == 2);
    CHECK(s[0].failed);
    CHECK(s[1].failed);
    CHECK_FALSE(s[0].error.empty());
  }

  SECTION("grid validation") {
    CHECK_THROWS_AS(sweep_field(lat, spec, std::span<const double>{}, cfg), ContractError);
    const double nan_grid[1] = {std::nan("")};
    CHECK_THROWS_AS(sweep_field(lat, spec, nan_grid, cfg), ContractError);
  }
}
