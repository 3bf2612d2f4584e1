#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ansatz.hpp"
#include "circuit.hpp"
#include "lattice.hpp"
#include "optimize.hpp"
#include "pauli.hpp"

namespace isingvqe {

/// Energy functional: Hamiltonian, circuit, and the basis state the circuit
/// starts from.
class VqeProblem {
 public:
  VqeProblem(PauliSum hamiltonian, ParametricCircuit circuit, std::uint64_t initial_bitstring = 0)
      : hamiltonian_(std::move(hamiltonian)), circuit_(std::move(circuit)), initial_bitstring_(initial_bitstring) {
    if (hamiltonian_.min_qubits() > circuit_.n_qubits()) {
      throw ContractError("VqeProblem: Hamiltonian acts on more qubits than the circuit");
    }
    (void)init_basis_state(circuit_.n_qubits(), initial_bitstring_);
  }

  const PauliSum& hamiltonian() const noexcept { return hamiltonian_; }
  const ParametricCircuit& circuit() const noexcept { return circuit_; }
  int n_qubits() const noexcept { return circuit_.n_qubits(); }
  int n_params() const noexcept { return circuit_.n_params(); }
  StateVector initial_state() const { return init_basis_state(circuit_.n_qubits(), initial_bitstring_); }

  StateVector prepare(std::span<const double> params) const {
    return prepare_state(initial_state(), circuit_, params);
  }

 private:
  PauliSum hamiltonian_;
  ParametricCircuit circuit_;
  std::uint64_t initial_bitstring_;
};

inline double evaluate_energy(const VqeProblem& p, std::span<const double> params) {
  return expectation(p.prepare(params), p.hamiltonian());
}

enum class Method { QuasiNewton, DerivativeFree };

constexpr std::string_view to_string(Method m) noexcept {
  return m == Method::QuasiNewton ? "quasi_newton" : "derivative_free";
}

inline Method parse_method(std::string_view s) {
  if (s == "quasi_newton" || s == "lbfgs" || s == "L-BFGS") return Method::QuasiNewton;
  if (s == "derivative_free" || s == "nelder_mead" || s == "cobyla" || s == "COBYLA") return Method::DerivativeFree;
  throw DomainError("unknown optimizer method '" + std::string(s) + "'");
}

struct OptimizerConfig {
  Method method = Method::DerivativeFree;
  int max_iterations = 5000;
  double gradient_tolerance = 1e-8;
  double simplex_tolerance = 1e-8;
  double simplex_step = 0.25;
  int history_size = 10;
  int n_restarts = 5;
  double init_scale = 0.1;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(gradient_tolerance > 0) || !(simplex_tolerance > 0)) throw ContractError("OptimizerConfig: tolerances must be > 0");
    if (max_iterations < 1) throw ContractError("OptimizerConfig: max_iterations must be >= 1");
    if (n_restarts < 1) throw ContractError("OptimizerConfig: n_restarts must be >= 1");
    if (history_size < 1) throw ContractError("OptimizerConfig: history_size must be >= 1");
    if (!(init_scale >= 0) || !(simplex_step > 0)) throw ContractError("OptimizerConfig: bad init_scale/simplex_step");
  }
};

/// Method pairing and initialisation scale per ansatz family: HEA uses the
/// quasi-Newton path from angles in [-pi, pi]; HVA kinds use the
/// derivative-free path from angles in [-0.1, 0.1].
inline OptimizerConfig default_optimizer(AnsatzKind kind) {
  OptimizerConfig c;
  if (kind == AnsatzKind::HEA) {
    c.method = Method::QuasiNewton;
    c.init_scale = M_PI;
  } else {
    c.method = Method::DerivativeFree;
    c.init_scale = 0.1;
  }
  return c;
}

inline constexpr int kWarmStartRestart = -1;

struct OptResult {
  std::vector<double> best_params;
  double best_energy = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> energy_trace;
  int n_iterations = 0;
  int n_evaluations = 0;  // summed over all restarts
  bool converged = false;
  int restart_index = 0;  // kWarmStartRestart for the warm-start candidate
  int failed_restarts = 0;
};

/// Initial angles for restart `restart`: uniform in [-scale, scale] from a
/// stream keyed by (seed, restart).
inline std::vector<double> random_initial_params(int n, double scale, std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::mt19937_64 rng(seq);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v = scale * (2.0 * u - 1.0);
  }
  return x;
}

namespace detail {

struct NonFiniteEnergy {};

inline optim::Outcome run_single(const VqeProblem& p, const OptimizerConfig& cfg, std::vector<double> x0) {
  const StateVector init = p.initial_state();
  if (cfg.method == Method::QuasiNewton) {
    optim::LbfgsOptions o;
    o.max_iterations = cfg.max_iterations;
    o.gradient_tolerance = cfg.gradient_tolerance;
    o.history_size = cfg.history_size;
    auto f = [&](std::span<const double> x, std::span<double> g) {
      const double e = energy_and_gradient(init, p.circuit(), x, p.hamiltonian(), g);
      if (!std::isfinite(e)) throw NonFiniteEnergy{};
      return e;
    };
    return optim::lbfgs(f, std::move(x0), o);
  }
  optim::NelderMeadOptions o;
  o.max_iterations = cfg.max_iterations;
  o.tolerance = cfg.simplex_tolerance;
  o.initial_step = cfg.simplex_step;
  auto f = [&](std::span<const double> x) {
    const double e = expectation(prepare_state(init, p.circuit(), x), p.hamiltonian());
    if (!std::isfinite(e)) throw NonFiniteEnergy{};
    return e;
  };
  return optim::nelder_mead(f, std::move(x0), o);
}

}  // namespace detail

/// Runs config.n_restarts seeded optimizations (plus one from `warm_start`
/// when given) and returns the lowest-energy one. A restart that meets a
/// non-finite energy is dropped; if all are dropped, throws
/// OptimizationError.
inline OptResult minimize(const VqeProblem& p, const OptimizerConfig& cfg,
                          std::optional<std::vector<double>> warm_start = std::nullopt) {
  cfg.validate();
  if (warm_start && static_cast<int>(warm_start->size()) != p.n_params()) {
    throw ContractError("minimize: warm start has the wrong length");
  }
  OptResult best;
  int total_evals = 0;
  int failed = 0;
  bool have = false;
  auto consider = [&](int index, std::vector<double> x0) {
    try {
      auto o = detail::run_single(p, cfg, std::move(x0));
      total_evals += o.n_evaluations;
      if (!std::isfinite(o.value)) {
        ++failed;
        return;
      }
      if (!have || o.value < best.best_energy) {
        have = true;
        best.best_params = std::move(o.x);
        best.best_energy = o.value;
        best.energy_trace = std::move(o.trace);
        best.n_iterations = o.n_iterations;
        best.converged = o.converged;
        best.restart_index = index;
      }
    } catch (const detail::NonFiniteEnergy&) {
      ++failed;
    }
  };
  if (warm_start) consider(kWarmStartRestart, *warm_start);
  for (int r = 0; r < cfg.n_restarts; ++r) consider(r, random_initial_params(p.n_params(), cfg.init_scale, cfg.seed, r));
  if (!have) throw OptimizationError("minimize: every restart produced a non-finite energy");
  best.n_evaluations = total_evals;
  best.failed_restarts = failed;
  return best;
}

struct SweepOptions {
  double j_z = -1.0;
  bool dedupe = false;
  bool warm_start = true;
  /// Drop warm starts and optimize the grid points concurrently.
  bool cold_parallel = false;
};

struct SweepPoint {
  double h_x = 0.0;
  OptResult result;
  bool failed = false;
  std::string error;
  double wall_time_s = 0.0;
};

/// Per-point seed so that every grid point draws its own restart streams.
inline std::uint64_t point_seed(std::uint64_t seed, std::size_t point) { return seed + 0x9E3779B97F4A7C15ull * point; }

inline void check_field_grid(std::span<const double> grid) {
  if (grid.empty()) throw ContractError("sweep_field: empty field grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw ContractError("sweep_field: non-finite field value");
  }
}

/// Optimizes the ansatz at each field value in order. With warm starts, each
/// point after the first also starts from the previous point's optimum.
/// Failures are recorded per point and do not stop the sweep.
inline std::vector<SweepPoint> sweep_field(const Lattice& lat, const AnsatzSpec& spec, std::span<const double> grid,
                                           const OptimizerConfig& cfg, const SweepOptions& opts = {}) {
  check_field_grid(grid);
  cfg.validate();
  const ParametricCircuit circuit = build_ansatz(spec, lat, opts.dedupe);
  auto solve = [&](std::size_t i, std::optional<std::vector<double>> warm) {
    SweepPoint pt;
    pt.h_x = grid[i];
    const auto start = std::chrono::steady_clock::now();
    try {
      VqeProblem problem(build_tfim(lat, {opts.j_z, grid[i]}, opts.dedupe), circuit);
      OptimizerConfig c = cfg;
      c.seed = point_seed(cfg.seed, i);
      pt.result = minimize(problem, c, std::move(warm));
    } catch (const std::exception& e) {
      pt.failed = true;
      pt.error = e.what();
    }
    pt.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return pt;
  };

  std::vector<SweepPoint> out;
  out.reserve(grid.size());
  if (opts.cold_parallel) {
    std::vector<std::future<SweepPoint>> jobs;
    for (std::size_t i = 0; i < grid.size(); ++i) jobs.push_back(std::async(std::launch::async, solve, i, std::nullopt));
    for (auto& j : jobs) out.push_back(j.get());
    return out;
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::optional<std::vector<double>> warm;
    if (opts.warm_start && !out.empty() && !out.back().failed) warm = out.back().result.best_params;
    out.push_back(solve(i, std::move(warm)));
  }
  return out;
}

}  // namespace isingvqe
