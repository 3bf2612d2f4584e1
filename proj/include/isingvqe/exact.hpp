#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "circuit.hpp"
#include "pauli.hpp"
#include "statevector.hpp"

namespace isingvqe {

struct EigenPair {
  double value = 0.0;
  StateVector vector{1};
};

struct ParityResolvedGround {
  EigenPair even;  // prod X eigenvalue +1
  EigenPair odd;   // prod X eigenvalue -1
  double gap = 0.0;

  /// State in the sector of prod|->, eigenvalue (-1)^N. Holds the ground
  /// state for h_x > 0 and is the sector HVA circuits stay in.
  const EigenPair& symmetric(int n_qubits) const { return n_qubits % 2 ? odd : even; }
};

enum class EigenMethod { Auto, Dense, Lanczos };

inline constexpr int kDenseQubitCap = 14;
inline constexpr int kLanczosQubitCap = 20;
/// Auto switches from the dense to the Lanczos path above this size.
inline constexpr int kAutoDenseLimit = 11;
inline constexpr double kResidualTolerance = 1e-8;

/// True when every term has an even number of Y factors, i.e. the matrix is real.
inline bool is_real_operator(const PauliSum& h) {
  for (const auto& t : h.terms) {
    int ny = 0;
    for (const auto& [q, p] : t.factors) ny += (p == Pauli::Y);
    if (ny % 2) return false;
  }
  return true;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense_matrix(const PauliSum& h, int n_qubits) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(dim, dim);
  for (const auto& t : h.terms) {
    const auto mk = detail::masks_for(t, n_qubits);
    for (std::size_t x = 0; x < dim; ++x) {
      const cplx v = t.coefficient * mk.base_phase * detail::parity_sign(x & mk.sign);
      if constexpr (std::is_same_v<Scalar, double>) {
        m(x ^ mk.flip, x) += v.real();
      } else {
        m(x ^ mk.flip, x) += v;
      }
    }
  }
  return m;
}

inline double residual_norm(const PauliSum& h, const EigenPair& p) {
  const StateVector hv = apply_operator(p.vector, h);
  double r = 0.0;
  for (std::size_t i = 0; i < hv.dim(); ++i) r += std::norm(hv[i] - p.value * p.vector[i]);
  return std::sqrt(r);
}

namespace detail {

inline void check_residuals(const PauliSum& h, const std::vector<EigenPair>& pairs) {
  for (const auto& p : pairs) {
    const double r = residual_norm(h, p);
    if (!(r < kResidualTolerance)) {
      throw DegeneracyError("eigenpair residual " + std::to_string(r) + " above tolerance");
    }
  }
}

/// All eigenpairs, ascending.
inline std::vector<EigenPair> dense_spectrum(const PauliSum& h, int n_qubits, int k) {
  if (n_qubits > kDenseQubitCap) {
    throw CapacityError("dense diagonalization limited to " + std::to_string(kDenseQubitCap) + " qubits");
  }
  const std::size_t dim = std::size_t{1} << n_qubits;
  std::vector<EigenPair> out;
  auto take = [&](const auto& solver) {
    const std::size_t count = std::min<std::size_t>(dim, static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < count; ++j) {
      std::vector<cplx> amps(dim);
      for (std::size_t i = 0; i < dim; ++i) amps[i] = solver.eigenvectors()(i, j);
      out.push_back({solver.eigenvalues()(j), StateVector(n_qubits, std::move(amps))});
    }
  };
  if (is_real_operator(h)) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_matrix<double>(h, n_qubits));
    take(es);
  } else {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense_matrix<cplx>(h, n_qubits));
    take(es);
  }
  return out;
}

/// Lanczos with full reorthogonalization on the matrix-free action of h.
/// `project`, when set, is applied to every Krylov vector (used to stay in a
/// symmetry sector).
template <typename Projector>
std::vector<EigenPair> lanczos(const PauliSum& h, int n_qubits, int k, Projector project, std::uint64_t seed = 12345,
                               int max_krylov = 300, double ritz_tolerance = 1e-10) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  const int m_max = static_cast<int>(std::min<std::size_t>(dim, static_cast<std::size_t>(max_krylov)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  StateVector v(n_qubits, std::vector<cplx>(dim));
  for (std::size_t i = 0; i < dim; ++i) v[i] = normal(rng);
  project(v);
  v.normalize();

  std::vector<StateVector> basis;
  std::vector<double> alpha, beta;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
  for (int j = 0; j < m_max; ++j) {
    basis.push_back(v);
    StateVector w = apply_operator(basis.back(), h);
    const double a = inner_product(basis.back(), w).real();
    alpha.push_back(a);
    // Full reorthogonalization, twice for stability.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        const cplx c = inner_product(b, w);
        for (std::size_t i = 0; i < dim; ++i) w[i] -= c * b[i];
      }
    }
    project(w);
    const double bnorm = std::sqrt(w.norm_squared());

    const int m = j + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    tri.compute(t);
    const int want = std::min(k, m);
    bool done = m >= k;
    for (int i = 0; i < want && done; ++i) {
      done = std::abs(bnorm * tri.eigenvectors()(m - 1, i)) < ritz_tolerance;
    }
    if (done || bnorm < 1e-14 || m == m_max) break;
    beta.push_back(bnorm);
    for (std::size_t i = 0; i < dim; ++i) w[i] /= bnorm;
    v = std::move(w);
  }

  const int m = static_cast<int>(basis.size());
  std::vector<EigenPair> out;
  for (int i = 0; i < std::min(k, m); ++i) {
    StateVector x(n_qubits, std::vector<cplx>(dim));
    for (int j = 0; j < m; ++j) {
      const double c = tri.eigenvectors()(j, i);
      for (std::size_t a = 0; a < dim; ++a) x[a] += c * basis[static_cast<std::size_t>(j)][a];
    }
    x.normalize();
    out.push_back({expectation(x, h), std::move(x)});
  }
  return out;
}

struct NoProjection {
  void operator()(StateVector&) const noexcept {}
};

/// (1 + sign * prod X) / 2 applied in place.
struct ParityProjection {
  int sign;
  void operator()(StateVector& s) const noexcept {
    const std::size_t all = s.dim() - 1;
    for (std::size_t x = 0; x < s.dim(); ++x) {
      const std::size_t y = x ^ all;
      if (y < x) continue;
      const cplx a = s[x], b = s[y];
      s[x] = 0.5 * (a + double(sign) * b);
      s[y] = 0.5 * (b + double(sign) * a);
    }
  }
};

}  // namespace detail

/// k lowest eigenpairs, ascending, each residual-checked.
inline std::vector<EigenPair> lowest_eigenpairs(const PauliSum& h, int n_qubits, int k,
                                                EigenMethod method = EigenMethod::Auto) {
  if (k < 1) throw ContractError("lowest_eigenpairs: k must be >= 1");
  if (h.min_qubits() > n_qubits) throw ContractError("lowest_eigenpairs: operator exceeds qubit count");
  if (method == EigenMethod::Auto) method = n_qubits <= kAutoDenseLimit ? EigenMethod::Dense : EigenMethod::Lanczos;
  std::vector<EigenPair> out;
  if (method == EigenMethod::Dense) {
    out = detail::dense_spectrum(h, n_qubits, k);
  } else {
    if (n_qubits > kLanczosQubitCap) {
      throw CapacityError("Lanczos diagonalization limited to " + std::to_string(kLanczosQubitCap) + " qubits");
    }
    out = detail::lanczos(h, n_qubits, k, detail::NoProjection{});
  }
  detail::check_residuals(h, out);
  return out;
}

inline double parity_expectation(const StateVector& s) {
  return expectation(s, PauliSum{parity_operator(s.n_qubits())});
}

/// Lowest state in each prod-X parity sector. On the dense path, the two
/// lowest eigenvectors are rotated into parity eigenstates when they are
/// degenerate (gap < 1e-10) or visibly mixed (|<P>| < 1 - 1e-6).
inline ParityResolvedGround parity_resolved_ground(const PauliSum& h, int n_qubits,
                                                   EigenMethod method = EigenMethod::Auto) {
  if (method == EigenMethod::Auto) method = n_qubits <= kAutoDenseLimit ? EigenMethod::Dense : EigenMethod::Lanczos;
  ParityResolvedGround out;
  if (method == EigenMethod::Lanczos) {
    if (n_qubits > kLanczosQubitCap) throw CapacityError("parity_resolved_ground: too many qubits");
    auto even = detail::lanczos(h, n_qubits, 1, detail::ParityProjection{+1});
    auto odd = detail::lanczos(h, n_qubits, 1, detail::ParityProjection{-1});
    out.even = std::move(even.at(0));
    out.odd = std::move(odd.at(0));
  } else {
    auto spec = detail::dense_spectrum(h, n_qubits, static_cast<int>(std::size_t{1} << n_qubits));
    if (spec.size() < 2) throw DegeneracyError("parity_resolved_ground: need at least two states");
    std::vector<double> parity(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) parity[i] = parity_expectation(spec[i].vector);
    const bool degenerate = std::abs(spec[1].value - spec[0].value) < 1e-10;
    const bool mixed = std::abs(parity[0]) < 1 - 1e-6 || std::abs(parity[1]) < 1 - 1e-6;
    if (degenerate || mixed) {
      // Diagonalize P in span{v0, v1}.
      const StateVector p0 = apply_operator(spec[0].vector, PauliSum{parity_operator(n_qubits)});
      const StateVector p1 = apply_operator(spec[1].vector, PauliSum{parity_operator(n_qubits)});
      Eigen::Matrix2cd pm;
      pm(0, 0) = inner_product(spec[0].vector, p0);
      pm(0, 1) = inner_product(spec[0].vector, p1);
      pm(1, 0) = inner_product(spec[1].vector, p0);
      pm(1, 1) = inner_product(spec[1].vector, p1);
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(pm);
      std::vector<EigenPair> rotated;
      for (int c = 0; c < 2; ++c) {
        StateVector v(n_qubits, std::vector<cplx>(spec[0].vector.dim()));
        for (std::size_t i = 0; i < v.dim(); ++i) {
          v[i] = es.eigenvectors()(0, c) * spec[0].vector[i] + es.eigenvectors()(1, c) * spec[1].vector[i];
        }
        v.normalize();
        const double e = expectation(v, h);
        rotated.push_back({e, std::move(v)});
      }
      spec[0] = std::move(rotated[0]);
      spec[1] = std::move(rotated[1]);
      parity[0] = parity_expectation(spec[0].vector);
      parity[1] = parity_expectation(spec[1].vector);
    }
    int even_idx = -1, odd_idx = -1;
    for (std::size_t i = 0; i < spec.size() && (even_idx < 0 || odd_idx < 0); ++i) {
      if (parity[i] > 1 - 1e-6 && even_idx < 0) even_idx = static_cast<int>(i);
      if (parity[i] < -1 + 1e-6 && odd_idx < 0) odd_idx = static_cast<int>(i);
    }
    if (even_idx < 0 || odd_idx < 0) throw DegeneracyError("parity_resolved_ground: could not assign parity sectors");
    out.even = std::move(spec[static_cast<std::size_t>(even_idx)]);
    out.odd = std::move(spec[static_cast<std::size_t>(odd_idx)]);
  }
  for (const auto* p : {&out.even, &out.odd}) {
    const double par = parity_expectation(p->vector);
    if (std::abs(std::abs(par) - 1.0) > 1e-8) {
      throw DegeneracyError("parity_resolved_ground: parity expectation " + std::to_string(par) + " is not +-1");
    }
  }
  out.gap = std::abs(out.odd.value - out.even.value);
  return out;
}

/// Two-qubit one-parameter circuits for H = X0 Z1.
/// 1: RY(theta) on q0, CNOT(0,1): cos(t/2)|00> + sin(t/2)|11>, energy 0.
/// 2: RY(theta) on q0:             cos(t/2)|00> + sin(t/2)|q0=1>, energy sin(theta).
inline ParametricCircuit toy_circuit(int ansatz_id) {
  ParametricCircuit c(2, "toy ansatz " + std::to_string(ansatz_id));
  c.add_param(Gate::RY, 0, 0);
  if (ansatz_id == 1) {
    c.add_cnot(0, 1);
  } else if (ansatz_id != 2) {
    throw DomainError("toy_circuit: ansatz id must be 1 or 2");
  }
  return c;
}

inline PauliSum toy_hamiltonian() { return PauliSum{PauliString(1.0, {{0, Pauli::X}, {1, Pauli::Z}})}; }

inline std::vector<double> toy_energy_curve(int ansatz_id, std::span<const double> thetas) {
  const ParametricCircuit c = toy_circuit(ansatz_id);
  const PauliSum h = toy_hamiltonian();
  std::vector<double> out;
  out.reserve(thetas.size());
  for (double t : thetas) {
    const double p[1] = {t};
    out.push_back(expectation(prepare_state(init_basis_state(2, 0), c, p), h));
  }
  return out;
}

}  // namespace isingvqe
