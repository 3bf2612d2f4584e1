#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "statevector.hpp"

namespace isingvqe {

enum class Pauli : char { X = 'X', Y = 'Y', Z = 'Z' };

/// coefficient * (tensor product of single-qubit Paulis). An empty factor map
/// is coefficient * identity.
struct PauliString {
  double coefficient = 1.0;
  std::map<int, Pauli> factors;

  PauliString() = default;
  PauliString(double c, std::initializer_list<std::pair<const int, Pauli>> f) : coefficient(c), factors(f) {}
  PauliString(double c, std::map<int, Pauli> f) : coefficient(c), factors(std::move(f)) {}

  /// Smallest qubit count this string fits on.
  int min_qubits() const noexcept { return factors.empty() ? 0 : factors.rbegin()->first + 1; }

  std::string to_string() const {
    std::ostringstream os;
    os << coefficient;
    if (factors.empty()) os << " I";
    for (const auto& [q, p] : factors) os << ' ' << static_cast<char>(p) << q;
    return os.str();
  }
};

/// Hermitian operator sum_i c_i h_i with real c_i.
struct PauliSum {
  std::vector<PauliString> terms;

  PauliSum() = default;
  PauliSum(std::initializer_list<PauliString> t) : terms(t) {}

  void add(PauliString s) { terms.push_back(std::move(s)); }
  int min_qubits() const noexcept {
    int n = 0;
    for (const auto& t : terms) n = std::max(n, t.min_qubits());
    return n;
  }
};

namespace detail {

/// Bit-mask form of a Pauli string: P|x> = phase(x) |x ^ flip>, with
/// phase(x) = i^{n_y} (-1)^{popcount(x & sign)}. Uses Y = i X Z.
struct PauliMasks {
  std::uint64_t flip = 0;
  std::uint64_t sign = 0;
  cplx base_phase = 1.0;
};

inline PauliMasks masks_for(const PauliString& p, int n_qubits) {
  PauliMasks m;
  int n_y = 0;
  for (const auto& [q, op] : p.factors) {
    if (q < 0 || q >= n_qubits) {
      throw DomainError("Pauli factor on qubit " + std::to_string(q) + " out of range for " +
                        std::to_string(n_qubits) + "-qubit state");
    }
    const std::uint64_t bit = std::uint64_t{1} << q;
    switch (op) {
      case Pauli::X: m.flip |= bit; break;
      case Pauli::Z: m.sign |= bit; break;
      case Pauli::Y:
        m.flip |= bit;
        m.sign |= bit;
        ++n_y;
        break;
    }
  }
  static constexpr cplx kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  m.base_phase = kIPow[n_y % 4];
  return m;
}

inline double parity_sign(std::uint64_t x) noexcept { return (__builtin_popcountll(x) & 1) ? -1.0 : 1.0; }

/// <psi| P |psi> for a single coefficient-free string.
inline cplx string_expectation(std::span<const cplx> v, const PauliMasks& m) noexcept {
  cplx acc = 0.0;
  for (std::size_t x = 0; x < v.size(); ++x) {
    acc += std::conj(v[x ^ m.flip]) * v[x] * parity_sign(x & m.sign);
  }
  return acc * m.base_phase;
}

/// out += c P |psi>.
inline void accumulate_string(std::span<const cplx> v, const PauliMasks& m, double c, std::span<cplx> out) noexcept {
  const cplx f = c * m.base_phase;
  for (std::size_t x = 0; x < v.size(); ++x) out[x ^ m.flip] += f * parity_sign(x & m.sign) * v[x];
}

}  // namespace detail

/// Imaginary residue tolerated when summing a Hermitian expectation.
inline constexpr double kImagResidueTolerance = 1e-10;

/// <psi|op|psi>. The imaginary part of the complex accumulation is checked
/// against kImagResidueTolerance and then discarded.
inline double expectation(const StateVector& s, const PauliSum& op) {
  cplx acc = 0.0;
  for (const auto& t : op.terms) {
    const auto m = detail::masks_for(t, s.n_qubits());
    acc += t.coefficient * detail::string_expectation(s.amplitudes(), m);
  }
  if (std::abs(acc.imag()) >= kImagResidueTolerance) {
    throw ContractError("expectation: imaginary residue " + std::to_string(acc.imag()) + " exceeds tolerance");
  }
  return acc.real();
}

/// op|psi>, not normalized.
inline StateVector apply_operator(const StateVector& s, const PauliSum& op) {
  StateVector out(s.n_qubits(), std::vector<cplx>(s.dim(), cplx{0.0, 0.0}));
  for (const auto& t : op.terms) {
    const auto m = detail::masks_for(t, s.n_qubits());
    detail::accumulate_string(s.amplitudes(), m, t.coefficient, out.amplitudes());
  }
  return out;
}

/// Applies a single coefficient-free Pauli string in place.
inline void apply_pauli_in_place(StateVector& s, const PauliString& p) {
  const auto m = detail::masks_for(p, s.n_qubits());
  auto v = s.amplitudes();
  if (m.flip == 0) {
    for (std::size_t x = 0; x < v.size(); ++x) v[x] *= m.base_phase * detail::parity_sign(x & m.sign);
    return;
  }
  for (std::size_t x = 0; x < v.size(); ++x) {
    const std::size_t y = x ^ m.flip;
    if (y < x) continue;
    const cplx ax = v[x] * m.base_phase * detail::parity_sign(x & m.sign);
    const cplx ay = v[y] * m.base_phase * detail::parity_sign(y & m.sign);
    v[y] = ax;
    v[x] = ay;
  }
}

/// Sum of sigma^z_i over all qubits.
inline PauliSum total_z(int n_qubits) {
  PauliSum s;
  for (int q = 0; q < n_qubits; ++q) s.add(PauliString(1.0, {{q, Pauli::Z}}));
  return s;
}

/// Global spin flip prod_i sigma^x_i.
inline PauliString parity_operator(int n_qubits) {
  PauliString p;
  for (int q = 0; q < n_qubits; ++q) p.factors.emplace(q, Pauli::X);
  return p;
}

}  // namespace isingvqe
