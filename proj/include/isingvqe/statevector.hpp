#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace isingvqe {

using cplx = std::complex<double>;

/// Dense pure state of n qubits. Qubit 0 is the least-significant bit of the
/// amplitude index.
class StateVector {
 public:
  static constexpr int kMaxQubits = 30;

  explicit StateVector(int n_qubits) : n_qubits_(checked_qubits(n_qubits)), amps_(std::size_t{1} << n_qubits_) {
    amps_[0] = 1.0;
  }

  StateVector(int n_qubits, std::vector<cplx> amplitudes)
      : n_qubits_(checked_qubits(n_qubits)), amps_(std::move(amplitudes)) {
    if (amps_.size() != (std::size_t{1} << n_qubits_)) {
      throw ContractError("StateVector: amplitude count must be 2^n_qubits");
    }
  }

  int n_qubits() const noexcept { return n_qubits_; }
  std::size_t dim() const noexcept { return amps_.size(); }

  std::span<cplx> amplitudes() noexcept { return amps_; }
  std::span<const cplx> amplitudes() const noexcept { return amps_; }
  cplx& operator[](std::size_t i) noexcept { return amps_[i]; }
  const cplx& operator[](std::size_t i) const noexcept { return amps_[i]; }

  double norm_squared() const noexcept {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
  }

  void normalize() {
    const double n = std::sqrt(norm_squared());
    if (n == 0.0) throw ContractError("StateVector: cannot normalize the zero vector");
    for (auto& a : amps_) a /= n;
  }

  void check_qubit(int q) const {
    if (q < 0 || q >= n_qubits_) {
      throw DomainError("qubit index " + std::to_string(q) + " out of range for " + std::to_string(n_qubits_) +
                        "-qubit state");
    }
  }

 private:
  static int checked_qubits(int n) {
    if (n < 1 || n > kMaxQubits) {
      throw DomainError("StateVector: n_qubits must be in [1, " + std::to_string(kMaxQubits) + "]");
    }
    return n;
  }

  int n_qubits_;
  std::vector<cplx> amps_;
};

/// |bitstring> on n qubits.
inline StateVector init_basis_state(int n_qubits, std::uint64_t bitstring) {
  StateVector s(n_qubits);
  if (bitstring >= s.dim()) {
    throw DomainError("init_basis_state: bitstring " + std::to_string(bitstring) + " out of range");
  }
  s[0] = 0.0;
  s[bitstring] = 1.0;
  return s;
}

enum class Gate { H, X, Z, RX, RY, RZ, CNOT, RZZ };

constexpr bool is_rotation(Gate g) noexcept {
  return g == Gate::RX || g == Gate::RY || g == Gate::RZ || g == Gate::RZZ;
}
constexpr bool is_two_qubit(Gate g) noexcept { return g == Gate::CNOT || g == Gate::RZZ; }

constexpr std::string_view gate_name(Gate g) noexcept {
  switch (g) {
    case Gate::H: return "H";
    case Gate::X: return "X";
    case Gate::Z: return "Z";
    case Gate::RX: return "RX";
    case Gate::RY: return "RY";
    case Gate::RZ: return "RZ";
    case Gate::CNOT: return "CNOT";
    case Gate::RZZ: return "RZZ";
  }
  return "?";
}

inline std::optional<Gate> gate_from_name(std::string_view s) noexcept {
  for (Gate g : {Gate::H, Gate::X, Gate::Z, Gate::RX, Gate::RY, Gate::RZ, Gate::CNOT, Gate::RZZ}) {
    if (gate_name(g) == s) return g;
  }
  return std::nullopt;
}

/// Gate kind plus the qubits it acts on. For CNOT qubits = {control, target};
/// for RZZ the order is irrelevant; single-qubit gates use qubits[0].
struct GateOp {
  Gate gate;
  std::array<int, 2> qubits{0, -1};

  static GateOp single(Gate g, int q) { return {g, {q, -1}}; }
  static GateOp cnot(int control, int target) { return {Gate::CNOT, {control, target}}; }
  static GateOp rzz(int a, int b) { return {Gate::RZZ, {a, b}}; }

  friend bool operator==(const GateOp&, const GateOp&) = default;
};

namespace kernels {

/// Applies the 2x2 matrix [[m00, m01], [m10, m11]] to qubit q.
inline void apply_1q(std::span<cplx> v, int q, cplx m00, cplx m01, cplx m10, cplx m11) noexcept {
  const std::size_t stride = std::size_t{1} << q;
  const std::size_t n = v.size();
  for (std::size_t base = 0; base < n; base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const cplx a0 = v[i];
      const cplx a1 = v[i + stride];
      v[i] = m00 * a0 + m01 * a1;
      v[i + stride] = m10 * a0 + m11 * a1;
    }
  }
}

inline void apply_diag_1q(std::span<cplx> v, int q, cplx d0, cplx d1) noexcept {
  const std::size_t bit = std::size_t{1} << q;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= (i & bit) ? d1 : d0;
}

inline void apply_x(std::span<cplx> v, int q) noexcept {
  const std::size_t stride = std::size_t{1} << q;
  for (std::size_t base = 0; base < v.size(); base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) std::swap(v[i], v[i + stride]);
  }
}

inline void apply_z(std::span<cplx> v, int q) noexcept {
  const std::size_t bit = std::size_t{1} << q;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i & bit) v[i] = -v[i];
  }
}

inline void apply_cnot(std::span<cplx> v, int control, int target) noexcept {
  const int lo = std::min(control, target);
  const int hi = std::max(control, target);
  const std::size_t cbit = std::size_t{1} << control;
  const std::size_t tbit = std::size_t{1} << target;
  const std::size_t slo = std::size_t{1} << lo;
  const std::size_t shi = std::size_t{1} << hi;
  for (std::size_t a = 0; a < v.size(); a += 2 * shi) {
    for (std::size_t b = a; b < a + shi; b += 2 * slo) {
      for (std::size_t i = b | cbit, end = i + slo; i < end; ++i) std::swap(v[i], v[i | tbit]);
    }
  }
}

/// exp(-i theta/2 Z_a Z_b).
inline void apply_rzz(std::span<cplx> v, int a, int b, double theta) noexcept {
  const cplx same = std::polar(1.0, -theta / 2);
  const cplx diff = std::conj(same);
  const std::size_t mask = (std::size_t{1} << a) | (std::size_t{1} << b);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t m = i & mask;
    v[i] *= (m == 0 || m == mask) ? same : diff;
  }
}

}  // namespace kernels

inline void check_gate_qubits(const StateVector& s, const GateOp& op) {
  s.check_qubit(op.qubits[0]);
  if (is_two_qubit(op.gate)) {
    s.check_qubit(op.qubits[1]);
    if (op.qubits[0] == op.qubits[1]) throw DomainError("two-qubit gate needs distinct qubits");
  }
}

/// Applies one gate in place. Rotations follow RP(theta) = exp(-i theta/2 P).
inline void apply_gate(StateVector& s, const GateOp& op, std::optional<double> angle = std::nullopt) {
  check_gate_qubits(s, op);
  if (is_rotation(op.gate) && !angle) {
    throw ContractError(std::string("apply_gate: rotation ") + std::string(gate_name(op.gate)) + " needs an angle");
  }
  auto v = s.amplitudes();
  const int q = op.qubits[0];
  switch (op.gate) {
    case Gate::H: {
      const double r = 1.0 / std::sqrt(2.0);
      kernels::apply_1q(v, q, r, r, r, -r);
      break;
    }
    case Gate::X: kernels::apply_x(v, q); break;
    case Gate::Z: kernels::apply_z(v, q); break;
    case Gate::RX: {
      const double c = std::cos(*angle / 2), sn = std::sin(*angle / 2);
      kernels::apply_1q(v, q, c, cplx(0, -sn), cplx(0, -sn), c);
      break;
    }
    case Gate::RY: {
      const double c = std::cos(*angle / 2), sn = std::sin(*angle / 2);
      kernels::apply_1q(v, q, c, -sn, sn, c);
      break;
    }
    case Gate::RZ: {
      const cplx d0 = std::polar(1.0, -*angle / 2);
      kernels::apply_diag_1q(v, q, d0, std::conj(d0));
      break;
    }
    case Gate::CNOT: kernels::apply_cnot(v, q, op.qubits[1]); break;
    case Gate::RZZ: kernels::apply_rzz(v, q, op.qubits[1], *angle); break;
  }
}

/// Applies the inverse of a gate (all fixed gates here are self-inverse).
inline void apply_gate_inverse(StateVector& s, const GateOp& op, std::optional<double> angle = std::nullopt) {
  if (is_rotation(op.gate) && angle) {
    apply_gate(s, op, -*angle);
  } else {
    apply_gate(s, op, angle);
  }
}

/// <a|b>.
inline cplx inner_product(const StateVector& a, const StateVector& b) {
  if (a.n_qubits() != b.n_qubits()) throw ContractError("inner_product: qubit counts differ");
  cplx s = 0.0;
  const auto va = a.amplitudes();
  const auto vb = b.amplitudes();
  for (std::size_t i = 0; i < va.size(); ++i) s += std::conj(va[i]) * vb[i];
  return s;
}

}  // namespace isingvqe
