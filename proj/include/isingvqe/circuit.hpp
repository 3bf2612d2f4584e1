#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pauli.hpp"
#include "statevector.hpp"

namespace isingvqe {

/// Angle source for a gate: a fixed value, or multiplier * params[slot].
struct Binding {
  std::optional<int> slot;
  double value = 0.0;  // fixed angle, or multiplier when slot is set

  static Binding none() { return {}; }
  static Binding fixed(double angle) { return {std::nullopt, angle}; }
  static Binding param(int slot, double multiplier = 1.0) { return {slot, multiplier}; }

  double resolve(std::span<const double> params) const { return slot ? value * params[*slot] : value; }
  friend bool operator==(const Binding&, const Binding&) = default;
};

struct Operation {
  GateOp op;
  Binding binding;
  /// Ops with the same non-negative block id form one scheduling unit (e.g. a
  /// CNOT-RZ-CNOT realisation of a ZZ rotation). -1 means standalone.
  int block = -1;
  friend bool operator==(const Operation&, const Operation&) = default;
};

/// Ordered gate list over n qubits with parameter-slot bindings. The
/// parameter vector itself is never stored here.
class ParametricCircuit {
 public:
  explicit ParametricCircuit(int n_qubits, std::string label = {}) : n_qubits_(n_qubits), label_(std::move(label)) {
    if (n_qubits < 1) throw DomainError("ParametricCircuit: n_qubits must be >= 1");
  }

  int n_qubits() const noexcept { return n_qubits_; }
  const std::string& label() const noexcept { return label_; }
  const std::vector<Operation>& ops() const noexcept { return ops_; }
  bool empty() const noexcept { return ops_.empty(); }

  /// 1 + largest slot referenced (0 when no gate is parametric).
  int n_params() const noexcept { return n_params_; }

  int new_block() noexcept { return next_block_++; }

  void add(const GateOp& op, Binding binding = Binding::none(), int block = -1) {
    validate(op, binding);
    if (binding.slot) n_params_ = std::max(n_params_, *binding.slot + 1);
    if (block >= next_block_) next_block_ = block + 1;
    ops_.push_back({op, binding, block});
  }
  void add_fixed(Gate g, int q, int block = -1) { add(GateOp::single(g, q), Binding::none(), block); }
  void add_param(Gate g, int q, int slot, double multiplier = 1.0, int block = -1) {
    add(GateOp::single(g, q), Binding::param(slot, multiplier), block);
  }
  void add_cnot(int control, int target, int block = -1) { add(GateOp::cnot(control, target), Binding::none(), block); }

  friend bool operator==(const ParametricCircuit& a, const ParametricCircuit& b) {
    return a.n_qubits_ == b.n_qubits_ && a.ops_ == b.ops_;
  }

 private:
  void validate(const GateOp& op, const Binding& b) const {
    auto check = [&](int q) {
      if (q < 0 || q >= n_qubits_) throw DomainError("ParametricCircuit: qubit " + std::to_string(q) + " out of range");
    };
    check(op.qubits[0]);
    if (is_two_qubit(op.gate)) {
      check(op.qubits[1]);
      if (op.qubits[0] == op.qubits[1]) throw DomainError("ParametricCircuit: two-qubit gate on one qubit");
    }
    if (!is_rotation(op.gate) && (b.slot || b.value != 0.0)) {
      throw ContractError("ParametricCircuit: angle bound to a non-rotation gate");
    }
    if (b.slot && *b.slot < 0) throw ContractError("ParametricCircuit: negative slot");
    if (!std::isfinite(b.value)) throw ContractError("ParametricCircuit: non-finite angle or multiplier");
  }

  int n_qubits_;
  std::string label_;
  std::vector<Operation> ops_;
  int n_params_ = 0;
  int next_block_ = 0;
};

inline void check_param_count(const ParametricCircuit& c, std::span<const double> params) {
  if (static_cast<int>(params.size()) != c.n_params()) {
    throw ContractError("parameter vector has length " + std::to_string(params.size()) + ", circuit expects " +
                        std::to_string(c.n_params()));
  }
}

/// Applies the bound circuit to `state` in place.
inline void apply_circuit(StateVector& state, const ParametricCircuit& c, std::span<const double> params) {
  check_param_count(c, params);
  if (state.n_qubits() != c.n_qubits()) throw ContractError("apply_circuit: qubit count mismatch");
  for (const auto& o : c.ops()) {
    apply_gate(state, o.op, is_rotation(o.op.gate) ? std::optional<double>(o.binding.resolve(params)) : std::nullopt);
  }
}

inline StateVector prepare_state(const StateVector& initial, const ParametricCircuit& c,
                                 std::span<const double> params) {
  StateVector s = initial;
  apply_circuit(s, c, params);
  return s;
}

/// Pauli generator P of a rotation gate RP(theta) = exp(-i theta/2 P).
inline PauliString rotation_generator(const GateOp& op) {
  const int q = op.qubits[0];
  switch (op.gate) {
    case Gate::RX: return PauliString(1.0, {{q, Pauli::X}});
    case Gate::RY: return PauliString(1.0, {{q, Pauli::Y}});
    case Gate::RZ: return PauliString(1.0, {{q, Pauli::Z}});
    case Gate::RZZ: return PauliString(1.0, {{q, Pauli::Z}, {op.qubits[1], Pauli::Z}});
    default: throw ContractError("rotation_generator: gate has no generator");
  }
}

namespace detail {

/// <bra| P |ket> for a coefficient-free Pauli string.
inline cplx pauli_matrix_element(std::span<const cplx> bra, std::span<const cplx> ket, const PauliMasks& m) noexcept {
  cplx acc = 0.0;
  for (std::size_t x = 0; x < ket.size(); ++x) acc += std::conj(bra[x ^ m.flip]) * ket[x] * parity_sign(x & m.sign);
  return acc * m.base_phase;
}

}  // namespace detail

/// Exact gradient of <op> with respect to every parameter slot, by the
/// adjoint method: one forward pass, then one reverse sweep that un-applies
/// each gate from both the state and the co-state lambda = op|psi>.
/// Returns <op> and writes the gradient into `grad`.
inline double energy_and_gradient(const StateVector& initial, const ParametricCircuit& c,
                                  std::span<const double> params, const PauliSum& op, std::span<double> grad) {
  check_param_count(c, params);
  if (grad.size() != params.size()) throw ContractError("energy_and_gradient: gradient buffer size mismatch");
  StateVector psi = prepare_state(initial, c, params);
  StateVector lambda = apply_operator(psi, op);
  const double energy = inner_product(psi, lambda).real();
  std::fill(grad.begin(), grad.end(), 0.0);
  const auto& ops = c.ops();
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    const bool rot = is_rotation(it->op.gate);
    const std::optional<double> angle = rot ? std::optional<double>(it->binding.resolve(params)) : std::nullopt;
    if (rot && it->binding.slot) {
      const auto m = detail::masks_for(rotation_generator(it->op), psi.n_qubits());
      const cplx z = detail::pauli_matrix_element(lambda.amplitudes(), psi.amplitudes(), m);
      grad[*it->binding.slot] += it->binding.value * z.imag();
    }
    apply_gate_inverse(psi, it->op, angle);
    apply_gate_inverse(lambda, it->op, angle);
  }
  return energy;
}

inline std::vector<double> circuit_gradient(const StateVector& initial, const ParametricCircuit& c,
                                            std::span<const double> params, const PauliSum& op) {
  std::vector<double> grad(params.size(), 0.0);
  energy_and_gradient(initial, c, params, op, grad);
  return grad;
}

/// Parameter-shift gradient, one +/- pi/2 shift pair per parametric gate.
/// Costs 2 * (number of parametric gates) circuit executions.
inline std::vector<double> parameter_shift_gradient(const StateVector& initial, const ParametricCircuit& c,
                                                    std::span<const double> params, const PauliSum& op) {
  check_param_count(c, params);
  std::vector<double> grad(params.size(), 0.0);
  const auto& ops = c.ops();
  auto shifted_energy = [&](std::size_t k, double shift) {
    StateVector s = initial;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const auto& o = ops[i];
      if (!is_rotation(o.op.gate)) {
        apply_gate(s, o.op);
        continue;
      }
      apply_gate(s, o.op, o.binding.resolve(params) + (i == k ? shift : 0.0));
    }
    return expectation(s, op);
  };
  for (std::size_t k = 0; k < ops.size(); ++k) {
    const auto& o = ops[k];
    if (!is_rotation(o.op.gate) || !o.binding.slot) continue;
    const double d = 0.5 * (shifted_energy(k, M_PI / 2) - shifted_energy(k, -M_PI / 2));
    grad[*o.binding.slot] += o.binding.value * d;
  }
  return grad;
}

// Text form, one gate per line:
//   qubits <n>
//   <GATE> <qubit> [<qubit>] [p<slot>[*<multiplier>] | <angle>] [b<block>]
// '#' starts a comment line.

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline void write_circuit(std::ostream& os, const ParametricCircuit& c) {
  if (!c.label().empty()) os << "# " << c.label() << '\n';
  os << "qubits " << c.n_qubits() << '\n';
  for (const auto& o : c.ops()) {
    os << gate_name(o.op.gate) << ' ' << o.op.qubits[0];
    if (is_two_qubit(o.op.gate)) os << ' ' << o.op.qubits[1];
    if (o.binding.slot) {
      os << " p" << *o.binding.slot;
      if (o.binding.value != 1.0) os << '*' << format_double(o.binding.value);
    } else if (is_rotation(o.op.gate)) {
      os << ' ' << format_double(o.binding.value);
    }
    if (o.block >= 0) os << " b" << o.block;
    os << '\n';
  }
}

inline std::string to_text(const ParametricCircuit& c) {
  std::ostringstream os;
  write_circuit(os, c);
  return os.str();
}

inline ParametricCircuit read_circuit(std::istream& is) {
  std::string line;
  std::string label;
  std::optional<ParametricCircuit> circuit;
  int line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    throw DomainError("circuit text line " + std::to_string(line_no) + ": " + what);
  };
  auto to_double = [&](std::string_view sv) {
    double v = 0.0;
    const auto r = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (r.ec != std::errc() || r.ptr != sv.data() + sv.size()) fail("bad number '" + std::string(sv) + "'");
    return v;
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!circuit && label.empty()) label = line.size() > 2 ? line.substr(2) : "";
      continue;
    }
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "qubits") {
      int n = 0;
      ls >> n;
      circuit.emplace(n, label);
      continue;
    }
    if (!circuit) fail("gate before 'qubits' header");
    const auto gate = gate_from_name(head);
    if (!gate) fail("unknown gate '" + head + "'");
    GateOp op{*gate, {0, -1}};
    if (!(ls >> op.qubits[0])) fail("missing qubit");
    if (is_two_qubit(*gate) && !(ls >> op.qubits[1])) fail("missing second qubit");
    Binding b;
    bool has_angle = false;
    int block = -1;
    std::string tok;
    while (ls >> tok) {
      if (tok[0] == 'p') {
        const auto star = tok.find('*');
        const std::string slot_str = tok.substr(1, star == std::string::npos ? std::string::npos : star - 1);
        b.slot = static_cast<int>(to_double(slot_str));
        b.value = star == std::string::npos ? 1.0 : to_double(std::string_view(tok).substr(star + 1));
        has_angle = true;
      } else if (tok[0] == 'b') {
        block = static_cast<int>(to_double(std::string_view(tok).substr(1)));
      } else {
        b.value = to_double(tok);
        has_angle = true;
      }
    }
    if (is_rotation(*gate) && !has_angle) fail("rotation without angle");
    circuit->add(op, b, block);
  }
  if (!circuit) throw DomainError("circuit text: missing 'qubits' header");
  return *circuit;
}

}  // namespace isingvqe
