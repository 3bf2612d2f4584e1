#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "circuit.hpp"
#include "lattice.hpp"

namespace isingvqe {

enum class AnsatzKind { HEA, HVA, HVA_SB };

/// CNOT layout of one HEA entangling block.
enum class Entanglement {
  DoubleAllPairs,  ///< two sweeps over every ordered pair (i, j), i != j: 2 N (N-1) CNOTs
  Full,            ///< CNOT(i, j) for every i < j: N (N-1) / 2 CNOTs
  Linear,          ///< CNOT(i, i+1): N - 1 CNOTs
  Circular,        ///< CNOT(N-1, 0) then linear: N CNOTs
};

constexpr std::string_view to_string(AnsatzKind k) noexcept {
  switch (k) {
    case AnsatzKind::HEA: return "HEA";
    case AnsatzKind::HVA: return "HVA";
    case AnsatzKind::HVA_SB: return "HVA_SB";
  }
  return "?";
}

constexpr std::string_view to_string(Entanglement e) noexcept {
  switch (e) {
    case Entanglement::DoubleAllPairs: return "double_all_pairs";
    case Entanglement::Full: return "full";
    case Entanglement::Linear: return "linear";
    case Entanglement::Circular: return "circular";
  }
  return "?";
}

inline AnsatzKind parse_ansatz_kind(std::string_view s) {
  if (s == "HEA" || s == "hea") return AnsatzKind::HEA;
  if (s == "HVA" || s == "hva") return AnsatzKind::HVA;
  if (s == "HVA_SB" || s == "HVA-SB" || s == "hva_sb" || s == "hva-sb") return AnsatzKind::HVA_SB;
  throw DomainError("unknown ansatz kind '" + std::string(s) + "'");
}

inline Entanglement parse_entanglement(std::string_view s) {
  for (auto e : {Entanglement::DoubleAllPairs, Entanglement::Full, Entanglement::Linear, Entanglement::Circular}) {
    if (to_string(e) == s) return e;
  }
  throw DomainError("unknown entanglement pattern '" + std::string(s) + "'");
}

struct AnsatzSpec {
  AnsatzKind kind = AnsatzKind::HVA;
  int n_layers = 1;
  bool real_amplitudes = false;                            // HEA only
  Entanglement entanglement = Entanglement::DoubleAllPairs;  // HEA only
};

struct ResourceEstimate {
  long n_params = 0;
  long n_cnots = 0;
  long depth = 0;
  friend bool operator==(const ResourceEstimate&, const ResourceEstimate&) = default;
};

inline std::vector<std::pair<int, int>> entangling_pairs(int n, Entanglement e) {
  std::vector<std::pair<int, int>> p;
  switch (e) {
    case Entanglement::DoubleAllPairs:
      for (int sweep = 0; sweep < 2; ++sweep) {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            if (i != j) p.emplace_back(i, j);
          }
        }
      }
      break;
    case Entanglement::Full:
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) p.emplace_back(i, j);
      }
      break;
    case Entanglement::Circular:
      if (n > 2) p.emplace_back(n - 1, 0);
      [[fallthrough]];
    case Entanglement::Linear:
      for (int i = 0; i + 1 < n; ++i) p.emplace_back(i, i + 1);
      break;
  }
  return p;
}

/// Hardware-efficient ansatz: a rotation block (RY, plus RZ unless
/// real_amplitudes) on every qubit, then n_layers of (CNOT block, rotation
/// block). Each rotation owns a slot.
inline ParametricCircuit build_hea(int n_qubits, int n_layers, bool real_amplitudes = false,
                                   Entanglement entanglement = Entanglement::DoubleAllPairs) {
  if (n_qubits < 2) throw DomainError("build_hea: need at least 2 qubits");
  if (n_layers < 1) throw DomainError("build_hea: need at least 1 layer");
  ParametricCircuit c(n_qubits, std::string("HEA") + (real_amplitudes ? "-RA" : "") + " layers=" +
                                    std::to_string(n_layers) + " entanglement=" + std::string(to_string(entanglement)));
  int slot = 0;
  auto rotations = [&] {
    for (int q = 0; q < n_qubits; ++q) c.add_param(Gate::RY, q, slot++);
    if (!real_amplitudes) {
      for (int q = 0; q < n_qubits; ++q) c.add_param(Gate::RZ, q, slot++);
    }
  };
  const auto pairs = entangling_pairs(n_qubits, entanglement);
  rotations();
  for (int l = 0; l < n_layers; ++l) {
    for (const auto& [a, b] : pairs) c.add_cnot(a, b);
    rotations();
  }
  return c;
}

namespace detail {

/// Bonds ordered so that each (axis, coordinate parity) class is emitted
/// together; on even extents every class is a perfect matching.
inline std::vector<Bond> scheduled_bonds(const Lattice& lat, bool dedupe) {
  auto b = bonds(lat, dedupe);
  std::stable_sort(b.begin(), b.end(), [&](const Bond& x, const Bond& y) {
    const int px = lat.coordinates(x.site_a)[x.axis] % 2;
    const int py = lat.coordinates(y.site_a)[y.axis] % 2;
    return std::tie(x.axis, px) < std::tie(y.axis, py);
  });
  return b;
}

inline ParametricCircuit build_hva_family(const Lattice& lat, int n_layers, bool symmetry_breaking, bool dedupe) {
  if (n_layers < 1) throw DomainError("build_hva: need at least 1 layer");
  const int n = lat.n_sites();
  ParametricCircuit c(n, std::string(symmetry_breaking ? "HVA_SB" : "HVA") + " layers=" + std::to_string(n_layers) +
                             " lattice=" + lat.extents_string());
  // prod |-> from |0...0>.
  for (int q = 0; q < n; ++q) {
    const int blk = c.new_block();
    c.add_fixed(Gate::H, q, blk);
    c.add_fixed(Gate::Z, q, blk);
  }
  const auto bl = scheduled_bonds(lat, dedupe);
  const int stride = symmetry_breaking ? 3 : 2;
  for (int l = 0; l < n_layers; ++l) {
    const int zz = stride * l;
    for (const auto& b : bl) {
      const int blk = c.new_block();
      c.add_cnot(b.site_a, b.site_b, blk);
      c.add_param(Gate::RZ, b.site_b, zz, 1.0, blk);
      c.add_cnot(b.site_a, b.site_b, blk);
    }
    for (int q = 0; q < n; ++q) c.add_param(Gate::RX, q, zz + 1);
    if (symmetry_breaking) {
      for (int q = 0; q < n; ++q) c.add_param(Gate::RZ, q, zz + 2);
    }
  }
  return c;
}

}  // namespace detail

/// Hamiltonian variational ansatz: prepare prod|->, then per layer a shared
/// ZZ rotation on every bond (as CNOT-RZ-CNOT, slot 2l) and a shared RX on
/// every site (slot 2l+1).
inline ParametricCircuit build_hva(const Lattice& lat, int n_layers, bool dedupe = false) {
  return detail::build_hva_family(lat, n_layers, false, dedupe);
}

/// HVA plus a shared symmetry-breaking RZ on every site per layer. Slots per
/// layer: ZZ 3l, RX 3l+1, RZ 3l+2.
inline ParametricCircuit build_hva_sb(const Lattice& lat, int n_layers, bool dedupe = false) {
  return detail::build_hva_family(lat, n_layers, true, dedupe);
}

inline ParametricCircuit build_ansatz(const AnsatzSpec& spec, const Lattice& lat, bool dedupe = false) {
  switch (spec.kind) {
    case AnsatzKind::HEA: return build_hea(lat.n_sites(), spec.n_layers, spec.real_amplitudes, spec.entanglement);
    case AnsatzKind::HVA: return build_hva(lat, spec.n_layers, dedupe);
    case AnsatzKind::HVA_SB: return build_hva_sb(lat, spec.n_layers, dedupe);
  }
  throw DomainError("build_ansatz: unknown kind");
}

/// Closed-form parameter, CNOT and depth counts of the three ansatz families.
inline ResourceEstimate resource_estimate(const AnsatzSpec& spec, int n_qubits, int lattice_dim) {
  const long nl = spec.n_layers;
  const long nq = n_qubits;
  const long d = lattice_dim;
  switch (spec.kind) {
    case AnsatzKind::HEA: return {2 * (nl + 1) * nq, 2 * nl * nq * (nq - 1), nl * (nq + 1) + 2};
    case AnsatzKind::HVA: return {2 * nl, 2 * d * nl * nq, (2 * d + 1) * nl + 1};
    case AnsatzKind::HVA_SB: return {3 * nl, 2 * d * nl * nq, 2 * (d + 1) * nl + 1};
  }
  return {};
}

/// Counts distinct slots, CNOTs and the longest dependency chain. A run of
/// consecutive ops sharing a block id is one unit of depth.
inline ResourceEstimate count_resources(const ParametricCircuit& c) {
  ResourceEstimate r;
  std::set<int> slots;
  std::vector<long> level(static_cast<std::size_t>(c.n_qubits()), 0);
  const auto& ops = c.ops();
  for (std::size_t i = 0; i < ops.size();) {
    std::size_t j = i + 1;
    if (ops[i].block >= 0) {
      while (j < ops.size() && ops[j].block == ops[i].block) ++j;
    }
    std::set<int> qubits;
    for (std::size_t k = i; k < j; ++k) {
      const auto& o = ops[k];
      if (o.binding.slot) slots.insert(*o.binding.slot);
      if (o.op.gate == Gate::CNOT) ++r.n_cnots;
      qubits.insert(o.op.qubits[0]);
      if (is_two_qubit(o.op.gate)) qubits.insert(o.op.qubits[1]);
    }
    long start = 0;
    for (int q : qubits) start = std::max(start, level[q]);
    for (int q : qubits) level[q] = start + 1;
    r.depth = std::max(r.depth, start + 1);
    i = j;
  }
  r.n_params = static_cast<long>(slots.size());
  return r;
}

}  // namespace isingvqe
