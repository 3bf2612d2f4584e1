#pragma once

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "bipartite.hpp"
#include "circuit.hpp"
#include "pauli.hpp"
#include "statevector.hpp"

namespace isingvqe {

inline constexpr double kDefaultVarianceFloor = 1e-9;

/// Relative energy variance (<H^2> - <H>^2) / <H>^2 with <H^2> = ||H psi||^2.
/// Undefined when |<H>| is below `floor`.
inline double energy_variance(const StateVector& s, const PauliSum& h, double floor = kDefaultVarianceFloor) {
  const StateVector hs = apply_operator(s, h);
  const double mean = inner_product(s, hs).real();
  if (std::abs(mean) < floor) throw UndefinedVarianceError("energy_variance: |<H>| below floor");
  const double second = hs.norm_squared();
  return std::max(0.0, second - mean * mean) / (mean * mean);
}

struct Magnetization {
  double m = 0.0;
  double m_abs = 0.0;
};

inline Magnetization magnetization(const StateVector& s) {
  const double m = expectation(s, total_z(s.n_qubits())) / s.n_qubits();
  return {m, std::abs(m)};
}

/// (2/N) sum_{i < N/2} <Z_i Z_{i+N/2}> over linearized site order.
inline double spin_correlation(const StateVector& s, int n_sites) {
  if (n_sites % 2) throw ContractError("spin_correlation: defined for even N only");
  if (n_sites > s.n_qubits() || n_sites < 2) throw ContractError("spin_correlation: bad site count");
  const int half = n_sites / 2;
  PauliSum c;
  for (int i = 0; i < half; ++i) c.add(PauliString(1.0 / half, {{i, Pauli::Z}, {i + half, Pauli::Z}}));
  return expectation(s, c);
}

enum class EntropyMethod { PartialTrace, Schmidt };

/// Von Neumann entanglement entropy of partition A, in bits.
inline double entanglement_entropy(const StateVector& s, std::span<const int> partition_a,
                                   EntropyMethod method = EntropyMethod::Schmidt,
                                   int density_cap = kDefaultReducedDensityCap) {
  if (partition_a.empty() || static_cast<int>(partition_a.size()) >= s.n_qubits()) {
    throw ContractError("entanglement_entropy: partition must be a proper non-empty subset");
  }
  if (method == EntropyMethod::PartialTrace) {
    const auto ev = density_eigenvalues(reduced_density(s, partition_a, density_cap));
    return shannon_bits(ev);
  }
  auto sp = schmidt_spectrum(s, partition_a).coefficients;
  for (auto& a : sp) a *= a;
  return shannon_bits(sp);
}

/// Entropy of qubit `site` alone.
inline double single_site_entropy(const StateVector& s, int site = 0) {
  const int a[1] = {site};
  return entanglement_entropy(s, a, EntropyMethod::PartialTrace);
}

/// Entropy of the first floor(N/2) sites in linearized order.
inline double half_system_entropy(const StateVector& s) {
  std::vector<int> a(static_cast<std::size_t>(s.n_qubits() / 2));
  std::iota(a.begin(), a.end(), 0);
  return entanglement_entropy(s, a, EntropyMethod::Schmidt);
}

/// One branch of a parity-symmetric state: (psi + M psi/|M psi|)/sqrt2 with
/// M = sum_i Z_i, signed so that <Z_site> >= 0. For a cat state this is the
/// magnetized half; its site magnetization is sqrt(<M^2>)/N under
/// translation invariance.
inline StateVector broken_symmetry_branch(const StateVector& s, int site = 0) {
  StateVector m = apply_operator(s, total_z(s.n_qubits()));
  const double mn = std::sqrt(m.norm_squared());
  if (mn < 1e-12) throw DomainError("broken_symmetry_branch: M|psi> vanishes");
  for (std::size_t i = 0; i < m.dim(); ++i) m[i] /= mn;
  const StateVector zm = apply_operator(m, PauliSum{PauliString(1.0, {{site, Pauli::Z}})});
  const double sign = inner_product(s, zm).real() >= 0 ? 1.0 : -1.0;
  StateVector b = s;
  for (std::size_t i = 0; i < b.dim(); ++i) b[i] += sign * m[i];
  b.normalize();
  return b;
}

/// Single-site entropy of broken_symmetry_branch(s). Unlike the entropy of a
/// parity eigenstate, which only sees <X_site>, this one peaks near the
/// ordering transition.
inline double broken_symmetry_entropy(const StateVector& s, int site = 0) {
  return single_site_entropy(broken_symmetry_branch(s, site), site);
}

struct FramePotentialEstimate {
  int t = 1;
  double mean = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
  std::uint64_t seed = 0;
  std::vector<double> overlaps;  // |<psi|phi>|^2 per pair
};

inline FramePotentialEstimate summarize_overlaps(std::vector<double> overlaps, int t, std::uint64_t seed) {
  FramePotentialEstimate e;
  e.t = t;
  e.seed = seed;
  e.n_samples = static_cast<int>(overlaps.size());
  const double n = static_cast<double>(overlaps.size());
  double sum = 0.0;
  for (double o : overlaps) sum += std::pow(o, t);
  e.mean = sum / n;
  double ss = 0.0;
  for (double o : overlaps) ss += (std::pow(o, t) - e.mean) * (std::pow(o, t) - e.mean);
  const double var = n > 1 ? ss / (n - 1) : 0.0;
  e.std_error = std::sqrt(var / n);
  e.overlaps = std::move(overlaps);
  return e;
}

namespace detail {

inline std::mt19937_64 pair_stream(std::uint64_t seed, std::uint64_t pair) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(pair >> 32)};
  return std::mt19937_64(seq);
}

inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// |<a|b>|^2 / (<a|a><b|b>), clamped to [0, 1].
inline double fidelity(const StateVector& a, const StateVector& b) {
  return std::clamp(std::norm(inner_product(a, b)) / (a.norm_squared() * b.norm_squared()), 0.0, 1.0);
}

}  // namespace detail

/// Frame potential F_t = E |<psi(a)|psi(b)>|^{2t} over parameter pairs with
/// every angle uniform in [0, 2pi). Pair i draws from its own stream keyed by
/// (seed, i).
inline FramePotentialEstimate frame_potential(const ParametricCircuit& c, const StateVector& initial, int t,
                                              int n_samples, std::uint64_t seed) {
  if (t < 1) throw ContractError("frame_potential: t must be >= 1");
  if (n_samples < 2) throw ContractError("frame_potential: need at least 2 samples");
  const auto np = static_cast<std::size_t>(c.n_params());
  std::vector<double> overlaps(static_cast<std::size_t>(n_samples));
  std::vector<double> a(np), b(np);
  for (int i = 0; i < n_samples; ++i) {
    auto rng = detail::pair_stream(seed, static_cast<std::uint64_t>(i));
    for (auto& v : a) v = 2 * M_PI * detail::unit_uniform(rng);
    for (auto& v : b) v = 2 * M_PI * detail::unit_uniform(rng);
    const StateVector psi = prepare_state(initial, c, a);
    const StateVector phi = prepare_state(initial, c, b);
    overlaps[static_cast<std::size_t>(i)] = detail::fidelity(psi, phi);
  }
  return summarize_overlaps(std::move(overlaps), t, seed);
}

/// Haar-random pure state: normalized vector of i.i.d. complex Gaussians.
inline StateVector haar_random_state(int n_qubits, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  StateVector s(n_qubits, std::vector<cplx>(std::size_t{1} << n_qubits));
  for (std::size_t i = 0; i < s.dim(); ++i) s[i] = cplx(normal(rng), normal(rng));
  s.normalize();
  return s;
}

/// Frame potential of Haar-random state pairs (analytic F_1 = 1 / 2^N).
inline FramePotentialEstimate haar_frame_potential(int n_qubits, int t, int n_samples, std::uint64_t seed) {
  if (t < 1 || n_samples < 2) throw ContractError("haar_frame_potential: bad arguments");
  std::vector<double> overlaps(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    auto rng = detail::pair_stream(seed, static_cast<std::uint64_t>(i));
    const StateVector psi = haar_random_state(n_qubits, rng);
    const StateVector phi = haar_random_state(n_qubits, rng);
    overlaps[static_cast<std::size_t>(i)] = detail::fidelity(psi, phi);
  }
  return summarize_overlaps(std::move(overlaps), t, seed);
}

/// Single-column CSV of raw overlaps.
inline void write_overlaps_csv(std::ostream& os, const FramePotentialEstimate& e) {
  os << "overlap\n";
  for (double o : e.overlaps) os << format_double(o) << '\n';
}

/// Fixed-width histogram of overlaps on [0, 1].
inline std::vector<int> overlap_histogram(const FramePotentialEstimate& e, int bins) {
  std::vector<int> h(static_cast<std::size_t>(bins), 0);
  for (double o : e.overlaps) {
    const int b = std::min(bins - 1, static_cast<int>(o * bins));
    ++h[static_cast<std::size_t>(std::max(0, b))];
  }
  return h;
}

/// Observable bundle for one prepared state.
struct ObservableReport {
  double energy = 0.0;
  double energy_per_site = 0.0;
  std::optional<double> variance;
  double magnetization = 0.0;
  double abs_magnetization = 0.0;
  std::optional<double> spin_correlation;
  double entropy_single_site = 0.0;
  double entropy_half = 0.0;
};

inline ObservableReport observe(const StateVector& s, const PauliSum& h, int n_sites) {
  ObservableReport r;
  r.energy = expectation(s, h);
  r.energy_per_site = r.energy / n_sites;
  try {
    r.variance = energy_variance(s, h);
  } catch (const UndefinedVarianceError&) {
  }
  const auto m = magnetization(s);
  r.magnetization = m.m;
  r.abs_magnetization = m.m_abs;
  if (n_sites % 2 == 0) r.spin_correlation = spin_correlation(s, n_sites);
  r.entropy_single_site = single_site_entropy(s);
  r.entropy_half = half_system_entropy(s);
  return r;
}

}  // namespace isingvqe
