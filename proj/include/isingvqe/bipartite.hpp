#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "statevector.hpp"

namespace isingvqe {

using DensityMatrix = Eigen::MatrixXcd;

/// Singular values of a bipartite amplitude matrix, descending.
struct SchmidtSpectrum {
  std::vector<double> coefficients;
};

inline constexpr int kDefaultReducedDensityCap = 12;

namespace detail {

/// Maps a local index (bit j -> qubits[j]) onto the full register.
inline std::uint64_t scatter_bits(std::uint64_t local, std::span<const int> qubits) noexcept {
  std::uint64_t full = 0;
  for (std::size_t j = 0; j < qubits.size(); ++j) {
    if ((local >> j) & 1u) full |= std::uint64_t{1} << qubits[j];
  }
  return full;
}

inline std::vector<int> complement(int n_qubits, std::span<const int> subset) {
  std::vector<int> rest;
  for (int q = 0; q < n_qubits; ++q) {
    if (std::find(subset.begin(), subset.end(), q) == subset.end()) rest.push_back(q);
  }
  return rest;
}

inline void check_subset(const StateVector& s, std::span<const int> subset, const char* who) {
  std::set<int> seen;
  for (int q : subset) {
    if (q < 0 || q >= s.n_qubits()) throw ContractError(std::string(who) + ": qubit index out of range");
    if (!seen.insert(q).second) throw ContractError(std::string(who) + ": duplicate qubit in partition");
  }
}

/// Amplitudes reshaped to 2^|A| x 2^|B|; row bit j is qubit a[j], column bit j is qubit b[j].
inline Eigen::MatrixXcd amplitude_matrix(const StateVector& s, std::span<const int> a, std::span<const int> b) {
  const std::uint64_t rows = std::uint64_t{1} << a.size();
  const std::uint64_t cols = std::uint64_t{1} << b.size();
  Eigen::MatrixXcd m(rows, cols);
  std::vector<std::uint64_t> col_offsets(cols);
  for (std::uint64_t c = 0; c < cols; ++c) col_offsets[c] = scatter_bits(c, b);
  for (std::uint64_t r = 0; r < rows; ++r) {
    const std::uint64_t ro = scatter_bits(r, a);
    for (std::uint64_t c = 0; c < cols; ++c) m(r, c) = s[ro | col_offsets[c]];
  }
  return m;
}

}  // namespace detail

/// rho_keep = Tr_rest |psi><psi|. Matrix index bit j corresponds to keep[j].
inline DensityMatrix reduced_density(const StateVector& s, std::span<const int> keep,
                                     int cap = kDefaultReducedDensityCap) {
  if (keep.empty()) throw ContractError("reduced_density: keep set is empty");
  if (static_cast<int>(keep.size()) > cap) {
    throw ContractError("reduced_density: keep set exceeds cap of " + std::to_string(cap));
  }
  detail::check_subset(s, keep, "reduced_density");
  const auto rest = detail::complement(s.n_qubits(), keep);
  const Eigen::MatrixXcd m = detail::amplitude_matrix(s, keep, rest);
  return m * m.adjoint();
}

inline SchmidtSpectrum schmidt_spectrum(const StateVector& s, std::span<const int> partition_a) {
  if (partition_a.empty() || static_cast<int>(partition_a.size()) >= s.n_qubits()) {
    throw ContractError("schmidt_spectrum: partition must be a proper non-empty subset");
  }
  detail::check_subset(s, partition_a, "schmidt_spectrum");
  const auto rest = detail::complement(s.n_qubits(), partition_a);
  const Eigen::MatrixXcd m = detail::amplitude_matrix(s, partition_a, rest);
  const Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
  const Eigen::VectorXd sv = svd.singularValues();
  SchmidtSpectrum out;
  out.coefficients.assign(sv.data(), sv.data() + sv.size());
  std::sort(out.coefficients.begin(), out.coefficients.end(), std::greater<>());
  return out;
}

/// Weights below this contribute nothing to an entropy sum.
inline constexpr double kEntropyCutoff = 1e-14;

/// -sum p log2 p over a probability list.
inline double shannon_bits(std::span<const double> probabilities) noexcept {
  double s = 0.0;
  for (double p : probabilities) {
    if (p >= kEntropyCutoff) s -= p * std::log2(p);
  }
  return s;
}

inline std::vector<double> density_eigenvalues(const DensityMatrix& rho) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace isingvqe
