#pragma once

// Test-only reference implementations. Everything here is built from explicit
// 2x2 matrices and Kronecker products so that it shares no code path with the
// bit-mask kernels under test.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include <isingvqe/circuit.hpp>
#include <isingvqe/pauli.hpp>
#include <isingvqe/statevector.hpp>

namespace oracle {

using isingvqe::cplx;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat pauli(char p) {
  Mat m(2, 2);
  switch (p) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m = Mat::Identity(2, 2);
  }
  return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

/// Operator acting with `local[q]` on qubit q (identity elsewhere). Qubit 0
/// is the least-significant index bit, so it is the rightmost Kronecker factor.
inline Mat embed(int n, const std::vector<std::pair<int, Mat>>& local) {
  Mat out = Mat::Identity(1, 1);
  for (int q = n - 1; q >= 0; --q) {
    Mat f = Mat::Identity(2, 2);
    for (const auto& [qq, m] : local) {
      if (qq == q) f = m;
    }
    out = kron(out, f);
  }
  return out;
}

inline Mat dense(const isingvqe::PauliSum& h, int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Mat m = Mat::Zero(dim, dim);
  for (const auto& t : h.terms) {
    std::vector<std::pair<int, Mat>> local;
    for (const auto& [q, p] : t.factors) local.emplace_back(q, pauli(static_cast<char>(p)));
    m += t.coefficient * embed(n, local);
  }
  return m;
}

inline Mat rotation(char p, double theta) {
  return std::cos(theta / 2) * Mat::Identity(2, 2) - cplx(0, 1) * std::sin(theta / 2) * pauli(p);
}

inline Mat gate_matrix(const isingvqe::GateOp& op, double angle, int n) {
  using isingvqe::Gate;
  const int q = op.qubits[0];
  switch (op.gate) {
    case Gate::H: {
      Mat h(2, 2);
      h << 1, 1, 1, -1;
      return embed(n, {{q, h / std::sqrt(2.0)}});
    }
    case Gate::X: return embed(n, {{q, pauli('X')}});
    case Gate::Z: return embed(n, {{q, pauli('Z')}});
    case Gate::RX: return embed(n, {{q, rotation('X', angle)}});
    case Gate::RY: return embed(n, {{q, rotation('Y', angle)}});
    case Gate::RZ: return embed(n, {{q, rotation('Z', angle)}});
    case Gate::CNOT: {
      Mat p0(2, 2), p1(2, 2);
      p0 << 1, 0, 0, 0;
      p1 << 0, 0, 0, 1;
      return embed(n, {{q, p0}}) + embed(n, {{q, p1}, {op.qubits[1], pauli('X')}});
    }
    case Gate::RZZ: {
      const Mat zz = embed(n, {{q, pauli('Z')}, {op.qubits[1], pauli('Z')}});
      const Eigen::Index dim = zz.rows();
      return std::cos(angle / 2) * Mat::Identity(dim, dim) - cplx(0, 1) * std::sin(angle / 2) * zz;
    }
  }
  return {};
}

inline Vec to_vec(const isingvqe::StateVector& s) {
  Vec v(static_cast<Eigen::Index>(s.dim()));
  for (std::size_t i = 0; i < s.dim(); ++i) v(static_cast<Eigen::Index>(i)) = s[i];
  return v;
}

inline isingvqe::StateVector from_vec(const Vec& v, int n) {
  std::vector<cplx> a(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) a[static_cast<std::size_t>(i)] = v(i);
  return isingvqe::StateVector(n, std::move(a));
}

/// Circuit evaluated by dense matrix products.
inline Vec run_dense(const isingvqe::ParametricCircuit& c, std::span<const double> params) {
  const Eigen::Index dim = Eigen::Index{1} << c.n_qubits();
  Vec v = Vec::Zero(dim);
  v(0) = 1.0;
  for (const auto& o : c.ops()) v = gate_matrix(o.op, o.binding.resolve(params), c.n_qubits()) * v;
  return v;
}

inline double dense_expectation(const Vec& v, const Mat& h) { return (v.adjoint() * h * v)(0, 0).real(); }

/// Central finite differences of f at x with step `h`.
inline std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& f,
                                             std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double fp = f(x);
    x[k] = x0 - h;
    const double fm = f(x);
    x[k] = x0;
    g[k] = (fp - fm) / (2 * h);
  }
  return g;
}

inline isingvqe::StateVector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<cplx> a(std::size_t{1} << n);
  for (auto& x : a) x = cplx(nd(rng), nd(rng));
  isingvqe::StateVector s(n, std::move(a));
  s.normalize();
  return s;
}

/// Random real-coefficient Pauli sum with up to `terms` strings.
inline isingvqe::PauliSum random_pauli_sum(int n, int terms, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 3);
  std::normal_distribution<double> nd;
  isingvqe::PauliSum h;
  for (int t = 0; t < terms; ++t) {
    isingvqe::PauliString s;
    s.coefficient = nd(rng);
    for (int q = 0; q < n; ++q) {
      const int p = pick(rng);
      if (p == 1) s.factors.emplace(q, isingvqe::Pauli::X);
      if (p == 2) s.factors.emplace(q, isingvqe::Pauli::Y);
      if (p == 3) s.factors.emplace(q, isingvqe::Pauli::Z);
    }
    h.add(s);
  }
  return h;
}

/// Entropy in bits from a list of probabilities, independent of the library.
inline double entropy_bits(const Eigen::VectorXd& p) {
  double s = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 1e-14) s -= p(i) * std::log2(p(i));
  }
  return s;
}

}  // namespace oracle
