#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "pauli.hpp"

namespace isingvqe {

/// Periodic hypercubic lattice in 1-3 dimensions. Sites are linearized
/// row-major: index = x + Lx * (y + Ly * z).
class Lattice {
 public:
  Lattice(int dims, std::vector<int> extents) : extents_(std::move(extents)) {
    if (dims < 1 || dims > 3) throw DomainError("Lattice: dims must be 1, 2 or 3");
    if (static_cast<int>(extents_.size()) != dims) throw DomainError("Lattice: need one extent per dimension");
    n_sites_ = 1;
    for (int e : extents_) {
      if (e < 2) throw DomainError("Lattice: every extent must be >= 2");
      n_sites_ *= e;
    }
    if (n_sites_ > 64) throw DomainError("Lattice: more than 64 sites");
  }

  int dims() const noexcept { return static_cast<int>(extents_.size()); }
  const std::vector<int>& extents() const noexcept { return extents_; }
  int n_sites() const noexcept { return n_sites_; }
  bool periodic() const noexcept { return true; }

  std::vector<int> coordinates(int site) const {
    std::vector<int> c(extents_.size());
    for (std::size_t a = 0; a < extents_.size(); ++a) {
      c[a] = site % extents_[a];
      site /= extents_[a];
    }
    return c;
  }

  int site_index(std::span<const int> coords) const {
    int idx = 0;
    for (std::size_t a = extents_.size(); a-- > 0;) idx = idx * extents_[a] + coords[a];
    return idx;
  }

  /// Neighbor one step in +axis direction, wrapping periodically.
  int forward_neighbor(int site, int axis) const {
    auto c = coordinates(site);
    c[axis] = (c[axis] + 1) % extents_[axis];
    return site_index(c);
  }

  std::string extents_string() const {
    std::string s;
    for (std::size_t a = 0; a < extents_.size(); ++a) {
      if (a) s += 'x';
      s += std::to_string(extents_[a]);
    }
    return s;
  }

 private:
  std::vector<int> extents_;
  int n_sites_ = 0;
};

inline Lattice build_lattice(int dims, std::vector<int> extents) { return Lattice(dims, std::move(extents)); }

struct Bond {
  int site_a;
  int site_b;
  int axis;
  friend bool operator==(const Bond&, const Bond&) = default;
};

/// One bond per (site, +axis neighbor). With dedupe, repeated unordered pairs
/// (which only occur along extent-2 axes) are dropped, keeping the first.
inline std::vector<Bond> bonds(const Lattice& lat, bool dedupe = false) {
  std::vector<Bond> out;
  std::set<std::pair<int, int>> seen;
  for (int axis = 0; axis < lat.dims(); ++axis) {
    for (int s = 0; s < lat.n_sites(); ++s) {
      const int t = lat.forward_neighbor(s, axis);
      if (dedupe && !seen.insert({std::min(s, t), std::max(s, t)}).second) continue;
      out.push_back({s, t, axis});
    }
  }
  return out;
}

struct TfimParams {
  double j_z = -1.0;
  double h_x = 0.0;
};

/// H = j_z sum_<ij> Z_i Z_j + h_x sum_i X_i over an explicit bond list.
inline PauliSum build_tfim(int n_sites, std::span<const Bond> bond_list, const TfimParams& p) {
  if (!std::isfinite(p.j_z) || !std::isfinite(p.h_x)) throw DomainError("build_tfim: non-finite coupling");
  PauliSum h;
  for (const auto& b : bond_list) h.add(PauliString(p.j_z, {{b.site_a, Pauli::Z}, {b.site_b, Pauli::Z}}));
  for (int i = 0; i < n_sites; ++i) h.add(PauliString(p.h_x, {{i, Pauli::X}}));
  return h;
}

inline PauliSum build_tfim(const Lattice& lat, const TfimParams& p, bool dedupe = false) {
  const auto b = bonds(lat, dedupe);
  return build_tfim(lat.n_sites(), b, p);
}

/// Extents for an n-site lattice in `dims` dimensions: as balanced as
/// possible, preferring even extents, ascending. Throws if n has no
/// factorization into `dims` factors >= 2.
inline std::vector<int> lattice_extents_for(int n_sites, int dims) {
  std::vector<int> best;
  auto score = [](const std::vector<int>& e) {
    const int odd = static_cast<int>(std::count_if(e.begin(), e.end(), [](int x) { return x % 2; }));
    return std::make_pair(odd, *std::max_element(e.begin(), e.end()) - *std::min_element(e.begin(), e.end()));
  };
  std::vector<int> cur;
  auto rec = [&](auto&& self, int remaining, int min_factor, int left) -> void {
    if (left == 1) {
      if (remaining >= min_factor) {
        cur.push_back(remaining);
        if (best.empty() || score(cur) < score(best)) best = cur;
        cur.pop_back();
      }
      return;
    }
    for (int f = min_factor; f * f <= remaining; ++f) {
      if (remaining % f) continue;
      cur.push_back(f);
      self(self, remaining / f, f, left - 1);
      cur.pop_back();
    }
  };
  if (dims < 1 || dims > 3) throw DomainError("lattice_extents_for: dims must be 1, 2 or 3");
  rec(rec, n_sites, 2, dims);
  if (best.empty()) {
    throw DomainError(std::to_string(n_sites) + " sites cannot form a " + std::to_string(dims) +
                      "D lattice with extents >= 2");
  }
  return best;
}

}  // namespace isingvqe
