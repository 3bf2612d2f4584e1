#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace isingvqe::optim {

using Vec = std::vector<double>;

/// Objective returning f(x); writes the gradient into `grad` when it is
/// non-empty.
using ValueAndGradient = std::function<double(std::span<const double> x, std::span<double> grad)>;
using Value = std::function<double(std::span<const double> x)>;

struct Outcome {
  Vec x;
  double value = std::numeric_limits<double>::infinity();
  Vec trace;  // best value after every accepted step
  int n_iterations = 0;
  int n_evaluations = 0;
  bool converged = false;
};

struct LbfgsOptions {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-8;  // on the infinity norm
  double value_tolerance = 1e-14;    // relative decrease per step
  int history_size = 10;
  double armijo_c1 = 1e-4;
  double backtrack_shrink = 0.5;
  int max_backtracks = 60;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Limited-memory BFGS (two-loop recursion) with backtracking Armijo line
/// search. Curvature pairs with s.y <= 0 are skipped.
inline Outcome lbfgs(const ValueAndGradient& f, Vec x0, const LbfgsOptions& opt) {
  const std::size_t n = x0.size();
  Outcome out;
  out.x = std::move(x0);
  Vec g(n), g_new(n), x_new(n), d(n);
  out.value = f(out.x, g);
  out.n_evaluations = 1;
  out.trace.push_back(out.value);
  if (!std::isfinite(out.value)) return out;

  struct Pair {
    Vec s, y;
    double rho;
  };
  std::deque<Pair> mem;
  std::vector<double> alpha(static_cast<std::size_t>(opt.history_size));

  if (n == 0 || inf_norm(g) < opt.gradient_tolerance) {
    out.converged = true;
    return out;
  }

  for (out.n_iterations = 0; out.n_iterations < opt.max_iterations;) {
    // d = -H g via two-loop recursion.
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    for (std::size_t k = mem.size(); k-- > 0;) {
      alpha[k] = mem[k].rho * dot(mem[k].s, d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * mem[k].y[i];
    }
    if (!mem.empty()) {
      const auto& last = mem.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (auto& v : d) v *= gamma;
    } else {
      const double scale = std::min(1.0, 1.0 / inf_norm(g));
      for (auto& v : d) v *= scale;
    }
    for (std::size_t k = 0; k < mem.size(); ++k) {
      const double beta = mem[k].rho * dot(mem[k].y, d);
      for (std::size_t i = 0; i < n; ++i) d[i] += mem[k].s[i] * (alpha[k] - beta);
    }
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      mem.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = dot(g, d);
    }

    double step = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = out.x[i] + step * d[i];
      f_new = f(x_new, g_new);
      ++out.n_evaluations;
      if (std::isfinite(f_new) && f_new <= out.value + opt.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= opt.backtrack_shrink;
    }
    if (!accepted) {
      if (mem.empty()) break;  // steepest descent failed as well
      mem.clear();
      continue;
    }
    ++out.n_iterations;

    Pair p{Vec(n), Vec(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - out.x[i];
      p.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-12 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y))) {
      p.rho = 1.0 / sy;
      mem.push_back(std::move(p));
      if (static_cast<int>(mem.size()) > opt.history_size) mem.pop_front();
    }

    const double decrease = out.value - f_new;
    out.x.swap(x_new);
    g.swap(g_new);
    out.value = f_new;
    out.trace.push_back(f_new);

    if (inf_norm(g) < opt.gradient_tolerance ||
        decrease <= opt.value_tolerance * std::max(1.0, std::abs(f_new))) {
      out.converged = true;
      break;
    }
  }
  return out;
}

struct NelderMeadOptions {
  int max_iterations = 20000;
  double tolerance = 1e-8;  // on both value spread and simplex extent
  double initial_step = 0.25;
  /// Rebuild the simplex around the best vertex after convergence, up to this
  /// many times, stopping early once a rebuild gives no further improvement.
  int max_rebuilds = 3;
};

/// Nelder-Mead simplex with dimension-adaptive coefficients
/// (alpha 1, beta 1 + 2/n, gamma 0.75 - 1/(2n), delta 1 - 1/n).
/// Gradient-free; stops when the value spread and the simplex extent both
/// fall below the tolerance, or when all vertex values agree to rounding.
inline Outcome nelder_mead(const Value& f, Vec x0, const NelderMeadOptions& opt) {
  const std::size_t n = x0.size();
  Outcome out;
  out.x = x0;
  out.value = f(x0);
  out.n_evaluations = 1;
  out.trace.push_back(out.value);
  if (n == 0 || !std::isfinite(out.value)) {
    out.converged = (n == 0);
    return out;
  }
  const double dn = static_cast<double>(n);
  const double c_reflect = 1.0;
  const double c_expand = 1.0 + 2.0 / dn;
  const double c_contract = 0.75 - 0.5 / dn;
  const double c_shrink = n > 1 ? 1.0 - 1.0 / dn : 0.5;

  std::vector<Vec> pts(n + 1);
  std::vector<double> vals(n + 1);
  auto eval = [&](const Vec& x) {
    ++out.n_evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  auto build = [&](const Vec& centre, double centre_value) {
    pts[0] = centre;
    vals[0] = centre_value;
    for (std::size_t i = 0; i < n; ++i) {
      pts[i + 1] = centre;
      pts[i + 1][i] += opt.initial_step;
      vals[i + 1] = eval(pts[i + 1]);
    }
  };
  build(out.x, out.value);

  std::vector<std::size_t> order(n + 1);
  Vec centroid(n), xr(n), xe(n), xc(n);
  int rebuilds = 0;
  double value_at_last_build = out.value;

  while (out.n_iterations < opt.max_iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    if (vals[best] < out.value) {
      out.value = vals[best];
      out.x = pts[best];
    }

    double spread = 0.0, extent = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      spread = std::max(spread, std::abs(vals[i] - vals[best]));
      for (std::size_t k = 0; k < n; ++k) extent = std::max(extent, std::abs(pts[i][k] - pts[best][k]));
    }
    const bool flat = spread <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(vals[best]));
    if ((spread <= opt.tolerance && extent <= opt.tolerance) || flat) {
      const bool improved = value_at_last_build - out.value > opt.tolerance;
      if (rebuilds >= opt.max_rebuilds || (rebuilds > 0 && !improved)) {
        out.converged = true;
        break;
      }
      ++rebuilds;
      value_at_last_build = out.value;
      build(out.x, out.value);
      continue;
    }

    ++out.n_iterations;
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / dn;
    }
    for (std::size_t k = 0; k < n; ++k) xr[k] = centroid[k] + c_reflect * (centroid[k] - pts[worst][k]);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      for (std::size_t k = 0; k < n; ++k) xe[k] = centroid[k] + c_expand * (xr[k] - centroid[k]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
    } else if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
    } else {
      const bool outside = fr < vals[worst];
      for (std::size_t k = 0; k < n; ++k) {
        xc[k] = outside ? centroid[k] + c_contract * (xr[k] - centroid[k])
                        : centroid[k] + c_contract * (pts[worst][k] - centroid[k]);
      }
      const double fc = eval(xc);
      if (fc < std::min(fr, vals[worst])) {
        pts[worst] = xc;
        vals[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[best][k] + c_shrink * (pts[i][k] - pts[best][k]);
          vals[i] = eval(pts[i]);
        }
      }
    }
    const double cur_best = *std::min_element(vals.begin(), vals.end());
    out.trace.push_back(std::min(cur_best, out.value));
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  if (*it < out.value) {
    out.value = *it;
    out.x = pts[static_cast<std::size_t>(it - vals.begin())];
  }
  if (out.trace.back() != out.value) out.trace.push_back(out.value);
  return out;
}

}  // namespace isingvqe::optim
