#pragma once

// Entropy fields on 1D/2D rectangular grids: steepest-ascent trajectories,
// quadratic-kernel Hopf-Lax evolution (inf- and sup-convolution), the
// log-Gaussian smoothing, and transport of price fields along trajectories.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "zerophase/error.hpp"
#include "zerophase/numeric.hpp"

namespace zerophase::flow {

using Point = std::vector<double>;

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int n = 3;  ///< node count, nodes at lo + i h with h = (hi - lo)/(n - 1)

  double h() const { return (hi - lo) / (n - 1); }
  double node(int i) const { return lo + i * h(); }
};

class Grid {
 public:
  explicit Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > 2) throw ValidationError("grid dimension must be 1 or 2");
    for (const auto& a : axes_) {
      if (a.n < 3) throw ValidationError("grid needs at least 3 nodes per axis");
      if (!(a.hi > a.lo) || !std::isfinite(a.lo) || !std::isfinite(a.hi)) {
        throw ValidationError("grid axis needs lo < hi");
      }
    }
  }

  static Grid line(double lo, double hi, int n) { return Grid({Axis{lo, hi, n}}); }
  static Grid box(double lo0, double hi0, int n0, double lo1, double hi1, int n1) {
    return Grid({Axis{lo0, hi0, n0}, Axis{lo1, hi1, n1}});
  }

  std::size_t dims() const noexcept { return axes_.size(); }
  const Axis& axis(std::size_t d) const { return axes_[d]; }
  std::size_t size() const {
    std::size_t s = 1;
    for (const auto& a : axes_) s *= static_cast<std::size_t>(a.n);
    return s;
  }
  /// Row-major flat index; axis 0 is the slow index.
  std::size_t flat(int i0, int i1 = 0) const {
    return dims() == 1 ? static_cast<std::size_t>(i0)
                       : static_cast<std::size_t>(i0) * axes_[1].n + static_cast<std::size_t>(i1);
  }
  std::vector<int> multi(std::size_t idx) const {
    if (dims() == 1) return {static_cast<int>(idx)};
    const auto n1 = static_cast<std::size_t>(axes_[1].n);
    return {static_cast<int>(idx / n1), static_cast<int>(idx % n1)};
  }
  Point coords(std::size_t idx) const {
    auto m = multi(idx);
    Point p(dims());
    for (std::size_t d = 0; d < dims(); ++d) p[d] = axes_[d].node(m[d]);
    return p;
  }
  bool contains(const Point& x) const {
    for (std::size_t d = 0; d < dims(); ++d) {
      if (!(x[d] >= axes_[d].lo && x[d] <= axes_[d].hi)) return false;
    }
    return true;
  }

 private:
  std::vector<Axis> axes_;
};

enum class Boundary { clamped, periodic };

/// Scalar field sampled at grid nodes.
class EntropyField {
 public:
  EntropyField(Grid grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw ValidationError("value count differs from grid size");
    for (double v : values_) {
      if (!std::isfinite(v)) throw ValidationError("field values must be finite");
    }
  }

  template <class F>
  static EntropyField sample(const Grid& grid, F&& f) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.coords(i));
    return EntropyField(grid, std::move(v));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t dims() const noexcept { return grid_.dims(); }

  /// Centered difference of axis d at node idx; one-sided at clamped edges,
  /// wrapped (node n-1 identified with node 0) when periodic.
  double node_derivative(std::size_t idx, std::size_t d, Boundary b) const {
    auto m = grid_.multi(idx);
    const Axis& a = grid_.axis(d);
    auto at = [&](int i) {
      auto mm = m;
      mm[d] = i;
      return values_[grid_.flat(mm[0], mm.size() > 1 ? mm[1] : 0)];
    };
    const int i = m[d], n = a.n;
    const double h = a.h();
    if (b == Boundary::periodic) {
      const int l = i == 0 ? n - 2 : i - 1;
      const int r = i == n - 1 ? 1 : i + 1;
      return (at(r) - at(l)) / (2.0 * h);
    }
    if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    if (i == n - 1) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
    return (at(i + 1) - at(i - 1)) / (2.0 * h);
  }

  /// Multilinear interpolation of node data `data` (same layout as values).
  double interpolate(std::span<const double> data, Point x, Boundary b) const {
    x = normalize(std::move(x), b);
    int i[2] = {0, 0};
    double w[2] = {0.0, 0.0};
    for (std::size_t d = 0; d < dims(); ++d) {
      const Axis& a = grid_.axis(d);
      const double s = (x[d] - a.lo) / a.h();
      i[d] = std::clamp(static_cast<int>(std::floor(s)), 0, a.n - 2);
      w[d] = s - i[d];
    }
    if (dims() == 1) return (1.0 - w[0]) * data[i[0]] + w[0] * data[i[0] + 1];
    auto v = [&](int a, int c) { return data[grid_.flat(i[0] + a, i[1] + c)]; };
    return (1.0 - w[0]) * ((1.0 - w[1]) * v(0, 0) + w[1] * v(0, 1)) +
           w[0] * ((1.0 - w[1]) * v(1, 0) + w[1] * v(1, 1));
  }

  double at(const Point& x, Boundary b = Boundary::clamped) const {
    return interpolate(values_, x, b);
  }

  /// Node gradients interpolated multilinearly.
  Point gradient(const Point& x, Boundary b = Boundary::clamped) const {
    ensure_gradients(b);
    Point g(dims());
    for (std::size_t d = 0; d < dims(); ++d) g[d] = interpolate(grad_[d], x, b);
    return g;
  }

  /// Wraps coordinates into the box for periodic boundaries.
  Point normalize(Point x, Boundary b) const {
    if (x.size() != dims()) throw ValidationError("point dimension differs from grid");
    if (b == Boundary::periodic) {
      for (std::size_t d = 0; d < dims(); ++d) {
        const Axis& a = grid_.axis(d);
        const double L = a.hi - a.lo;
        x[d] = a.lo + std::fmod(std::fmod(x[d] - a.lo, L) + L, L);
      }
    }
    return x;
  }

 private:
  void ensure_gradients(Boundary b) const {
    if (!grad_.empty() && grad_boundary_ == b) return;
    grad_.assign(dims(), std::vector<double>(values_.size()));
    for (std::size_t d = 0; d < dims(); ++d) {
      for (std::size_t i = 0; i < values_.size(); ++i) grad_[d][i] = node_derivative(i, d, b);
    }
    grad_boundary_ = b;
  }

  Grid grid_;
  std::vector<double> values_;
  mutable std::vector<std::vector<double>> grad_;
  mutable Boundary grad_boundary_ = Boundary::clamped;
};

struct FlowConfig {
  std::function<double(double)> c_of_H = [](double) { return 1.0; };
  double dt = 1e-3;
  int steps = 100;
  Boundary boundary = Boundary::clamped;
};

namespace detail {

inline void check_config(const FlowConfig& cfg, const EntropyField& field) {
  if (!(cfg.dt > 0.0)) throw ValidationError("dt must be positive");
  if (cfg.steps < 0) throw ValidationError("steps must be nonnegative");
  if (!cfg.c_of_H) throw ValidationError("c(H) missing");
  const auto v = field.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (!(cfg.c_of_H(*lo) > 0.0) || !(cfg.c_of_H(*hi) > 0.0)) {
    throw ValidationError("c(H) must be positive on the field range");
  }
}

inline double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

struct Trajectory {
  std::vector<Point> points;
  std::vector<double> H;   ///< interpolated entropy at each point
  bool exited = false;     ///< left the box under clamped boundary
};

/// Explicit Euler for x' = c(H) grad H.
inline Trajectory ascent_trajectory(const EntropyField& field, const FlowConfig& cfg, Point x0) {
  detail::check_config(cfg, field);
  if (x0.size() != field.dims()) throw ValidationError("start point dimension differs from grid");
  if (!field.grid().contains(x0)) throw ValidationError("start point outside the box");
  Trajectory tr;
  Point x = field.normalize(std::move(x0), cfg.boundary);
  tr.points.push_back(x);
  tr.H.push_back(field.at(x, cfg.boundary));
  for (int s = 0; s < cfg.steps; ++s) {
    const double c = cfg.c_of_H(tr.H.back());
    if (!(c > 0.0)) throw ValidationError("c(H) must be positive along the trajectory");
    const Point g = field.gradient(x, cfg.boundary);
    for (std::size_t d = 0; d < x.size(); ++d) x[d] += cfg.dt * c * g[d];
    if (cfg.boundary == Boundary::clamped && !field.grid().contains(x)) {
      tr.exited = true;
      break;
    }
    x = field.normalize(std::move(x), cfg.boundary);
    tr.points.push_back(x);
    tr.H.push_back(field.at(x, cfg.boundary));
  }
  return tr;
}

enum class HopfLaxMode { paper_min, ascent_max };

/// paper_min: min_xi [|x - xi|^2/(2t) + H0(xi)];
/// ascent_max: max_xi [H0(xi) - |x - xi|^2/(2t)]. Exact scan over nodes.
inline EntropyField hopf_lax(const EntropyField& field0, double t,
                             HopfLaxMode mode = HopfLaxMode::ascent_max) {
  if (!(t > 0.0)) throw ValidationError("t must be positive");
  const Grid& grid = field0.grid();
  const std::size_t n = grid.size();
  std::vector<Point> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = grid.coords(i);
  const auto H0 = field0.values();
  const double k = 1.0 / (2.0 * t);
  std::vector<double> out(n);
  parallel_for(n, [&](std::size_t i) {
    double best = mode == HopfLaxMode::ascent_max ? -std::numeric_limits<double>::infinity()
                                                  : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      double r2 = 0.0;
      for (std::size_t d = 0; d < xs[i].size(); ++d) {
        const double dx = xs[i][d] - xs[j][d];
        r2 += dx * dx;
      }
      if (mode == HopfLaxMode::ascent_max) {
        best = std::max(best, H0[j] - k * r2);
      } else {
        best = std::min(best, H0[j] + k * r2);
      }
    }
    out[i] = best;
  });
  return EntropyField(grid, std::move(out));
}

/// ln[ t^{-k/2} sum_xi exp(-|x - xi|^2/(2t) + H0(xi)) h^k ], quadrature of the
/// Gaussian convolution of e^{H0}. exp of the result solves u_t = u_xx / 2.
inline EntropyField log_gaussian_smoothing(const EntropyField& field0, double t) {
  if (!(t > 0.0)) throw ValidationError("t must be positive");
  const Grid& grid = field0.grid();
  const std::size_t n = grid.size();
  const std::size_t k = grid.dims();
  double log_cell = 0.0;
  for (std::size_t d = 0; d < k; ++d) log_cell += std::log(grid.axis(d).h());
  std::vector<Point> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = grid.coords(i);
  const auto H0 = field0.values();
  const double shift = -0.5 * static_cast<double>(k) * std::log(t) + log_cell;
  std::vector<double> out(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> terms(n);
    for (std::size_t j = 0; j < n; ++j) {
      double r2 = 0.0;
      for (std::size_t d = 0; d < k; ++d) {
        const double dx = xs[i][d] - xs[j][d];
        r2 += dx * dx;
      }
      terms[j] = H0[j] - r2 / (2.0 * t);
    }
    out[i] = log_sum_exp(terms) + shift;
  });
  return EntropyField(grid, std::move(out));
}

/// max over nodes whose coordinates lie within `interior` times the half
/// width of the box centre of |u_t - (1/2) Lap u| for u = exp(log_gaussian),
/// with centered differences in t (step dt) and space (grid step).
inline double heat_equation_residual(const EntropyField& field0, double t, double dt,
                                     double interior = 0.25) {
  if (!(dt > 0.0) || !(dt < t)) throw ValidationError("need 0 < dt < t");
  const Grid& grid = field0.grid();
  const auto um = log_gaussian_smoothing(field0, t - dt);
  const auto u0 = log_gaussian_smoothing(field0, t);
  const auto up = log_gaussian_smoothing(field0, t + dt);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto m = grid.multi(i);
    bool inside = true;
    for (std::size_t d = 0; d < grid.dims(); ++d) {
      const Axis& a = grid.axis(d);
      const double c = 0.5 * (a.lo + a.hi), w = 0.5 * (a.hi - a.lo);
      if (std::abs(a.node(m[d]) - c) > interior * w || m[d] == 0 || m[d] == a.n - 1) inside = false;
    }
    if (!inside) continue;
    const double ut = (std::exp(up[i]) - std::exp(um[i])) / (2.0 * dt);
    double lap = 0.0;
    for (std::size_t d = 0; d < grid.dims(); ++d) {
      auto mm = m;
      mm[d] -= 1;
      const double l = std::exp(u0[grid.flat(mm[0], mm.size() > 1 ? mm[1] : 0)]);
      mm[d] += 2;
      const double r = std::exp(u0[grid.flat(mm[0], mm.size() > 1 ? mm[1] : 0)]);
      const double h = grid.axis(d).h();
      lap += (l - 2.0 * std::exp(u0[i]) + r) / (h * h);
    }
    worst = std::max(worst, std::abs(ut - 0.5 * lap));
  }
  return worst;
}

struct PriceTransport {
  Trajectory trajectory;
  std::vector<std::vector<double>> integrated;  ///< Euler integration of the transport law
  std::vector<std::vector<double>> evaluated;   ///< price fields read along the trajectory
};

/// Prices lambda_i(x) carried along the ascent trajectory, two ways:
/// integrating d lambda_i/dt = c(H) grad lambda_i . grad H, and evaluating
/// lambda_i at the trajectory points. They agree to O(dt).
inline PriceTransport price_transport(const EntropyField& field, const FlowConfig& cfg,
                                      const std::vector<EntropyField>& prices, Point x0) {
  for (const auto& p : prices) {
    if (p.grid().size() != field.grid().size() || p.dims() != field.dims()) {
      throw ValidationError("price fields must share the entropy grid");
    }
  }
  PriceTransport out;
  out.trajectory = ascent_trajectory(field, cfg, std::move(x0));
  const auto& pts = out.trajectory.points;
  const std::size_t k = prices.size();
  std::vector<double> cur(k);
  for (std::size_t i = 0; i < k; ++i) cur[i] = prices[i].at(pts[0], cfg.boundary);
  out.integrated.push_back(cur);
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const Point gH = field.gradient(pts[s], cfg.boundary);
    const double c = cfg.c_of_H(out.trajectory.H[s]);
    for (std::size_t i = 0; i < k; ++i) {
      cur[i] += cfg.dt * c * detail::dot(prices[i].gradient(pts[s], cfg.boundary), gH);
    }
    out.integrated.push_back(cur);
  }
  for (const auto& x : pts) {
    std::vector<double> row(k);
    for (std::size_t i = 0; i < k; ++i) row[i] = prices[i].at(x, cfg.boundary);
    out.evaluated.push_back(std::move(row));
  }
  return out;
}

/// c = (d lambda/dt) / (grad lambda . grad H) at x.
inline double calibrate_c(double dlambda_dt, const EntropyField& field, const EntropyField& price,
                          const Point& x, Boundary b = Boundary::clamped) {
  const Point gH = field.gradient(x, b);
  const Point gl = price.gradient(x, b);
  const double den = detail::dot(gl, gH);
  const double scale = std::sqrt(detail::dot(gl, gl) * detail::dot(gH, gH));
  if (!(std::abs(den) > 1e-12 * scale) || scale == 0.0) {
    throw ValidationError("price insensitive to entropy gradient at x");
  }
  return dlambda_dt / den;
}

}  // namespace zerophase::flow
