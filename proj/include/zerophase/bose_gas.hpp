#pragma once

// Exactly solvable interacting Bose gas with G-fold degenerate levels.
//
// Large-N occupation fractions m_n solve
//     phi_n(m_n) = lambda_n - V m_n + theta ln(m_n / (g + m_n)) = mu,   sum m_n = 1.
// phi_n rises on (0, m*] and falls on [m*, inf), with m* the zero of
// alpha(m) = phi'(m) = -V + theta g / (m (g + m)), the same for every level.
// For fixed mu each m_n is a root on one of the two segments; the outer
// problem is a scalar equation S(mu) = sum m_n(mu) = 1, with
// S'(mu) = sum 1 / alpha_n.
//
// Seed l (metastable, l != argmin lambda): level l on the falling segment,
// the rest on the rising one. S is decreasing for mu -> -inf and has a
// single minimum (the fold, S' = 0, equivalently stability margin 0). The
// branch exists while S_min <= 1 and its point is the root on the
// decreasing side. theta_c solves S_min(theta) = 1.
//
// Ground seed: the same mode is used while S(mu_max) < 1, otherwise every
// level sits on the rising segment and S is increasing.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "zerophase/error.hpp"
#include "zerophase/numeric.hpp"

namespace zerophase::bose {

inline constexpr std::size_t kNoLevel = std::numeric_limits<std::size_t>::max();

// ---------------------------------------------------------------------------
// Levels

/// One-particle dispersion on a circle of length L with momentum quantum
/// 2 pi hbar / L, coarse-grained in blocks of G momenta.
struct DispersionSpec {
  std::function<double(double)> epsilon;
  double L = 2.0 * M_PI;
  double hbar = 1.0;
  int G = 1;
  int n_min = -2;
  int n_max = 2;

  double delta_p() const { return 2.0 * M_PI * hbar * G / L; }
};

/// lambda_n = epsilon(n dp) for n = n_min..n_max.
inline std::vector<double> dispersion_levels(const DispersionSpec& spec) {
  if (!spec.epsilon) throw ValidationError("dispersion function missing");
  if (!(spec.L > 0.0) || !(spec.hbar > 0.0) || spec.G < 1) {
    throw ValidationError("need L > 0, hbar > 0 and G >= 1");
  }
  if (spec.n_max - spec.n_min + 1 < 2) throw ValidationError("window must hold at least two levels");
  std::vector<double> out;
  const double dp = spec.delta_p();
  for (int n = spec.n_min; n <= spec.n_max; ++n) {
    const double v = spec.epsilon(n * dp);
    if (!std::isfinite(v)) throw ValidationError("dispersion returned a non-finite level");
    out.push_back(v);
  }
  return out;
}

/// Levels with specific degeneracy g, pair interaction V and interaction
/// width D. Level order is the caller's; labels carry momentum indices when
/// built from a dispersion.
class LevelSet {
 public:
  static LevelSet direct(std::vector<double> lambdas, double g, double V, double D,
                         std::vector<int> labels = {}) {
    return LevelSet(std::move(lambdas), g, V, D, std::move(labels));
  }

  std::span<const double> lambdas() const noexcept { return lambdas_; }
  double lambda(std::size_t n) const { return lambdas_[n]; }
  std::size_t size() const noexcept { return lambdas_.size(); }
  double g() const noexcept { return g_; }
  double V() const noexcept { return V_; }
  double D() const noexcept { return D_; }
  std::span<const int> labels() const noexcept { return labels_; }

  std::size_t argmin() const {
    return static_cast<std::size_t>(std::min_element(lambdas_.begin(), lambdas_.end()) -
                                    lambdas_.begin());
  }
  double min_gap() const {
    std::vector<double> s = lambdas_;
    std::sort(s.begin(), s.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < s.size(); ++i) gap = std::min(gap, s[i] - s[i - 1]);
    return gap;
  }

 private:
  LevelSet(std::vector<double> lambdas, double g, double V, double D, std::vector<int> labels)
      : lambdas_(std::move(lambdas)), g_(g), V_(V), D_(D), labels_(std::move(labels)) {
    if (lambdas_.size() < 2) throw ValidationError("need at least two levels");
    for (double x : lambdas_) {
      if (!std::isfinite(x)) throw ValidationError("levels must be finite");
    }
    if (!(g_ > 0.0) || !std::isfinite(g_)) throw ValidationError("g must be positive");
    if (!(V_ > 0.0) || !std::isfinite(V_)) throw ValidationError("V must be positive");
    if (!(D_ > 0.0)) throw ValidationError("interaction width D must be positive");
    if (labels_.empty()) {
      for (std::size_t i = 0; i < lambdas_.size(); ++i) labels_.push_back(static_cast<int>(i));
    }
    if (labels_.size() != lambdas_.size()) throw ValidationError("one label per level");
    const double gap = min_gap();
    if (!(D_ < gap)) {
      throw ValidationError("interaction width too large: D must be below the minimal level gap");
    }
    if (gap < 1e-12) throw ValidationError("degenerate level gap below 1e-12");
  }

  std::vector<double> lambdas_;
  double g_, V_, D_;
  std::vector<int> labels_;
};

inline LevelSet build_levels(const DispersionSpec& spec, double g, double V, double D) {
  std::vector<int> labels;
  for (int n = spec.n_min; n <= spec.n_max; ++n) labels.push_back(n);
  return LevelSet::direct(dispersion_levels(spec), g, V, D, std::move(labels));
}

/// Widens the window symmetrically until the Bose-factor bound
/// g / (exp((lambda - lambda_min)/theta) - 1) on the first excluded level on
/// each side is below `tail` at theta_max. Requires a growing dispersion.
inline LevelSet build_levels_for_sweep(DispersionSpec spec, double g, double V, double D,
                                       double theta_max, double tail = 1e-14,
                                       int max_levels = 4097) {
  if (!(theta_max > 0.0)) throw ValidationError("theta_max must be positive");
  while (true) {
    const auto lam = dispersion_levels(spec);
    const double lo = *std::min_element(lam.begin(), lam.end());
    const double dp = spec.delta_p();
    double worst = 0.0;
    for (int n : {spec.n_min - 1, spec.n_max + 1}) {
      const double x = (spec.epsilon(n * dp) - lo) / theta_max;
      worst = std::max(worst, x > 0.0 ? g / std::expm1(x) : std::numeric_limits<double>::infinity());
    }
    if (worst < tail) return build_levels(spec, g, V, D);
    if (spec.n_max - spec.n_min + 1 >= max_levels) {
      throw SolverError("level window cannot be truncated: dispersion does not grow fast enough");
    }
    const int w = spec.n_max - spec.n_min + 1;
    spec.n_min -= std::max(1, w / 2);
    spec.n_max += std::max(1, w / 2);
  }
}

// ---------------------------------------------------------------------------
// Finite-N quantities

/// E = sum lambda_n N_n - (V / 2N) sum N_n (N_n - 1).
inline double discrete_energy(const LevelSet& ls, std::span<const long> occ, long N) {
  if (occ.size() != ls.size()) throw ValidationError("occupation length differs from level count");
  long total = 0;
  for (long x : occ) {
    if (x < 0) throw ValidationError("occupations must be nonnegative");
    total += x;
  }
  if (total != N || N < 1) throw ValidationError("occupations must sum to N");
  double e = 0.0, pair = 0.0;
  for (std::size_t n = 0; n < occ.size(); ++n) {
    e += ls.lambda(n) * static_cast<double>(occ[n]);
    pair += static_cast<double>(occ[n]) * static_cast<double>(occ[n] - 1);
  }
  return e - ls.V() / (2.0 * N) * pair;
}

/// ln prod_n (G + N_n - 1)! / ((G - 1)! N_n!).
inline double log_multiplicity(std::span<const long> occ, long G) {
  if (G < 1) throw ValidationError("G must be >= 1");
  double s = 0.0;
  for (long x : occ) {
    if (x < 0) throw ValidationError("occupations must be nonnegative");
    s += std::lgamma(static_cast<double>(G + x)) - std::lgamma(static_cast<double>(G)) -
         std::lgamma(static_cast<double>(x) + 1.0);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Large-N functionals

namespace detail {

inline void check_fractions(std::span<const double> m, std::size_t levels) {
  if (m.size() != levels) throw ValidationError("fraction vector length differs from level count");
  for (double x : m) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ValidationError("fractions must be positive");
  }
}

/// m ln(m/g) with the m -> 0 limit.
inline double xlogx_over(double m, double g) { return m > 0.0 ? m * std::log(m / g) : 0.0; }

}  // namespace detail

/// Specific free energy at fractions m.
inline double free_energy(const LevelSet& ls, std::span<const double> m, double theta) {
  detail::check_fractions(m, ls.size());
  if (theta < 0.0) throw ValidationError("theta must be nonnegative");
  const double g = ls.g(), V = ls.V();
  double f = 0.0;
  for (std::size_t n = 0; n < m.size(); ++n) {
    f += ls.lambda(n) * m[n] - 0.5 * V * m[n] * m[n];
    if (theta > 0.0) {
      f += theta * (detail::xlogx_over(m[n], g) - (g + m[n]) * std::log1p(m[n] / g));
    }
  }
  return f;
}

/// Specific entropy sum (g + m) ln(1 + m/g) - m ln(m/g).
inline double specific_entropy(std::span<const double> m, double g) {
  double s = 0.0;
  for (double x : m) s += (g + x) * std::log1p(x / g) - detail::xlogx_over(x, g);
  return s;
}

// ---------------------------------------------------------------------------
// Fixed-point machinery

namespace detail {

/// Peak of phi: positive root of m (g + m) = theta g / V, cancellation-free.
inline double m_peak(double theta, double g, double V) {
  const double c = theta * g / V;
  return 2.0 * c / (g + std::sqrt(g * g + 4.0 * c));
}

inline double log_ratio(double m, double g) { return -std::log1p(g / m); }  // ln(m/(g+m))

inline double phi(double lambda, double m, double theta, double g, double V) {
  return lambda - V * m + theta * log_ratio(m, g);
}

inline double alpha(double m, double theta, double g, double V) {
  return -V + theta * g / (m * (g + m));
}

/// Everything needed to evaluate S(mu) at one temperature.
struct Frame {
  const LevelSet& ls;
  double theta;
  double peak;       // m*
  double log_peak;
  double mu_max;     // min_n phi_n(m*)

  Frame(const LevelSet& levels, double th) : ls(levels), theta(th) {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw ValidationError("theta must be positive");
    peak = m_peak(theta, ls.g(), ls.V());
    log_peak = std::log(peak);
    mu_max = phi(ls.lambda(ls.argmin()), peak, theta, ls.g(), ls.V());
  }

  /// Root on the rising segment, solved in u = ln m; returns u.
  double small_root_log(double lambda, double mu) const {
    const double g = ls.g(), V = ls.V(), lg = std::log(g);
    auto f = [&](double u) {
      return lambda - V * std::exp(u) + theta * (u - lg - std::log1p(std::exp(u) / g)) - mu;
    };
    const double hi = log_peak;
    if (f(hi) <= 0.0) return hi;
    double lo = (mu - lambda) / theta + lg - 1.0;
    if (!(lo < hi)) lo = hi - 1.0;
    return find_root(f, lo, hi);
  }

  /// Root on the falling segment; returns m.
  double large_root(double lambda, double mu) const {
    const double g = ls.g(), V = ls.V();
    auto f = [&](double m) { return phi(lambda, m, theta, g, V) - mu; };
    if (f(peak) <= 0.0) return peak;
    const double hi = std::max(peak, (lambda - mu) / V) + 1.0;
    return find_root(f, peak, hi);
  }

  /// Fractions at mu with level `falling` on the falling segment (kNoLevel
  /// for none).
  std::vector<double> fractions(double mu, std::size_t falling) const {
    std::vector<double> m(ls.size());
    for (std::size_t n = 0; n < m.size(); ++n) {
      m[n] = n == falling ? large_root(ls.lambda(n), mu) : std::exp(small_root_log(ls.lambda(n), mu));
    }
    return m;
  }

  double S(double mu, std::size_t falling) const {
    double s = 0.0;
    for (double x : fractions(mu, falling)) s += x;
    return s;
  }

  double S_prime(double mu, std::size_t falling) const {
    double s = 0.0;
    for (double x : fractions(mu, falling)) {
      const double a = alpha(x, theta, ls.g(), ls.V());
      s += 1.0 / a;  // zero when x underflows (a = inf)
    }
    return s;
  }

  /// Largest mu strictly inside the domain at which 1/alpha is finite.
  double mu_top() const { return mu_max - 1e-14 * std::max(1.0, std::abs(mu_max)); }

  /// Moves lo down until pred(lo) holds.
  template <class Pred>
  double descend(double start, Pred&& pred) const {
    double step = 1.0, lo = start - step;
    for (int i = 0; i < 200 && !pred(lo); ++i) {
      step *= 2.0;
      lo = start - step;
    }
    if (!pred(lo)) throw SolverError("could not bracket the chemical potential");
    return lo;
  }
};

struct Fold {
  double mu;
  double S_min;
};

/// Minimum of S along the metastable mode for seed l.
inline Fold fold(const Frame& fr, std::size_t l) {
  const double hi = fr.mu_top();
  if (fr.S_prime(hi, l) <= 0.0) return {hi, fr.S(hi, l)};
  const double lo = fr.descend(hi, [&](double mu) { return fr.S_prime(mu, l) < 0.0; });
  const double mu = find_root([&](double x) { return fr.S_prime(x, l); }, lo, hi);
  return {mu, fr.S(mu, l)};
}

}  // namespace detail

/// Minimal total occupation sum over the metastable mode of seed l; the
/// branch exists iff this is <= 1.
inline double minimal_occupation_sum(const LevelSet& ls, double theta, std::size_t l) {
  detail::Frame fr(ls, theta);
  return detail::fold(fr, l).S_min;
}

// ---------------------------------------------------------------------------
// Branch states

struct StabilityReport {
  std::vector<double> alphas;
  bool stable = false;
  double margin = 0.0;  ///< 1 + sum_{n != l} alpha_l / alpha_n
};

/// Second-variation test of the constrained functional. Exactly one negative
/// alpha_j needs 1 + sum_{n != j} alpha_j / alpha_n > 0; all alphas positive
/// is a local minimum as well. The margin refers to the seed level l.
inline StabilityReport stability_check(std::span<const double> m, const LevelSet& ls,
                                       double theta, std::size_t l) {
  StabilityReport r;
  r.alphas.resize(m.size());
  std::size_t neg = 0, neg_at = kNoLevel;
  bool zero = false;
  for (std::size_t n = 0; n < m.size(); ++n) {
    r.alphas[n] = detail::alpha(m[n], theta, ls.g(), ls.V());
    if (r.alphas[n] < 0.0) {
      ++neg;
      neg_at = n;
    }
    zero = zero || r.alphas[n] == 0.0;
  }
  auto margin_at = [&](std::size_t j) {
    double s = 1.0;
    for (std::size_t n = 0; n < m.size(); ++n) {
      if (n != j) s += r.alphas[j] / r.alphas[n];
    }
    return s;
  };
  r.margin = margin_at(l);
  if (zero) {
    r.stable = false;
  } else if (neg == 0) {
    r.stable = true;
  } else if (neg == 1) {
    r.stable = margin_at(neg_at) > 0.0;
  }
  return r;
}

struct BranchState {
  std::size_t seed = 0;
  double theta = 0.0;
  std::vector<double> m;
  double mu = 0.0;
  std::vector<double> alphas;
  bool stable = false;
  double margin = 0.0;
  double f = 0.0;
  double s = 0.0;
};

inline BranchState make_state(const LevelSet& ls, double theta, std::size_t seed,
                              std::vector<double> m, double mu) {
  for (double x : m) {
    if (!(x > 0.0)) {
      throw ValidationError("temperature too low: occupation fractions underflow double precision");
    }
  }
  BranchState b;
  b.seed = seed;
  b.theta = theta;
  b.mu = mu;
  auto st = stability_check(m, ls, theta, seed);
  b.alphas = std::move(st.alphas);
  b.stable = st.stable;
  b.margin = st.margin;
  b.f = free_energy(ls, m, theta);
  b.s = specific_entropy(m, ls.g());
  b.m = std::move(m);
  return b;
}

/// max over the self-consistency equations and normalization: |phi_n(m_n) - mu| and |sum m - 1|.
inline double equation_residual(const BranchState& b, const LevelSet& ls) {
  double r = 0.0, sum = 0.0;
  for (std::size_t n = 0; n < b.m.size(); ++n) {
    r = std::max(r, std::abs(detail::phi(ls.lambda(n), b.m[n], b.theta, ls.g(), ls.V()) - b.mu));
    sum += b.m[n];
  }
  return std::max(r, std::abs(sum - 1.0));
}

/// Residual of the Hartree form: with omega_n = lambda_n - V m_n and
/// Bose fractions b_n = g / (exp((omega_n - mu)/theta) - 1), returns the max of
/// |b_n - m_n|, |omega_n - (lambda_n - V b_n)| and |sum b_n - 1|.
inline double hartree_residual(const BranchState& b, const LevelSet& ls) {
  double r = 0.0, sum = 0.0;
  for (std::size_t n = 0; n < b.m.size(); ++n) {
    const double omega = ls.lambda(n) - ls.V() * b.m[n];
    const double x = (omega - b.mu) / b.theta;
    const double bose = x > 700.0 ? 0.0 : ls.g() / std::expm1(x);
    r = std::max({r, std::abs(bose - b.m[n]), std::abs(omega - (ls.lambda(n) - ls.V() * bose))});
    sum += bose;
  }
  return std::max(r, std::abs(sum - 1.0));
}

/// Barrier condition nu_{nl} = lambda_n - lambda_l + V > 0 for all n != l.
inline bool seed_admissible(const LevelSet& ls, std::size_t l) {
  for (std::size_t n = 0; n < ls.size(); ++n) {
    if (n != l && !(ls.lambda(n) - ls.lambda(l) + ls.V() > 0.0)) return false;
  }
  return true;
}

namespace detail {

/// Root of S(mu) = 1 on [lo, hi] for the given mode.
inline double solve_mu(const Frame& fr, std::size_t falling, double hi, bool decreasing) {
  auto h = [&](double mu) { return fr.S(mu, falling) - 1.0; };
  const double lo = fr.descend(hi, [&](double mu) { return decreasing ? h(mu) > 0.0 : h(mu) < 0.0; });
  return find_root(h, lo, hi);
}

}  // namespace detail

/// Ground-state solution (seed argmin lambda); exists for every theta > 0.
inline BranchState solve_ground(const LevelSet& ls, double theta) {
  detail::Frame fr(ls, theta);
  const std::size_t l0 = ls.argmin();
  const double top = fr.mu_max;
  const double s_top = fr.S(top, l0);
  if (s_top < 1.0) {
    const double mu = detail::solve_mu(fr, l0, top, true);
    return make_state(ls, theta, l0, fr.fractions(mu, l0), mu);
  }
  const double mu = detail::solve_mu(fr, kNoLevel, top, false);
  return make_state(ls, theta, l0, fr.fractions(mu, kNoLevel), mu);
}

/// Solution continuing the one-hot state at level l. Throws ValidationError
/// when l violates the barrier condition and BranchTerminated past the fold.
inline BranchState solve_branch(const LevelSet& ls, double theta, std::size_t l) {
  if (l >= ls.size()) throw ValidationError("seed level out of range");
  if (l == ls.argmin()) return solve_ground(ls, theta);
  if (!seed_admissible(ls, l)) {
    throw ValidationError("branch does not exist: seed violates lambda_n - lambda_l + V > 0");
  }
  detail::Frame fr(ls, theta);
  const auto fd = detail::fold(fr, l);
  if (fd.S_min > 1.0) {
    throw BranchTerminated("branch terminated: no fixed point beyond the fold",
                           std::numeric_limits<double>::quiet_NaN());
  }
  const double mu = fd.S_min == 1.0 ? fd.mu : detail::solve_mu(fr, l, fd.mu, true);
  return make_state(ls, theta, l, fr.fractions(mu, l), mu);
}

/// State exactly at the fold of seed l; sums to one when theta = theta_c.
inline BranchState fold_state(const LevelSet& ls, double theta, std::size_t l) {
  detail::Frame fr(ls, theta);
  const auto fd = detail::fold(fr, l);
  return make_state(ls, theta, l, fr.fractions(fd.mu, l), fd.mu);
}

/// theta_c of seed l: root of S_min(theta) = 1. The bracket is grown from
/// theta_lo (default: a small fraction of the smallest nu) upward.
inline double critical_temperature(const LevelSet& ls, std::size_t l, double theta_lo = 0.0,
                                   double theta_hi = 0.0) {
  if (l >= ls.size()) throw ValidationError("seed level out of range");
  if (l == ls.argmin()) throw ValidationError("the ground branch has no critical temperature");
  if (!seed_admissible(ls, l)) throw ValidationError("branch does not exist for this seed");
  auto h = [&](double th) { return minimal_occupation_sum(ls, th, l) - 1.0; };
  if (theta_lo <= 0.0) {
    double nu = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < ls.size(); ++n) {
      if (n != l) nu = std::min(nu, ls.lambda(n) - ls.lambda(l) + ls.V());
    }
    theta_lo = 0.02 * nu;
  }
  for (int i = 0; i < 60 && h(theta_lo) >= 0.0; ++i) theta_lo *= 0.5;
  if (h(theta_lo) >= 0.0) throw SolverError("branch absent even at low temperature");
  if (theta_hi <= theta_lo) theta_hi = 2.0 * theta_lo;
  for (int i = 0; i < 80 && h(theta_hi) <= 0.0; ++i) {
    theta_lo = theta_hi;
    theta_hi *= 2.0;
  }
  if (h(theta_hi) <= 0.0) throw SolverError("no critical temperature found");
  return find_root(h, theta_lo, theta_hi);
}

// ---------------------------------------------------------------------------
// Continuation

inline std::vector<double> geometric_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) throw ValidationError("invalid geometric grid");
  std::vector<double> t(static_cast<std::size_t>(points));
  const double r = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) t[i] = lo * std::exp(r * i);
  t.back() = hi;
  return t;
}

struct BranchSweep {
  std::size_t seed = 0;
  std::vector<BranchState> points;  ///< accepted states, increasing theta
  std::optional<double> theta_c;    ///< root of S_min = 1
  std::optional<double> theta_c_bisection;
  std::optional<double> first_rejected;
};

/// Follows seed l along an increasing theta grid. When a grid point has no
/// stable solution, bisects between the last accepted and the rejected theta
/// until the interval is below rel_tol * theta (adding accepted points), and
/// refines theta_c as the root of S_min(theta) = 1.
inline BranchSweep continue_branch(const LevelSet& ls, std::size_t l,
                                   std::span<const double> theta_grid, double rel_tol = 1e-8) {
  BranchSweep sw;
  sw.seed = l;
  if (l >= ls.size()) throw ValidationError("seed level out of range");
  if (l != ls.argmin() && !seed_admissible(ls, l)) {
    throw ValidationError("branch does not exist: seed violates lambda_n - lambda_l + V > 0");
  }
  auto attempt = [&](double th) -> std::optional<BranchState> {
    try {
      auto b = solve_branch(ls, th, l);
      if (!b.stable) return std::nullopt;
      return b;
    } catch (const BranchTerminated&) {
      return std::nullopt;
    }
  };
  double prev = 0.0;
  for (double th : theta_grid) {
    if (!(th > prev)) throw ValidationError("theta grid must be strictly increasing and positive");
    prev = th;
    auto b = attempt(th);
    if (b) {
      sw.points.push_back(std::move(*b));
      continue;
    }
    if (sw.points.empty()) {
      throw BranchTerminated("branch absent at the first grid temperature", th);
    }
    sw.first_rejected = th;
    double lo = sw.points.back().theta, hi = th;
    while (hi - lo > rel_tol * lo) {
      const double mid = 0.5 * (lo + hi);
      if (auto bm = attempt(mid)) {
        sw.points.push_back(std::move(*bm));
        lo = mid;
      } else {
        hi = mid;
      }
    }
    sw.theta_c_bisection = 0.5 * (lo + hi);
    auto h = [&](double t) { return minimal_occupation_sum(ls, t, l) - 1.0; };
    double a = lo, c = hi;
    if (h(a) < 0.0 && h(c) > 0.0) {
      sw.theta_c = find_root(h, a, c);
    } else {
      sw.theta_c = critical_temperature(ls, l, sw.points.front().theta);
    }
    break;
  }
  return sw;
}

/// m_l decreasing, m_{n != l} increasing between consecutive points. The
/// decrease of m_l is read off 1 - m_l = sum_{n != l} m_n, which stays
/// resolvable when m_l rounds to 1.
inline bool monotone_along(const std::vector<BranchState>& pts) {
  auto rest = [](const BranchState& b) {
    double s = 0.0;
    for (std::size_t n = 0; n < b.m.size(); ++n) {
      if (n != b.seed) s += b.m[n];
    }
    return s;
  };
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto& a = pts[i - 1];
    const auto& b = pts[i];
    if (!(rest(b) > rest(a))) return false;
    for (std::size_t n = 0; n < a.m.size(); ++n) {
      if (n != a.seed && !(b.m[n] > a.m[n])) return false;
    }
  }
  return true;
}

/// m_l > m_n > m_n' whenever lambda_n < lambda_n' and n, n' != l.
inline bool ordering_holds(const BranchState& b, const LevelSet& ls) {
  for (std::size_t n = 0; n < b.m.size(); ++n) {
    if (n == b.seed) continue;
    if (!(b.m[b.seed] > b.m[n])) return false;
    for (std::size_t k = 0; k < b.m.size(); ++k) {
      if (k != b.seed && ls.lambda(n) < ls.lambda(k) && !(b.m[n] > b.m[k])) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Derivatives, entropy, singular behaviour

struct ThetaDerivatives {
  std::vector<double> dm;  ///< dm_n / dtheta
  double dmu;              ///< dmu / dtheta
  double ds;               ///< ds / dtheta
};

/// Implicit differentiation of the self-consistency system: alpha_n dm_n + ln(m_n/(g+m_n)) = mu'.
inline ThetaDerivatives theta_derivatives(const BranchState& b, const LevelSet& ls) {
  const std::size_t k = b.m.size();
  std::vector<double> L(k);
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < k; ++n) {
    L[n] = detail::log_ratio(b.m[n], ls.g());
    num += L[n] / b.alphas[n];
    den += 1.0 / b.alphas[n];
  }
  ThetaDerivatives d;
  d.dmu = num / den;
  d.dm.resize(k);
  d.ds = 0.0;
  for (std::size_t n = 0; n < k; ++n) {
    d.dm[n] = (d.dmu - L[n]) / b.alphas[n];
    d.ds -= d.dm[n] * L[n];
  }
  return d;
}

/// The entropy derivative written as a sum over n != l with the log ratio
/// ln((g + m_n) m_l / (m_n (g + m_l))).
inline double entropy_slope_seeded(const BranchState& b, const LevelSet& ls) {
  const auto d = theta_derivatives(b, ls);
  const double Ll = detail::log_ratio(b.m[b.seed], ls.g());
  double s = 0.0;
  for (std::size_t n = 0; n < b.m.size(); ++n) {
    if (n != b.seed) s += d.dm[n] * (Ll - detail::log_ratio(b.m[n], ls.g()));
  }
  return s;
}

struct EntropyRow {
  double theta;
  double s;
  double ds_analytic;
  double ds_fd;  ///< NaN at the ends of the sequence
};

/// s and ds/dtheta along a branch; finite differences use the three-point
/// formula on the (possibly non-uniform) theta sequence.
inline std::vector<EntropyRow> entropy_and_capacity(const std::vector<BranchState>& pts,
                                                    const LevelSet& ls) {
  if (pts.size() < 3) throw ValidationError("entropy table needs at least three branch points");
  std::vector<EntropyRow> rows(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    rows[i] = {pts[i].theta, pts[i].s, theta_derivatives(pts[i], ls).ds,
               std::numeric_limits<double>::quiet_NaN()};
  }
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double hm = pts[i].theta - pts[i - 1].theta;
    const double hp = pts[i + 1].theta - pts[i].theta;
    rows[i].ds_fd = (hm * hm * (pts[i + 1].s - pts[i].s) + hp * hp * (pts[i].s - pts[i - 1].s)) /
                    (hm * hp * (hm + hp));
  }
  return rows;
}

/// Branch points at theta_c - d for d log-spaced on [d_lo, d_hi].
inline std::vector<BranchState> near_critical_points(const LevelSet& ls, std::size_t l,
                                                     double theta_c, double d_lo, double d_hi,
                                                     int count) {
  std::vector<BranchState> out;
  for (double d : geometric_grid(d_lo, d_hi, count)) out.push_back(solve_branch(ls, theta_c - d, l));
  std::reverse(out.begin(), out.end());
  return out;
}

struct SingularFit {
  std::vector<double> exponents;  ///< slope of ln|m_n - m_n(theta_c)| per level
  double exponent = 0.0;          ///< mean over levels
  std::vector<double> C;          ///< alpha_n(theta_c) (m_n - m_n(theta_c)) / sqrt(d), nearest point
};

inline SingularFit singular_exponent_fit(const std::vector<BranchState>& pts,
                                         const BranchState& critical) {
  if (pts.size() < 8) throw ValidationError("singular fit needs at least eight points");
  const double tc = critical.theta;
  const std::size_t k = critical.m.size();
  SingularFit fit;
  fit.exponents.resize(k);
  fit.C.resize(k);
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
  for (const auto& p : pts) {
    const double d = tc - p.theta;
    if (!(d > 0.0)) throw ValidationError("fit points must lie below theta_c");
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }
  if (dmax / dmin < 99.0) throw ValidationError("fit points must span two decades");
  for (std::size_t n = 0; n < k; ++n) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
      const double x = std::log(tc - p.theta);
      const double y = std::log(std::abs(p.m[n] - critical.m[n]));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double c = static_cast<double>(pts.size());
    fit.exponents[n] = (c * sxy - sx * sy) / (c * sxx - sx * sx);
    fit.exponent += fit.exponents[n] / k;
    const auto& near = *std::min_element(pts.begin(), pts.end(), [&](const auto& a, const auto& b) {
      return tc - a.theta < tc - b.theta;
    });
    fit.C[n] = critical.alphas[n] * (near.m[n] - critical.m[n]) / std::sqrt(tc - near.theta);
  }
  return fit;
}

struct TransitionCertificate {
  double theta_c;
  double f_meta;
  double f_ground;
  double jump;  ///< f_meta - f_ground
};

inline TransitionCertificate zeroth_order_certificate(const LevelSet& ls, std::size_t l) {
  const double tc = critical_temperature(ls, l);
  const auto meta = fold_state(ls, tc, l);
  const auto ground = solve_ground(ls, tc);
  return {tc, meta.f, ground.f, meta.f - ground.f};
}

// ---------------------------------------------------------------------------
// Direct Newton solve (uniqueness checks)

/// Damped Newton on (ln m_n, mu) from an arbitrary positive start.
inline BranchState solve_from_initial(const LevelSet& ls, double theta, std::vector<double> m0,
                                      double mu0, double tol = 1e-13, int max_iter = 500) {
  detail::check_fractions(m0, ls.size());
  if (!(theta > 0.0)) throw ValidationError("theta must be positive");
  const std::size_t k = ls.size();
  const double g = ls.g(), V = ls.V();
  std::vector<double> u(k), F(k);
  for (std::size_t n = 0; n < k; ++n) u[n] = std::log(m0[n]);
  double mu = mu0;
  auto residuals = [&](const std::vector<double>& uu, double mm, std::vector<double>& FF) {
    double G = -1.0, norm = 0.0;
    for (std::size_t n = 0; n < k; ++n) {
      const double m = std::exp(uu[n]);
      FF[n] = detail::phi(ls.lambda(n), m, theta, g, V) - mm;
      G += m;
      norm = std::max(norm, std::abs(FF[n]));
    }
    return std::pair{G, std::max(norm, std::abs(G))};
  };
  auto [G, res] = residuals(u, mu, F);
  for (int it = 0; it < max_iter && res > tol; ++it) {
    double num = -G, den = 0.0;
    std::vector<double> a(k);
    for (std::size_t n = 0; n < k; ++n) {
      a[n] = detail::alpha(std::exp(u[n]), theta, g, V);
      num += F[n] / a[n];
      den += 1.0 / a[n];
    }
    const double dmu = num / den;
    std::vector<double> du(k);
    for (std::size_t n = 0; n < k; ++n) du[n] = (-F[n] + dmu) / (std::exp(u[n]) * a[n]);
    double step = 1.0;
    std::vector<double> ut(k), Ft(k);
    bool moved = false;
    for (int ls_it = 0; ls_it < 60; ++ls_it, step *= 0.5) {
      for (std::size_t n = 0; n < k; ++n) ut[n] = u[n] + step * std::clamp(du[n], -5.0, 5.0);
      auto [Gt, rt] = residuals(ut, mu + step * dmu, Ft);
      if (std::isfinite(rt) && rt < res) {
        u = ut;
        F = Ft;
        mu += step * dmu;
        G = Gt;
        res = rt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (res > 1e-10) throw SolverError("Newton iteration did not converge");
  std::vector<double> m(k);
  for (std::size_t n = 0; n < k; ++n) m[n] = std::exp(u[n]);
  return make_state(ls, theta, ls.argmin(), std::move(m), mu);
}

/// Normalized high-temperature form m_n proportional to exp(-lambda_n/theta).
inline std::vector<double> high_temperature_form(const LevelSet& ls, double theta) {
  std::vector<double> x(ls.size());
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = -ls.lambda(n) / theta;
  const double z = log_sum_exp(x);
  for (double& v : x) v = std::exp(v - z);
  return x;
}

}  // namespace zerophase::bose
