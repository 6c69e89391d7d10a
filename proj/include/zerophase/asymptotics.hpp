#pragma once

// Large-M limits of the ensemble free energy and marginals, their n -> infinity
// Gibbs limits, and exact-versus-limit convergence diagnostics.

#include <cmath>
#include <span>
#include <vector>

#include "zerophase/averaging.hpp"
#include "zerophase/ensemble.hpp"
#include "zerophase/error.hpp"
#include "zerophase/numeric.hpp"

namespace zerophase {

namespace detail {

/// Exponents -n beta lambda_i/(n+1) + ln(g_i)/(n+1); -inf off the support.
inline std::vector<double> limit_exponents(std::span<const double> g, const Spectrum& spectrum,
                                           double beta, int n) {
  check_weights(g);
  if (g.size() != spectrum.size()) throw ValidationError("g and spectrum differ in length");
  if (n < 0) throw ValidationError("step n must be nonnegative");
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  std::vector<double> x(g.size());
  const double k = 1.0 / (n + 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    x[i] = g[i] > 0.0 ? -n * beta * spectrum[i] * k + std::log(g[i]) * k : kNegInf;
  }
  return x;
}

}  // namespace detail

/// F~(n, g) = -(1/beta) ln sum_i e^{-n beta lambda_i/(n+1)} g_i^{1/(n+1)}.
inline double limit_F(std::span<const double> g, const Spectrum& spectrum, double beta, int n) {
  return -log_sum_exp(detail::limit_exponents(g, spectrum, beta, n)) / beta;
}

/// w~_i(n, g), proportional to e^{-n beta lambda_i/(n+1)} g_i^{1/(n+1)}.
inline std::vector<double> limit_w(std::span<const double> g, const Spectrum& spectrum,
                                   double beta, int n) {
  auto x = detail::limit_exponents(g, spectrum, beta, n);
  const double z = log_sum_exp(x);
  for (double& v : x) v = v == kNegInf ? 0.0 : std::exp(v - z);
  return x;
}

struct GibbsLimit {
  double F_inf;
  std::vector<double> w_inf;
};

/// n -> infinity limits. F is restricted to the support I; w is the Gibbs
/// distribution over all levels regardless of I.
inline GibbsLimit gibbs_fixed_point(const Spectrum& spectrum, double beta,
                                    std::span<const std::size_t> support) {
  if (support.empty()) throw ValidationError("support must be nonempty");
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  std::vector<double> xs;
  for (std::size_t i : support) {
    if (i >= spectrum.size()) throw ValidationError("support index out of range");
    xs.push_back(-beta * spectrum[i]);
  }
  GibbsLimit out;
  out.F_inf = -log_sum_exp(xs) / beta;
  std::vector<double> all(spectrum.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = -beta * spectrum[i];
  const double z = log_sum_exp(all);
  out.w_inf.resize(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) out.w_inf[i] = std::exp(all[i] - z);
  return out;
}

/// Gibbs probabilities rho_i = e^{-beta lambda_i} / Z.
inline std::vector<double> gibbs_distribution(const Spectrum& spectrum, double beta) {
  std::vector<std::size_t> all(spectrum.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return gibbs_fixed_point(spectrum, beta, all).w_inf;
}

struct LimitReport {
  int n = 0;
  double F_limit = 0.0;
  std::vector<double> w_limit;
  std::vector<int> M;
  std::vector<double> F_exact;
  std::vector<double> errors;                 ///< |F_exact - F_limit|
  std::vector<std::vector<double>> w_exact;   ///< marginals per M
  std::vector<double> w_errors;               ///< max_i |w_i - w~_i| per M
};

/// Evaluates F(n, g, M) and the marginals for each M (in parallel) and
/// tabulates their distance from the limits. Results keep the order of Ms.
inline LimitReport convergence_scan(std::span<const double> g, const Spectrum& spectrum,
                                    double beta, int n, std::span<const int> Ms) {
  LimitReport r;
  r.n = n;
  r.F_limit = limit_F(g, spectrum, beta, n);
  r.w_limit = limit_w(g, spectrum, beta, n);
  r.M.assign(Ms.begin(), Ms.end());
  const std::size_t k = Ms.size();
  r.F_exact.resize(k);
  r.errors.resize(k);
  r.w_exact.resize(k);
  r.w_errors.resize(k);
  parallel_for(k, [&](std::size_t j) {
    auto state = evolve(init_product_state(g, Ms[j]), spectrum, beta, n);
    r.F_exact[j] = ensemble_free_energy(state, beta);
    r.errors[j] = std::abs(r.F_exact[j] - r.F_limit);
    r.w_exact[j] = marginals(state);
    double e = 0.0;
    for (std::size_t i = 0; i < r.w_limit.size(); ++i) {
      e = std::max(e, std::abs(r.w_exact[j][i] - r.w_limit[i]));
    }
    r.w_errors[j] = e;
  });
  return r;
}

struct LaplaceFit {
  double a;  ///< coefficient of ln M / M
  double b;  ///< coefficient of 1 / M
};

/// Least-squares fit of signed errors e(M) = (a ln M + b)/M, i.e. a line
/// through (ln M, M e).
inline LaplaceFit fit_laplace_correction(std::span<const int> Ms, std::span<const double> err) {
  if (Ms.size() != err.size() || Ms.size() < 2) {
    throw ValidationError("Laplace fit needs at least two matched samples");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(Ms.size());
  for (std::size_t j = 0; j < Ms.size(); ++j) {
    const double x = std::log(static_cast<double>(Ms[j]));
    const double y = Ms[j] * err[j];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double a = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return {a, (sy - a * sx) / k};
}

/// KL(p || q) with 0 ln 0 = 0.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

}  // namespace zerophase
