#pragma once

// Nonlinear (log-exp) financial averaging of a discrete random variable, the
// shift covariance check that singles out the admissible kernels, and the
// bounded search for integer relations among level values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "zerophase/error.hpp"
#include "zerophase/numeric.hpp"

namespace zerophase {

/// Ordered level values lambda_1..lambda_l. Optionally carries a certificate
/// that no small integer relation exists (see check_resonance_free).
class Spectrum {
 public:
  explicit Spectrum(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ValidationError("spectrum must have at least one level");
    for (double v : values_) {
      if (!std::isfinite(v)) throw ValidationError("spectrum values must be finite");
    }
  }

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  bool resonance_free() const noexcept { return certified_bound_.has_value(); }
  std::optional<int> resonance_bound() const noexcept { return certified_bound_; }

  /// Copy with every level moved by a.
  Spectrum shifted(double a) const {
    std::vector<double> v = values_;
    for (double& x : v) x += a;
    return Spectrum(std::move(v));
  }

  /// Copy flagged resonance-free for bound K; throws when a relation exists.
  Spectrum certified(int bound) const;

 private:
  std::vector<double> values_;
  std::optional<int> certified_bound_;
};

/// Nonnegative weights p_1..p_l with a nonempty support.
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      double w = weights_[i];
      if (!std::isfinite(w) || w < 0.0) {
        throw ValidationError("weights must be finite and nonnegative");
      }
      if (w > 0.0) support_.push_back(i);
    }
    if (support_.empty()) throw ValidationError("degenerate weights: empty support");
  }

  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const std::size_t> support() const noexcept { return support_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }

  double total() const noexcept {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

 private:
  std::vector<double> weights_;
  std::vector<std::size_t> support_;
};

/// The two kernel families compatible with shift covariance:
/// f(x) = A exp(-beta x) and f(x) = A x + D.
class AveragingKernel {
 public:
  struct Exponential {
    double beta;
  };
  struct Linear {
    double a;
    double d;
  };

  static AveragingKernel exponential(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw ValidationError("exponential kernel requires beta > 0");
    }
    return AveragingKernel(Exponential{beta});
  }

  static AveragingKernel linear(double a = 1.0, double d = 0.0) {
    if (a == 0.0 || !std::isfinite(a) || !std::isfinite(d)) {
      throw ValidationError("linear kernel requires A != 0");
    }
    return AveragingKernel(Linear{a, d});
  }

  bool is_exponential() const noexcept { return std::holds_alternative<Exponential>(kind_); }
  double beta() const { return std::get<Exponential>(kind_).beta; }
  const std::variant<Exponential, Linear>& kind() const noexcept { return kind_; }

 private:
  explicit AveragingKernel(std::variant<Exponential, Linear> k) : kind_(k) {}
  std::variant<Exponential, Linear> kind_;
};

namespace detail {

inline void require_same_length(const Spectrum& s, const WeightVector& p) {
  if (s.size() != p.size()) {
    throw ValidationError("weights and spectrum differ in length");
  }
}

/// ln(sum_i p_i exp(-beta lambda_i)) over the support.
inline double log_partition(double beta, std::span<const double> lambda,
                            std::span<const double> p) {
  std::vector<double> terms;
  terms.reserve(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    terms.push_back(p[i] > 0.0 ? std::log(p[i]) - beta * lambda[i] : kNegInf);
  }
  return log_sum_exp(terms);
}

}  // namespace detail

/// -(1/beta) ln(sum p_i e^{-beta lambda_i}) for the exponential kernel,
/// sum p_i lambda_i / sum p_i for the linear kernel. Weights are used as
/// given; no normalization is applied.
inline double financial_average(const AveragingKernel& kernel, const Spectrum& spectrum,
                                const WeightVector& weights) {
  detail::require_same_length(spectrum, weights);
  double result = 0.0;
  if (kernel.is_exponential()) {
    const double beta = kernel.beta();
    result = -detail::log_partition(beta, spectrum.values(), weights.weights()) / beta;
  } else {
    double num = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) num += weights[i] * spectrum[i];
    result = num / weights.total();
  }
  if (!std::isfinite(result)) {
    throw SolverError(
        "financial_average overflowed; rescale the levels or use the shift-stabilized "
        "log-sum-exp path");
  }
  return result;
}

struct ShiftReport {
  double c;         ///< [avg(lambda + a) - avg(lambda)] / a
  double residual;  ///< max deviation of C across the sampled shifts
};

/// Empirical shift constant of an arbitrary averaging functional. The
/// functional receives the shifted levels. Sampled shifts: a, -a, a/2, 2a.
template <class Average>
ShiftReport shift_covariance(Average&& average, const Spectrum& spectrum, double a) {
  if (a == 0.0 || !std::isfinite(a)) throw ValidationError("shift must be nonzero");
  const double base = average(spectrum);
  auto c_of = [&](double s) { return (average(spectrum.shifted(s)) - base) / s; };
  const double c = c_of(a);
  double residual = 0.0;
  for (double s : {-a, 0.5 * a, 2.0 * a}) residual = std::max(residual, std::abs(c_of(s) - c));
  return {c, residual};
}

inline ShiftReport verify_shift_axiom(const AveragingKernel& kernel, const Spectrum& spectrum,
                                      const WeightVector& weights, double a) {
  return shift_covariance(
      [&](const Spectrum& s) { return financial_average(kernel, s, weights); }, spectrum, a);
}

// ---------------------------------------------------------------------------
// Integer relations

struct ResonanceReport {
  bool holds = true;                    ///< no relation found within the bound
  std::optional<std::vector<int>> witness;  ///< sum k = 0 and sum lambda k = 0
};

namespace detail {

inline bool all_integral(std::span<const double> v) {
  for (double x : v) {
    if (x != std::nearbyint(x) || std::abs(x) > 9.0e15) return false;
  }
  return true;
}

inline int l1_norm(const std::vector<int>& k) {
  int s = 0;
  for (int v : k) s += std::abs(v);
  return s;
}

/// Flip sign so the first nonzero entry is positive.
inline void canonicalize(std::vector<int>& k) {
  for (int v : k) {
    if (v == 0) continue;
    if (v < 0) {
      for (int& x : k) x = -x;
    }
    return;
  }
}

}  // namespace detail

inline constexpr double kEnumerationGuard = 1.0e8;

/// Searches nonzero integer vectors k with |k_i| <= bound, sum k_i = 0 and
/// sum lambda_i k_i = 0. Integer-valued spectra are compared exactly, others
/// with tolerance 1e-12 * max|lambda|.
///
/// The reported witness is supported on the shortest prefix of levels that
/// admits a relation; among those, the smallest L1 norm, then the
/// lexicographically smallest vector after making its first entry positive.
inline ResonanceReport check_resonance_free(const Spectrum& spectrum, int bound) {
  if (bound < 1) throw ValidationError("resonance bound K must be positive");
  const std::size_t l = spectrum.size();
  const double width = 2.0 * bound + 1.0;
  if (std::pow(width, static_cast<double>(l)) > kEnumerationGuard) {
    throw GuardExceeded("bound too large: (2K+1)^l exceeds the enumeration guard");
  }
  const auto lambda = spectrum.values();
  double scale = 0.0;
  for (double v : lambda) scale = std::max(scale, std::abs(v));
  const bool exact = detail::all_integral(lambda) &&
                     scale * bound * static_cast<double>(l) < 4.0e18;
  const double tol = 1e-12 * scale;
  std::vector<std::int64_t> ilambda(l);
  for (std::size_t i = 0; i < l; ++i) ilambda[i] = static_cast<std::int64_t>(lambda[i]);

  ResonanceReport report;
  for (std::size_t m = 2; m <= l; ++m) {
    // Odometer over k_1..k_{m-1}; k_m closes the zero-sum constraint.
    std::vector<int> k(l, 0);
    for (std::size_t i = 0; i + 1 < m; ++i) k[i] = -bound;
    std::optional<std::vector<int>> best;
    while (true) {
      int partial = 0;
      for (std::size_t i = 0; i + 1 < m; ++i) partial += k[i];
      const int last = -partial;
      if (last != 0 && std::abs(last) <= bound) {
        k[m - 1] = last;
        bool relation = false;
        if (exact) {
          std::int64_t dot = 0;
          for (std::size_t i = 0; i < m; ++i) dot += ilambda[i] * k[i];
          relation = dot == 0;
        } else {
          double dot = 0.0;
          for (std::size_t i = 0; i < m; ++i) dot += lambda[i] * k[i];
          relation = std::abs(dot) <= tol;
        }
        if (relation) {
          std::vector<int> cand = k;
          detail::canonicalize(cand);
          if (!best || detail::l1_norm(cand) < detail::l1_norm(*best) ||
              (detail::l1_norm(cand) == detail::l1_norm(*best) && cand < *best)) {
            best = cand;
          }
        }
        k[m - 1] = 0;
      }
      std::size_t pos = 0;
      while (pos + 1 < m && k[pos] == bound) {
        k[pos] = -bound;
        ++pos;
      }
      if (pos + 1 >= m) break;
      ++k[pos];
    }
    if (best) {
      report.holds = false;
      report.witness = std::move(best);
      return report;
    }
  }
  return report;
}

inline Spectrum Spectrum::certified(int bound) const {
  auto report = check_resonance_free(*this, bound);
  if (!report.holds) throw ValidationError("spectrum admits an integer relation");
  Spectrum s = *this;
  s.certified_bound_ = bound;
  return s;
}

/// Level values E(N1) = sum_q A_q N1^q for N1 = 0..N.
inline Spectrum polynomial_spectrum(std::span<const double> coefficients, int n) {
  if (coefficients.empty()) throw ValidationError("polynomial needs at least one coefficient");
  if (n < 1) throw ValidationError("polynomial spectrum needs N >= 1");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n) + 1);
  for (int x = 0; x <= n; ++x) {
    double acc = 0.0;
    for (std::size_t q = coefficients.size(); q-- > 0;) acc = acc * x + coefficients[q];
    values.push_back(acc);
  }
  return Spectrum(std::move(values));
}

struct PolynomialProbeReport {
  double fail_fraction = 0.0;
  int failures = 0;
  int trials = 0;
  std::optional<std::vector<int>> first_witness;
};

/// Draws coefficient vectors A_0..A_p uniformly from [-1, 1], builds the
/// polynomial spectrum over N1 = 0..N and counts how often a bounded integer
/// relation is found.
inline PolynomialProbeReport probe_polynomial_resonance(int degree, int n, int trials, int bound,
                                                        std::uint64_t seed) {
  if (degree < 0) throw ValidationError("polynomial degree must be nonnegative");
  if (trials < 1) throw ValidationError("trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  PolynomialProbeReport report;
  report.trials = trials;
  std::vector<double> a(static_cast<std::size_t>(degree) + 1);
  for (int t = 0; t < trials; ++t) {
    for (double& x : a) x = coef(rng);
    auto r = check_resonance_free(polynomial_spectrum(a, n), bound);
    if (!r.holds) {
      ++report.failures;
      if (!report.first_witness) report.first_witness = r.witness;
    }
  }
  report.fail_fraction = static_cast<double>(report.failures) / trials;
  return report;
}

}  // namespace zerophase
