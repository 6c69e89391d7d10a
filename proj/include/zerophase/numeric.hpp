#pragma once

// Small numerical helpers shared by the modules: stabilized log-sum-exp,
// log-factorial tables, bracketed root finding, and an ordered parallel loop.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "zerophase/error.hpp"

namespace zerophase {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// ln(sum_i exp(x_i)), shifted by the maximum. Entries equal to -inf are
/// skipped; an all -inf input yields -inf.
inline double log_sum_exp(std::span<const double> x) {
  double top = kNegInf;
  for (double v : x) top = std::max(top, v);
  if (top == kNegInf) return kNegInf;
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double v : x) {
    if (v != kNegInf) acc += std::exp(v - top);
  }
  return top + std::log(acc);
}

/// ln(sum_i w_i e^{x_i}) for nonnegative weights w_i; zero weights drop out.
inline double log_sum_exp_weighted(std::span<const double> x,
                                   std::span<const double> w) {
  double top = kNegInf;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] > 0.0) top = std::max(top, x[i]);
  }
  if (top == kNegInf) return kNegInf;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] > 0.0 && x[i] != kNegInf) acc += w[i] * std::exp(x[i] - top);
  }
  return top + std::log(acc);
}

/// Table of ln(k!) for k = 0..n, accumulated by summation of logs so the
/// values are reproducible and free of the global state lgamma touches.
inline std::vector<double> log_factorial_table(int n) {
  std::vector<double> t(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 2; k <= n; ++k) t[k] = t[k - 1] + std::log(static_cast<double>(k));
  return t;
}

/// ln C(n, k) via lgamma; used for Bose multiplicities.
inline double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// Root of f on [a, b] where f(a) and f(b) bracket zero (either may be the
/// exact root). TOMS 748 to near machine precision.
template <class F>
double find_root(F&& f, double a, double b, int max_iter = 300) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) {
    throw SolverError("find_root: interval does not bracket a root");
  }
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 3);
  auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  return 0.5 * (r.first + r.second);
}

/// Worker count: ZEROPHASE_THREADS when set to a positive integer, else the
/// hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("ZEROPHASE_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs body(i) for i in [0, n) across thread_count() workers. Each index is
/// visited exactly once; callers write results by index so output order does
/// not depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const auto workers = static_cast<unsigned>(
      std::min<std::size_t>(thread_count(), n == 0 ? 1 : n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace zerophase
