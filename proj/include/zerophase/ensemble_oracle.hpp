#pragma once

// Dense tuple-array transcription of the ensemble definitions. Every tuple
// (i_1..i_M) carries its own coefficient; evolution multiplies by the tuple
// energy factor, projects onto each occupation class, takes the class 1-norm
// and rebuilds the vector as class-constant sums. Used only to certify the
// class-based implementation at small sizes.

#include <cmath>
#include <cstdint>
#include <vector>

#include "zerophase/averaging.hpp"
#include "zerophase/ensemble.hpp"
#include "zerophase/error.hpp"

namespace zerophase::oracle {

inline constexpr int kMaxLevels = 4;
inline constexpr int kMaxMembers = 8;

class TupleState {
 public:
  TupleState(int levels, int members) : levels_(levels), members_(members) {
    if (levels < 1 || levels > kMaxLevels || members < 1 || members > kMaxMembers) {
      throw ValidationError("tuple oracle limited to l <= 4 and M <= 8");
    }
    std::size_t n = 1;
    for (int s = 0; s < members; ++s) n *= static_cast<std::size_t>(levels);
    psi_.assign(n, 0.0);
  }

  int levels() const noexcept { return levels_; }
  int members() const noexcept { return members_; }
  std::size_t size() const noexcept { return psi_.size(); }
  double& operator[](std::size_t idx) { return psi_[idx]; }
  double operator[](std::size_t idx) const { return psi_[idx]; }

  /// Level index i_s (zero-based) of position s in tuple idx; position 0 is
  /// the most significant digit.
  int digit(std::size_t idx, int s) const {
    for (int r = members_ - 1; r > s; --r) idx /= static_cast<std::size_t>(levels_);
    return static_cast<int>(idx % static_cast<std::size_t>(levels_));
  }

  std::vector<int> occupation(std::size_t idx) const {
    std::vector<int> m(static_cast<std::size_t>(levels_), 0);
    for (int s = 0; s < members_; ++s) ++m[static_cast<std::size_t>(digit(idx, s))];
    return m;
  }

 private:
  int levels_;
  int members_;
  std::vector<double> psi_;
};

inline TupleState product_tuple_state(std::span<const double> g, int members) {
  TupleState t(static_cast<int>(g.size()), members);
  for (std::size_t idx = 0; idx < t.size(); ++idx) {
    double v = 1.0;
    for (int s = 0; s < members; ++s) v *= g[static_cast<std::size_t>(t.digit(idx, s))];
    t[idx] = v;
  }
  return t;
}

/// P_{M}: keeps entries whose occupation equals occ.
inline TupleState project(const TupleState& t, const OccupationVector& occ) {
  TupleState out(t.levels(), t.members());
  const std::vector<int> target(occ.counts().begin(), occ.counts().end());
  for (std::size_t idx = 0; idx < t.size(); ++idx) {
    if (t.occupation(idx) == target) out[idx] = t[idx];
  }
  return out;
}

inline double oracle_norm(const TupleState& t) {
  double s = 0.0;
  for (std::size_t idx = 0; idx < t.size(); ++idx) s += std::abs(t[idx]);
  return s;
}

/// exp(-beta H_M) applied entrywise.
inline TupleState apply_boltzmann(const TupleState& t, const Spectrum& spectrum, double beta) {
  TupleState out = t;
  for (std::size_t idx = 0; idx < t.size(); ++idx) {
    double e = 0.0;
    for (int s = 0; s < t.members(); ++s) e += spectrum[static_cast<std::size_t>(t.digit(idx, s))];
    out[idx] = t[idx] * std::exp(-beta * e);
  }
  return out;
}

/// R(Psi) = sum_{M} ||P_{M} Psi|| Phi_{M}, with Phi_{M} the indicator of the class.
inline TupleState reduce(const TupleState& t) {
  TupleState out(t.levels(), t.members());
  for (const auto& occ : enumerate_classes(t.levels(), t.members())) {
    const TupleState part = project(t, occ);
    const double mass = oracle_norm(part);
    const TupleState phi = project([&] {
      TupleState ones(t.levels(), t.members());
      for (std::size_t idx = 0; idx < ones.size(); ++idx) ones[idx] = 1.0;
      return ones;
    }(), occ);
    for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] += mass * phi[idx];
  }
  return out;
}

inline TupleState oracle_evolve(const TupleState& t, const Spectrum& spectrum, double beta) {
  if (spectrum.size() != static_cast<std::size_t>(t.levels())) {
    throw ValidationError("spectrum size does not match the tuple state");
  }
  return reduce(apply_boltzmann(t, spectrum, beta));
}

/// (1/||Psi||) sum over i_2..i_M of psi(i, i_2, ..., i_M).
inline double oracle_marginal(const TupleState& t, int level) {
  const double norm = oracle_norm(t);
  if (norm == 0.0) throw ValidationError("marginal of a zero-norm state");
  double s = 0.0;
  for (std::size_t idx = 0; idx < t.size(); ++idx) {
    if (t.digit(idx, 0) == level) s += t[idx];
  }
  return s / norm;
}

}  // namespace zerophase::oracle
