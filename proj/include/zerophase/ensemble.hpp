#pragma once

// Exact finite-M ensemble evolution on the occupation-class basis.
//
// A state of M independent trials over l levels is stored by its coefficient
// on each occupation class {M_1..M_l}. Product initial data and both maps of
// the evolution (Boltzmann reweighting and 1-norm data reduction) keep states
// constant on classes, so the class basis is exact; ensemble_oracle.hpp checks
// this against the dense l^M tuple array.
//
// Coefficients are held as logarithms; factorials enter through a table of
// ln k!. Reported quantities are exponentiated once.

#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zerophase/averaging.hpp"
#include "zerophase/error.hpp"
#include "zerophase/numeric.hpp"

namespace zerophase {

/// Counts M_1..M_l of ensemble members per level; sum equals the total M.
class OccupationVector {
 public:
  explicit OccupationVector(std::vector<int> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw ValidationError("occupation vector needs at least one level");
    total_ = 0;
    for (int c : counts_) {
      if (c < 0) throw ValidationError("occupation counts must be nonnegative");
      total_ += c;
    }
    if (total_ < 1) throw ValidationError("occupation total must be positive");
  }

  std::span<const int> counts() const noexcept { return counts_; }
  int total() const noexcept { return total_; }
  std::size_t levels() const noexcept { return counts_.size(); }
  int operator[](std::size_t i) const { return counts_[i]; }

  friend bool operator==(const OccupationVector&, const OccupationVector&) = default;
  friend auto operator<=>(const OccupationVector& a, const OccupationVector& b) {
    return a.counts_ <=> b.counts_;
  }

 private:
  std::vector<int> counts_;
  int total_ = 0;
};

/// All compositions of M into l nonnegative parts, in descending
/// lexicographic order: (M,0,..,0) first, (0,..,0,M) last.
inline std::vector<OccupationVector> enumerate_classes(int levels, int total) {
  if (levels < 1 || total < 1) throw ValidationError("need l >= 1 and M >= 1");
  std::vector<OccupationVector> out;
  std::vector<int> c(static_cast<std::size_t>(levels), 0);
  // Recursive fill of c[pos..] with the remaining count.
  auto fill = [&](auto&& self, std::size_t pos, int remaining) -> void {
    if (pos + 1 == c.size()) {
      c[pos] = remaining;
      out.emplace_back(c);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      c[pos] = v;
      self(self, pos + 1, remaining - v);
    }
  };
  fill(fill, 0, total);
  return out;
}

/// C(M + l - 1, l - 1), the number of occupation classes.
inline double class_count(int levels, int total) {
  return std::round(std::exp(log_binomial(total + levels - 1.0, levels - 1.0)));
}

/// Shared, immutable description of the class basis for a given (l, M).
class ClassTable {
 public:
  ClassTable(int levels, int total)
      : levels_(levels), total_(total), classes_(enumerate_classes(levels, total)),
        log_fact_(log_factorial_table(total)) {
    log_size_.reserve(classes_.size());
    for (std::size_t k = 0; k < classes_.size(); ++k) {
      double s = log_fact_[total];
      for (int c : classes_[k].counts()) s -= log_fact_[c];
      log_size_.push_back(s);
      index_.emplace(classes_[k], k);
    }
  }

  int levels() const noexcept { return levels_; }
  int total() const noexcept { return total_; }
  std::size_t size() const noexcept { return classes_.size(); }
  const OccupationVector& at(std::size_t k) const { return classes_[k]; }
  std::span<const OccupationVector> classes() const noexcept { return classes_; }

  /// ln(M! / prod M_i!), the number of tuples in class k.
  double log_class_size(std::size_t k) const { return log_size_[k]; }
  double log_factorial(int n) const { return log_fact_[n]; }

  std::size_t index_of(const OccupationVector& occ) const {
    auto it = index_.find(occ);
    if (it == index_.end()) throw ValidationError("occupation vector does not match (l, M)");
    return it->second;
  }

 private:
  int levels_;
  int total_;
  std::vector<OccupationVector> classes_;
  std::vector<double> log_fact_;
  std::vector<double> log_size_;
  std::map<OccupationVector, std::size_t> index_;
};

/// Class-constant ensemble vector after `step` evolution steps.
class EnsembleState {
 public:
  EnsembleState(std::shared_ptr<const ClassTable> table, std::vector<double> log_coeffs,
                int step)
      : table_(std::move(table)), log_coeffs_(std::move(log_coeffs)), step_(step) {
    if (log_coeffs_.size() != table_->size()) {
      throw ValidationError("coefficient count does not match the class table");
    }
  }

  int levels() const noexcept { return table_->levels(); }
  int members() const noexcept { return table_->total(); }
  int step() const noexcept { return step_; }
  const ClassTable& table() const noexcept { return *table_; }
  std::shared_ptr<const ClassTable> shared_table() const noexcept { return table_; }

  std::span<const double> log_coeffs() const noexcept { return log_coeffs_; }
  double log_coeff(std::size_t k) const { return log_coeffs_[k]; }
  double coeff(const OccupationVector& occ) const {
    return std::exp(log_coeffs_[table_->index_of(occ)]);
  }

  /// Classes with a nonzero coefficient, in table order.
  std::vector<std::pair<OccupationVector, double>> nonzero() const {
    std::vector<std::pair<OccupationVector, double>> out;
    for (std::size_t k = 0; k < log_coeffs_.size(); ++k) {
      if (log_coeffs_[k] != kNegInf) out.emplace_back(table_->at(k), std::exp(log_coeffs_[k]));
    }
    return out;
  }

 private:
  std::shared_ptr<const ClassTable> table_;
  std::vector<double> log_coeffs_;
  int step_ = 0;
};

namespace detail {

inline void check_weights(std::span<const double> g) {
  bool any = false;
  for (double x : g) {
    if (!std::isfinite(x) || x < 0.0) throw ValidationError("g must be finite and nonnegative");
    any = any || x > 0.0;
  }
  if (!any) throw ValidationError("g has empty support");
}

/// sum_i M_i ln g_i with 0 ln 0 = 0 and M_i > 0, g_i = 0 giving -inf.
inline double log_product_weight(std::span<const double> g, const OccupationVector& occ) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (occ[i] == 0) continue;
    if (g[i] == 0.0) return kNegInf;
    s += occ[i] * std::log(g[i]);
  }
  return s;
}

}  // namespace detail

/// Psi_g = g (x) ... (x) g: coefficient prod g_i^{M_i} on class {M}.
inline EnsembleState init_product_state(std::span<const double> g, int members) {
  detail::check_weights(g);
  if (members < 1) throw ValidationError("ensemble size M must be >= 1");
  auto table = std::make_shared<const ClassTable>(static_cast<int>(g.size()), members);
  std::vector<double> lc(table->size());
  for (std::size_t k = 0; k < table->size(); ++k) {
    lc[k] = detail::log_product_weight(g, table->at(k));
  }
  return EnsembleState(std::move(table), std::move(lc), 0);
}

/// One application of R(exp(-beta H_M) .): each class coefficient is
/// multiplied by exp(-beta sum lambda_i M_i) and by the class size.
inline EnsembleState evolve_step(const EnsembleState& state, const Spectrum& spectrum,
                                 double beta) {
  if (spectrum.size() != static_cast<std::size_t>(state.levels())) {
    throw ValidationError("spectrum size does not match the ensemble level count");
  }
  const ClassTable& t = state.table();
  std::vector<double> lc(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double c = state.log_coeff(k);
    if (c == kNegInf) {
      lc[k] = kNegInf;
      continue;
    }
    double energy = 0.0;
    const auto& occ = t.at(k);
    for (std::size_t i = 0; i < occ.levels(); ++i) energy += spectrum[i] * occ[i];
    lc[k] = c - beta * energy + t.log_class_size(k);
  }
  return EnsembleState(state.shared_table(), std::move(lc), state.step() + 1);
}

inline EnsembleState evolve(EnsembleState state, const Spectrum& spectrum, double beta,
                            int steps) {
  for (int s = 0; s < steps; ++s) state = evolve_step(state, spectrum, beta);
  return state;
}

/// ln of (M!)^n prod_i g_i^{M_i} e^{-n beta lambda_i M_i} / (M_i!)^n.
inline double log_closed_form_coeff(std::span<const double> g, const Spectrum& spectrum,
                                    double beta, int steps, const OccupationVector& occ) {
  detail::check_weights(g);
  if (g.size() != spectrum.size() || occ.levels() != g.size()) {
    throw ValidationError("g, spectrum and occupation differ in length");
  }
  const auto lf = log_factorial_table(occ.total());
  double s = detail::log_product_weight(g, occ);
  if (s == kNegInf) return s;
  s += steps * lf[occ.total()];
  for (std::size_t i = 0; i < g.size(); ++i) {
    s -= steps * (beta * spectrum[i] * occ[i] + lf[occ[i]]);
  }
  return s;
}

inline double closed_form_coeff(std::span<const double> g, const Spectrum& spectrum, double beta,
                                int steps, const OccupationVector& occ) {
  return std::exp(log_closed_form_coeff(g, spectrum, beta, steps, occ));
}

/// ln ||Psi||, the 1-norm counting every tuple of each class.
inline double log_state_norm(const EnsembleState& state) {
  const ClassTable& t = state.table();
  std::vector<double> terms(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) terms[k] = state.log_coeff(k) + t.log_class_size(k);
  return log_sum_exp(terms);
}

inline double state_norm(const EnsembleState& state) { return std::exp(log_state_norm(state)); }

/// Fraction of tuple positions at each level, weighted by the coefficients:
/// w_i = sum_{M} c_M |class| (M_i / M) / ||Psi||. Sums to one.
inline std::vector<double> marginals(const EnsembleState& state) {
  const double ln_norm = log_state_norm(state);
  if (ln_norm == kNegInf) throw ValidationError("marginal of a zero-norm state");
  const ClassTable& t = state.table();
  const int l = t.levels();
  std::vector<double> w(static_cast<std::size_t>(l));
  std::vector<double> terms(t.size());
  for (int i = 0; i < l; ++i) {
    for (std::size_t k = 0; k < t.size(); ++k) {
      const int mi = t.at(k)[i];
      terms[k] = mi == 0 ? kNegInf
                         : state.log_coeff(k) + t.log_class_size(k) +
                               std::log(static_cast<double>(mi) / t.total());
    }
    w[i] = std::exp(log_sum_exp(terms) - ln_norm);
  }
  return w;
}

/// Marginal of level i (zero-based).
inline double marginal(const EnsembleState& state, std::size_t i) {
  if (i >= static_cast<std::size_t>(state.levels())) throw ValidationError("level index out of range");
  return marginals(state)[i];
}

/// F(n, g, M) = -ln ||Psi_g(n)|| / (M beta (n + 1)), n = state.step().
inline double ensemble_free_energy(const EnsembleState& state, double beta) {
  return -log_state_norm(state) / (state.members() * beta * (state.step() + 1));
}

}  // namespace zerophase
