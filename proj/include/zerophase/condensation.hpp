#pragma once

// Debt-velocity accounting, a Bose-occupancy stand-in for the condensation
// threshold over Pareto-weighted levels, K-currency threshold scaling, and the
// two-level social-explosion scan.
//
// N0 values are model-dependent: the threshold formula is our fixed choice,
// N0(theta) = sum_i alpha_i i / (exp(i^q / theta) - 1).

#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "zerophase/error.hpp"
#include "zerophase/numeric.hpp"

namespace zerophase::condensation {

struct DebtPosition {
  double principal = 0.0;
  double velocity = 1.0;  ///< turnovers per year
};

struct LongTermDebt {
  double principal = 0.0;
  double years = 1.0;  ///< contributes principal / years per year
};

struct DebtLedger {
  std::vector<DebtPosition> positions;
  std::vector<LongTermDebt> long_term;

  void validate() const {
    for (const auto& p : positions) {
      if (!(p.principal >= 0.0) || !std::isfinite(p.principal)) throw ValidationError("principal must be >= 0");
      if (!(p.velocity > 0.0) || !std::isfinite(p.velocity)) throw ValidationError("velocity must be > 0");
    }
    for (const auto& d : long_term) {
      if (!(d.principal >= 0.0) || !std::isfinite(d.principal)) throw ValidationError("principal must be >= 0");
      if (!(d.years >= 1.0) || !std::isfinite(d.years)) throw ValidationError("long-term years must be >= 1");
    }
  }

  double total() const {
    double M = 0.0;
    for (const auto& p : positions) M += p.principal * p.velocity;
    for (const auto& d : long_term) M += d.principal / d.years;
    return M;
  }
};

/// Reads `kind principal value` lines. kind is `short` (value = velocity)
/// or `long` (value = years). Blank lines and `#` comments are skipped.
inline DebtLedger parse_ledger(std::istream& in) {
  DebtLedger ledger;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ss(line);
    std::string kind;
    if (!(ss >> kind)) continue;
    double a = 0.0, b = 0.0;
    std::string extra;
    if (!(ss >> a >> b) || (ss >> extra)) {
      throw ValidationError("ledger line " + std::to_string(lineno) + ": expected `kind principal value`");
    }
    if (kind == "short") {
      ledger.positions.push_back({a, b});
    } else if (kind == "long") {
      ledger.long_term.push_back({a, b});
    } else {
      throw ValidationError("ledger line " + std::to_string(lineno) + ": unknown kind '" + kind + "'");
    }
  }
  ledger.validate();
  return ledger;
}

struct DebtSupply {
  double M = 0.0;
  double N = 0.0;
};

inline DebtSupply debt_supply(const DebtLedger& ledger, double sigma_avg) {
  if (!(sigma_avg > 0.0)) throw ValidationError("sigma_avg must be positive");
  ledger.validate();
  const double M = ledger.total();
  return {M, M / sigma_avg};
}

/// Yearly value of the part already done minus (total cost - total
/// expenditure) / L. One reading of an ambiguous sentence.
inline double long_term_gdp_contribution(double done_per_year, double total_cost,
                                         double total_expenditure, double years) {
  if (!(years >= 1.0)) throw ValidationError("years must be >= 1");
  return done_per_year - (total_cost - total_expenditure) / years;
}

struct ParetoLevels {
  double gamma = 1.5;
  int k = 100;
  double alpha1 = 1.0;
  double q = 2.0;

  void validate() const {
    if (!(gamma > 0.0)) throw ValidationError("Pareto index must be positive");
    if (k < 1) throw ValidationError("level count must be >= 1");
    if (!(alpha1 > 0.0)) throw ValidationError("alpha1 must be positive");
    if (!(q > 0.0)) throw ValidationError("energy exponent must be positive");
  }
  double alpha(int i) const { return alpha1 * std::pow(static_cast<double>(i), -gamma); }
  double energy(int i) const { return std::pow(static_cast<double>(i), q); }
};

namespace detail {

inline double bose_occupation(double energy, double theta) {
  const double x = energy / theta;
  if (x > 700.0) return 0.0;
  return 1.0 / std::expm1(x);
}

}  // namespace detail

inline double critical_number(const ParetoLevels& lv, double theta) {
  lv.validate();
  if (!(theta > 0.0)) throw ValidationError("theta must be positive");
  double s = 0.0;
  for (int i = 1; i <= lv.k; ++i) s += lv.alpha(i) * i * detail::bose_occupation(lv.energy(i), theta);
  return s;
}

/// Money carried at zero chemical potential: sum alpha_i i^q n_i.
inline double money_at(const ParetoLevels& lv, double theta) {
  lv.validate();
  if (!(theta > 0.0)) throw ValidationError("theta must be positive");
  double s = 0.0;
  for (int i = 1; i <= lv.k; ++i) {
    s += lv.alpha(i) * lv.energy(i) * detail::bose_occupation(lv.energy(i), theta);
  }
  return s;
}

struct CondensateExcess {
  double excess = 0.0;
  double N0 = 0.0;
  std::string assigned_level;
};

inline CondensateExcess condensate_excess(const ParetoLevels& lv, double theta, double N) {
  if (!(N >= 0.0)) throw ValidationError("N must be >= 0");
  const double N0 = critical_number(lv, theta);
  return {std::max(0.0, N - N0), N0, "long-term (slowest turnover) debts"};
}

using ThresholdModel = std::function<double(double)>;

inline ThresholdModel sqrt_threshold_model(double c = 1.0) {
  return [c](double M) { return c * std::sqrt(M); };
}

/// N0 as a function of money: theta solves money_at(theta) = M.
inline ThresholdModel empirical_threshold_model(ParetoLevels lv) {
  lv.validate();
  return [lv](double M) {
    if (!(M > 0.0)) throw ValidationError("money must be positive");
    auto f = [&](double u) { return std::log(money_at(lv, std::exp(u))) - std::log(M); };
    double lo = -2.0, hi = 2.0;
    while (f(lo) > 0.0) lo -= 2.0;
    while (f(hi) < 0.0) hi += 2.0;
    return critical_number(lv, std::exp(find_root(f, lo, hi)));
  };
}

inline double multi_currency_threshold(double M_total, int K, const ThresholdModel& model) {
  if (K < 1) throw ValidationError("K must be >= 1");
  if (!(M_total > 0.0)) throw ValidationError("money must be positive");
  const double whole = model(M_total);
  if (!(whole > 0.0)) throw ValidationError("threshold model must be positive");
  return K * model(M_total / K) / whole;
}

enum class SignConvention { free_energy_minus, paper_plus };

struct TwoLevelEconomy {
  long n1 = 50;
  long n2 = 50;
  long N = 100;
  double gamma_int = 1.5;
  SignConvention sign = SignConvention::free_energy_minus;

  static constexpr long kMaxN = 5000;

  void validate() const {
    if (n1 < 1 || n2 < 1) throw ValidationError("population counts must be >= 1");
    if (N < 0) throw ValidationError("N must be >= 0");
    if (N > kMaxN) throw GuardExceeded("N exceeds exhaustive scan guard (5000)");
    if (!(gamma_int > 1.0 && gamma_int < 2.0)) throw ValidationError("interaction must satisfy 1 < gamma < 2");
  }

  /// N1 + 2 N2 - gamma (N1^2 + N2^2) / (2N), levels 1 and 2.
  double energy(long N1) const {
    const double a = static_cast<double>(N1), b = static_cast<double>(N - N1);
    const double quad = N == 0 ? 0.0 : gamma_int * (a * a + b * b) / (2.0 * static_cast<double>(N));
    return a + 2.0 * b - quad;
  }

  /// log of the Bose count of placing N1 and N - N1 units on n1 and n2 states.
  double log_count(long N1) const {
    const long N2 = N - N1;
    return log_binomial(N1 + n1 - 1, N1) + log_binomial(N2 + n2 - 1, N2);
  }

  double functional(long N1, double T) const {
    const double s = sign == SignConvention::free_energy_minus ? -1.0 : 1.0;
    return energy(N1) + s * T * log_count(N1);
  }
};

struct SocialRow {
  double T = 0.0;
  long argmin = 0;
  double energy = 0.0;     ///< bracketed energy part at argmin
  double log_count = 0.0;  ///< entropy part at argmin
  double value = 0.0;      ///< full functional at argmin
};

struct SocialScan {
  std::vector<SocialRow> rows;
  std::optional<double> T_star;  ///< first T where argmin moves by >= 0.9 N
  long jump_size = 0;            ///< that jump, or the largest one seen
  double kinetic_outburst = 0.0; ///< change of the energy part across it
};

inline SocialScan social_explosion_scan(const TwoLevelEconomy& eco, std::span<const double> T_grid) {
  eco.validate();
  for (double T : T_grid) {
    if (!(T >= 0.0) || !std::isfinite(T)) throw ValidationError("temperatures must be finite and >= 0");
  }
  SocialScan out;
  out.rows.resize(T_grid.size());
  parallel_for(T_grid.size(), [&](std::size_t j) {
    const double T = T_grid[j];
    long best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (long N1 = 0; N1 <= eco.N; ++N1) {
      const double v = eco.functional(N1, T);
      if (v < best_v) {
        best_v = v;
        best = N1;
      }
    }
    out.rows[j] = {T, best, eco.energy(best), eco.log_count(best), best_v};
  });
  const double need = 0.9 * static_cast<double>(eco.N);
  for (std::size_t j = 1; j < out.rows.size(); ++j) {
    const long d = std::labs(out.rows[j].argmin - out.rows[j - 1].argmin);
    const bool big = eco.N > 0 && static_cast<double>(d) >= need;
    if (big && !out.T_star) {
      out.T_star = out.rows[j].T;
      out.jump_size = d;
      out.kinetic_outburst = out.rows[j].energy - out.rows[j - 1].energy;
    }
    if (!out.T_star && d > out.jump_size) {
      out.jump_size = d;
      out.kinetic_outburst = out.rows[j].energy - out.rows[j - 1].energy;
    }
  }
  return out;
}

inline std::vector<double> uniform_grid(double lo, double hi, int count) {
  if (count < 2 || !(hi > lo)) throw ValidationError("grid needs count >= 2 and lo < hi");
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) g[i] = lo + (hi - lo) * i / (count - 1);
  return g;
}

}  // namespace zerophase::condensation
