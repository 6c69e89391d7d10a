#pragma once

// Command-line front end. run() is callable in-process so tests can drive
// every subcommand without spawning the binary.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zerophase/asymptotics.hpp"
#include "zerophase/averaging.hpp"
#include "zerophase/bose_gas.hpp"
#include "zerophase/condensation.hpp"
#include "zerophase/ensemble.hpp"
#include "zerophase/entropy_flow.hpp"
#include "zerophase/error.hpp"

namespace zerophase::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSolver = 3;

struct ConfigEntry {
  std::string value;
  int line = 0;
};

struct Config {
  std::map<std::string, ConfigEntry> values;
  std::vector<std::string> warnings;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// `key = value` lines, `#` comments, blank lines ignored. Duplicate keys:
/// the last one wins and a warning is recorded.
inline Config parse_config(std::istream& in, const std::string& origin = "config") {
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ValidationError(where + ": expected `key = value`");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key.find_first_of(" \t") != std::string::npos) {
      throw ValidationError(where + ": malformed key");
    }
    if (value.empty()) throw ValidationError(where + ": missing value for '" + key + "'");
    if (auto it = cfg.values.find(key); it != cfg.values.end()) {
      cfg.warnings.push_back("warning: " + where + ": duplicate key '" + key + "' overrides line " +
                             std::to_string(it->second.line));
    }
    cfg.values[key] = {value, lineno};
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

inline std::vector<double> parse_list(const std::string& text, const std::string& name) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) {
      throw ValidationError("--" + name + ": cannot parse '" + item + "' as a number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("--" + name + ": empty list");
  return out;
}

inline std::vector<int> parse_int_list(const std::string& text, const std::string& name) {
  std::vector<int> out;
  for (double v : parse_list(text, name)) {
    if (v != std::nearbyint(v) || std::abs(v) > 1e9) throw ValidationError("--" + name + ": expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

inline std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// Accumulates rows and writes them with a header to a file or a stream.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

  void row(const std::vector<std::string>& cells) { rows_.push_back(cells); }
  void row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (double c : cells) s.push_back(fmt(c));
    rows_.push_back(std::move(s));
  }

  void write(std::ostream& os) const {
    write_line(os, header_);
    for (const auto& r : rows_) write_line(os, r);
  }

  void emit(const std::string& path, std::ostream& fallback) const {
    if (path.empty()) {
      write(fallback);
      return;
    }
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot write '" + path + "'");
    write(f);
  }

 private:
  static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

struct Options {
  std::string out;

  // avg
  std::string lambda, weights, kernel = "exp";
  double beta = 1.0, a = 1.0, d = 0.0;
  std::optional<double> shift;

  // spectrum
  int K = 3, degree = 1, N = 3, trials = 100;
  std::uint64_t seed = 1;

  // evolve / limits
  std::string g;
  int M = 1, steps = 1, n = 0;
  std::string Ms;

  // bose
  std::string levels;
  double V = 1.0, gb = 1.0;
  std::optional<double> D;
  std::optional<int> branch;
  std::optional<double> theta_min, theta_max;
  int points = 40;

  // flow
  int dims = 1, nodes = 101;
  double lo = -1.0, hi = 1.0, coef = 1.0, dt = 0.01, c = 1.0;
  std::string field = "quadratic", field_file, times = "0.5", mode = "ascent_max", x0,
              boundary = "clamped", trajectory_out;
  int flow_steps = 100;

  // debt
  std::string ledger, model = "sqrt";
  double sigma_avg = 1.0, gamma = 1.5, q = 2.0, theta = 1.0;
  int level_count = 100, currencies = 1;

  // social
  long n1 = 50, n2 = 50, Nsoc = 100;
  double gamma_int = 1.5, T_min = 0.0, T_max = 10.0;
  std::string sign = "minus";
  int T_points = 200;
};

struct Commands {
  CLI::App* avg = nullptr;
  CLI::App* spectrum = nullptr;
  CLI::App* check = nullptr;
  CLI::App* probe = nullptr;
  CLI::App* evolve = nullptr;
  CLI::App* limits = nullptr;
  CLI::App* bose = nullptr;
  CLI::App* sweep = nullptr;
  CLI::App* flow = nullptr;
  CLI::App* debt = nullptr;
  CLI::App* social = nullptr;
};

inline Commands build_app(CLI::App& app, Options& o) {
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");
  Commands c;
  auto out_opt = [&o](CLI::App* s) { s->add_option("--out", o.out, "CSV output path (default stdout)"); };
  auto cfg_opt = [](CLI::App* s) {
    s->add_option("--config", "key = value file; flags override it");
  };

  c.avg = app.add_subcommand("avg", "Nonlinear average of a spectrum");
  c.avg->add_option("--lambda", o.lambda, "Levels, comma separated")->required();
  c.avg->add_option("--weights", o.weights, "Nonnegative weights")->required();
  c.avg->add_option("--kernel", o.kernel, "exp or linear")->check(CLI::IsMember({"exp", "linear"}));
  c.avg->add_option("--beta", o.beta, "Exponential kernel parameter");
  c.avg->add_option("--a", o.a, "Linear kernel slope");
  c.avg->add_option("--d", o.d, "Linear kernel offset");
  c.avg->add_option("--shift", o.shift, "Also check the shift axiom with this shift");
  out_opt(c.avg);
  cfg_opt(c.avg);

  c.spectrum = app.add_subcommand("spectrum", "Integer-relation checks");
  c.spectrum->require_subcommand(1);
  c.check = c.spectrum->add_subcommand("check", "Search for a bounded integer relation");
  c.check->add_option("--lambda", o.lambda, "Levels")->required();
  c.check->add_option("--K", o.K, "Coefficient bound");
  out_opt(c.check);
  cfg_opt(c.check);
  c.probe = c.spectrum->add_subcommand("probe", "Random polynomial spectra");
  c.probe->add_option("--degree", o.degree, "Polynomial degree p");
  c.probe->add_option("--N", o.N, "Largest argument");
  c.probe->add_option("--trials", o.trials, "Number of random polynomials");
  c.probe->add_option("--K", o.K, "Coefficient bound");
  c.probe->add_option("--seed", o.seed, "RNG seed");
  out_opt(c.probe);
  cfg_opt(c.probe);

  c.evolve = app.add_subcommand("evolve", "Exact finite-ensemble evolution");
  c.evolve->add_option("--g", o.g, "Initial weights")->required();
  c.evolve->add_option("--lambda", o.lambda, "Levels")->required();
  c.evolve->add_option("--beta", o.beta, "Inverse temperature");
  c.evolve->add_option("--M", o.M, "Ensemble size");
  c.evolve->add_option("--steps", o.steps, "Evolution steps");
  out_opt(c.evolve);
  cfg_opt(c.evolve);

  c.limits = app.add_subcommand("limits", "Large-ensemble limits");
  c.limits->add_option("--g", o.g, "Initial weights")->required();
  c.limits->add_option("--lambda", o.lambda, "Levels")->required();
  c.limits->add_option("--beta", o.beta, "Inverse temperature");
  c.limits->add_option("--n", o.n, "Evolution step");
  c.limits->add_option("--M", o.Ms, "Ensemble sizes for a convergence table");
  out_opt(c.limits);
  cfg_opt(c.limits);

  c.bose = app.add_subcommand("bose", "Solvable boson model");
  c.bose->require_subcommand(1);
  c.sweep = c.bose->add_subcommand("sweep", "Follow a metastable branch in temperature");
  c.sweep->add_option("--levels", o.levels, "Level energies")->required();
  c.sweep->add_option("--V", o.V, "Interaction strength")->required();
  c.sweep->add_option("--g", o.gb, "Degeneracy ratio")->required();
  c.sweep->add_option("--D", o.D, "Interaction width (default: half the smallest gap)");
  c.sweep->add_option("--branch", o.branch, "Seed level index (default: highest)");
  c.sweep->add_option("--theta-min", o.theta_min, "First temperature");
  c.sweep->add_option("--theta-max", o.theta_max, "Last temperature");
  c.sweep->add_option("--points", o.points, "Grid size");
  out_opt(c.sweep);
  cfg_opt(c.sweep);

  c.flow = app.add_subcommand("flow", "Entropy field evolution and ascent");
  c.flow->add_option("--dims", o.dims, "1 or 2")->check(CLI::Range(1, 2));
  c.flow->add_option("--lo", o.lo, "Box lower edge");
  c.flow->add_option("--hi", o.hi, "Box upper edge");
  c.flow->add_option("--n", o.nodes, "Nodes per axis");
  c.flow->add_option("--field", o.field, "quadratic, sine, linear or file")
      ->check(CLI::IsMember({"quadratic", "sine", "linear", "file"}));
  c.flow->add_option("--field-file", o.field_file, "Node values, row major");
  c.flow->add_option("--a", o.coef, "Field coefficient");
  c.flow->add_option("--times", o.times, "Snapshot times");
  c.flow->add_option("--mode", o.mode, "ascent_max or paper_min")
      ->check(CLI::IsMember({"ascent_max", "paper_min"}));
  c.flow->add_option("--x0", o.x0, "Trajectory start");
  c.flow->add_option("--dt", o.dt, "Trajectory step");
  c.flow->add_option("--steps", o.flow_steps, "Trajectory steps");
  c.flow->add_option("--c", o.c, "Constant c(H)");
  c.flow->add_option("--boundary", o.boundary, "clamped or periodic")
      ->check(CLI::IsMember({"clamped", "periodic"}));
  c.flow->add_option("--trajectory-out", o.trajectory_out, "Trajectory CSV path");
  out_opt(c.flow);
  cfg_opt(c.flow);

  c.debt = app.add_subcommand("debt", "Debt supply and condensation threshold");
  c.debt->add_option("--ledger", o.ledger, "Ledger file")->required();
  c.debt->add_option("--sigma-avg", o.sigma_avg, "Average velocity");
  c.debt->add_option("--gamma", o.gamma, "Pareto index");
  c.debt->add_option("--k", o.level_count, "Level count");
  c.debt->add_option("--q", o.q, "Energy exponent");
  c.debt->add_option("--theta", o.theta, "Temperature");
  c.debt->add_option("--currencies", o.currencies, "Currency count K");
  c.debt->add_option("--model", o.model, "sqrt or empirical")->check(CLI::IsMember({"sqrt", "empirical"}));
  out_opt(c.debt);
  cfg_opt(c.debt);

  c.social = app.add_subcommand("social", "Two-level social explosion scan");
  c.social->add_option("--n1", o.n1, "First population");
  c.social->add_option("--n2", o.n2, "Second population");
  c.social->add_option("--N", o.Nsoc, "Money units");
  c.social->add_option("--gamma", o.gamma_int, "Interaction, 1 < gamma < 2");
  c.social->add_option("--sign", o.sign, "minus or plus")->check(CLI::IsMember({"minus", "plus"}));
  c.social->add_option("--T-min", o.T_min, "First temperature");
  c.social->add_option("--T-max", o.T_max, "Last temperature");
  c.social->add_option("--points", o.T_points, "Grid size");
  out_opt(c.social);
  cfg_opt(c.social);
  return c;
}

// ---------------------------------------------------------------------------
// Handlers

inline void run_avg(const Options& o, std::ostream& out) {
  Spectrum lam(parse_list(o.lambda, "lambda"));
  WeightVector w(parse_list(o.weights, "weights"));
  auto kernel = o.kernel == "exp" ? AveragingKernel::exponential(o.beta) : AveragingKernel::linear(o.a, o.d);
  const double avg = financial_average(kernel, lam, w);
  std::vector<std::string> header{"average"};
  std::vector<double> row{avg};
  if (o.shift) {
    auto r = verify_shift_axiom(kernel, lam, w, *o.shift);
    header.insert(header.end(), {"shift", "shift_c", "shift_residual"});
    row.insert(row.end(), {*o.shift, r.c, r.residual});
  }
  Csv csv(header);
  csv.row(row);
  csv.emit(o.out, out);
  out << "avg: kernel=" << o.kernel << " average=" << fmt(avg) << '\n';
}

inline void run_check(const Options& o, std::ostream& out) {
  Spectrum lam(parse_list(o.lambda, "lambda"));
  auto r = check_resonance_free(lam, o.K);
  Csv csv({"K", "holds", "witness"});
  csv.row(std::vector<std::string>{std::to_string(o.K), r.holds ? "1" : "0",
                                   r.witness ? join_ints(*r.witness) : ""});
  csv.emit(o.out, out);
  out << "spectrum check: K=" << o.K << " resonance_free=" << (r.holds ? "yes" : "no") << '\n';
}

inline void run_probe(const Options& o, std::ostream& out) {
  auto r = probe_polynomial_resonance(o.degree, o.N, o.trials, o.K, o.seed);
  Csv csv({"degree", "N", "K", "trials", "failures", "fail_fraction", "first_witness"});
  csv.row(std::vector<std::string>{std::to_string(o.degree), std::to_string(o.N), std::to_string(o.K),
                                   std::to_string(r.trials), std::to_string(r.failures),
                                   fmt(r.fail_fraction), r.first_witness ? join_ints(*r.first_witness) : ""});
  csv.emit(o.out, out);
  out << "spectrum probe: fail_fraction=" << fmt(r.fail_fraction) << " (" << r.failures << "/" << r.trials
      << ")\n";
}

inline void run_evolve(const Options& o, std::ostream& out) {
  auto g = parse_list(o.g, "g");
  Spectrum lam(parse_list(o.lambda, "lambda"));
  if (g.size() != lam.size()) throw ValidationError("--g and --lambda differ in length");
  if (!(o.beta > 0.0)) throw ValidationError("beta must be positive");
  if (o.steps < 0) throw ValidationError("steps must be nonnegative");
  std::vector<std::string> header{"step", "norm", "log_norm", "free_energy"};
  for (std::size_t i = 0; i < g.size(); ++i) header.push_back("w_" + std::to_string(i));
  Csv csv(header);
  auto state = init_product_state(g, o.M);
  for (int s = 0;; ++s) {
    std::vector<double> row{static_cast<double>(s), state_norm(state), log_state_norm(state),
                            ensemble_free_energy(state, o.beta)};
    for (double w : marginals(state)) row.push_back(w);
    csv.row(row);
    if (s == o.steps) break;
    state = evolve_step(state, lam, o.beta);
  }
  csv.emit(o.out, out);
  out << "evolve: M=" << o.M << " steps=" << o.steps << " log_norm=" << fmt(log_state_norm(state))
      << " free_energy=" << fmt(ensemble_free_energy(state, o.beta)) << '\n';
}

inline void run_limits(const Options& o, std::ostream& out) {
  auto g = parse_list(o.g, "g");
  Spectrum lam(parse_list(o.lambda, "lambda"));
  const double F = limit_F(g, lam, o.beta, o.n);
  const auto w = limit_w(g, lam, o.beta, o.n);
  if (o.Ms.empty()) {
    std::vector<std::string> header{"n", "F_limit"};
    for (std::size_t i = 0; i < w.size(); ++i) header.push_back("w_limit_" + std::to_string(i));
    Csv csv(header);
    std::vector<double> row{static_cast<double>(o.n), F};
    row.insert(row.end(), w.begin(), w.end());
    csv.row(row);
    csv.emit(o.out, out);
  } else {
    auto Ms = parse_int_list(o.Ms, "M");
    auto r = convergence_scan(g, lam, o.beta, o.n, Ms);
    Csv csv({"M", "F_exact", "F_limit", "error", "w_error"});
    for (std::size_t j = 0; j < Ms.size(); ++j) {
      csv.row(std::vector<double>{static_cast<double>(Ms[j]), r.F_exact[j], F, r.errors[j], r.w_errors[j]});
    }
    csv.emit(o.out, out);
  }
  out << "limits: n=" << o.n << " F_limit=" << fmt(F) << '\n';
}

inline void run_sweep(const Options& o, std::ostream& out) {
  auto lambdas = parse_list(o.levels, "levels");
  double D = 0.0;
  if (o.D) {
    D = *o.D;
  } else {
    auto sorted = lambdas;
    std::sort(sorted.begin(), sorted.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < sorted.size(); ++i) gap = std::min(gap, sorted[i] - sorted[i - 1]);
    D = std::isfinite(gap) ? 0.5 * gap : 1.0;
  }
  auto ls = bose::LevelSet::direct(std::move(lambdas), o.gb, o.V, D);
  const std::size_t l = o.branch ? static_cast<std::size_t>(*o.branch) : ls.size() - 1;
  if (o.branch && *o.branch < 0) throw ValidationError("--branch must be a level index");
  if (l == ls.argmin()) throw ValidationError("--branch names the ground level; pick a metastable seed");
  const auto cert = bose::zeroth_order_certificate(ls, l);
  const double lo = o.theta_min.value_or(0.05 * cert.theta_c);
  const double hi = o.theta_max.value_or(1.5 * cert.theta_c);
  const auto grid = bose::geometric_grid(lo, hi, o.points);
  const auto sw = bose::continue_branch(ls, l, grid);
  std::vector<std::string> header{"theta", "mu", "f", "s", "stable", "margin"};
  for (std::size_t i = 0; i < ls.size(); ++i) header.push_back("m_" + std::to_string(i));
  Csv csv(header);
  for (const auto& b : sw.points) {
    std::vector<double> row{b.theta, b.mu, b.f, b.s, b.stable ? 1.0 : 0.0, b.margin};
    row.insert(row.end(), b.m.begin(), b.m.end());
    csv.row(row);
  }
  csv.emit(o.out, out);
  out << "bose sweep: seed=" << l << " theta_c=" << fmt(cert.theta_c)
      << " theta_c_bisection=" << (sw.theta_c_bisection ? fmt(*sw.theta_c_bisection) : "none")
      << " f_meta=" << fmt(cert.f_meta) << " f_ground=" << fmt(cert.f_ground) << " jump=" << fmt(cert.jump)
      << " accepted=" << sw.points.size() << '\n';
}

inline flow::EntropyField make_field(const Options& o) {
  if (o.nodes < 3) throw ValidationError("--n must be >= 3");
  auto grid = o.dims == 1 ? flow::Grid::line(o.lo, o.hi, o.nodes)
                          : flow::Grid::box(o.lo, o.hi, o.nodes, o.lo, o.hi, o.nodes);
  if (o.field == "file") {
    if (o.field_file.empty()) throw ValidationError("--field file needs --field-file");
    std::ifstream in(o.field_file);
    if (!in) throw ValidationError("cannot open field file '" + o.field_file + "'");
    std::vector<double> v;
    std::string tok;
    while (in >> tok) {
      for (auto& ch : tok) {
        if (ch == ',') ch = ' ';
      }
      std::istringstream ss(tok);
      std::string part;
      while (ss >> part) v.push_back(parse_list(part, "field-file")[0]);
    }
    return flow::EntropyField(grid, std::move(v));
  }
  const double a = o.coef;
  if (o.field == "quadratic") {
    return flow::EntropyField::sample(grid, [a](const flow::Point& x) {
      double s = 0.0;
      for (double xi : x) s += xi * xi;
      return -a * s;
    });
  }
  if (o.field == "sine") {
    return flow::EntropyField::sample(grid, [a](const flow::Point& x) {
      double s = a * std::sin(x[0]);
      if (x.size() > 1) s *= std::cos(x[1]);
      return s;
    });
  }
  return flow::EntropyField::sample(grid, [a](const flow::Point& x) {
    double s = 0.0;
    for (double xi : x) s += a * xi;
    return s;
  });
}

inline void run_flow(const Options& o, std::ostream& out) {
  const auto field = make_field(o);
  const auto times = parse_list(o.times, "times");
  const auto mode = o.mode == "paper_min" ? flow::HopfLaxMode::paper_min : flow::HopfLaxMode::ascent_max;
  const auto& grid = field.grid();
  std::vector<std::string> header{"t"};
  for (std::size_t d = 0; d < grid.dims(); ++d) header.push_back("x" + std::to_string(d));
  header.insert(header.end(), {"H0", "H_hopf_lax", "H_smoothed"});
  Csv nodes(header);
  for (double t : times) {
    const auto hl = flow::hopf_lax(field, t, mode);
    const auto sm = flow::log_gaussian_smoothing(field, t);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::vector<double> row{t};
      for (double xi : grid.coords(i)) row.push_back(xi);
      row.insert(row.end(), {field[i], hl[i], sm[i]});
      nodes.row(row);
    }
  }
  flow::FlowConfig cfg;
  const double c = o.c;
  if (!(c > 0.0)) throw ValidationError("--c must be positive");
  cfg.c_of_H = [c](double) { return c; };
  cfg.dt = o.dt;
  cfg.steps = o.flow_steps;
  cfg.boundary = o.boundary == "periodic" ? flow::Boundary::periodic : flow::Boundary::clamped;
  flow::Point x0 = o.x0.empty() ? grid.coords(grid.size() / 3) : parse_list(o.x0, "x0");
  const auto tr = flow::ascent_trajectory(field, cfg, x0);
  std::vector<std::string> th{"step", "t"};
  for (std::size_t d = 0; d < grid.dims(); ++d) th.push_back("x" + std::to_string(d));
  th.push_back("H");
  Csv traj(th);
  for (std::size_t s = 0; s < tr.points.size(); ++s) {
    std::vector<double> row{static_cast<double>(s), s * cfg.dt};
    row.insert(row.end(), tr.points[s].begin(), tr.points[s].end());
    row.push_back(tr.H[s]);
    traj.row(row);
  }
  nodes.emit(o.out, out);
  if (o.trajectory_out.empty() && o.out.empty()) out << '\n';
  traj.emit(o.trajectory_out, out);
  out << "flow: nodes=" << grid.size() << " snapshots=" << times.size() << " mode=" << o.mode
      << " trajectory_points=" << tr.points.size() << " exited=" << (tr.exited ? "yes" : "no")
      << " H_start=" << fmt(tr.H.front()) << " H_end=" << fmt(tr.H.back()) << '\n';
}

inline void run_debt(const Options& o, std::ostream& out) {
  std::ifstream in(o.ledger);
  if (!in) throw ValidationError("cannot open ledger '" + o.ledger + "'");
  const auto ledger = condensation::parse_ledger(in);
  const auto supply = condensation::debt_supply(ledger, o.sigma_avg);
  condensation::ParetoLevels lv{o.gamma, o.level_count, 1.0, o.q};
  const auto ex = condensation::condensate_excess(lv, o.theta, supply.N);
  double ratio = 1.0;
  if (supply.M > 0.0) {
    auto model = o.model == "sqrt" ? condensation::sqrt_threshold_model()
                                   : condensation::empirical_threshold_model(lv);
    ratio = condensation::multi_currency_threshold(supply.M, o.currencies, model);
  }
  Csv csv({"M", "N", "N0", "excess", "K", "model", "threshold_ratio", "sqrt_K"});
  csv.row(std::vector<std::string>{fmt(supply.M), fmt(supply.N), fmt(ex.N0), fmt(ex.excess),
                                   std::to_string(o.currencies), o.model, fmt(ratio),
                                   fmt(std::sqrt(static_cast<double>(o.currencies)))});
  csv.emit(o.out, out);
  out << "debt: M=" << fmt(supply.M) << " N=" << fmt(supply.N) << " N0(model)=" << fmt(ex.N0)
      << " excess=" << fmt(ex.excess) << " on " << ex.assigned_level << '\n';
}

inline void run_social(const Options& o, std::ostream& out) {
  condensation::TwoLevelEconomy eco{o.n1, o.n2, o.Nsoc, o.gamma_int,
                                    o.sign == "plus" ? condensation::SignConvention::paper_plus
                                                     : condensation::SignConvention::free_energy_minus};
  const auto grid = condensation::uniform_grid(o.T_min, o.T_max, o.T_points);
  const auto s = condensation::social_explosion_scan(eco, grid);
  Csv csv({"T", "argmin_N1", "energy", "log_count", "value"});
  for (const auto& r : s.rows) {
    csv.row(std::vector<double>{r.T, static_cast<double>(r.argmin), r.energy, r.log_count, r.value});
  }
  csv.emit(o.out, out);
  out << "social: T_star=" << (s.T_star ? fmt(*s.T_star) : "none") << " jump=" << s.jump_size
      << " kinetic_outburst=" << fmt(s.kinetic_outburst) << '\n';
}

// ---------------------------------------------------------------------------

/// Runs one command line (without the program name). Returns the exit code.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app("Numerical laboratory for nonlinear averaging, ensemble limits, a solvable boson "
               "model, entropy flow and condensation models",
               "zerophase");
  Commands cmds = build_app(app, o);
  try {
    // Pull --config out, then feed file values ahead of the command-line flags
    // so the flags win under the take-last policy.
    std::optional<std::string> config_path;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config") {
        if (i + 1 >= args.size()) throw ValidationError("--config needs a path");
        config_path = args[++i];
      } else if (args[i].rfind("--config=", 0) == 0) {
        config_path = args[i].substr(9);
      } else {
        rest.push_back(args[i]);
      }
    }
    std::vector<std::string> merged = rest;
    if (config_path) {
      const Config cfg = load_config(*config_path);
      for (const auto& w : cfg.warnings) err << w << '\n';
      std::size_t cmd_len = 0;
      CLI::App* target = &app;
      while (cmd_len < rest.size() && rest[cmd_len].rfind("-", 0) != 0) {
        CLI::App* sub = nullptr;
        try {
          sub = target->get_subcommand(rest[cmd_len]);
        } catch (const CLI::OptionNotFound&) {
          break;
        }
        target = sub;
        ++cmd_len;
      }
      if (target == &app) throw ValidationError("--config needs a subcommand");
      merged.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(cmd_len));
      for (const auto& [key, entry] : cfg.values) {
        if (key == "config" || target->get_option_no_throw("--" + key) == nullptr) {
          throw ValidationError(*config_path + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
        }
        merged.push_back("--" + key + "=" + entry.value);
      }
      merged.insert(merged.end(), rest.begin() + static_cast<std::ptrdiff_t>(cmd_len), rest.end());
    }
    std::reverse(merged.begin(), merged.end());
    app.parse(merged);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help("", CLI::AppFormatMode::All);
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (cmds.avg->parsed()) run_avg(o, out);
    else if (cmds.check->parsed()) run_check(o, out);
    else if (cmds.probe->parsed()) run_probe(o, out);
    else if (cmds.evolve->parsed()) run_evolve(o, out);
    else if (cmds.limits->parsed()) run_limits(o, out);
    else if (cmds.sweep->parsed()) run_sweep(o, out);
    else if (cmds.flow->parsed()) run_flow(o, out);
    else if (cmds.debt->parsed()) run_debt(o, out);
    else if (cmds.social->parsed()) run_social(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitOk;
}

}  // namespace zerophase::cli
