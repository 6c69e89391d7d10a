#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "zerophase/asymptotics.hpp"

using namespace zerophase;

namespace {
const double kLn2 = std::log(2.0);
}

TEST(LimitF, InitialStepIsLogTotal) {
  std::vector<double> g{1.0, 1.0};
  EXPECT_NEAR(limit_F(g, Spectrum({0.0, kLn2}), 1.0, 0), -std::log(2.0), 1e-15);
  std::vector<double> g3{0.2, 3.0, 0.7};
  EXPECT_NEAR(limit_F(g3, Spectrum({1.0, -4.0, 2.0}), 2.5, 0), -std::log(3.9) / 2.5, 1e-14);
}

TEST(LimitF, LargeStepApproachesSupportFreeEnergy) {
  std::vector<double> g{1.0, 1.0};
  EXPECT_NEAR(limit_F(g, Spectrum({0.0, kLn2}), 1.0, 1000000), -std::log(1.5), 1e-6);
}

TEST(LimitF, GibbsWeightsAreStationary) {
  Spectrum lam({0.0, 0.5, 1.3});
  const double beta = 1.4;
  std::vector<double> g(3);
  for (int i = 0; i < 3; ++i) g[i] = std::exp(-beta * lam[i]);
  const double f0 = limit_F(g, lam, beta, 0);
  for (int n : {1, 5, 50}) EXPECT_NEAR(limit_F(g, lam, beta, n), f0, 1e-13);
}

TEST(LimitW, InitialIsNormalizedG) {
  std::vector<double> g{0.2, 0.6, 1.2};
  auto w = limit_w(g, Spectrum({0.0, 1.0, 2.0}), 1.0, 0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(w[i], g[i] / 2.0, 1e-15);
}

TEST(LimitW, SupportRestriction) {
  std::vector<double> g{1.0, 0.0};
  for (int n : {0, 3, 100}) {
    auto w = limit_w(g, Spectrum({0.4, 0.0}), 1.0, n);
    EXPECT_EQ(w[0], 1.0);
    EXPECT_EQ(w[1], 0.0);
  }
}

TEST(LimitW, GibbsInvarianceForAnyAmplitude) {
  Spectrum lam({0.0, 0.5, 1.3, -0.2});
  const double beta = 0.9;
  auto rho = gibbs_distribution(lam, beta);
  for (double A : {0.5, 1.0, 7.0}) {
    std::vector<double> g(4);
    for (int i = 0; i < 4; ++i) g[i] = A * std::exp(-beta * lam[i]);
    for (int n : {0, 1, 5, 50}) {
      auto w = limit_w(g, lam, beta, n);
      for (int i = 0; i < 4; ++i) EXPECT_NEAR(w[i], rho[i], 1e-12);
    }
  }
}

TEST(LimitW, KullbackLeiblerToGibbsNonincreasing) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 2.0), lu(-1.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> g{u(rng), u(rng), u(rng), u(rng)};
    Spectrum lam({lu(rng), lu(rng), lu(rng), lu(rng)});
    const double beta = u(rng);
    auto rho = gibbs_distribution(lam, beta);
    double prev = INFINITY;
    for (int n : {0, 1, 2, 3, 5, 10, 20, 50, 100, 1000}) {
      const double kl = kl_divergence(limit_w(g, lam, beta, n), rho);
      EXPECT_LE(kl, prev + 1e-14);
      prev = kl;
    }
  }
}

TEST(Gibbs, FullAndPartialSupport) {
  Spectrum lam({0.0, kLn2});
  std::vector<std::size_t> all{0, 1}, first{0};
  auto full = gibbs_fixed_point(lam, 1.0, all);
  EXPECT_NEAR(full.F_inf, -std::log(1.5), 1e-15);
  EXPECT_NEAR(full.w_inf[0], 2.0 / 3.0, 1e-15);
  auto part = gibbs_fixed_point(lam, 1.0, first);
  EXPECT_NEAR(part.F_inf, 0.0, 1e-15);
  EXPECT_EQ(part.w_inf, full.w_inf);
  std::vector<std::size_t> none;
  EXPECT_THROW(gibbs_fixed_point(lam, 1.0, none), ValidationError);
}

TEST(Gibbs, LimitFormulaApproachesRestrictedFreeEnergy) {
  Spectrum lam({0.0, 0.5, 1.3});
  std::vector<double> g{0.0, 0.5, 0.3};
  std::vector<std::size_t> supp{1, 2};
  const double F_inf = gibbs_fixed_point(lam, 1.0, supp).F_inf;
  EXPECT_NEAR(limit_F(g, lam, 1.0, 10000000), F_inf, 1e-6);
}

TEST(Convergence, SmallInstanceValue) {
  std::vector<double> g{1.0, 1.0};
  std::vector<int> Ms{2};
  auto r = convergence_scan(g, Spectrum({0.0, kLn2}), 1.0, 1, Ms);
  EXPECT_NEAR(r.F_exact[0], -0.25 * std::log(3.25), 1e-14);
  EXPECT_NEAR(r.errors[0], std::abs(r.F_exact[0] - r.F_limit), 0.0);
}

TEST(Convergence, ErrorsDecreaseWithLogOverMRate) {
  std::vector<double> g{1.0, 1.0};
  std::vector<int> Ms{50, 100, 200, 400};
  auto r = convergence_scan(g, Spectrum({0.0, kLn2}), 1.0, 1, Ms);
  for (std::size_t j = 1; j < Ms.size(); ++j) EXPECT_LT(r.errors[j], r.errors[j - 1]);
  for (std::size_t j = 1; j < Ms.size(); ++j) {
    // Halving up to a ln M factor: ratio between 0.5 and 0.5 * ln(2M)/ln(M) + slack.
    const double ratio = r.errors[j] / r.errors[j - 1];
    EXPECT_GT(ratio, 0.45);
    EXPECT_LT(ratio, 0.7);
  }
  std::vector<double> signed_err;
  for (double f : r.F_exact) signed_err.push_back(f - r.F_limit);
  auto fit = fit_laplace_correction(Ms, signed_err);
  // n (l - 1) / (2 beta (n + 1)) for n = 1, l = 2.
  EXPECT_NEAR(fit.a, 0.25, 0.02);
}

TEST(Convergence, GibbsDataErrorVanishes) {
  Spectrum lam({0.0, 0.5, 1.3});
  std::vector<double> g(3);
  for (int i = 0; i < 3; ++i) g[i] = std::exp(-lam[i]);
  std::vector<int> Ms{25, 50, 100, 200};
  auto r = convergence_scan(g, lam, 1.0, 2, Ms);
  for (std::size_t j = 1; j < Ms.size(); ++j) EXPECT_LT(r.errors[j], r.errors[j - 1]);
  EXPECT_LT(r.errors.back(), 0.05);
}

TEST(Convergence, ParallelResultIndependentOfThreads) {
  std::vector<double> g{0.2, 0.5, 0.3};
  std::vector<int> Ms{10, 40, 20, 30};
  Spectrum lam({0.0, 0.5, 1.3});
  setenv("ZEROPHASE_THREADS", "1", 1);
  auto a = convergence_scan(g, lam, 1.0, 2, Ms);
  setenv("ZEROPHASE_THREADS", "3", 1);
  auto b = convergence_scan(g, lam, 1.0, 2, Ms);
  unsetenv("ZEROPHASE_THREADS");
  EXPECT_EQ(a.F_exact, b.F_exact);
  EXPECT_EQ(a.w_errors, b.w_errors);
}
