#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "zerophase/averaging.hpp"

using namespace zerophase;

namespace {

const double kLn2 = std::log(2.0);

double avg(double beta, std::vector<double> lambda, std::vector<double> p) {
  return financial_average(AveragingKernel::exponential(beta), Spectrum(std::move(lambda)),
                           WeightVector(std::move(p)));
}

}  // namespace

TEST(FinancialAverage, EqualLevelsGiveThatLevel) {
  EXPECT_NEAR(avg(1.0, {0.0, 0.0}, {0.5, 0.5}), 0.0, 1e-15);
}

TEST(FinancialAverage, TwoLevelHandValue) {
  EXPECT_NEAR(avg(1.0, {0.0, kLn2}, {0.5, 0.5}), -std::log(0.75), 1e-14);
  EXPECT_NEAR(avg(1.0, {0.0, kLn2}, {0.5, 0.5}), 0.287682072451781, 1e-12);
}

TEST(FinancialAverage, ShiftedLevels) {
  EXPECT_NEAR(avg(1.0, {5.0, 5.0 + kLn2}, {0.5, 0.5}), 5.0 - std::log(0.75), 1e-12);
}

TEST(FinancialAverage, HugeLevelsStayFinite) {
  EXPECT_NEAR(avg(1.0, {-1000.0, -1000.0 + kLn2}, {0.5, 0.5}), -1000.0 - std::log(0.75), 1e-9);
  EXPECT_NEAR(avg(10.0, {800.0, 900.0}, {1.0, 1.0}), 800.0 - std::log(1.0) / 10.0, 1e-9);
}

TEST(FinancialAverage, EmptySupportRejected) {
  EXPECT_THROW(WeightVector({0.0, 0.0}), ValidationError);
  EXPECT_THROW(WeightVector({-1.0, 2.0}), ValidationError);
}

TEST(FinancialAverage, LengthMismatchRejected) {
  EXPECT_THROW(avg(1.0, {0.0, 1.0, 2.0}, {1.0, 1.0}), ValidationError);
}

TEST(FinancialAverage, KernelParametersValidated) {
  EXPECT_THROW(AveragingKernel::exponential(0.0), ValidationError);
  EXPECT_THROW(AveragingKernel::exponential(-1.0), ValidationError);
  EXPECT_THROW(AveragingKernel::linear(0.0, 1.0), ValidationError);
}

TEST(FinancialAverage, LinearKernelIsWeightedMean) {
  auto k = AveragingKernel::linear(3.0, -2.0);
  EXPECT_NEAR(financial_average(k, Spectrum({1.0, 2.0, 6.0}), WeightVector({1.0, 1.0, 2.0})),
              15.0 / 4.0, 1e-15);
}

TEST(FinancialAverage, BoundedByExtremeLevelsForNormalizedWeights) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0), w(0.0, 1.0), b(0.05, 20.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> lam(4), p(4);
    for (auto& x : lam) x = u(rng);
    for (auto& x : p) x = w(rng);
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& x : p) x /= s;
    const double a = avg(b(rng), lam, p);
    EXPECT_GE(a, *std::min_element(lam.begin(), lam.end()) - 1e-12);
    EXPECT_LE(a, *std::max_element(lam.begin(), lam.end()) + 1e-12);
  }
}

TEST(FinancialAverage, SmallBetaApproachesLinearMean) {
  std::vector<double> lam{0.3, -1.2, 2.5}, p{0.2, 0.5, 0.3};
  const double lin =
      financial_average(AveragingKernel::linear(), Spectrum(lam), WeightVector(p));
  EXPECT_NEAR(avg(1e-6, lam, p), lin, 1e-4);
}

TEST(ShiftAxiom, ExponentialKernelHasUnitConstant) {
  Spectrum s({0.1, 0.7, -2.0});
  WeightVector p({0.3, 0.3, 0.4});
  for (double a : {-1.0, 0.5, 2.0}) {
    auto r = verify_shift_axiom(AveragingKernel::exponential(1.0), s, p, a);
    EXPECT_NEAR(r.c, 1.0, 1e-12);
    EXPECT_LT(r.residual, 1e-12);
  }
}

TEST(ShiftAxiom, LinearKernelHasUnitConstant) {
  auto r = verify_shift_axiom(AveragingKernel::linear(), Spectrum({0.0, 1.0, 4.0}),
                              WeightVector({0.25, 0.25, 0.5}), 0.75);
  EXPECT_NEAR(r.c, 1.0, 1e-12);
  EXPECT_LT(r.residual, 1e-12);
}

TEST(ShiftAxiom, ZeroShiftRejected) {
  EXPECT_THROW(verify_shift_axiom(AveragingKernel::exponential(1.0), Spectrum({0.0, 1.0}),
                                  WeightVector({1.0, 1.0}), 0.0),
               ValidationError);
}

TEST(ShiftAxiom, CubicKernelViolatesAxiom) {
  // f(x) = x^3 quasi-arithmetic mean: f^{-1}(sum p f(lambda)).
  auto cubic = [](const Spectrum& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += 0.5 * std::pow(s[i], 3);
    return std::cbrt(acc);
  };
  auto r = shift_covariance(cubic, Spectrum({0.0, 1.0}), 1.0);
  EXPECT_GT(r.residual, 0.01);
}

TEST(Resonance, TwoIntegerLevelsFree) {
  auto r = check_resonance_free(Spectrum({0.0, 1.0}), 5);
  EXPECT_TRUE(r.holds);
  EXPECT_FALSE(r.witness.has_value());
}

TEST(Resonance, ArithmeticProgressionWitness) {
  auto r = check_resonance_free(Spectrum({1.0, 2.0, 3.0}), 2);
  ASSERT_FALSE(r.holds);
  EXPECT_EQ(*r.witness, (std::vector<int>{1, -2, 1}));
}

TEST(Resonance, IrrationalPairFree) {
  EXPECT_TRUE(check_resonance_free(Spectrum({1.0, std::sqrt(2.0)}), 10).holds);
}

TEST(Resonance, GuardRejectsHugeEnumeration) {
  EXPECT_THROW(check_resonance_free(Spectrum({0, 1, 2, 3, 4, 5, 6, 7, 8}), 10), GuardExceeded);
  EXPECT_THROW(check_resonance_free(Spectrum({0.0, 1.0}), 0), ValidationError);
}

TEST(Resonance, WitnessSatisfiesRelation) {
  std::vector<double> lam{0.0, 0.3, 0.9, 1.7};
  auto r = check_resonance_free(Spectrum(lam), 3);
  ASSERT_FALSE(r.holds);  // 0.3*... e.g. (2,-3,1,0): 0 - 0.9 + 0.9
  const auto& k = *r.witness;
  double s = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    s += k[i];
    dot += k[i] * lam[i];
  }
  EXPECT_EQ(s, 0.0);
  EXPECT_NEAR(dot, 0.0, 1e-12);
}

TEST(Resonance, InvariantUnderPermutationShiftAndScale) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> lam(3);
    for (auto& x : lam) x = u(rng);
    if (t % 4 == 0) lam[2] = 2.0 * lam[1] - lam[0];  // force a relation sometimes
    const bool base = check_resonance_free(Spectrum(lam), 3).holds;
    std::vector<double> perm{lam[2], lam[0], lam[1]};
    EXPECT_EQ(check_resonance_free(Spectrum(perm), 3).holds, base);
    EXPECT_EQ(check_resonance_free(Spectrum(lam).shifted(4.25), 3).holds, base);
    std::vector<double> scaled = lam;
    for (auto& x : scaled) x *= -3.5;
    EXPECT_EQ(check_resonance_free(Spectrum(scaled), 3).holds, base);
  }
}

TEST(Resonance, CertifiedFlag) {
  Spectrum s({0.0, 1.0});
  EXPECT_FALSE(s.resonance_free());
  auto c = s.certified(4);
  EXPECT_TRUE(c.resonance_free());
  EXPECT_EQ(*c.resonance_bound(), 4);
  EXPECT_THROW(Spectrum({1.0, 2.0, 3.0}).certified(2), ValidationError);
}

TEST(SpectrumType, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(Spectrum({}), ValidationError);
  EXPECT_THROW(Spectrum({0.0, NAN}), ValidationError);
  EXPECT_THROW(Spectrum({INFINITY}), ValidationError);
}

TEST(PolynomialSpectrum, Examples) {
  std::vector<double> a{0.0, 1.0};
  auto s = polynomial_spectrum(a, 3);
  EXPECT_EQ(std::vector<double>(s.values().begin(), s.values().end()),
            (std::vector<double>{0, 1, 2, 3}));
  std::vector<double> b{0.0, 0.0, 1.0};
  s = polynomial_spectrum(b, 3);
  EXPECT_EQ(std::vector<double>(s.values().begin(), s.values().end()),
            (std::vector<double>{0, 1, 4, 9}));
  std::vector<double> c{1.0, 2.0, 0.5};
  s = polynomial_spectrum(c, 2);
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_DOUBLE_EQ(s[1], 3.5);
  EXPECT_DOUBLE_EQ(s[2], 7.0);
}

TEST(PolynomialProbe, AffineAlwaysResonant) {
  auto r = probe_polynomial_resonance(1, 3, 20, 3, 1);
  EXPECT_EQ(r.fail_fraction, 1.0);
  ASSERT_TRUE(r.first_witness);
  EXPECT_EQ(*r.first_witness, (std::vector<int>{1, -2, 1, 0}));
}

TEST(PolynomialProbe, ConstantAlwaysResonant) {
  auto r = probe_polynomial_resonance(0, 1, 10, 2, 3);
  EXPECT_EQ(r.fail_fraction, 1.0);
  EXPECT_EQ(*r.first_witness, (std::vector<int>{1, -1}));
}

TEST(PolynomialProbe, FullDegreeGenericallyFree) {
  auto r = probe_polynomial_resonance(3, 3, 100, 3, 2024);
  EXPECT_EQ(r.fail_fraction, 0.0);
}
