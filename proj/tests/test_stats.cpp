#include <gtest/gtest.h>

#include <cmath>

#include "veriml/errors.hpp"
#include "veriml/rng.hpp"
#include "veriml/stats.hpp"

using namespace veriml;

namespace {

// Exact tail by enumerating all 2^n outcome sequences, accumulated per count
// so the tiny tails keep full relative precision.
std::vector<double> enumerate_pmf(std::size_t n, double p) {
  std::vector<std::uint64_t> ways(n + 1, 0);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) ++ways[__builtin_popcount(mask)];
  std::vector<double> pmf(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    pmf[k] = static_cast<double>(ways[k]) * std::pow(p, static_cast<double>(k)) * std::pow(1 - p, static_cast<double>(n - k));
  return pmf;
}

}  // namespace

TEST(Stats, BinomialTailMatchesEnumeration) {
  double worst = 0.0;
  for (std::size_t n = 0; n <= 20; ++n) {
    for (double p : {0.01, 0.1, 0.3, 0.5, 0.77, 0.95, 0.995}) {
      const auto pmf = enumerate_pmf(n, p);
      for (std::size_t s = 0; s <= n; ++s) {
        double lower = 0, upper = 0;
        for (std::size_t k = 0; k <= s; ++k) lower += pmf[k];
        for (std::size_t k = s; k <= n; ++k) upper += pmf[k];
        const double gl = binomial_tail(s, n, p, Tail::Lower), gu = binomial_tail(s, n, p, Tail::Upper);
        worst = std::max(worst, std::abs(gl - lower) / lower);
        worst = std::max(worst, std::abs(gu - upper) / upper);
      }
    }
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Stats, BinomialEdges) {
  EXPECT_EQ(binomial_tail(5, 5, 0.3, Tail::Lower), 1.0);
  EXPECT_EQ(binomial_tail(0, 5, 0.3, Tail::Upper), 1.0);
  EXPECT_NEAR(binomial_tail(0, 10, 0.5, Tail::Lower), std::ldexp(1.0, -10), 1e-18);
  EXPECT_THROW(binomial_tail(6, 5, 0.3, Tail::Lower), ParameterError);
  EXPECT_THROW(binomial_tail(1, 5, 1.5, Tail::Lower), ParameterError);
  const double big = binomial_tail(500000, 1000000, 0.5, Tail::Lower);
  EXPECT_NEAR(big, 0.5 + 0.5 * 0.000797884, 1e-5);
}

TEST(Stats, TwoProportionHandCase) {
  // p = 0.8, se = sqrt(0.8*0.2*(2/100)) = 0.0565685; z = 0.2 / se.
  const auto t = two_proportion_z(90, 100, 70, 100);
  EXPECT_NEAR(t.z, 3.5355339059327386, 1e-12);
  EXPECT_NEAR(t.p_value, 2.03476008722479e-4, 1e-6);
  EXPECT_NEAR(t.p_value, 2.03476008722479e-4, 1e-12);
}

TEST(Stats, TwoProportionDegenerate) {
  const auto all = two_proportion_z(10, 10, 10, 10);
  EXPECT_EQ(all.z, 0.0);
  EXPECT_EQ(all.p_value, 0.5);
  EXPECT_THROW(two_proportion_z(1, 0, 1, 1), ParameterError);
  EXPECT_THROW(two_proportion_z(3, 2, 1, 1), ParameterError);
}

TEST(Stats, NormalTail) {
  EXPECT_DOUBLE_EQ(normal_upper_tail(0.0), 0.5);
  EXPECT_NEAR(normal_upper_tail(1.6448536269514722), 0.05, 1e-13);
  EXPECT_NEAR(normal_upper_tail(-1.6448536269514722), 0.95, 1e-13);
}

TEST(Stats, SprtThresholds) {
  SprtState s;
  // An honest-looking success lowers the log likelihood ratio.
  EXPECT_EQ(sprt_step(s, true, 0.9, 0.1, 0.05, 0.05), SprtDecision::Continue);
  EXPECT_NEAR(s.llr, std::log(0.1 / 0.9), 1e-15);
  EXPECT_EQ(sprt_step(s, true, 0.9, 0.1, 0.05, 0.05), SprtDecision::AcceptHonest);
  EXPECT_EQ(s.n, 2u);
}

TEST(Stats, SprtEmpiricalErrorRates) {
  const double alpha = 0.05, beta = 0.1, p_h = 0.7, p_c = 0.5;
  RngStream rng(31337);
  auto run = [&](double p_true) {
    SprtState st;
    while (true) {
      const auto d = sprt_step(st, rng.uniform() < p_true, p_h, p_c, alpha, beta);
      if (d != SprtDecision::Continue) return d;
    }
  };
  const int n = 10000;
  int false_cheat = 0, missed_cheat = 0;
  for (int i = 0; i < n; ++i) false_cheat += run(p_h) == SprtDecision::AcceptCheat;
  for (int i = 0; i < n; ++i) missed_cheat += run(p_c) == SprtDecision::AcceptHonest;
  EXPECT_LE(false_cheat / static_cast<double>(n), 1.5 * alpha);
  EXPECT_LE(missed_cheat / static_cast<double>(n), 1.5 * beta);
}
