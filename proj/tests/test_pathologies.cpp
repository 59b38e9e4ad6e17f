#include <gtest/gtest.h>

#include <cmath>

#include "harris/escape.hpp"
#include "harris/integrability.hpp"
#include "harris/metropolis.hpp"
#include "harris/pathologies.hpp"
#include "oracles.hpp"

using namespace harris;

TEST(Example3, TransitionsAreExactRationals) {
  const auto c = example3();
  const auto t = c.transitions(5);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].first, 1u);
  EXPECT_EQ(t[0].second.num, 1u);
  EXPECT_EQ(t[0].second.den, 25u);
  EXPECT_EQ(t[1].first, 6u);
  EXPECT_EQ(t[1].second.num, 24u);
  EXPECT_EQ(t[1].second.den, 25u);
  EXPECT_THROW(c.transitions(0), InvalidInput);
}

TEST(Example3, OneIsAbsorbing) {
  const auto c = example3();
  const auto t = c.transitions(1);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].first, 1u);
  RngStream rng(1, 0);
  for (int k = 0; k < 1000; ++k) ASSERT_EQ(c.step(1, 1, rng), 1u);
}

TEST(Example3, StepFrequencyFromTwo) {
  const auto c = example3();
  RngStream rng(1, 1);
  const int n = 200000;
  int back = 0;
  for (int k = 0; k < n; ++k) back += c.step(2, 1, rng) == 1 ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(back) / n, 0.25, 3.0 * std::sqrt(0.25 * 0.75 / n));
}

TEST(Example3, EscapeClosedForm) {
  EXPECT_EQ(escape_closed_form(2), 0.5);
  EXPECT_EQ(escape_closed_form(5), 0.8);
  EXPECT_THROW(escape_closed_form(1), InvalidInput);
  for (std::uint64_t x : {2u, 3u, 7u, 50u}) EXPECT_NEAR(escape_closed_form(x), oracle::partial_product(x, 1'000'000), 1e-6);
  for (std::uint64_t x = 2; x < 100; ++x) ASSERT_LT(escape_closed_form(x), escape_closed_form(x + 1));
}

TEST(Example3, TailBoundIsExactForTheProduct) {
  // prod_{j=x}^{x+N} (1 - 1/j^2) - (x-1)/x = (x-1)/x * 1/(x+N)
  const auto c = example3();
  for (std::uint64_t x : {2u, 10u}) {
    const std::uint64_t N = 1000;
    const double gap = oracle::partial_product(x, x + N - 1) - escape_closed_form(x);
    EXPECT_GT(gap, 0.0);
    EXPECT_LE(gap, c.escape_tail_bound(x, N));
  }
}

TEST(Example3, EscapeEstimateCoversClosedForm) {
  const auto c = example3();
  const auto est = estimate_escape(c, [](std::uint64_t s) { return s >= 2; }, std::uint64_t{2}, 10000, 20000, 42);
  ASSERT_TRUE(est.truncation_bias_bound.has_value());
  EXPECT_LE(est.ci_low, 0.5 + *est.truncation_bias_bound);
  EXPECT_GE(est.ci_high, 0.5);
}

TEST(Example3, TruncatedKernel) {
  const auto k = example3_truncated(10);
  EXPECT_EQ(k.size(), 10u);
  EXPECT_EQ(k.label(0), "1");
  EXPECT_EQ(k.prob(0, 0), 1.0);
  EXPECT_EQ(k.prob(1, 0), 0.25);
  EXPECT_EQ(k.prob(1, 2), 0.75);
  EXPECT_EQ(k.prob(9, 9), 1.0);
  EXPECT_NEAR(*k.tail_bias_bound(), 1.0 / 9.0, 1e-15);
  EXPECT_THROW(example3_truncated(2), InvalidInput);
}

TEST(Example4, ReciprocalStepsAndRegeneration) {
  const auto c = example4();
  RngStream rng(2, 0);
  const int n = 200000;
  int regen = 0;
  for (int k = 0; k < n; ++k) {
    const auto s = c.step(Example4State::reciprocal(2), 1, rng);
    if (s.is_reciprocal()) {
      ASSERT_EQ(s.m, 3u);
    } else {
      ++regen;
      ASSERT_GT(s.x, 0.0);
      ASSERT_LT(s.x, 1.0);
    }
  }
  EXPECT_NEAR(static_cast<double>(regen) / n, 0.25, 3.0 * std::sqrt(0.25 * 0.75 / n));
}

TEST(Example4, GenericPointRegeneratesUniformly) {
  const auto c = example4();
  RngStream rng(2, 1);
  const int n = 100000, bins = 10;
  std::vector<int> counts(bins, 0);
  for (int k = 0; k < n; ++k) {
    const auto s = c.step(Example4State::generic(0.3), 1, rng);
    ASSERT_FALSE(s.is_reciprocal());
    ++counts[std::min(bins - 1, static_cast<int>(s.x * bins))];
  }
  double chi2 = 0.0;
  for (int b : counts) chi2 += (b - n / bins) * (b - n / bins) / static_cast<double>(n / bins);
  EXPECT_LT(chi2, 33.7);  // chi-square, 9 degrees of freedom, p = 0.9999
}

TEST(Example4, EscapeMatchesExample3) {
  const auto c = example4();
  const auto est = estimate_escape(
      c, [](const Example4State& s) { return s.is_reciprocal() && s.m >= 2; }, Example4State::reciprocal(2), 10000,
      20000, 43);
  EXPECT_LE(est.ci_low, 0.5 + *est.truncation_bias_bound);
  EXPECT_GE(est.ci_high, 0.5);
}

TEST(Example9, DensityIntegratesToOne) {
  const auto m = example9();
  const double v = oracle::gauss_kronrod(
      [&](double x1) {
        // inner integral over x2 is analytic: (e/2) e^{x1} * 2 e^{-2 x1}
        return std::exp(std::log(0.5) + 1.0 + x1) * 2.0 * std::exp(-2.0 * x1);
      },
      1.0, 60.0);
  EXPECT_NEAR(v, 1.0, 1e-3);
  const auto full = hyperplane_integral(m.target, Hyperplane::whole_space(2), {});
  EXPECT_EQ(full.verdict, Verdict::finite);
  EXPECT_NEAR(full.value(), 1.0, 1e-3);
}

TEST(Example9, SecondCoordinateAcceptanceBelowBound) {
  const auto m = example9();
  for (double x1 : {2.0, 3.0, 5.0}) {
    RngStream rng(3, static_cast<std::uint64_t>(x1));
    const auto r = rejection_prob(m.target, as_proposal_kernel(m.proposals[1]), Point{x1, 0.0}, 200000, rng);
    EXPECT_LE(1.0 - r.value, 2.0 * std::exp(-2.0 * x1) + 3.0 * r.standard_error) << "x1 = " << x1;
  }
}

TEST(Example9, StayProbabilityDecreasesWithHorizon) {
  const auto m = example9();
  MwgChain chain(m.target, m.sampler());
  auto on_line = [](const Point& x) { return x[1] == 0.0; };
  double prev = 1.0;
  for (std::uint64_t h : {10u, 100u, 1000u}) {
    const auto est = estimate_escape(chain, on_line, Point{3.0, 0.0}, h, 500, 44);
    EXPECT_LE(est.estimate, prev);
    prev = est.estimate;
  }
  const auto far = estimate_escape(chain, on_line, Point{10.0, 0.0}, 10000, 200, 45);
  EXPECT_GT(far.estimate, 0.9);
}

TEST(Example14, Support) {
  const auto m = example14();
  EXPECT_TRUE(m.target.in_support(Point{4.5, 0.0}.coords()));
  EXPECT_FALSE(m.target.in_support(Point{3.9, 0.0}.coords()));
  EXPECT_FALSE(m.target.in_support(Point{0.0, 5.0}.coords()));
  EXPECT_FALSE(m.target.in_support(Point{4.0, 0.0}.coords()));
  EXPECT_EQ(m.target.log_density(Point{0.0, -4.5}), 0.0);
}

TEST(Example14, FirstCoordinateSubchainStaysRight) {
  const auto m = example14();
  const auto sub = restrict_subchain(m.sampler(), {0});
  for (std::uint64_t r = 0; r < 20; ++r) {
    RngStream rng = derive_stream(46, r);
    const auto trace = run_mwg(m.target, sub, Point{4.5, 0.0}, 5000, rng);
    for (const auto& e : trace.events()) ASSERT_GT(e.state[0], 4.0);
  }
}

TEST(Example14, FullChainReachesTheLeftHalf) {
  const auto m = example14();
  RngStream rng(47, 0);
  const auto trace = run_mwg(m.target, m.sampler(), Point{4.5, 0.0}, 200000, rng);
  bool left = false;
  for (const auto& e : trace.events()) left = left || e.state[0] < -4.0;
  EXPECT_TRUE(left);
}
