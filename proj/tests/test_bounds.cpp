#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace steinpp;
using namespace steinpp::testing;

TEST(Bounds, PrppPoissonCountsIsZero) {
  EXPECT_EQ(bound_prpp(CountDistribution::poisson(1.0), 1.0).value, 0.0);
  EXPECT_EQ(bound_prpp(CountDistribution::poisson(2.5), 2.5).value, 0.0);
}

TEST(Bounds, PrppGeometricPartialSums) {
  // sum_{n <= 60} |(n+1) 2^{-(n+2)} - 2^{-(n+1)}|
  double oracle = 0.0;
  for (int n = 0; n <= 60; ++n) oracle += std::abs((n + 1) * std::ldexp(1.0, -(n + 2)) - std::ldexp(1.0, -(n + 1)));
  EXPECT_NEAR(oracle, 0.5, 1e-12);
  EXPECT_NEAR(bound_prpp(CountDistribution::geometric(0.5), 1.0).value, 0.5, 1e-9);
}

TEST(Bounds, PrppCoinFlip) {
  const auto coin = CountDistribution::from_table({0.5, 0.5 - 1e-12, 1e-12});
  EXPECT_NEAR(bound_prpp(coin, 1.0).value, 0.5, 1e-9);
}

TEST(Bounds, HardcoreClosedForm) {
  EXPECT_NEAR(hardcore_volume(0.3, 2, true), std::numbers::pi * 0.09, 1e-15);
  EXPECT_NEAR(hardcore_volume(0.3, 2, false), std::numbers::pi * 0.09, 1e-15);
  EXPECT_NEAR(hardcore_volume(0.5, 3, false), 4.0 / 3.0 * std::numbers::pi * 0.125, 1e-15);
  EXPECT_NEAR(bound_hardcore(1.0, 1.0, 0.1, 2, 0.9).value, 0.03491, 1e-5);
  EXPECT_NEAR(bound_hardcore(1.0, 1.0, 1e-9, 2, 1.0).value, 0.0, 1e-15);
  EXPECT_THROW(bound_hardcore(1.0, 1.0, 0.1, 2, 0.0), std::invalid_argument);
}

TEST(Bounds, BoundedClosedForm) {
  EXPECT_NEAR(bound_bounded(1.0, 0).value, 1.0, 1e-12);
  EXPECT_NEAR(bound_bounded(1.0, 2, 2.5 * std::exp(-1.0)).value, 0.2, 1e-12);
  EXPECT_NEAR(bound_bounded(1.0, 2).value, 0.2, 1e-12);
  EXPECT_LT(bound_bounded(1.0, 30).value, 1e-30);
}

TEST(Bounds, Superposition) {
  const Space s = Space::unit_box(2);
  const Intensity m = Intensity::constant(3.0);
  const std::vector<Intensity> parts(4, m.scaled(0.25));
  const auto rep = bound_superposition(parts, m, s);
  EXPECT_NEAR(rep.component("R_n"), 0.0, 1e-12);
  EXPECT_NEAR(rep.value, 2.0 * 9.0 / 4.0, 1e-12);
  EXPECT_NEAR(bound_superposition_remark(0.1, 2.0, 8).value, 0.1 + 1.0, 1e-15);
}

TEST(Bounds, IidCorollary) {
  // h = 2 on [0, 1/2]: h(x/n) = 2 on Lambda = [0, 1] for n >= 2
  const auto h = [](double u) { return u <= 0.5 ? 2.0 : 0.0; };
  const auto rep = bound_iid_corollary(h, 2.0, 4, 0.0, 1.0);
  EXPECT_NEAR(rep.component("R_n"), 0.0, 1e-12);
  EXPECT_NEAR(rep.value, 2.0 / 4.0 * 4.0, 1e-12);
}

TEST(Bounds, Minus1nDpp) {
  CMatrix k(2, 2);
  k << 0.4, 0.2, 0.2, 0.4;
  const std::vector<Coords> sites{{0, 0, 0}, {1, 0, 0}};
  const Kernel half = Kernel::from_values(Space::grid(1, sites, {0.5, 0.5}), k);
  EXPECT_NEAR(half.trace(), 0.4, 1e-12);
  EXPECT_NEAR(bound_minus1n_dpp(half, 2).value, 0.16, 1e-12);
  const Kernel diag = Kernel::from_values(unit_cells(4), CMatrix::Identity(4, 4) * 0.5);
  EXPECT_NEAR(bound_minus1n_dpp(diag, 4).value, 2.0, 1e-12);
  EXPECT_LT(bound_minus1n_dpp(diag, 1000000).value, 1e-5);
}

TEST(Bounds, ThinnedSuperposition) {
  const Space s = Space::unit_box(2);
  EXPECT_EQ(bound_thinned_superposition([](const Point&) { return 0.0; }, 5, s).value, 0.0);
  EXPECT_NEAR(bound_thinned_superposition([](const Point&) { return 1.0; }, 100, s).value, 0.1, 1e-12);
}

TEST(Bounds, DppThinRescale) {
  EXPECT_NEAR(bound_dpp_thin_rescale(0.1, 1.0, 1.0).value, 2.0 / 9.0, 1e-12);
  EXPECT_NEAR(bound_dpp_thin_rescale(0.5, 2.0, 3.0).value, 12.0, 1e-12);
  EXPECT_LT(bound_dpp_thin_rescale(1e-9, 1.0, 1.0).value, 1e-8);
}

TEST(Bounds, Gibbs) {
  EXPECT_EQ(bound_gibbs(1.0, 1.0, 0.0).value, 0.0);
  EXPECT_NEAR(bound_gibbs(1.0, 1.0, 0.1).value, 0.1, 1e-15);
  EXPECT_NEAR(bound_gibbs(2.0, 0.5, 0.2).value, 0.4, 1e-15);
}

TEST(Bounds, GenericIsZeroForPoisson) {
  const Model m = make_poisson(Space::unit_box(2), Intensity::constant(1.0));
  const auto rep = bound_generic(Intensity::constant(1.0), papangelou(m), sampler_of(m), 1000, CounterRng(1));
  EXPECT_EQ(rep.value, 0.0);
}

TEST(Bounds, GenericAgreesWithConditionalEstimator) {
  const Space s = Space::unit_box(2);
  const auto m = Intensity::constant(1.0);
  const Model hard = make_conditional(s, m, Condition::hardcore(0.1));
  const auto g = bound_generic(m, papangelou(hard), sampler_of(hard), 20000, CounterRng(2));
  const auto c = bound_conditional_mc(m, Condition::hardcore(0.1), sampler_of(hard), s, 20000, CounterRng(3));
  EXPECT_LT(std::abs(g.value - c.value), 3.0 * (g.stderr_ + c.stderr_) + 1e-3);
  const Estimate acc = estimate_acceptance(m, Condition::hardcore(0.1), s, 20000, CounterRng(4));
  const auto closed = bound_hardcore(1.0, 1.0, 0.1, 2, acc.mean, true, acc.se);
  EXPECT_LE(c.value, closed.value + 3.0 * (c.stderr_ + closed.stderr_));
}

TEST(Bounds, ConditionalTrivialAndBounded) {
  const Space s = Space::unit_box(2);
  const auto m = Intensity::constant(1.0);
  const Model free = make_conditional(s, m, Condition::always());
  EXPECT_EQ(bound_conditional_mc(m, Condition::always(), sampler_of(free), s, 1000, CounterRng(5)).value, 0.0);
  for (std::size_t n : {0u, 1u, 2u}) {
    const Model b = make_conditional(s, m, Condition::bounded(n));
    const auto mc = bound_conditional_mc(m, Condition::bounded(n), sampler_of(b), s, 50000, CounterRng(6));
    const auto exact = bound_bounded(1.0, n);
    EXPECT_LT(std::abs(mc.value - exact.value), 4.0 * mc.stderr_ + 1e-9) << n;
  }
}

TEST(Bounds, GenericBelowGibbsClosedForm) {
  const Space s = Space::unit_box(1);
  const Model g = make_gibbs(s, 1.0, Intensity::constant(0.0), step_potential(0.1, 0.2), 0.1);
  const auto mc = bound_generic(Intensity::constant(1.0), papangelou(g), sampler_of(g), 20000, CounterRng(7));
  EXPECT_LE(mc.value, bound_gibbs(1.0, 1.0, 0.1).value + 3.0 * mc.stderr_);
}

TEST(Bounds, ThinnedVsCox) {
  const Space s = Space::unit_box(2);
  const Configuration fixed({Point::at(0.1, 0.1), Point::at(0.5, 0.5), Point::at(0.9, 0.9)});
  const Sampler same = [fixed](CounterRng&) { return fixed; };
  const auto rep = bound_thinned_vs_cox(same, [](const Point&) { return 0.2; }, 10, CounterRng(8));
  EXPECT_NEAR(rep.value, 2.0 * 3.0 * 0.04, 1e-15);
  for (double p : {0.01, 0.05, 0.1, 0.2, 0.5})
    EXPECT_LE(w1_counts(CountDistribution::bernoulli(p), CountDistribution::poisson(p)), 2.0 * p * p);
  CounterRng r(9);
  const auto directed = poisson_directed_by(fixed, [](const Point&) { return 0.0; }, r);
  EXPECT_TRUE(directed.empty());
}

TEST(Bounds, KallenbergSplitsIntoTerms) {
  const Space s = Space::unit_box(2);
  const Sampler base = [s](CounterRng& r) { return sample_poisson(Intensity::constant(10.0), s, r); };
  const CoxAtomicModel target{s, {{1.0, Intensity::constant(1.0)}}};
  const auto rep = bound_kallenberg(base, [](const Point&) { return 0.1; }, target, 5000, CounterRng(10));
  EXPECT_NEAR(rep.component("thinning_term"), 0.2, 0.02);
  EXPECT_LT(rep.component("polish_term"), 0.05);
  EXPECT_NEAR(rep.value, rep.component("thinning_term") + rep.component("polish_term"), 1e-15);
}

TEST(Bounds, ReportsHashInputs) {
  const auto a = bound_gibbs(1.0, 1.0, 0.1), b = bound_gibbs(1.0, 1.0, 0.1), c = bound_gibbs(1.0, 1.0, 0.2);
  EXPECT_EQ(a.inputs_hash(), b.inputs_hash());
  EXPECT_NE(a.inputs_hash(), c.inputs_hash());
  EXPECT_EQ(a.inputs_hash().size(), 16u);
}
