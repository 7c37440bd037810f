#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace steinpp;
using namespace steinpp::testing;

namespace {

Sampler poisson_on(const Space& s, double rate) {
  return [s, rate](CounterRng& r) { return sample_poisson(Intensity::constant(rate), s, r); };
}

//! sum_k |F_p(k) - F_q(k)| written out from the probabilities directly.
double w1_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double total = 0.0;
  for (std::size_t k = 0; k < std::max(p.size(), q.size()); ++k) {
    double fp = 0.0, fq = 0.0;
    for (std::size_t j = 0; j <= k; ++j) {
      fp += j < p.size() ? p[j] : 0.0;
      fq += j < q.size() ? q[j] : 0.0;
    }
    total += std::abs(fp - fq);
  }
  return total;
}

std::vector<double> poisson_pmf(double lambda, std::size_t top) {
  std::vector<double> p(top + 1);
  for (std::size_t k = 0; k <= top; ++k)
    p[k] = std::exp(-lambda + static_cast<double>(k) * std::log(lambda) - std::lgamma(static_cast<double>(k) + 1.0));
  return p;
}

}  // namespace

TEST(Distances, W1Counts) {
  const auto b = CountDistribution::bernoulli(0.1), p = CountDistribution::poisson(0.1);
  EXPECT_EQ(w1_counts(b, b), 0.0);
  EXPECT_NEAR(w1_counts(b, p), w1_oracle({0.9, 0.1}, poisson_pmf(0.1, 40)), 1e-12);
  EXPECT_NEAR(w1_counts(b, p), 0.0096748, 1e-7);
  // the total-variation distance between the same laws is p (1 - e^{-p})
  double tv = 0.0;
  for (std::size_t k = 0; k < 40; ++k) tv += 0.5 * std::abs(b.p(k) - p.p(k));
  EXPECT_NEAR(tv, 0.1 * (1.0 - std::exp(-0.1)), 1e-12);
  EXPECT_NEAR(tv, 0.00952, 1e-5);
  EXPECT_NEAR(w1_counts(CountDistribution::dirac(0), CountDistribution::poisson(1.0)), 1.0, 1e-9);
}

TEST(Distances, KrLowerBoundIdentical) {
  const Space s = Space::unit_box(1);
  const auto rep = kr_lower_bound(poisson_on(s, 1.0), poisson_on(s, 1.0), default_family(s), 20000, CounterRng(1));
  EXPECT_LT(rep.value, 4.0 * rep.stderr_ + 1e-3);
  EXPECT_EQ(rep.kind, EstimateKind::lower_bound);
}

TEST(Distances, KrLowerBoundEmptyVsPoisson) {
  const Space s = Space::unit_box(2);
  const Sampler empty = [](CounterRng&) { return Configuration{}; };
  const auto rep = kr_lower_bound(empty, poisson_on(s, 1.0), {total_count()}, 100000, CounterRng(2));
  EXPECT_LT(std::abs(rep.value - 1.0), 4.0 * rep.stderr_);
}

TEST(Distances, KrLowerBoundPoissonRates) {
  const Space s = Space::unit_box(1);
  const auto rep = kr_lower_bound(poisson_on(s, 1.0), poisson_on(s, 2.0), {total_count()}, 100000, CounterRng(3));
  EXPECT_LT(std::abs(rep.value - 1.0), 4.0 * rep.stderr_);
  EXPECT_NEAR(tv_measures(Intensity::constant(1.0), Intensity::constant(2.0), s), 1.0, 1e-12);
}

TEST(Distances, DefaultFamilyIsLipschitz) {
  const Space s = Space::unit_box(2);
  for (const auto& f : default_family(s)) {
    const auto cert = certify_lipschitz(f, poisson_on(s, 2.0), s, 500, CounterRng(4));
    EXPECT_TRUE(cert.pass) << f.id;
    EXPECT_LE(cert.max_ratio, 1.0 + 1e-12) << f.id;
  }
}

TEST(Distances, CoupledUpperBounds) {
  const Space s = Space::unit_box(2);
  const auto same = kr_upper_bound_coupled([&](CounterRng& r) {
    const auto phi = sample_poisson(Intensity::constant(2.0), s, r);
    return std::pair{phi, phi};
  }, 1000, CounterRng(5));
  EXPECT_EQ(same.value, 0.0);
  const auto thin = kr_upper_bound_coupled([&](CounterRng& r) {
    const auto phi = sample_poisson(Intensity::constant(2.0), s, r);
    return std::pair{phi, thin_config(phi, Retention::uniform(0.25), r)};
  }, 100000, CounterRng(6));
  EXPECT_LT(std::abs(thin.value - 1.5), 4.0 * thin.stderr_);
  const auto added = kr_upper_bound_coupled([&](CounterRng& r) {
    const auto phi = sample_poisson(Intensity::constant(2.0), s, r);
    return std::pair{phi, superpose_configs({phi, sample_poisson(Intensity::constant(0.5), s, r)})};
  }, 100000, CounterRng(7));
  EXPECT_LT(std::abs(added.value - 0.5), 4.0 * added.stderr_);
}

TEST(Distances, PolishDistance) {
  const Space s = Space::unit_box(1);
  const auto same = polish_distance(poisson_on(s, 1.0), poisson_on(s, 1.0), s, 20000, CounterRng(8));
  EXPECT_LT(same.value, 4.0 * same.stderr_ + 1e-3);
  const Sampler empty = [](CounterRng&) { return Configuration{}; };
  const auto far = polish_distance(empty, poisson_on(s, 50.0), s, 2000, CounterRng(9));
  EXPECT_LE(far.value, 1.0);
  // weaker than the lower bound on the total-variation type distance
  const auto p = polish_distance(poisson_on(s, 1.0), poisson_on(s, 1.1), s, 50000, CounterRng(10));
  const auto kr = kr_lower_bound(poisson_on(s, 1.0), poisson_on(s, 1.1), {total_count()}, 50000, CounterRng(11));
  EXPECT_LE(p.value, kr.value + 4.0 * (p.stderr_ + kr.stderr_) + 0.1);
  EXPECT_EQ(polish_boxes(s).size(), 32u);
}

TEST(Distances, CoxDistanceBound) {
  const Space s = Space::unit_box(1);
  const auto m = Intensity::constant(1.0);
  const CoxAtomicModel mix{s, {{0.5, m}, {0.5, m.scaled(2.0)}}};
  const CoxAtomicModel mid{s, {{1.0, m.scaled(1.5)}}};
  EXPECT_NEAR(cox_distance_bound(mix, mix), 0.0, 1e-12);
  EXPECT_NEAR(cox_distance_bound(mix, mid), 0.5, 1e-12);
  const CoxAtomicModel a{s, {{1.0, m}}}, b{s, {{1.0, m.scaled(3.0)}}};
  EXPECT_NEAR(cox_distance_bound(a, b), tv_measures(m, m.scaled(3.0), s), 1e-12);
}

// ---------------------------------------------------------------------------
// Glauber dynamics

namespace {

GlauberTarget unit_target(double rate = 1.0) { return GlauberTarget::make(Space::unit_box(2), Intensity::constant(rate)); }

TestFunctional exp_count() {
  return {"exp_count", [](const Configuration& phi) { return 1.0 - std::exp(-static_cast<double>(phi.size())); }};
}

}  // namespace

TEST(Glauber, TimeZeroIsIdentity) {
  const Configuration phi({Point::at(0.1, 0.1), Point::at(0.5, 0.5)});
  CounterRng r(12);
  EXPECT_EQ(tv_config(sample_G_t(phi, 0.0, unit_target(), r), phi), 0.0);
  EXPECT_EQ(apply_Pt(total_count(), phi, 0.0, unit_target(), 10, CounterRng(1)).value, 2.0);
}

TEST(Glauber, RetainedCountIsBinomial) {
  std::vector<Point> pts;
  for (int i = 0; i < 8; ++i) pts.push_back(Point::at(0.1 * i + 0.05, 0.5));
  const Configuration phi(pts);
  const double t = 0.7;
  const Estimate e = mc_mean(50000, CounterRng(13), [&](CounterRng& r) {
    Configuration kept;
    (void)sample_G_t(phi, t, unit_target(), r, &kept);
    return static_cast<double>(kept.size());
  });
  EXPECT_LT(z(e, 8.0 * std::exp(-t)), 4.0);
}

TEST(Glauber, PtOfCountIsExplicit) {
  const Configuration phi({Point::at(0.1, 0.1), Point::at(0.5, 0.5), Point::at(0.9, 0.3)});
  const double t = 0.8;
  const auto rep = apply_Pt(total_count(), phi, t, unit_target(2.0), 50000, CounterRng(14));
  const double exact = std::exp(-t) * 3.0 + (1.0 - std::exp(-t)) * 2.0;
  EXPECT_LT(std::abs(rep.value - exact), 4.0 * rep.stderr_);
  const auto late = apply_Pt(exp_count(), phi, 50.0, unit_target(2.0), 50000, CounterRng(15));
  const Estimate limit = mc_mean(50000, CounterRng(16), [](CounterRng& r) {
    return 1.0 - std::exp(-static_cast<double>(unit_target(2.0).sample(r).size()));
  });
  EXPECT_LT(std::abs(late.value - limit.mean), 4.0 * (late.stderr_ + limit.se));
}

TEST(Glauber, GeneratorClosedForms) {
  const auto target = unit_target(2.0);
  const TestFunctional constant{"const", [](const Configuration&) { return 3.0; }};
  const Configuration phi({Point::at(0.2, 0.2), Point::at(0.4, 0.4)});
  EXPECT_EQ(generator_L(constant, phi, target), 0.0);
  EXPECT_NEAR(generator_L(total_count(), phi, target), 2.0 - 2.0, 1e-9);
  EXPECT_NEAR(generator_L(total_count(), Configuration{}, target), 2.0, 1e-9);
  EXPECT_NEAR(generator_L(exp_count(), Configuration{}, target), 2.0 * (1.0 - std::exp(-1.0)), 1e-9);
}

TEST(Glauber, Gradient) {
  const Configuration phi({Point::at(0.2, 0.2)});
  EXPECT_EQ(gradient_D(total_count(), Point::at(0.5, 0.5), phi), 1.0);
  const TestFunctional constant{"const", [](const Configuration&) { return 3.0; }};
  EXPECT_EQ(gradient_D(constant, Point::at(0.5, 0.5), phi), 0.0);
  const TestFunctional capped{"min1", [](const Configuration& c) {
    return std::min(1.0, static_cast<double>(c.count_if([](const Point& p) { return p.x[0] < 0.5; })));
  }};
  EXPECT_EQ(gradient_D(capped, Point::at(0.7, 0.5), phi), 0.0);
}

TEST(Glauber, SemigroupAndCommutation) {
  const auto target = unit_target(3.0);
  const Configuration phi({Point::at(0.1, 0.2), Point::at(0.8, 0.4)});
  EXPECT_TRUE(verify_semigroup(total_count(), phi, 0.3, 0.7, target, 20000, CounterRng(17)).pass);
  EXPECT_TRUE(verify_semigroup(exp_count(), phi, 0.3, 0.7, target, 20000, CounterRng(18)).pass);
  EXPECT_TRUE(verify_commutation(exp_count(), Point::at(0.5, 0.5), phi, 0.4, target, 20000, CounterRng(19)).pass);
}

TEST(Glauber, InvarianceAndRate) {
  const Configuration phi({Point::at(0.1, 0.2), Point::at(0.3, 0.3), Point::at(0.9, 0.1)});
  for (const auto& row : verify_invariance_and_rate(total_count(), phi, unit_target(1.0), 20000, CounterRng(20)))
    EXPECT_TRUE(row.pass) << row.check_id;
  EXPECT_NEAR(std::exp(-2.0) * 4.0, 0.5413, 1e-4);
}

TEST(Glauber, Stationarity) {
  const auto target = unit_target(3.0);
  const Sampler zeta = [target](CounterRng& r) { return target.sample(r); };
  for (const auto& row : verify_stationarity("poisson", zeta, {total_count(), exp_count()}, target, 20000, CounterRng(21)))
    EXPECT_TRUE(row.pass) << row.check_id;
  const Model hard = make_conditional(Space::unit_box(2), Intensity::constant(5.0), Condition::hardcore(0.3));
  const auto rows = verify_stationarity("hardcore", sampler_of(hard), {total_count()}, unit_target(5.0), 20000,
                                        CounterRng(22));
  EXPECT_FALSE(rows.front().pass);
  EXPECT_GT(rows.front().lhs, 0.0);
}

TEST(Glauber, SteinDirichlet) {
  const auto target = unit_target(1.0);
  SteinDirichletOptions opt;
  opt.n = 5000;
  const Configuration phi({Point::at(0.3, 0.3), Point::at(0.6, 0.2)});
  const auto row = verify_stein_dirichlet(total_count(), phi, target, CounterRng(23), opt);
  EXPECT_TRUE(row.pass) << row.lhs << " vs " << row.rhs;
  EXPECT_NEAR(row.rhs, 1.0 - 2.0, 0.1);
}

TEST(Glauber, GaussLegendre) {
  double s = 0.0;
  for (const auto& [x, w] : gauss_legendre(8, 0.0, 2.0)) s += w * x * x * x;
  EXPECT_NEAR(s, 4.0, 1e-12);
}
