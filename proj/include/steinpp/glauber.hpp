#ifndef STEINPP_GLAUBER_HPP
#define STEINPP_GLAUBER_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "steinpp/configuration_ops.hpp"
#include "steinpp/distances.hpp"
#include "steinpp/geometry.hpp"
#include "steinpp/models.hpp"
#include "steinpp/montecarlo.hpp"
#include "steinpp/papangelou.hpp"

namespace steinpp {

//! Poisson process zeta_M whose law is invariant for the Glauber dynamics.
struct GlauberTarget {
  Space space;
  Intensity intensity;
  double mass = 0.0;

  static GlauberTarget from(const PoissonModel& p) { return {p.space, p.intensity, p.mass}; }
  static GlauberTarget make(const Space& s, const Intensity& m, int resolution = 0) {
    return {s, m, m.total_mass(s, resolution)};
  }
  [[nodiscard]] Configuration sample(CounterRng& rng) const { return sample_poisson(intensity, space, rng, mass); }
};

/// G_t(phi) = e^{-t} o phi + (1 - e^{-t}) o zeta_M. `kept`, when given,
/// receives the retained part of phi.
inline Configuration sample_G_t(const Configuration& phi, double t, const GlauberTarget& target, CounterRng& rng,
                                Configuration* kept = nullptr) {
  if (!(t >= 0.0)) throw std::invalid_argument("glauber: t must be >= 0");
  const double keep = std::exp(-t);
  Configuration survivors = thin_config(phi.relabeled(0), Retention::uniform(keep), rng);
  Configuration out = survivors;
  if (keep < 1.0) {
    const Configuration born =
        sample_poisson(target.intensity.scaled(1.0 - keep), target.space, rng, (1.0 - keep) * target.mass);
    for (const auto& e : born.entries()) out.insert(e.point, e.multiplicity, 0);
  }
  if (kept) *kept = std::move(survivors);
  return out;
}

//! P_t F(phi) = E F(G_t(phi)); exact at t = 0.
inline EstimateReport apply_Pt(const TestFunctional& f, const Configuration& phi, double t, const GlauberTarget& target,
                               std::size_t n, const CounterRng& rng, Parallelism par = {}) {
  if (t == 0.0) return {f(phi), 0.0, 0, rng.key(), EstimateKind::exact, f.id};
  const Estimate e = mc_mean(n, rng, [&](CounterRng& r) { return f(sample_G_t(phi, t, target, r)); }, par);
  return {e.mean, e.se, n, rng.key(), EstimateKind::exact, f.id};
}

//! D_x F(phi) = F(phi + x) - F(phi).
inline double gradient_D(const TestFunctional& f, const Point& x, const Configuration& phi) {
  return f(phi.plus(x)) - f(phi);
}

namespace detail {

inline double deletion_sum(const TestFunctional& f, const Configuration& phi) {
  const double base = f(phi);
  double s = 0.0;
  for (const auto& e : phi.entries())
    s += static_cast<double>(e.multiplicity) * (f(phi.minus(e.point, e.label)) - base);
  return s;
}

inline double birth_integral(const TestFunctional& f, const Configuration& phi, const GlauberTarget& target,
                             const std::vector<QuadratureNode>& nodes) {
  const double base = f(phi);
  double s = 0.0;
  for (const auto& node : nodes) {
    const double m = target.intensity(node.point);
    if (m != 0.0) s += node.weight * m * (f(phi.plus(node.point)) - base);
  }
  return s;
}

}  // namespace detail

/// LF(phi) = int D_x F(phi) M(dx) + sum_{y in phi} (F(phi \ y) - F(phi)), with
/// the integral by the midpoint rule (exact on grids).
inline double generator_L(const TestFunctional& f, const Configuration& phi, const GlauberTarget& target,
                          int resolution = 0) {
  return detail::birth_integral(f, phi, target, quadrature_nodes(target.space, resolution)) +
         detail::deletion_sum(f, phi);
}

//! Unbiased version of generator_L with a uniformly shifted mesh.
inline double generator_L_randomized(const TestFunctional& f, const Configuration& phi, const GlauberTarget& target,
                                     CounterRng& rng, int resolution = 16) {
  const Coords shift{rng.uniform(), rng.uniform(), rng.uniform()};
  return detail::birth_integral(f, phi, target, quadrature_nodes(target.space, resolution, shift)) +
         detail::deletion_sum(f, phi);
}

// ---------------------------------------------------------------------------
// Verifications

inline CheckRow compare_estimates(std::string model_id, std::string check_id, Estimate a, Estimate b,
                                  double sigmas = 3.0, double abs_tol = 1e-3) {
  const double se = std::sqrt(a.se * a.se + b.se * b.se);
  return {std::move(model_id), std::move(check_id), a.mean, b.mean, se,
          std::abs(a.mean - b.mean) <= sigmas * se + abs_tol};
}

/// P_t(P_s F)(phi) by nested simulation against P_{t+s} F(phi) directly.
inline CheckRow verify_semigroup(const TestFunctional& f, const Configuration& phi, double t, double s,
                                 const GlauberTarget& target, std::size_t n, const CounterRng& rng,
                                 std::size_t inner = 4, Parallelism par = {}) {
  const Estimate nested = mc_mean(n, rng.split("semigroup/nested"), [&](CounterRng& r) {
    const Configuration mid = sample_G_t(phi, t, target, r);
    double acc = 0.0;
    for (std::size_t k = 0; k < inner; ++k) acc += f(sample_G_t(mid, s, target, r));
    return acc / static_cast<double>(inner);
  }, par);
  const Estimate direct = mc_mean(n, rng.split("semigroup/direct"), [&](CounterRng& r) {
    return f(sample_G_t(phi, t + s, target, r));
  }, par);
  return compare_estimates("glauber", "semigroup[" + f.id + "]", nested, direct);
}

/// D_x P_t F(phi) against e^{-t} P_t D_x F(phi) on common random numbers:
/// x survives in G_t(phi + x) with probability e^{-t}.
inline CheckRow verify_commutation(const TestFunctional& f, const Point& x, const Configuration& phi, double t,
                                   const GlauberTarget& target, std::size_t n, const CounterRng& rng,
                                   Parallelism par = {}) {
  const double keep = std::exp(-t);
  const auto table = replicate_rows(n, 3, rng, [&](CounterRng& r, std::span<double> row) {
    const Configuration eta = sample_G_t(phi, t, target, r);
    const double d = f(eta.plus(x)) - f(eta);
    const bool survives = r.uniform() < keep;
    row[0] = survives ? d : 0.0;
    row[1] = keep * d;
    row[2] = row[0] - row[1];
  }, par);
  const Estimate lhs = summarize(column(table, 3, 0));
  const Estimate rhs = summarize(column(table, 3, 1));
  const Estimate diff = summarize(column(table, 3, 2));
  return {"glauber", "commutation[" + f.id + "]", lhs.mean, rhs.mean, diff.se,
          std::abs(diff.mean) <= 3.0 * diff.se + 1e-3};
}

/// Chi-square goodness of fit of observed counts against a Poisson(mean)
/// law; cells with expected count below 5 are pooled. Returns the p-value.
inline double poisson_chi_square_pvalue(const std::vector<std::size_t>& counts, double mean) {
  std::size_t top = 0;
  for (std::size_t c : counts) top = std::max(top, c);
  std::vector<double> observed(top + 2, 0.0);
  for (std::size_t c : counts) observed[c] += 1.0;
  const double total = static_cast<double>(counts.size());
  const auto law = CountDistribution::poisson(mean);
  std::vector<double> obs_bins, exp_bins;
  double acc_obs = 0.0, acc_exp = 0.0, used = 0.0;
  for (std::size_t k = 0; k <= top; ++k) {
    acc_obs += observed[k];
    acc_exp += law.p(k) * total;
    if (acc_exp >= 5.0) {
      obs_bins.push_back(acc_obs);
      exp_bins.push_back(acc_exp);
      used += acc_exp;
      acc_obs = acc_exp = 0.0;
    }
  }
  // upper tail
  acc_exp = total - used;
  if (exp_bins.empty() || acc_exp >= 5.0) {
    obs_bins.push_back(acc_obs);
    exp_bins.push_back(acc_exp);
  } else {
    obs_bins.back() += acc_obs;
    exp_bins.back() += acc_exp;
  }
  if (exp_bins.size() < 2) return 1.0;
  double stat = 0.0;
  for (std::size_t i = 0; i < exp_bins.size(); ++i) {
    const double d = obs_bins[i] - exp_bins[i];
    stat += d * d / exp_bins[i];
  }
  const double dof = static_cast<double>(exp_bins.size() - 1);
  return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

/// Invariance (count law of G_t(zeta) against Poisson(M(X)) for t in
/// {0.1, 1}) and the ergodic rate |P_t F(phi) - E F(zeta)| <= e^{-t}(|phi| + M(X))
/// for t in {0.5, 1, 2, 4}.
inline std::vector<CheckRow> verify_invariance_and_rate(const TestFunctional& f, const Configuration& phi,
                                                        const GlauberTarget& target, std::size_t n,
                                                        const CounterRng& rng, Parallelism par = {}) {
  std::vector<CheckRow> rows;
  for (double t : {0.1, 1.0}) {
    const auto xs = replicate(n, rng.split("invariance/" + std::to_string(t)), [&](CounterRng& r) {
      return static_cast<double>(sample_G_t(target.sample(r), t, target, r).size());
    }, par);
    std::vector<std::size_t> counts(xs.begin(), xs.end());
    const double pv = poisson_chi_square_pvalue(counts, target.mass);
    char id[64];
    std::snprintf(id, sizeof id, "invariance[t=%g]", t);
    rows.push_back({"glauber", id, pv, 1e-3, 0.0, pv >= 1e-3});
  }
  const Estimate limit = mc_mean(n, rng.split("rate/limit"), [&](CounterRng& r) { return f(target.sample(r)); }, par);
  for (double t : {0.5, 1.0, 2.0, 4.0}) {
    const auto pt = apply_Pt(f, phi, t, target, n, rng.split("rate/" + std::to_string(t)), par);
    const double gap = std::abs(pt.value - limit.mean);
    const double bound = std::exp(-t) * (static_cast<double>(phi.size()) + target.mass);
    const double se = std::sqrt(pt.stderr_ * pt.stderr_ + limit.se * limit.se);
    char id[64];
    std::snprintf(id, sizeof id, "ergodic_rate[%s,t=%g]", f.id.c_str(), t);
    rows.push_back({"glauber", id, gap, bound, se, gap <= bound + 3.0 * se});
  }
  return rows;
}

/// E[LF(Phi)] for draws of a model. A row passes when the mean is within
/// 3 standard errors of 0, which is what a Poisson law with intensity M
/// produces; a non-Poisson control is expected to fail.
inline std::vector<CheckRow> verify_stationarity(const std::string& model_id, const Sampler& sampler,
                                                 const std::vector<TestFunctional>& family, const GlauberTarget& target,
                                                 std::size_t n, const CounterRng& rng, Parallelism par = {}) {
  std::vector<CheckRow> rows;
  const auto table = replicate_rows(n, family.size(), rng, [&](CounterRng& r, std::span<double> row) {
    const Configuration phi = sampler(r);
    const Coords shift{r.uniform(), r.uniform(), r.uniform()};
    const auto nodes = quadrature_nodes(target.space, 16, target.space.is_grid() ? Coords{0.5, 0.5, 0.5} : shift);
    for (std::size_t j = 0; j < family.size(); ++j)
      row[j] = detail::birth_integral(family[j], phi, target, nodes) + detail::deletion_sum(family[j], phi);
  }, par);
  for (std::size_t j = 0; j < family.size(); ++j) {
    const Estimate e = summarize(column(table, family.size(), j));
    rows.push_back({model_id, "stationarity[" + family[j].id + "]", e.mean, 0.0, e.se,
                    std::abs(e.mean) <= 3.0 * e.se + 1e-9});
  }
  return rows;
}

//! Gauss-Legendre nodes and weights on [a, b].
inline std::vector<std::pair<double, double>> gauss_legendre(int n, double a, double b) {
  std::vector<std::pair<double, double>> out;
  for (int i = 1; i <= n; ++i) {
    double x = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out.emplace_back(0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w);
  }
  return out;
}

struct SteinDirichletOptions {
  double horizon = 20.0;
  int nodes = 16;
  std::size_t n = 20000;
  int resolution = 16;
  Parallelism par{};
};

/// int_0^T L P_s F(phi) ds against E F(zeta) - F(phi). The time integral is
/// taken in u = e^{-s} by Gauss-Legendre on [e^{-T}, 1]; at each node
/// L P_s F(phi) is estimated on common draws of G_s(phi), using
///   D_x P_s F = e^{-s} P_s D_x F  and  P_s F(phi \ y) = E F(G_s(phi) - y 1{y kept}).
/// Tolerance: 3 standard errors + e^{-T}(|phi| + M(X)) + 1e-3.
inline CheckRow verify_stein_dirichlet(const TestFunctional& f, const Configuration& phi, const GlauberTarget& target,
                                       const CounterRng& rng, const SteinDirichletOptions& opt = {}) {
  const auto gl = gauss_legendre(opt.nodes, std::exp(-opt.horizon), 1.0);
  double integral = 0.0, var = 0.0;
  for (std::size_t k = 0; k < gl.size(); ++k) {
    const double u = gl[k].first;
    const double s = -std::log(u);
    const Estimate e = mc_mean(opt.n, rng.split("stein_dirichlet/" + std::to_string(k)), [&](CounterRng& r) {
      Configuration kept;
      const Configuration eta = sample_G_t(phi, s, target, r, &kept);
      const Coords shift{r.uniform(), r.uniform(), r.uniform()};
      const auto nodes = quadrature_nodes(target.space, opt.resolution,
                                          target.space.is_grid() ? Coords{0.5, 0.5, 0.5} : shift);
      // (1/u) L P_s F: the birth part carries e^{-s} = u, which cancels
      double value = detail::birth_integral(f, eta, target, nodes);
      const double base = f(eta);
      for (const auto& e : kept.entries())
        value += static_cast<double>(e.multiplicity) * (f(eta.minus(e.point, e.label)) - base) / u;
      return value;
    }, opt.par);
    integral += gl[k].second * e.mean;
    var += gl[k].second * gl[k].second * e.se * e.se;
  }
  const Estimate limit = mc_mean(opt.n, rng.split("stein_dirichlet/limit"), [&](CounterRng& r) {
    return f(target.sample(r));
  }, opt.par);
  const double rhs = limit.mean - f(phi);
  const double se = std::sqrt(var + limit.se * limit.se);
  const double tail = std::exp(-opt.horizon) * (static_cast<double>(phi.size()) + target.mass);
  return {"glauber", "stein_dirichlet[" + f.id + ",|phi|=" + std::to_string(phi.size()) + "]", integral, rhs, se,
          std::abs(integral - rhs) <= 3.0 * se + tail + 1e-3};
}

}  // namespace steinpp

#endif  // STEINPP_GLAUBER_HPP
