#ifndef STEINPP_STEIN_BOUNDS_HPP
#define STEINPP_STEIN_BOUNDS_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steinpp/distances.hpp"
#include "steinpp/geometry.hpp"
#include "steinpp/kernel.hpp"
#include "steinpp/models.hpp"
#include "steinpp/montecarlo.hpp"
#include "steinpp/papangelou.hpp"
#include "steinpp/rng.hpp"

namespace steinpp {

using NamedValues = std::vector<std::pair<std::string, double>>;

//! Right-hand side of a Stein bound on the KR distance to a Poisson target.
struct BoundReport {
  std::string bound_id;
  double value = 0.0;
  //! Standard error of the value; zero for closed forms.
  double stderr_ = 0.0;
  NamedValues components;
  NamedValues inputs;
  std::uint64_t seed = 0;

  [[nodiscard]] double component(const std::string& name) const {
    for (const auto& [k, v] : components)
      if (k == name) return v;
    throw std::out_of_range("bound report: no component " + name);
  }

  /// FNV-1a of the inputs printed with %.17g, as a 16-digit hex string.
  [[nodiscard]] std::string inputs_hash() const {
    std::string s = bound_id;
    char buf[64];
    for (const auto& [k, v] : inputs) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      s += ";" + k + "=" + buf;
    }
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
    return buf;
  }
};

namespace detail {

inline BoundReport closed_form(std::string id, double value, NamedValues inputs, NamedValues components = {}) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw std::domain_error(id + ": bound is not a finite non-negative number");
  BoundReport r;
  r.bound_id = std::move(id);
  r.value = value;
  r.inputs = std::move(inputs);
  r.components = std::move(components);
  return r;
}

inline double factorial(std::size_t n) { return std::tgamma(static_cast<double>(n) + 1.0); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Generic bound

/// int E|m(x) - c(x, Phi)| l(dx), with Phi drawn by `sampler` and c its
/// Papangelou intensity. Continuous spaces use a randomly shifted mesh per
/// replica, so the estimate is unbiased.
inline BoundReport bound_generic(const Intensity& m, const PapangelouEvaluator& c, const Sampler& sampler, std::size_t n,
                                 const CounterRng& rng, int resolution = 16, Parallelism par = {}) {
  const bool shifted = c.continuous();
  const std::vector<QuadratureNode> fixed = shifted ? std::vector<QuadratureNode>{} : c.nodes();
  const auto xs = replicate(n, rng, [&](CounterRng& r) {
    const Configuration phi = sampler(r);
    std::vector<QuadratureNode> mesh;
    if (shifted) mesh = c.nodes(resolution, Coords{r.uniform(), r.uniform(), r.uniform()});
    double total = 0.0;
    for (const auto& node : shifted ? mesh : fixed) total += node.weight * std::abs(m(node.point) - c(node.point, phi));
    return total;
  }, par);
  const Estimate e = summarize(xs);
  BoundReport rep;
  rep.bound_id = "generic";
  rep.value = e.mean;
  rep.stderr_ = e.se;
  rep.inputs = {{"n", static_cast<double>(n)}, {"resolution", static_cast<double>(resolution)}};
  rep.components = {{"mc_stderr", e.se}};
  rep.seed = rng.key();
  return rep;
}

// ---------------------------------------------------------------------------
// Purely random processes

/// sum_n |(n+1) p_{n+1} - M(X) p_n|. The unstored tail of a truncated law
/// adds at most its first moment plus M(X) times its mass. A Poisson law with
/// rate M(X) gives 0 exactly.
inline BoundReport bound_prpp(const CountDistribution& counts, double mx) {
  if (!(mx >= 0.0)) throw std::invalid_argument("bound_prpp: M(X) must be >= 0");
  NamedValues inputs{{"MX", mx}, {"N", static_cast<double>(counts.max_count())}};
  if (counts.poisson_rate() && *counts.poisson_rate() == mx)
    return detail::closed_form("prpp", 0.0, std::move(inputs), {{"sum", 0.0}, {"tail", 0.0}});
  double sum = 0.0;
  for (std::size_t n = 0; n < counts.size(); ++n)
    sum += std::abs(static_cast<double>(n + 1) * counts.p(n + 1) - mx * counts.p(n));
  const double tail = counts.tail_first_moment() + mx * counts.tail_mass();
  return detail::closed_form("prpp", sum + tail, std::move(inputs), {{"sum", sum}, {"tail", tail}});
}

// ---------------------------------------------------------------------------
// Conditional Poisson processes

/// int m(x) P(Phi_C + x not in C) dx, with Phi_C drawn by `sampler`.
inline BoundReport bound_conditional_mc(const Intensity& m, const Condition& cond, const Sampler& sampler, const Space& s,
                                        std::size_t n, const CounterRng& rng, int resolution = 16,
                                        Parallelism par = {}) {
  const bool shifted = !s.is_grid();
  const auto fixed = shifted ? std::vector<QuadratureNode>{} : quadrature_nodes(s);
  const auto xs = replicate(n, rng, [&](CounterRng& r) {
    const Configuration phi = sampler(r);
    std::vector<QuadratureNode> mesh;
    if (shifted) mesh = quadrature_nodes(s, resolution, Coords{r.uniform(), r.uniform(), r.uniform()});
    double total = 0.0;
    for (const auto& node : shifted ? mesh : fixed)
      if (!cond.admits(phi, node.point)) total += node.weight * m(node.point);
    return total;
  }, par);
  const Estimate e = summarize(xs);
  BoundReport rep;
  rep.bound_id = "conditional_mc";
  rep.value = e.mean;
  rep.stderr_ = e.se;
  rep.inputs = {{"n", static_cast<double>(n)}, {"resolution", static_cast<double>(resolution)}};
  rep.components = {{"mc_stderr", e.se}};
  rep.seed = rng.key();
  return rep;
}

/// V_d(R) = pi^{d/2} R^d / Gamma(d/2), or the ball volume with Gamma(d/2 + 1)
/// when `paper_volume` is false.
inline double hardcore_volume(double r, int d, bool paper_volume = true) {
  const double g = paper_volume ? std::tgamma(d / 2.0) : std::tgamma(d / 2.0 + 1.0);
  return std::pow(std::numbers::pi, d / 2.0) * std::pow(r, d) / g;
}

//! lambda^2 |Lambda| V_d(R) / p_R.
inline BoundReport bound_hardcore(double lambda, double area, double r, int d, double p_r, bool paper_volume = true,
                                  double p_r_stderr = 0.0) {
  if (!(p_r > 0.0 && p_r <= 1.0)) throw std::invalid_argument("bound_hardcore: p_R must lie in (0, 1]");
  if (d < 1 || d > 3) throw std::invalid_argument("bound_hardcore: dimension must be 1, 2 or 3");
  const double v = hardcore_volume(r, d, paper_volume);
  const double value = lambda * lambda * area * v / p_r;
  BoundReport rep = detail::closed_form(
      "hardcore", value,
      {{"lambda", lambda}, {"area", area}, {"R", r}, {"d", static_cast<double>(d)}, {"paper_volume", paper_volume ? 1.0 : 0.0}},
      {{"V_d", v}, {"p_R", p_r}, {"p_R_stderr", p_r_stderr}});
  rep.stderr_ = value * p_r_stderr / p_r;
  return rep;
}

//! Probability that an unconditioned Poisson(m) draw satisfies `cond`.
inline Estimate estimate_acceptance(const Intensity& m, const Condition& cond, const Space& s, std::size_t n,
                                    const CounterRng& rng, Parallelism par = {}) {
  const double mass = m.total_mass(s);
  return mc_mean(n, rng, [&](CounterRng& r) { return cond(sample_poisson(m, s, r, mass)) ? 1.0 : 0.0; }, par);
}

//! Poisson CDF P(Poi(mx) <= n).
inline double poisson_cdf(double mx, std::size_t n) {
  double term = std::exp(-mx), total = term;
  for (std::size_t k = 1; k <= n; ++k) {
    term *= mx / static_cast<double>(k);
    total += term;
  }
  return std::min(total, 1.0);
}

/// e^{-M(X)} / p_N * M(X)^{N+1} / N!. Without p_N the exact Poisson CDF at N
/// is used.
inline BoundReport bound_bounded(double mx, std::size_t n, double p_n = -1.0) {
  if (p_n < 0.0) p_n = poisson_cdf(mx, n);
  if (!(p_n > 0.0 && p_n <= 1.0)) throw std::invalid_argument("bound_bounded: p_N must lie in (0, 1]");
  const double value = std::exp(-mx) / p_n * std::pow(mx, static_cast<double>(n + 1)) / detail::factorial(n);
  return detail::closed_form("bounded", value, {{"MX", mx}, {"N", static_cast<double>(n)}}, {{"p_N", p_n}});
}

// ---------------------------------------------------------------------------
// Superpositions

/// R_n + 2 n (max_i int rho_i)^2 with R_n = int |sum_i rho_i - m|, for n
/// independent weakly repulsive components with intensities rho_i.
inline BoundReport bound_superposition(const std::vector<Intensity>& rhos, const Intensity& m, const Space& s,
                                       int resolution = 0) {
  if (rhos.empty()) throw std::invalid_argument("bound_superposition: no components");
  const double r_n = integrate([&](const Point& x) {
    double total = 0.0;
    for (const auto& rho : rhos) total += rho(x);
    return std::abs(total - m(x));
  }, s, resolution);
  double top = 0.0;
  for (const auto& rho : rhos) top = std::max(top, rho.total_mass(s, resolution));
  const double n = static_cast<double>(rhos.size());
  const double second = 2.0 * n * top * top;
  return detail::closed_form("superposition", r_n + second, {{"n", n}}, {{"R_n", r_n}, {"max_rho_mass", top}, {"second", second}});
}

//! R_n + 2 C^2 / n, for components with int rho_i <= C / n.
inline BoundReport bound_superposition_remark(double r_n, double c, std::size_t n) {
  if (n == 0) throw std::invalid_argument("bound_superposition_remark: n must be positive");
  const double second = 2.0 * c * c / static_cast<double>(n);
  return detail::closed_form("superposition_remark", r_n + second, {{"R_n", r_n}, {"C", c}, {"n", static_cast<double>(n)}},
                             {{"second", second}});
}

/// n i.i.d. points with density (1/n) h(x/n) on R_+, reduced to
/// Lambda = [a, b]: int_Lambda |h(x/n) - h(0+)| dx + (2/n)(int_Lambda h(x/n) dx)^2.
inline BoundReport bound_iid_corollary(const std::function<double(double)>& h, double h0, std::size_t n, double a,
                                       double b, int resolution = 4096) {
  if (n == 0 || !(0.0 <= a && a < b)) throw std::invalid_argument("bound_iid_corollary: need n > 0 and 0 <= a < b");
  const Space lam = Space::box({a}, {b});
  const double nn = static_cast<double>(n);
  const double r_n = integrate([&](const Point& x) { return std::abs(h(x.x[0] / nn) - h0); }, lam, resolution);
  const double mass = integrate([&](const Point& x) { return h(x.x[0] / nn); }, lam, resolution);
  const double second = 2.0 / nn * mass * mass;
  return detail::closed_form("iid_corollary", r_n + second, {{"n", nn}, {"a", a}, {"b", b}, {"h0", h0}},
                             {{"R_n", r_n}, {"mass", mass}, {"second", second}});
}

//! (2/n) (int K(x, x) dx)^2 for the (-1/n)-DPP built from K.
inline BoundReport bound_minus1n_dpp(const Kernel& k, std::size_t n) {
  if (n == 0) throw std::invalid_argument("bound_minus1n_dpp: n must be positive");
  const double tr = k.trace();
  return detail::closed_form("minus1n_dpp", 2.0 / static_cast<double>(n) * tr * tr, {{"n", static_cast<double>(n)}},
                             {{"trace", tr}});
}

/// (1/sqrt n) int sqrt(K), where V[c(x, Phi)] <= K(x) for each component of
/// the thinned superposition.
inline BoundReport bound_thinned_superposition(const std::function<double(const Point&)>& k_var, std::size_t n,
                                               const Space& s, int resolution = 0) {
  if (n == 0) throw std::invalid_argument("bound_thinned_superposition: n must be positive");
  const double root = integrate([&](const Point& x) {
    const double v = k_var(x);
    if (v < 0.0) throw std::domain_error("bound_thinned_superposition: variance bound must be >= 0");
    return std::sqrt(v);
  }, s, resolution);
  return detail::closed_form("thinned_superposition", root / std::sqrt(static_cast<double>(n)),
                             {{"n", static_cast<double>(n)}}, {{"int_sqrt_K", root}});
}

//! 2 beta / (1 - beta) * lambda |Lambda|.
inline BoundReport bound_dpp_thin_rescale(double beta, double lambda, double area) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("bound_dpp_thin_rescale: beta must lie in (0, 1)");
  return detail::closed_form("dpp_thin_rescale", 2.0 * beta / (1.0 - beta) * lambda * area,
                             {{"beta", beta}, {"lambda", lambda}, {"area", area}});
}

//! M(X)^2 theta epsilon with M(dx) = exp(-theta psi1(x)) dx.
inline BoundReport bound_gibbs(double mx, double theta, double epsilon) {
  if (!(theta >= 0.0 && epsilon >= 0.0)) throw std::invalid_argument("bound_gibbs: theta and epsilon must be >= 0");
  return detail::closed_form("gibbs", mx * mx * theta * epsilon, {{"MX", mx}, {"theta", theta}, {"epsilon", epsilon}});
}

// ---------------------------------------------------------------------------
// Thinning and Cox processes

using Retain = std::function<double(const Point&)>;

//! 2 E[sum_{x in Phi} p(x)^2].
inline BoundReport bound_thinned_vs_cox(const Sampler& sampler, const Retain& p, std::size_t n, const CounterRng& rng,
                                        Parallelism par = {}) {
  const Estimate e = mc_mean(n, rng, [&](CounterRng& r) {
    double total = 0.0;
    const Configuration phi = sampler(r);
    for (const auto& entry : phi.entries()) {
      const double q = p(entry.point);
      total += static_cast<double>(entry.multiplicity) * q * q;
    }
    return 2.0 * total;
  }, par);
  BoundReport rep;
  rep.bound_id = "thinned_vs_cox";
  rep.value = e.mean;
  rep.stderr_ = e.se;
  rep.inputs = {{"n", static_cast<double>(n)}};
  rep.components = {{"mc_stderr", e.se}};
  rep.seed = rng.key();
  return rep;
}

//! Poisson process directed by the atomic measure sum_{x in phi} p(x) delta_x.
inline Configuration poisson_directed_by(const Configuration& phi, const Retain& p, CounterRng& rng) {
  Configuration out;
  for (const auto& e : phi.entries()) {
    const std::size_t k = poisson_count(p(e.point) * static_cast<double>(e.multiplicity), rng);
    if (k > 0) out.insert(e.point, k);
  }
  return out;
}

/// 2 E[sum p^2] plus the Polish distance between the Poisson process directed
/// by p Phi and the Cox target, each directing measure lifted by one inner
/// Poisson draw per outer sample.
inline BoundReport bound_kallenberg(const Sampler& sampler, const Retain& p, const CoxAtomicModel& target, std::size_t n,
                                    const CounterRng& rng, Parallelism par = {}) {
  const BoundReport first = bound_thinned_vs_cox(sampler, p, n, rng.split("kallenberg/first"), par);
  const Sampler lifted = [&](CounterRng& r) {
    const Configuration phi = sampler(r);
    return poisson_directed_by(phi, p, r);
  };
  const Sampler cox = [&](CounterRng& r) { return sample_cox_atomic(target, r); };
  const EstimateReport polish = polish_distance(lifted, cox, target.space, n, rng.split("kallenberg/polish"), par);
  BoundReport rep;
  rep.bound_id = "kallenberg";
  rep.value = first.value + polish.value;
  rep.stderr_ = first.stderr_ + polish.stderr_;
  rep.inputs = {{"n", static_cast<double>(n)}};
  rep.components = {{"thinning_term", first.value}, {"thinning_stderr", first.stderr_}, {"polish_term", polish.value},
                    {"polish_stderr", polish.stderr_}};
  rep.seed = rng.key();
  return rep;
}

}  // namespace steinpp

#endif  // STEINPP_STEIN_BOUNDS_HPP
