#ifndef STEINPP_PAPANGELOU_HPP
#define STEINPP_PAPANGELOU_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "steinpp/error.hpp"
#include "steinpp/geometry.hpp"
#include "steinpp/kernel.hpp"
#include "steinpp/models.hpp"
#include "steinpp/montecarlo.hpp"
#include "steinpp/transforms.hpp"

namespace steinpp {

/// Papangelou intensity c(x, phi) together with the reference measure it is
/// a density against: the reference measure of `space`, or the atomic
/// measure sum_k weight_k delta_{point_k} when `atoms` is used instead.
struct PapangelouEvaluator {
  using Fn = std::function<double(const Point&, const Configuration&)>;

  std::string tag;
  Fn fn;
  std::optional<Space> space;
  std::vector<QuadratureNode> atoms;
  //! Model the evaluator was derived from, when known.
  ModelPtr source;

  double operator()(const Point& x, const Configuration& phi) const { return fn(x, phi); }

  /// Nodes of the reference measure. Continuous spaces get a midpoint mesh
  /// moved by `shift` (in cell units); grids and atomic measures are exact.
  [[nodiscard]] std::vector<QuadratureNode> nodes(int resolution = 0, const Coords& shift = {0.5, 0.5, 0.5}) const {
    if (!space) return atoms;
    return quadrature_nodes(*space, resolution, shift);
  }

  [[nodiscard]] bool continuous() const { return space && !space->is_grid(); }
};

// ---------------------------------------------------------------------------
// Closed forms

inline PapangelouEvaluator pap_poisson(const Space& s, const Intensity& m) {
  return {"poisson", [m](const Point& x, const Configuration&) { return m(x); }, s, {}, nullptr};
}

//! c(x, phi) = (n + 1) p_{n+1} / p_n q(x) with n = |phi|.
inline PapangelouEvaluator pap_purely_random(const Space& s, const CountDistribution& counts, const Intensity& q) {
  return {"purely_random",
          [counts, q](const Point& x, const Configuration& phi) {
            const std::size_t n = phi.size();
            if (n >= counts.size()) throw TruncationError("purely random: |phi| beyond the stored count law");
            const double pn = counts.p(n);
            if (pn <= 0.0) return 0.0;
            return static_cast<double>(n + 1) * counts.p(n + 1) / pn * q(x);
          },
          s, {}, nullptr};
}

//! c(x, phi) = m(x) 1{phi + x in C} 1{phi in C}.
inline PapangelouEvaluator pap_conditional(const Space& s, const Intensity& m, const Condition& cond) {
  return {"conditional",
          [m, cond](const Point& x, const Configuration& phi) {
            if (!cond(phi) || !cond.admits(phi, x)) return 0.0;
            return m(x);
          },
          s, {}, nullptr};
}

//! c(x, phi) = exp(-theta (psi1(x) + sum_{y in phi} psi2(x, y))).
inline PapangelouEvaluator pap_gibbs(const Space& s, double theta, const Intensity& psi1, const GibbsModel::Pair& psi2) {
  return {"gibbs",
          [theta, psi1, psi2](const Point& x, const Configuration& phi) {
            double e = psi1(x);
            for (const auto& en : phi.entries()) e += static_cast<double>(en.multiplicity) * psi2(x, en.point);
            return std::exp(-theta * e);
          },
          s, {}, nullptr};
}

/// alpha-determinant sum_sigma alpha^{m - cycles(sigma)} prod_i A(i, sigma(i))
/// by enumeration of permutations; meant for matrices up to 8 x 8.
inline cplx alpha_det(const CMatrix& a, double alpha) {
  const int m = static_cast<int>(a.rows());
  if (m == 0) return 1.0;
  if (m > 8) throw std::invalid_argument("alpha_det: matrices larger than 8 x 8 are not supported");
  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  cplx total = 0.0;
  std::vector<char> seen(static_cast<std::size_t>(m));
  do {
    cplx prod = 1.0;
    for (int i = 0; i < m; ++i) prod *= a(i, perm[static_cast<std::size_t>(i)]);
    if (prod == cplx(0.0)) continue;
    std::fill(seen.begin(), seen.end(), 0);
    int cycles = 0;
    for (int i = 0; i < m; ++i) {
      if (seen[static_cast<std::size_t>(i)]) continue;
      ++cycles;
      for (int j = i; !seen[static_cast<std::size_t>(j)]; j = perm[static_cast<std::size_t>(j)]) seen[static_cast<std::size_t>(j)] = 1;
    }
    total += std::pow(alpha, m - cycles) * prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

namespace detail {

inline std::vector<Eigen::Index> cell_indices(const Configuration& phi, std::size_t sites) {
  std::vector<Eigen::Index> idx;
  idx.reserve(phi.size());
  for (const auto& e : phi.entries()) {
    if (e.point.cell < 0 || static_cast<std::size_t>(e.point.cell) >= sites)
      throw std::invalid_argument("dpp evaluator: configuration point is not a site of the kernel grid");
    for (std::size_t k = 0; k < e.multiplicity; ++k) idx.push_back(e.point.cell);
  }
  return idx;
}

inline CMatrix submatrix(const CMatrix& j, const std::vector<Eigen::Index>& idx) {
  const auto m = static_cast<Eigen::Index>(idx.size());
  CMatrix s(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) s(a, b) = j(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  return s;
}

inline double det_ratio(const CMatrix& j, std::vector<Eigen::Index> idx, Eigen::Index x, double alpha) {
  const double den = alpha == -1.0 ? submatrix(j, idx).determinant().real() : alpha_det(submatrix(j, idx), alpha).real();
  if (!(den > 0.0)) return 0.0;
  idx.insert(idx.begin(), x);
  const double num = alpha == -1.0 ? submatrix(j, idx).determinant().real() : alpha_det(submatrix(j, idx), alpha).real();
  return std::max(0.0, num / den);
}

}  // namespace detail

/// c(x_i, phi) = det_alpha J[x_i phi] / det_alpha J[phi] / w_i, J = (I + alpha
/// K)^{-1} K, in the weighted form. With alpha = -1 repeated sites give 0.
inline PapangelouEvaluator pap_dpp(const Kernel& k) {
  auto kernel = std::make_shared<const Kernel>(k);
  (void)kernel->associated();
  return {"dpp",
          [kernel](const Point& x, const Configuration& phi) {
            const auto& g = kernel->space().as_grid();
            if (x.cell < 0 || static_cast<std::size_t>(x.cell) >= g.sites.size())
              throw std::invalid_argument("dpp evaluator: x is not a site of the kernel grid");
            const double alpha = kernel->alpha();
            auto idx = detail::cell_indices(phi, g.sites.size());
            if (alpha == -1.0) {
              for (std::size_t a = 0; a < idx.size(); ++a) {
                if (idx[a] == x.cell) return 0.0;
                for (std::size_t b = a + 1; b < idx.size(); ++b)
                  if (idx[a] == idx[b]) return 0.0;
              }
            } else if (idx.size() + 1 > 8) {
              throw std::invalid_argument("dpp evaluator: alpha-determinants are limited to |phi| + 1 <= 8");
            }
            return detail::det_ratio(kernel->associated(), std::move(idx), x.cell, alpha) / g.weights[static_cast<std::size_t>(x.cell)];
          },
          kernel->space(), {}, nullptr};
}

/// Summed intensity of an independent superposition; component i reads the
/// points labelled i.
inline PapangelouEvaluator pap_superposition(std::vector<PapangelouEvaluator> parts) {
  if (parts.empty()) throw std::invalid_argument("superposition evaluator: no components");
  auto shared = std::make_shared<const std::vector<PapangelouEvaluator>>(std::move(parts));
  PapangelouEvaluator out;
  out.tag = "superposition";
  out.space = shared->front().space;
  out.atoms = shared->front().atoms;
  out.fn = [shared](const Point& x, const Configuration& phi) {
    double c = 0.0;
    for (std::size_t i = 0; i < shared->size(); ++i)
      c += (*shared)[i](x, phi.component(static_cast<std::uint32_t>(i)));
    return c;
  };
  return out;
}

/// Intensity of p o phi for a fixed configuration phi, against the
/// reference measure sum_x p(x) phi(dx). For a location of multiplicity k
/// holding m points of eta it is (k - m) / (k (m + 1) (1 - p(x))), which is
/// 1{x in phi \ eta} / (1 - p(x)) when phi is simple.
inline PapangelouEvaluator pap_thinned_config(const Configuration& phi, const std::function<double(const Point&)>& p) {
  PapangelouEvaluator out;
  out.tag = "thinned_configuration";
  for (const auto& e : phi.entries()) {
    const double pe = p(e.point);
    if (!(pe >= 0.0 && pe < 1.0)) throw std::invalid_argument("thinned configuration: p must lie in [0, 1)");
    out.atoms.push_back({e.point, pe * static_cast<double>(e.multiplicity)});
  }
  const Configuration base = phi.relabeled(0);
  out.fn = [base, p](const Point& x, const Configuration& eta) {
    const std::size_t k = base.multiplicity(x);
    const std::size_t m = eta.multiplicity(x);
    if (k == 0 || m >= k) return 0.0;
    return static_cast<double>(k - m) / (static_cast<double>(k) * static_cast<double>(m + 1) * (1.0 - p(x)));
  };
  return out;
}

inline PapangelouEvaluator papangelou(const Model& m);

/// Intensity of a transformed law. Closed model transforms are resolved
/// through transform_model; otherwise restriction uses c(x, phi) 1{x in region},
/// rescaling uses (1/eps) c(eps^{-1/d} x, eps^{-1/d} phi), superposition sums
/// labelled components, and thinning throws NotClosed.
inline PapangelouEvaluator pap_transform(const PapangelouEvaluator& base, const TransformNode& node) {
  if (base.source && !std::holds_alternative<Superpose>(node)) {
    try {
      PapangelouEvaluator e = papangelou(transform_model(*base.source, node));
      return e;
    } catch (const NotClosed&) {
    }
  }
  return std::visit([&](const auto& t) -> PapangelouEvaluator {
    using T = std::decay_t<decltype(t)>;
    PapangelouEvaluator out = base;
    out.source = nullptr;
    if constexpr (std::is_same_v<T, Restrict>) {
      const auto fn = base.fn;
      const BoxSpace region = t.region;
      out.tag = base.tag + "|restricted";
      out.fn = [fn, region](const Point& x, const Configuration& phi) { return inside_box(region, x) ? fn(x, phi) : 0.0; };
      if (base.space) out.space = transformed_space(*base.space, node);
      return out;
    } else if constexpr (std::is_same_v<T, Rescale>) {
      if (!base.space) throw NotClosed("rescaling of an atomic reference measure");
      const int d = base.space->dim();
      const double eps = t.epsilon;
      const double f = std::pow(eps, -1.0 / d);
      const auto fn = base.fn;
      out.tag = base.tag + "|rescaled";
      out.space = transformed_space(*base.space, node);
      out.fn = [fn, eps, d, f](const Point& x, const Configuration& phi) {
        Point y = x;
        for (int a = 0; a < d; ++a) y.x[a] *= f;
        return fn(y, rescale_config(phi, 1.0 / eps, d)) / eps;
      };
      return out;
    } else if constexpr (std::is_same_v<T, Superpose>) {
      std::vector<PapangelouEvaluator> parts{base};
      for (const auto& m : t.models) parts.push_back(papangelou(*m));
      return pap_superposition(std::move(parts));
    } else {
      throw NotClosed("thinning: the intensity E[c(x, Phi) | thinned] has no closed form for this model");
    }
  }, node);
}

/// Evaluator matching sample(m). Superposed and alpha = -1/n DPP models use
/// the labelled sum over components, as produced by the samplers.
inline PapangelouEvaluator papangelou(const Model& m) {
  PapangelouEvaluator e = std::visit([&](const auto& x) -> PapangelouEvaluator {
    using T = std::decay_t<decltype(x)>;
    if constexpr (std::is_same_v<T, PoissonModel>) return pap_poisson(x.space, x.intensity);
    else if constexpr (std::is_same_v<T, BinomialModel>) {
      return pap_purely_random(x.space, CountDistribution::dirac(x.count), x.density);
    } else if constexpr (std::is_same_v<T, PurelyRandomModel>) return pap_purely_random(x.space, x.counts, x.density);
    else if constexpr (std::is_same_v<T, ConditionalModel>) return pap_conditional(x.space, x.intensity, x.condition);
    else if constexpr (std::is_same_v<T, GibbsModel>) return pap_gibbs(x.space, x.theta, x.psi1, x.psi2);
    else if constexpr (std::is_same_v<T, DppModel>) {
      const unsigned n = x.kernel.superposition();
      if (n == 1) return pap_dpp(x.kernel);
      const PapangelouEvaluator part = pap_dpp(x.kernel.scaled(1.0 / n).with_superposition(1));
      return pap_superposition(std::vector<PapangelouEvaluator>(n, part));
    } else if constexpr (std::is_same_v<T, SuperposedModel>) {
      std::vector<PapangelouEvaluator> parts;
      for (const auto& c : x.components) parts.push_back(papangelou(*c));
      return pap_superposition(std::move(parts));
    } else if constexpr (std::is_same_v<T, TransformedModel>) {
      return pap_transform(papangelou(*x.base), x.node);
    } else {
      throw NotClosed("papangelou: no closed form for a Cox process with several directing measures");
    }
  }, m.v);
  if (!e.source) e.source = std::make_shared<const Model>(m);
  return e;
}

// ---------------------------------------------------------------------------
// Janossy oracle

/// j(phi + x) / j(phi) 1{j(phi) != 0} from explicit Janossy densities, for
/// Poisson, binomial, purely random, conditional Poisson and Gibbs models.
/// Normalizing constants cancel and are set to 1.
inline double janossy_ratio_oracle(const Model& m, const Point& x, const Configuration& phi) {
  if (phi.size() > 12) throw std::invalid_argument("janossy oracle: |phi| <= 12 required");
  auto janossy = [&](const Configuration& c) -> double {
    const auto pts = c.points();
    return std::visit([&](const auto& mod) -> double {
      using T = std::decay_t<decltype(mod)>;
      if constexpr (std::is_same_v<T, PoissonModel>) {
        double j = std::exp(-mod.mass);
        for (const auto& p : pts) j *= mod.intensity(p);
        return j;
      } else if constexpr (std::is_same_v<T, PurelyRandomModel> || std::is_same_v<T, BinomialModel>) {
        double pn;
        if constexpr (std::is_same_v<T, PurelyRandomModel>) pn = mod.counts.p(pts.size());
        else pn = pts.size() == mod.count ? 1.0 : 0.0;
        double j = pn * std::tgamma(static_cast<double>(pts.size()) + 1.0);
        for (const auto& p : pts) j *= mod.density(p);
        return j;
      } else if constexpr (std::is_same_v<T, ConditionalModel>) {
        if (!mod.condition(c)) return 0.0;
        double j = std::exp(-mod.mass);
        for (const auto& p : pts) j *= mod.intensity(p);
        return j;
      } else if constexpr (std::is_same_v<T, GibbsModel>) {
        double u = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          u += mod.psi1(pts[i]);
          for (std::size_t k = i + 1; k < pts.size(); ++k) u += mod.psi2(pts[i], pts[k]);
        }
        return std::exp(-mod.theta * u);
      } else {
        throw Error(std::string("janossy oracle: unsupported family ") + family_name(m));
      }
    }, m.v);
  };
  const double den = janossy(phi);
  if (den == 0.0) return 0.0;
  return janossy(phi.plus(x)) / den;
}

// ---------------------------------------------------------------------------
// Checks

//! One line of a verification table.
struct CheckRow {
  std::string model_id;
  std::string check_id;
  double lhs = 0.0;
  double rhs = 0.0;
  double stderr_ = 0.0;
  bool pass = false;
};

struct GnzReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double stderr_lhs = 0.0;
  double stderr_rhs = 0.0;
  std::size_t n = 0;
  bool pass = false;

  [[nodiscard]] CheckRow row(std::string model_id, std::string check_id) const {
    return {std::move(model_id), std::move(check_id), lhs, rhs, stderr_lhs + stderr_rhs, pass};
  }
};

using Sampler = std::function<Configuration(CounterRng&)>;
using TestIntegrand = std::function<double(const Point&, const Configuration&)>;

struct GnzOptions {
  //! Mesh cells per axis for the right-hand side on continuous spaces.
  int resolution = 16;
  double sigmas = 3.0;
  double abs_tol = 1e-3;
  Parallelism par{};
};

inline Sampler sampler_of(const Model& m) {
  auto shared = std::make_shared<const Model>(m);
  return [shared](CounterRng& rng) { return sample(*shared, rng); };
}

/// Monte-Carlo estimates of both sides of
///   E sum_{x in Phi} u(x, Phi \ x) = int E[c(x, Phi) u(x, Phi)] l(dx).
/// The right-hand integral uses, per replica, a mesh shifted by a uniform
/// random vector, which makes it unbiased on continuous spaces.
inline GnzReport gnz_check(const Sampler& sampler, const PapangelouEvaluator& c, const TestIntegrand& u, std::size_t n,
                           const CounterRng& rng, const GnzOptions& opt = {}) {
  const bool shifted = c.continuous();
  const std::vector<QuadratureNode> fixed = shifted ? std::vector<QuadratureNode>{} : c.nodes();
  const auto table = replicate_rows(n, 2, rng, [&](CounterRng& r, std::span<double> row) {
    const Configuration phi = sampler(r);
    double lhs = 0.0;
    for (const auto& e : phi.entries()) {
      const Configuration rest = phi.minus(e.point, e.label);
      lhs += static_cast<double>(e.multiplicity) * u(e.point, rest);
    }
    double rhs = 0.0;
    if (shifted) {
      const Coords shift{r.uniform(), r.uniform(), r.uniform()};
      for (const auto& node : c.nodes(opt.resolution, shift)) {
        const double uv = u(node.point, phi);
        if (uv != 0.0) rhs += node.weight * c(node.point, phi) * uv;
      }
    } else {
      for (const auto& node : fixed) {
        const double uv = u(node.point, phi);
        if (uv != 0.0) rhs += node.weight * c(node.point, phi) * uv;
      }
    }
    row[0] = lhs;
    row[1] = rhs;
  }, opt.par);
  const Estimate l = summarize(column(table, 2, 0));
  const Estimate rr = summarize(column(table, 2, 1));
  GnzReport rep{l.mean, rr.mean, l.se, rr.se, n, false};
  rep.pass = std::abs(rep.lhs - rep.rhs) <= opt.sigmas * (rep.stderr_lhs + rep.stderr_rhs) + opt.abs_tol;
  return rep;
}

inline GnzReport gnz_check(const Model& m, const PapangelouEvaluator& c, const TestIntegrand& u, std::size_t n,
                           const CounterRng& rng, const GnzOptions& opt = {}) {
  return gnz_check(sampler_of(m), c, u, n, rng, opt);
}

struct RepulsivenessReport {
  std::string family;
  bool repulsive = true;
  bool weakly_repulsive = true;
  //! First n violating each property.
  std::optional<std::size_t> repulsive_witness;
  std::optional<std::size_t> weak_witness;
};

/// Purely random process criteria over the stored range:
/// repulsive iff (n+1) p_{n+1}^2 >= (n+2) p_n p_{n+2},
/// weakly repulsive iff p_0 (n+1) p_{n+1} <= p_n p_1.
inline RepulsivenessReport classify_prpp(const CountDistribution& counts) {
  constexpr double rel = 1e-12;
  RepulsivenessReport r;
  r.family = "purely_random";
  const std::size_t size = counts.size();
  for (std::size_t n = 0; n < size; ++n) {
    const double dn = static_cast<double>(n);
    const double lhs_r = (dn + 1.0) * counts.p(n + 1) * counts.p(n + 1);
    const double rhs_r = (dn + 2.0) * counts.p(n) * counts.p(n + 2);
    if (r.repulsive && lhs_r < rhs_r * (1.0 - rel)) {
      r.repulsive = false;
      r.repulsive_witness = n;
    }
    const double lhs_w = counts.p(0) * (dn + 1.0) * counts.p(n + 1);
    const double rhs_w = counts.p(n) * counts.p(1);
    if (r.weakly_repulsive && lhs_w > rhs_w * (1.0 + rel)) {
      r.weakly_repulsive = false;
      r.weak_witness = n;
    }
  }
  return r;
}

//! Two-sided standard normal quantile for a family-wise level over k tests.
inline double bonferroni_sigmas(std::size_t k, double level = 1e-3) {
  const double target = level / (2.0 * static_cast<double>(std::max<std::size_t>(k, 1)));
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(mid / std::numbers::sqrt2) > target ? lo : hi) = mid;
  }
  return std::max(3.0, hi);
}

struct StructuralOptions {
  //! Apply the two lemmas that assume c(x, phi) <= c(x, empty).
  bool weakly_repulsive = true;
  //! Closed-form correlation function rho(x), when known.
  std::function<double(const Point&)> rho;
  //! Mesh cells per axis for pointwise checks on continuous spaces.
  int node_resolution = 4;
  //! Mesh cells per axis for integrals of c(x, empty).
  int integral_resolution = 128;
  double abs_tol = 1e-3;
  Parallelism par{};
};

/// Singleton identity P(|Phi| = 1) = P(|Phi| = 0) int c(x, empty) dx, the
/// correlation identity E c(x, Phi) = rho(x), and for weakly repulsive laws
///   |c(x, empty) - rho(x)| <= (1 - p0) c(x, empty),
///   E|c(x, Phi) - rho(x)| <= 2 (c(x, empty) - rho(x)).
/// Pointwise checks run at a coarse mesh (all sites on grids) with a
/// Bonferroni-adjusted margin of at least 3 standard errors.
inline std::vector<CheckRow> check_structural_lemmas(const std::string& model_id, const Sampler& sampler,
                                                     const PapangelouEvaluator& c, std::size_t n,
                                                     const CounterRng& rng, const StructuralOptions& opt = {}) {
  std::vector<CheckRow> rows;
  const Configuration empty;
  double c_empty_integral = 0.0;
  for (const auto& node : c.nodes(opt.integral_resolution)) c_empty_integral += node.weight * c(node.point, empty);

  const std::vector<QuadratureNode> pts = c.nodes(opt.node_resolution);
  const std::size_t k = pts.size();
  std::vector<double> c0(k);
  for (std::size_t i = 0; i < k; ++i) c0[i] = c(pts[i].point, empty);

  // per replica: singleton statistic, void indicator, c(x_i, Phi) for each node
  const std::size_t width = 2 + k;
  const auto table = replicate_rows(n, width, rng, [&](CounterRng& r, std::span<double> row) {
    const Configuration phi = sampler(r);
    row[0] = (phi.size() == 1 ? 1.0 : 0.0) - (phi.empty() ? c_empty_integral : 0.0);
    row[1] = phi.empty() ? 1.0 : 0.0;
    for (std::size_t i = 0; i < k; ++i) row[2 + i] = c(pts[i].point, phi);
  }, opt.par);

  const Estimate singleton = summarize(column(table, width, 0));
  {
    CheckRow row{model_id, "singleton_identity", singleton.mean, 0.0, singleton.se, false};
    row.pass = std::abs(singleton.mean) <= 3.0 * singleton.se + opt.abs_tol;
    rows.push_back(row);
  }
  const Estimate p0 = summarize(column(table, width, 1));
  const double z = bonferroni_sigmas(k);

  std::vector<Estimate> rho_hat(k);
  for (std::size_t i = 0; i < k; ++i) rho_hat[i] = summarize(column(table, width, 2 + i));

  auto worst = [&](const std::string& id, auto&& node_check) {
    CheckRow row{model_id, id, 0.0, 0.0, 0.0, true};
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      const auto [lhs, rhs, se, ok] = node_check(i);
      const double excess = (lhs - rhs) - (z * se + opt.abs_tol);
      if (!ok) row.pass = false;
      if (excess > worst_excess) {
        worst_excess = excess;
        row.lhs = lhs;
        row.rhs = rhs;
        row.stderr_ = se;
      }
    }
    rows.push_back(row);
  };

  if (opt.rho) {
    worst("correlation_identity", [&](std::size_t i) {
      const double exact = opt.rho(pts[i].point);
      const double dev = std::abs(rho_hat[i].mean - exact);
      return std::tuple{dev, 0.0, rho_hat[i].se, dev <= z * rho_hat[i].se + opt.abs_tol};
    });
  } else {
    // integrated form: E|Phi| = int E c(x, Phi) dx
    const auto both = replicate_rows(n, 2, rng.split("correlation"), [&](CounterRng& r, std::span<double> row) {
      const Configuration phi = sampler(r);
      const Coords shift{r.uniform(), r.uniform(), r.uniform()};
      double acc = 0.0;
      for (const auto& node : c.nodes(16, c.continuous() ? shift : Coords{0.5, 0.5, 0.5}))
        acc += node.weight * c(node.point, phi);
      row[0] = static_cast<double>(phi.size());
      row[1] = acc;
    }, opt.par);
    const Estimate count = summarize(column(both, 2, 0));
    const Estimate integral = summarize(column(both, 2, 1));
    CheckRow row{model_id, "correlation_identity", count.mean, integral.mean, count.se + integral.se, false};
    row.pass = std::abs(count.mean - integral.mean) <= 3.0 * row.stderr_ + opt.abs_tol;
    rows.push_back(row);
  }

  if (opt.weakly_repulsive) {
    worst("void_probability_bound", [&](std::size_t i) {
      const double lhs = std::abs(c0[i] - rho_hat[i].mean);
      const double rhs = (1.0 - p0.mean) * c0[i];
      const double se = rho_hat[i].se + c0[i] * p0.se;
      return std::tuple{lhs, rhs, se, lhs <= rhs + z * se + opt.abs_tol};
    });

    // mean deviation on an independent batch so rho is not fitted to it
    const CounterRng second = rng.split("mean_deviation");
    const auto dev_table = replicate_rows(n, k, second, [&](CounterRng& r, std::span<double> row) {
      const Configuration phi = sampler(r);
      for (std::size_t i = 0; i < k; ++i) {
        const double rho = opt.rho ? opt.rho(pts[i].point) : rho_hat[i].mean;
        row[i] = std::abs(c(pts[i].point, phi) - rho);
      }
    }, opt.par);
    worst("mean_deviation_bound", [&](std::size_t i) {
      const Estimate dev = summarize(column(dev_table, k, i));
      const double rho = opt.rho ? opt.rho(pts[i].point) : rho_hat[i].mean;
      const double rho_se = opt.rho ? 0.0 : rho_hat[i].se;
      const double lhs = dev.mean;
      const double rhs = 2.0 * (c0[i] - rho);
      const double se = dev.se + 3.0 * rho_se;
      return std::tuple{lhs, rhs, se, lhs <= rhs + z * se + opt.abs_tol};
    });
  }
  return rows;
}

/// Exhaustive monotonicity check on a grid: c(x, phi + y) <= c(x, phi) + tol
/// for every site x, y and every multiset phi of sites with |phi| <= max_size.
/// Returns the number of violations.
inline std::size_t count_monotonicity_violations(const PapangelouEvaluator& c, std::size_t max_size = 4,
                                                 double tol = 1e-10) {
  if (!c.space || !c.space->is_grid()) throw std::invalid_argument("monotonicity check: needs a grid evaluator");
  const Space& g = *c.space;
  const std::size_t sites = g.num_sites();
  std::size_t violations = 0;
  std::vector<std::size_t> idx;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    Configuration phi;
    for (std::size_t i : idx) phi.insert(g.site(i));
    std::vector<double> base(sites);
    for (std::size_t x = 0; x < sites; ++x) base[x] = c(g.site(x), phi);
    for (std::size_t y = 0; y < sites; ++y) {
      const Configuration bigger = phi.plus(g.site(y));
      for (std::size_t x = 0; x < sites; ++x)
        if (c(g.site(x), bigger) > base[x] + tol) ++violations;
    }
    if (idx.size() == max_size) return;
    for (std::size_t s = start; s < sites; ++s) {
      idx.push_back(s);
      rec(s);
      idx.pop_back();
    }
  };
  rec(0);
  return violations;
}

}  // namespace steinpp

#endif  // STEINPP_PAPANGELOU_HPP
