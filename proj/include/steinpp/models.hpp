#ifndef STEINPP_MODELS_HPP
#define STEINPP_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "steinpp/configuration_ops.hpp"
#include "steinpp/error.hpp"
#include "steinpp/geometry.hpp"
#include "steinpp/kernel.hpp"
#include "steinpp/rng.hpp"

namespace steinpp {

// ---------------------------------------------------------------------------
// Count laws

/// Law of the number of points of a purely random process, stored as
/// p_0..p_N. Laws built from a closed form are truncated where the tail
/// drops below 1e-12 and renormalized; the discarded mass and first moment
/// are kept for error bounds.
class CountDistribution {
 public:
  static constexpr double kTailTolerance = 1e-12;

  static CountDistribution from_table(std::vector<double> p) {
    if (p.empty()) throw std::invalid_argument("count law: empty table");
    double total = 0.0;
    for (double v : p) {
      if (!(std::isfinite(v) && v >= 0.0)) throw std::invalid_argument("count law: probabilities must be finite and >= 0");
      total += v;
    }
    if (total < 1.0 - kTailTolerance || total > 1.0 + kTailTolerance)
      throw std::invalid_argument("count law: probabilities must sum to 1 within 1e-12");
    CountDistribution d;
    d.p_ = std::move(p);
    d.tail_mass_ = std::max(0.0, 1.0 - total);
    return d;
  }

  static CountDistribution poisson(double lambda) {
    if (!(std::isfinite(lambda) && lambda >= 0.0)) throw std::invalid_argument("count law: Poisson rate must be >= 0");
    CountDistribution d = from_terms([lambda](std::size_t n, double prev) {
      return n == 0 ? std::exp(-lambda) : prev * lambda / static_cast<double>(n);
    }, lambda);
    d.poisson_rate_ = lambda;
    return d;
  }

  //! p_n = (1 - r) r^n.
  static CountDistribution geometric(double r) {
    if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("count law: geometric ratio must lie in [0, 1)");
    return from_terms([r](std::size_t n, double prev) { return n == 0 ? 1.0 - r : prev * r; }, r / (1.0 - r));
  }

  static CountDistribution bernoulli(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("count law: Bernoulli parameter must lie in [0, 1]");
    return from_table({1.0 - p, p});
  }

  static CountDistribution dirac(std::size_t k) {
    std::vector<double> p(k + 1, 0.0);
    p[k] = 1.0;
    return from_table(std::move(p));
  }

  [[nodiscard]] std::size_t size() const noexcept { return p_.size(); }
  [[nodiscard]] std::size_t max_count() const noexcept { return p_.size() - 1; }
  [[nodiscard]] const std::vector<double>& probabilities() const noexcept { return p_; }
  [[nodiscard]] double tail_mass() const noexcept { return tail_mass_; }
  //! Sum over discarded n of n p_n, before renormalization.
  [[nodiscard]] double tail_first_moment() const noexcept { return tail_first_moment_; }
  [[nodiscard]] std::optional<double> poisson_rate() const noexcept { return poisson_rate_; }

  //! p_n, zero beyond the stored range.
  [[nodiscard]] double p(std::size_t n) const noexcept { return n < p_.size() ? p_[n] : 0.0; }

  [[nodiscard]] double cdf(std::size_t n) const noexcept {
    double c = 0.0;
    for (std::size_t k = 0; k <= n && k < p_.size(); ++k) c += p_[k];
    return std::min(c, 1.0);
  }

  [[nodiscard]] double mean() const noexcept {
    double m = 0.0;
    for (std::size_t k = 0; k < p_.size(); ++k) m += static_cast<double>(k) * p_[k];
    return m;
  }

  std::size_t sample(CounterRng& rng) const {
    const double u = rng.uniform();
    double c = 0.0;
    for (std::size_t k = 0; k < p_.size(); ++k) {
      c += p_[k];
      if (u < c) return k;
    }
    if (renormalized_) return p_.size() - 1;
    throw TruncationError("count law: draw fell in the unstored tail");
  }

 private:
  template <class Term>
  static CountDistribution from_terms(Term term, double mean) {
    CountDistribution d;
    double prev = 0.0, total = 0.0;
    for (std::size_t n = 0;; ++n) {
      prev = term(n, prev);
      d.p_.push_back(prev);
      total += prev;
      if (static_cast<double>(n) > mean && 1.0 - total < kTailTolerance && prev < kTailTolerance) break;
      if (n > 100000) throw TruncationError("count law: tail does not vanish");
    }
    // tail moments from the terms that were dropped
    double tail = 0.0, moment = 0.0;
    for (std::size_t n = d.p_.size();; ++n) {
      prev = term(n, prev);
      tail += prev;
      moment += static_cast<double>(n) * prev;
      if (prev * static_cast<double>(n + 1) < 1e-300 || n > 10 * d.p_.size() + 1000) break;
    }
    d.tail_mass_ = tail;
    d.tail_first_moment_ = moment;
    for (double& v : d.p_) v /= total;
    d.renormalized_ = true;
    return d;
  }

  std::vector<double> p_;
  double tail_mass_ = 0.0;
  double tail_first_moment_ = 0.0;
  bool renormalized_ = false;
  std::optional<double> poisson_rate_;
};

// ---------------------------------------------------------------------------
// Conditions

/// Event C on configurations that defines a conditional Poisson process.
/// Hardcore: pairwise distances >= R (copies of one location violate it).
/// Bounded: at most N points.
class Condition {
 public:
  enum class Kind { hardcore, bounded, custom };
  using Predicate = std::function<bool(const Configuration&)>;

  static Condition hardcore(double r) {
    if (!(r > 0.0)) throw std::invalid_argument("hardcore condition: R must be > 0");
    Condition c(Kind::hardcore, "hardcore", true);
    c.radius_ = r;
    return c;
  }

  static Condition bounded(std::size_t n) {
    Condition c(Kind::bounded, "bounded", true);
    c.bound_ = n;
    return c;
  }

  static Condition custom(std::string name, bool decreasing, Predicate pred) {
    Condition c(Kind::custom, std::move(name), decreasing);
    c.pred_ = std::move(pred);
    return c;
  }

  static Condition always() {
    return custom("always", true, [](const Configuration&) { return true; });
  }

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] bool decreasing() const noexcept { return decreasing_; }
  [[nodiscard]] double radius() const noexcept { return radius_; }
  [[nodiscard]] std::size_t bound() const noexcept { return bound_; }

  bool operator()(const Configuration& phi) const {
    switch (kind_) {
      case Kind::bounded:
        return phi.size() <= bound_;
      case Kind::hardcore: {
        const auto& es = phi.entries();
        for (std::size_t i = 0; i < es.size(); ++i) {
          if (es[i].multiplicity > 1) return false;
          for (std::size_t j = i + 1; j < es.size(); ++j)
            if (distance(es[i].point, es[j].point) < radius_) return false;
        }
        return true;
      }
      case Kind::custom:
        return pred_(phi);
    }
    return false;
  }

  //! Whether phi + x lies in C, given that phi does.
  [[nodiscard]] bool admits(const Configuration& phi, const Point& x) const {
    switch (kind_) {
      case Kind::bounded:
        return phi.size() + 1 <= bound_;
      case Kind::hardcore:
        for (const auto& e : phi.entries())
          if (distance(e.point, x) < radius_) return false;
        return true;
      case Kind::custom:
        return pred_(phi.plus(x));
    }
    return false;
  }

 private:
  Condition(Kind k, std::string name, bool decreasing) : kind_(k), name_(std::move(name)), decreasing_(decreasing) {}

  Kind kind_;
  std::string name_;
  bool decreasing_ = true;
  double radius_ = 0.0;
  std::size_t bound_ = 0;
  Predicate pred_;
};

// ---------------------------------------------------------------------------
// Models

struct Model;
using ModelPtr = std::shared_ptr<const Model>;

struct PoissonModel {
  Space space;
  Intensity intensity;
  double mass = 0.0;
};

struct BinomialModel {
  Space space;
  std::size_t count = 0;
  //! Probability density of each point.
  Intensity density;
};

struct PurelyRandomModel {
  Space space;
  CountDistribution counts;
  Intensity density;
};

struct ConditionalModel {
  Space space;
  Intensity intensity;
  Condition condition;
  double mass = 0.0;
  std::size_t max_attempts = 1000000;
};

/// Pairwise Gibbs process with Janossy density proportional to
/// exp(-theta (sum psi1(x_i) + sum_{i<j} psi2(x_i, x_j))).
struct GibbsModel {
  using Pair = std::function<double(const Point&, const Point&)>;
  Space space;
  double theta = 1.0;
  Intensity psi1;
  Pair psi2;
  //! sup psi2.
  double epsilon = 0.0;
  std::size_t max_attempts = 1000000;

  //! Poisson intensity exp(-theta psi1) of the reference process.
  [[nodiscard]] Intensity activity() const {
    if (auto c = psi1.constant_value()) return Intensity::constant(std::exp(-theta * *c));
    const auto f = psi1.fn();
    const double t = theta;
    return Intensity::function([f, t](const Point& p) { return std::exp(-t * f(p)); }, 1.0, "exp(-theta psi1)");
  }
};

struct DppModel {
  Kernel kernel;
};

struct CoxAtomicModel {
  struct Atom {
    double weight = 0.0;
    Intensity intensity;
  };
  Space space;
  std::vector<Atom> atoms;
};

struct SuperposedModel {
  std::vector<ModelPtr> components;
};

struct Restrict {
  BoxSpace region;
};
struct Superpose {
  std::vector<ModelPtr> models;
};
struct Thin {
  Retention retention;
};
struct Rescale {
  double epsilon = 1.0;
};
using TransformNode = std::variant<Restrict, Superpose, Thin, Rescale>;

struct TransformedModel {
  ModelPtr base;
  TransformNode node;
};

struct Model {
  std::variant<PoissonModel, BinomialModel, PurelyRandomModel, ConditionalModel, GibbsModel, DppModel,
               CoxAtomicModel, SuperposedModel, TransformedModel>
      v;
};

inline const char* family_name(const Model& m) {
  static constexpr const char* names[] = {"poisson", "binomial", "purely_random", "conditional", "gibbs",
                                          "dpp",     "cox_atomic", "superposition", "transformed"};
  return names[m.v.index()];
}

// Factories ------------------------------------------------------------------

inline Model make_poisson(const Space& s, const Intensity& m, int resolution = 0) {
  return Model{PoissonModel{s, m, m.total_mass(s, resolution)}};
}

inline Intensity normalized_density(const Space& s, const Intensity& q, int resolution) {
  const double total = q.total_mass(s, resolution);
  if (!(total > 0.0 && std::isfinite(total))) throw std::invalid_argument("density: total mass must be finite and > 0");
  return q.scaled(1.0 / total);
}

inline Model make_binomial(const Space& s, std::size_t n, const Intensity& q, int resolution = 0) {
  return Model{BinomialModel{s, n, normalized_density(s, q, resolution)}};
}

//! q is normalized to a probability density.
inline Model make_purely_random(const Space& s, CountDistribution counts, const Intensity& q, int resolution = 0) {
  return Model{PurelyRandomModel{s, std::move(counts), normalized_density(s, q, resolution)}};
}

inline Model make_conditional(const Space& s, const Intensity& m, Condition c, std::size_t max_attempts = 1000000,
                              int resolution = 0) {
  if (max_attempts < 1) throw std::invalid_argument("conditional: max_attempts must be >= 1");
  return Model{ConditionalModel{s, m, std::move(c), m.total_mass(s, resolution), max_attempts}};
}

inline Model make_gibbs(const Space& s, double theta, const Intensity& psi1, GibbsModel::Pair psi2, double epsilon,
                        std::size_t max_attempts = 1000000) {
  if (!(theta > 0.0)) throw std::invalid_argument("gibbs: theta must be > 0");
  if (!(epsilon >= 0.0 && std::isfinite(epsilon))) throw std::invalid_argument("gibbs: epsilon must be finite and >= 0");
  return Model{GibbsModel{s, theta, psi1, std::move(psi2), epsilon, max_attempts}};
}

//! psi2(x, y) = height * 1{|x - y| < range}.
inline GibbsModel::Pair step_potential(double height, double range) {
  if (!(height >= 0.0 && range >= 0.0)) throw std::invalid_argument("step potential: need height, range >= 0");
  return [height, range](const Point& a, const Point& b) { return distance(a, b) < range ? height : 0.0; };
}

inline Model make_dpp(Kernel k) { return Model{DppModel{std::move(k)}}; }

inline Model make_cox_atomic(const Space& s, std::vector<CoxAtomicModel::Atom> atoms) {
  if (atoms.empty()) throw std::invalid_argument("cox: need at least one atom");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.weight >= 0.0)) throw std::invalid_argument("cox: weights must be >= 0");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("cox: weights must sum to 1");
  return Model{CoxAtomicModel{s, std::move(atoms)}};
}

inline Model make_superposition(std::vector<Model> parts) {
  SuperposedModel s;
  for (auto& p : parts) s.components.push_back(std::make_shared<const Model>(std::move(p)));
  return Model{std::move(s)};
}

inline Model make_transformed(Model base, TransformNode node) {
  if (const auto* r = std::get_if<Rescale>(&node))
    if (!(std::isfinite(r->epsilon) && r->epsilon > 0.0)) throw std::invalid_argument("rescale: factor must be > 0");
  return Model{TransformedModel{std::make_shared<const Model>(std::move(base)), std::move(node)}};
}

// Ground spaces --------------------------------------------------------------

//! Image of a space under x -> eps^{1/d} x (grid weights scale by eps).
inline Space rescaled_space(const Space& s, double eps) {
  const double f = std::pow(eps, 1.0 / s.dim());
  if (s.is_grid()) {
    const auto& g = s.as_grid();
    std::vector<Coords> sites = g.sites;
    for (auto& c : sites)
      for (int a = 0; a < g.dim; ++a) c[a] *= f;
    std::vector<double> w = g.weights;
    for (double& v : w) v *= eps;
    return Space::grid(g.dim, std::move(sites), std::move(w));
  }
  if (s.is_disk()) {
    const auto& d = s.as_disk();
    return Space::disk(d.radius * f, d.center[0] * f, d.center[1] * f);
  }
  const auto& b = s.as_box();
  std::vector<double> lo, hi;
  for (int a = 0; a < b.dim; ++a) {
    lo.push_back(b.lower[a] * f);
    hi.push_back(b.upper[a] * f);
  }
  return Space::box(lo, hi);
}

inline BoxSpace as_region(const Space& s) {
  if (s.is_box()) return s.as_box();
  const auto [lo, hi] = s.bounds();
  return BoxSpace{s.dim(), lo, hi};
}

inline Space model_space(const Model& m);

inline Space transformed_space(const Space& base, const TransformNode& node) {
  if (const auto* r = std::get_if<Restrict>(&node)) {
    if (base.is_grid()) return base;
    std::vector<double> lo, hi;
    for (int a = 0; a < r->region.dim; ++a) {
      lo.push_back(r->region.lower[a]);
      hi.push_back(r->region.upper[a]);
    }
    return Space::box(lo, hi);
  }
  if (const auto* e = std::get_if<Rescale>(&node)) return rescaled_space(base, e->epsilon);
  return base;
}

inline Space model_space(const Model& m) {
  return std::visit([](const auto& x) -> Space {
    using T = std::decay_t<decltype(x)>;
    if constexpr (std::is_same_v<T, DppModel>) return x.kernel.space();
    else if constexpr (std::is_same_v<T, SuperposedModel>) {
      if (x.components.empty()) throw std::invalid_argument("superposition: no components");
      return model_space(*x.components.front());
    } else if constexpr (std::is_same_v<T, TransformedModel>) return transformed_space(model_space(*x.base), x.node);
    else return x.space;
  }, m.v);
}

// ---------------------------------------------------------------------------
// Samplers

/// One point with density proportional to m on s. Boxes and disks use
/// rejection against sup m; grids use the categorical law of m(x_i) w_i.
class LocationSampler {
 public:
  LocationSampler(const Space& s, const Intensity& m) : space_(s), m_(m) {
    if (s.is_grid()) {
      const auto& w = s.as_grid().weights;
      cumulative_.reserve(w.size());
      double c = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double v = m(s.site(i));
        if (!(std::isfinite(v) && v >= 0.0)) throw std::domain_error("sampler: intensity must be finite and >= 0");
        c += v * w[i];
        cumulative_.push_back(c);
      }
    } else if (!std::isfinite(m.sup())) {
      throw std::invalid_argument("sampler: rejection sampling needs a finite sup of the intensity");
    }
  }

  Point operator()(CounterRng& rng) const {
    if (space_.is_grid()) {
      const double u = rng.uniform() * cumulative_.back();
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      if (it == cumulative_.end()) --it;
      return space_.site(static_cast<std::size_t>(it - cumulative_.begin()));
    }
    const auto [lo, hi] = space_.bounds();
    const int d = space_.dim();
    const double sup = m_.sup();
    for (std::size_t attempt = 0; attempt < 100000000; ++attempt) {
      Point p;
      for (int a = 0; a < d; ++a) p.x[a] = lo[a] + rng.uniform() * (hi[a] - lo[a]);
      if (!space_.contains(p)) continue;
      const double v = m_(p);
      if (v > sup * (1.0 + 1e-12)) throw std::domain_error("sampler: intensity exceeds its declared sup");
      if (rng.uniform() * sup < v) return p;
    }
    throw AcceptanceFailure("location sampler", 100000000);
  }

  [[nodiscard]] bool degenerate() const {
    return space_.is_grid() ? cumulative_.back() <= 0.0 : m_.sup() <= 0.0;
  }

 private:
  Space space_;
  Intensity m_;
  std::vector<double> cumulative_;
};

inline std::size_t poisson_count(double mean, CounterRng& rng) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<long> dist(mean);
  return static_cast<std::size_t>(dist(rng));
}

inline Configuration sample_iid(std::size_t n, const LocationSampler& loc, CounterRng& rng, std::uint32_t label = 0) {
  Configuration phi;
  for (std::size_t k = 0; k < n; ++k) phi.insert(loc(rng), 1, label);
  return phi;
}

inline Configuration sample_poisson(const Intensity& m, const Space& s, CounterRng& rng, double mass = -1.0,
                                    std::uint32_t label = 0) {
  if (mass < 0.0) mass = m.total_mass(s);
  if (!std::isfinite(mass)) throw std::invalid_argument("poisson: total mass must be finite");
  if (mass == 0.0) return {};
  const LocationSampler loc(s, m);
  return sample_iid(poisson_count(mass, rng), loc, rng, label);
}

inline Configuration sample_binomial(std::size_t n, const Intensity& q, const Space& s, CounterRng& rng) {
  if (n == 0) return {};
  return sample_iid(n, LocationSampler(s, q), rng);
}

inline Configuration sample_purely_random(const CountDistribution& counts, const Intensity& q, const Space& s,
                                          CounterRng& rng) {
  return sample_binomial(counts.sample(rng), q, s, rng);
}

struct Accepted {
  Configuration config;
  std::size_t attempts = 0;
};

inline Accepted sample_conditional(const Intensity& m, const Condition& cond, const Space& s, CounterRng& rng,
                                   std::size_t max_attempts = 1000000, double mass = -1.0) {
  if (max_attempts < 1) throw std::invalid_argument("conditional: max_attempts must be >= 1");
  if (mass < 0.0) mass = m.total_mass(s);
  std::optional<LocationSampler> loc;
  if (mass > 0.0) loc.emplace(s, m);
  for (std::size_t k = 1; k <= max_attempts; ++k) {
    Configuration phi = mass > 0.0 ? sample_iid(poisson_count(mass, rng), *loc, rng) : Configuration{};
    if (cond(phi)) return {std::move(phi), k};
  }
  throw AcceptanceFailure("conditional Poisson sampler (" + cond.name() + ")", max_attempts);
}

/// Exact rejection sampler: propose Poisson(exp(-theta psi1)) and accept with
/// probability exp(-theta sum_{i<j} psi2(x_i, x_j)).
inline Accepted sample_gibbs_pairwise(const GibbsModel& g, CounterRng& rng) {
  const Intensity act = g.activity();
  const double mass = act.total_mass(g.space);
  std::optional<LocationSampler> loc;
  if (mass > 0.0) loc.emplace(g.space, act);
  for (std::size_t k = 1; k <= g.max_attempts; ++k) {
    Configuration phi = mass > 0.0 ? sample_iid(poisson_count(mass, rng), *loc, rng) : Configuration{};
    const auto pts = phi.points();
    double energy = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const double v = g.psi2(pts[i], pts[j]);
        if (v < 0.0) throw std::domain_error("gibbs: pair potential must be >= 0");
        energy += v;
      }
    if (rng.uniform() < std::exp(-g.theta * energy)) return {std::move(phi), k};
  }
  throw AcceptanceFailure("gibbs rejection sampler", g.max_attempts);
}

/// Spectral sampler for a determinantal process on grid sites: keep
/// eigenvector n with probability lambda_n, then draw the projection process
/// one site at a time, projecting the retained span away from each chosen
/// site.
inline Configuration sample_discrete_dpp(const Kernel& k, CounterRng& rng, std::uint32_t label = 0) {
  if (k.superposition() != 1) throw std::invalid_argument("dpp sampler: kernel has alpha != -1");
  const auto& lam = k.eigenvalues();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (rng.uniform() < lam(i)) keep.push_back(i);
  const Eigen::Index n = static_cast<Eigen::Index>(k.size());
  CMatrix v(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) v.col(static_cast<Eigen::Index>(c)) = k.eigenvectors().col(keep[c]);

  Configuration phi;
  while (v.cols() > 0) {
    const Eigen::VectorXd prob = v.rowwise().squaredNorm();
    const double total = prob.sum();
    const double u = rng.uniform() * total;
    Eigen::Index site = 0;
    double c = 0.0;
    for (; site < n - 1; ++site) {
      c += prob(site);
      if (u < c) break;
    }
    phi.insert(k.space().site(static_cast<std::size_t>(site)), 1, label);

    // eliminate the site: pivot on the column with the largest entry there
    Eigen::Index pivot = 0;
    v.row(site).cwiseAbs().maxCoeff(&pivot);
    const CVector pc = v.col(pivot);
    const cplx ps = pc(site);
    CMatrix rest(n, v.cols() - 1);
    for (Eigen::Index j = 0, r = 0; j < v.cols(); ++j) {
      if (j == pivot) continue;
      rest.col(r++) = v.col(j) - pc * (v(site, j) / ps);
    }
    // modified Gram-Schmidt
    for (Eigen::Index j = 0; j < rest.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) rest.col(j) -= rest.col(i) * rest.col(i).dot(rest.col(j));
      const double norm = rest.col(j).norm();
      if (norm > 0.0) rest.col(j) /= norm;
    }
    v = std::move(rest);
  }
  return phi;
}

//! Superposition of n independent DPP(K/n) draws, component i labelled i.
inline Configuration sample_alpha_dpp(const Kernel& k, CounterRng& rng) {
  const unsigned n = k.superposition();
  if (n == 1) return sample_discrete_dpp(k, rng);
  const Kernel part = k.scaled(1.0 / n).with_superposition(1);
  Configuration phi;
  for (unsigned i = 0; i < n; ++i) {
    const Configuration component = sample_discrete_dpp(part, rng, i);
    for (const auto& e : component.entries()) phi.insert(e.point, e.multiplicity, i);
  }
  return phi;
}

inline Configuration sample_cox_atomic(const CoxAtomicModel& c, CounterRng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t pick = c.atoms.size() - 1;
  for (std::size_t i = 0; i < c.atoms.size(); ++i) {
    acc += c.atoms[i].weight;
    if (u < acc) {
      pick = i;
      break;
    }
  }
  return sample_poisson(c.atoms[pick].intensity, c.space, rng);
}

inline Configuration sample(const Model& m, CounterRng& rng);

/// Applies one transform to a draw of the base model. Superposed models get
/// labels 1, 2, ... after the base draw, which keeps label 0.
inline Configuration apply_transform(const Configuration& phi, const TransformNode& node, int dim, CounterRng& rng) {
  return std::visit([&](const auto& t) -> Configuration {
    using T = std::decay_t<decltype(t)>;
    if constexpr (std::is_same_v<T, Restrict>) return restrict_config(phi, t.region);
    else if constexpr (std::is_same_v<T, Thin>) return thin_config(phi, t.retention, rng);
    else if constexpr (std::is_same_v<T, Rescale>) return rescale_config(phi, t.epsilon, dim);
    else {
      std::vector<Configuration> parts{phi.relabeled(0)};
      for (const auto& m : t.models) parts.push_back(sample(*m, rng));
      return superpose_configs(parts, true);
    }
  }, node);
}

/// Draws one realization. Superpositions label their components 0, 1, ...;
/// rejection-based families discard the attempt count.
inline Configuration sample(const Model& m, CounterRng& rng) {
  return std::visit([&](const auto& x) -> Configuration {
    using T = std::decay_t<decltype(x)>;
    if constexpr (std::is_same_v<T, PoissonModel>) return sample_poisson(x.intensity, x.space, rng, x.mass);
    else if constexpr (std::is_same_v<T, BinomialModel>) return sample_binomial(x.count, x.density, x.space, rng);
    else if constexpr (std::is_same_v<T, PurelyRandomModel>) return sample_purely_random(x.counts, x.density, x.space, rng);
    else if constexpr (std::is_same_v<T, ConditionalModel>)
      return sample_conditional(x.intensity, x.condition, x.space, rng, x.max_attempts, x.mass).config;
    else if constexpr (std::is_same_v<T, GibbsModel>) return sample_gibbs_pairwise(x, rng).config;
    else if constexpr (std::is_same_v<T, DppModel>) return sample_alpha_dpp(x.kernel, rng);
    else if constexpr (std::is_same_v<T, CoxAtomicModel>) return sample_cox_atomic(x, rng);
    else if constexpr (std::is_same_v<T, SuperposedModel>) {
      std::vector<Configuration> parts;
      for (const auto& c : x.components) parts.push_back(sample(*c, rng));
      return superpose_configs(parts, true);
    } else {
      const Configuration base = sample(*x.base, rng);
      return apply_transform(base, x.node, model_space(*x.base).dim(), rng);
    }
  }, m.v);
}

//! Expected number of points where it is known in closed form.
inline std::optional<double> expected_count(const Model& m) {
  return std::visit([](const auto& x) -> std::optional<double> {
    using T = std::decay_t<decltype(x)>;
    if constexpr (std::is_same_v<T, PoissonModel>) return x.mass;
    else if constexpr (std::is_same_v<T, BinomialModel>) return static_cast<double>(x.count);
    else if constexpr (std::is_same_v<T, PurelyRandomModel>) return x.counts.mean();
    else if constexpr (std::is_same_v<T, DppModel>) return x.kernel.trace();
    else if constexpr (std::is_same_v<T, CoxAtomicModel>) {
      double e = 0.0;
      for (const auto& a : x.atoms) e += a.weight * a.intensity.total_mass(x.space);
      return e;
    } else if constexpr (std::is_same_v<T, SuperposedModel>) {
      double e = 0.0;
      for (const auto& c : x.components) {
        const auto v = expected_count(*c);
        if (!v) return std::nullopt;
        e += *v;
      }
      return e;
    } else {
      return std::nullopt;
    }
  }, m.v);
}

}  // namespace steinpp

#endif  // STEINPP_MODELS_HPP
