#ifndef STEINPP_TRANSFORMS_HPP
#define STEINPP_TRANSFORMS_HPP

#include <memory>
#include <variant>
#include <vector>

#include "steinpp/configuration_ops.hpp"
#include "steinpp/error.hpp"
#include "steinpp/models.hpp"

namespace steinpp {

namespace detail {

inline Intensity restricted_intensity(const Intensity& m, const BoxSpace& region) {
  return m.times([region](const Point& p) { return inside_box(region, p) ? 1.0 : 0.0; }, 1.0, m.label() + "|region");
}

inline Intensity thinned_intensity(const Intensity& m, const Retention& beta) {
  if (beta.constant) return m.scaled(*beta.constant);
  return m.times([beta](const Point& p) { return beta(p); }, 1.0, m.label() + "*retention");
}

/// Density of the image of Poisson(m) under x -> eps^{1/d} x:
/// m(eps^{-1/d} x) / eps.
inline Intensity rescaled_intensity(const Intensity& m, double eps, int dim) {
  if (auto c = m.constant_value()) return Intensity::constant(*c / eps);
  const double f = std::pow(eps, -1.0 / dim);
  const auto fn = m.fn();
  return Intensity::function([fn, f, eps, dim](const Point& p) {
    Point q = p;
    for (int a = 0; a < dim; ++a) q.x[a] *= f;
    return fn(q) / eps;
  }, m.sup() / eps, m.label() + "|rescaled");
}

}  // namespace detail

/// Closed-form model of the transformed law. Closed pairs: Poisson with any
/// node; DPP with restriction, constant thinning and rescaling; any model
/// with superposition. Everything else throws NotClosed, and the caller can
/// still sample make_transformed(model, node) directly.
inline Model transform_model(const Model& m, const TransformNode& node) {
  if (const auto* s = std::get_if<Superpose>(&node)) {
    const auto* pm = std::get_if<PoissonModel>(&m.v);
    bool all_poisson = pm != nullptr;
    for (const auto& other : s->models) all_poisson = all_poisson && std::holds_alternative<PoissonModel>(other->v);
    if (all_poisson) {
      Intensity total = pm->intensity;
      double mass = pm->mass;
      for (const auto& other : s->models) {
        const auto& q = std::get<PoissonModel>(other->v);
        total = total.plus(q.intensity);
        mass += q.mass;
      }
      return Model{PoissonModel{pm->space, total, mass}};
    }
    SuperposedModel out;
    out.components.push_back(std::make_shared<const Model>(m));
    for (const auto& other : s->models) out.components.push_back(other);
    return Model{std::move(out)};
  }

  if (const auto* p = std::get_if<PoissonModel>(&m.v)) {
    if (const auto* r = std::get_if<Restrict>(&node)) {
      const Space sp = transformed_space(p->space, node);
      if (p->space.is_grid()) return make_poisson(sp, detail::restricted_intensity(p->intensity, r->region));
      return make_poisson(sp, p->intensity);
    }
    if (const auto* t = std::get_if<Thin>(&node)) {
      const Intensity thinned = detail::thinned_intensity(p->intensity, t->retention);
      if (t->retention.constant) return Model{PoissonModel{p->space, thinned, p->mass * *t->retention.constant}};
      return make_poisson(p->space, thinned);
    }
    const auto& e = std::get<Rescale>(node);
    const Space sp = transformed_space(p->space, node);
    return Model{PoissonModel{sp, detail::rescaled_intensity(p->intensity, e.epsilon, p->space.dim()), p->mass}};
  }

  if (const auto* d = std::get_if<DppModel>(&m.v)) {
    if (const auto* r = std::get_if<Restrict>(&node)) {
      const Space& g = d->kernel.space();
      std::vector<bool> keep(g.num_sites());
      for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = inside_box(r->region, g.site(i));
      return make_dpp(d->kernel.restricted(keep));
    }
    if (const auto* t = std::get_if<Thin>(&node)) {
      if (!t->retention.constant) throw NotClosed("dpp: thinning has a closed form only for constant retention");
      return make_dpp(d->kernel.scaled(*t->retention.constant));
    }
    return make_dpp(d->kernel.rescaled(std::get<Rescale>(node).epsilon));
  }

  throw NotClosed(std::string("transform_model: no closed form for family ") + family_name(m));
}

}  // namespace steinpp

#endif  // STEINPP_TRANSFORMS_HPP
