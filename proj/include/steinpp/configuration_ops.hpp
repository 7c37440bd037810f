#ifndef STEINPP_CONFIGURATION_OPS_HPP
#define STEINPP_CONFIGURATION_OPS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "steinpp/geometry.hpp"
#include "steinpp/rng.hpp"

namespace steinpp {

//! Retention probability of an independent thinning.
struct Retention {
  std::function<double(const Point&)> fn;
  std::optional<double> constant;

  static Retention uniform(double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("thinning: retention must lie in [0, 1]");
    return Retention{[beta](const Point&) { return beta; }, beta};
  }

  static Retention function(std::function<double(const Point&)> f) { return Retention{std::move(f), std::nullopt}; }

  double operator()(const Point& p) const {
    const double b = fn(p);
    if (!(b >= 0.0 && b <= 1.0)) throw std::domain_error("thinning: retention value outside [0, 1]");
    return b;
  }
};

/// Independent thinning: each copy of each point is kept with probability
/// beta(point), so a multiplicity k becomes Binomial(k, beta).
inline Configuration thin_config(const Configuration& phi, const Retention& beta, CounterRng& rng) {
  Configuration out;
  for (const auto& e : phi.entries()) {
    const double b = beta(e.point);
    std::size_t kept = 0;
    if (b >= 1.0) {
      kept = e.multiplicity;
    } else if (b > 0.0) {
      for (std::size_t k = 0; k < e.multiplicity; ++k)
        if (rng.uniform() < b) ++kept;
    }
    out.insert(e.point, kept, e.label);
  }
  return out;
}

//! Maps every point x to eps^{1/d} x; grid cell indices are kept.
inline Configuration rescale_config(const Configuration& phi, double eps, int dim) {
  if (!(std::isfinite(eps) && eps > 0.0)) throw std::invalid_argument("rescale: factor must be > 0");
  if (dim < 1 || dim > 3) throw std::invalid_argument("rescale: dimension must be 1, 2 or 3");
  const double f = std::pow(eps, 1.0 / dim);
  Configuration out;
  for (const auto& e : phi.entries()) {
    Point p = e.point;
    for (int a = 0; a < dim; ++a) p.x[a] *= f;
    out.insert(p, e.multiplicity, e.label);
  }
  return out;
}

inline bool inside_box(const BoxSpace& region, const Point& p) {
  for (int a = 0; a < region.dim; ++a)
    if (p.x[a] < region.lower[a] || p.x[a] > region.upper[a]) return false;
  return true;
}

//! Points whose coordinates lie in the box region.
inline Configuration restrict_config(const Configuration& phi, const BoxSpace& region) {
  Configuration out;
  for (const auto& e : phi.entries())
    if (inside_box(region, e.point)) out.insert(e.point, e.multiplicity, e.label);
  return out;
}

/// Multiset union. With `label_components` the points of parts[i] are
/// labelled i, which is what superposition evaluators consume.
inline Configuration superpose_configs(const std::vector<Configuration>& parts, bool label_components = false) {
  Configuration out;
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (const auto& e : parts[i].entries())
      out.insert(e.point, e.multiplicity, label_components ? static_cast<std::uint32_t>(i) : e.label);
  return out;
}

}  // namespace steinpp

#endif  // STEINPP_CONFIGURATION_OPS_HPP
