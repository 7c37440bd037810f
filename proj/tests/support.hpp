#ifndef STEINPP_TESTS_SUPPORT_HPP
#define STEINPP_TESTS_SUPPORT_HPP

#include <cmath>
#include <vector>

#include "steinpp/steinpp.hpp"

namespace steinpp::testing {

/// Grid of n unit-weight cells on a line.
inline Space unit_cells(std::size_t n) {
  std::vector<Coords> sites;
  for (std::size_t i = 0; i < n; ++i) sites.push_back({static_cast<double>(i), 0.0, 0.0});
  return Space::grid(1, sites, std::vector<double>(n, 1.0));
}

inline Kernel two_cell_kernel() {
  CMatrix k(2, 2);
  k << 0.4, 0.2, 0.2, 0.4;
  return Kernel::from_values(unit_cells(2), k);
}

inline Kernel lattice16_kernel() {
  return gaussian_kernel(Space::lattice({0, 0}, {1, 1}, {4, 4}), 4.0, 0.25);
}

//! Mean and standard error of a count-valued sample.
inline Estimate counts_of(std::size_t n, const CounterRng& rng, const Sampler& s) {
  return mc_mean(n, rng, [&](CounterRng& r) { return static_cast<double>(s(r).size()); });
}

inline double z(const Estimate& e, double expected) {
  return e.se > 0.0 ? std::abs(e.mean - expected) / e.se : std::abs(e.mean - expected) * 1e12;
}

}  // namespace steinpp::testing

#endif  // STEINPP_TESTS_SUPPORT_HPP
