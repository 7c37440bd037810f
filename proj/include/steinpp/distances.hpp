#ifndef STEINPP_DISTANCES_HPP
#define STEINPP_DISTANCES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steinpp/geometry.hpp"
#include "steinpp/models.hpp"
#include "steinpp/montecarlo.hpp"
#include "steinpp/papangelou.hpp"
#include "steinpp/rng.hpp"

namespace steinpp {

//! F in Lip_1 with respect to the total-variation distance on configurations.
struct TestFunctional {
  std::string id;
  std::function<double(const Configuration&)> fn;

  double operator()(const Configuration& phi) const { return fn(phi); }
};

enum class EstimateKind { lower_bound, upper_bound, exact };

inline const char* kind_name(EstimateKind k) {
  switch (k) {
    case EstimateKind::lower_bound: return "lower_bound";
    case EstimateKind::upper_bound: return "upper_bound";
    case EstimateKind::exact: return "exact";
  }
  return "";
}

struct EstimateReport {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  EstimateKind kind = EstimateKind::lower_bound;
  //! Functional that attained a lower bound.
  std::string witness;
};

// ---------------------------------------------------------------------------
// Functionals

//! Half-open dyadic box (closed on the upper faces of the bounding box).
struct DyadicBox {
  int dim = 1;
  Coords lower{}, upper{};
  std::array<bool, 3> closed_upper{};

  [[nodiscard]] bool contains(const Point& p) const {
    for (int a = 0; a < dim; ++a) {
      if (p.x[a] < lower[a]) return false;
      if (closed_upper[a] ? p.x[a] > upper[a] : p.x[a] >= upper[a]) return false;
    }
    return true;
  }
};

/// Boxes of the dyadic partitions of the bounding box of s at the given
/// levels (level l has 2^l cells per axis), first axis fastest.
inline std::vector<DyadicBox> dyadic_boxes(const Space& s, int level) {
  const auto [lo, hi] = s.bounds();
  const int d = s.dim();
  const int m = 1 << level;
  std::vector<DyadicBox> out;
  const int nz = d >= 3 ? m : 1, ny = d >= 2 ? m : 1;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < m; ++i) {
        DyadicBox b;
        b.dim = d;
        const std::array<int, 3> idx{i, j, k};
        for (int a = 0; a < d; ++a) {
          const double h = (hi[a] - lo[a]) / m;
          b.lower[a] = lo[a] + idx[a] * h;
          b.upper[a] = idx[a] == m - 1 ? hi[a] : lo[a] + (idx[a] + 1) * h;
          b.closed_upper[a] = idx[a] == m - 1;
        }
        out.push_back(b);
      }
  return out;
}

inline double box_count(const Configuration& phi, const DyadicBox& b) {
  return static_cast<double>(phi.count_if([&](const Point& p) { return b.contains(p); }));
}

inline TestFunctional total_count() {
  return {"count", [](const Configuration& phi) { return static_cast<double>(phi.size()); }};
}

/// phi(A) and min(phi(A), k) for k in {1, 2, 4} over dyadic boxes of levels
/// 1 to 3, then |phi| and 1 - exp(-|phi|).
inline std::vector<TestFunctional> default_family(const Space& s) {
  std::vector<TestFunctional> fam;
  for (int level = 1; level <= 3; ++level) {
    const auto boxes = dyadic_boxes(s, level);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const DyadicBox b = boxes[i];
      const std::string base = "L" + std::to_string(level) + "B" + std::to_string(i);
      fam.push_back({"count[" + base + "]", [b](const Configuration& phi) { return box_count(phi, b); }});
      for (double k : {1.0, 2.0, 4.0})
        fam.push_back({"min" + std::to_string(static_cast<int>(k)) + "[" + base + "]",
                       [b, k](const Configuration& phi) { return std::min(box_count(phi, b), k); }});
    }
  }
  fam.push_back(total_count());
  fam.push_back({"1-exp(-count)", [](const Configuration& phi) { return 1.0 - std::exp(-static_cast<double>(phi.size())); }});
  return fam;
}

struct LipschitzCertificate {
  double max_ratio = 0.0;
  std::size_t trials = 0;
  bool pass = false;
};

/// Random insert/delete perturbations of configurations drawn by `base`;
/// the certificate fails if one changes F by more than 1.
inline LipschitzCertificate certify_lipschitz(const TestFunctional& f, const Sampler& base, const Space& s,
                                              std::size_t trials, const CounterRng& rng) {
  LipschitzCertificate cert{0.0, trials, true};
  const auto [lo, hi] = s.bounds();
  const auto ratios = replicate(trials, rng, [&](CounterRng& r) {
    Configuration phi = base(r);
    const double before = f(phi);
    if (!phi.empty() && r.uniform() < 0.5) {
      const auto pts = phi.points();
      phi.erase_one(pts[static_cast<std::size_t>(r.uniform() * static_cast<double>(pts.size()))]);
    } else {
      Point p;
      if (s.is_grid()) {
        p = s.site(static_cast<std::size_t>(r.uniform() * static_cast<double>(s.num_sites())));
      } else {
        for (int a = 0; a < s.dim(); ++a) p.x[a] = lo[a] + r.uniform() * (hi[a] - lo[a]);
      }
      phi.insert(p);
    }
    return std::abs(f(phi) - before);
  });
  for (double v : ratios) cert.max_ratio = std::max(cert.max_ratio, v);
  cert.pass = cert.max_ratio <= 1.0 + 1e-12;
  return cert;
}

// ---------------------------------------------------------------------------
// Estimators

namespace detail {

inline std::vector<double> evaluate_family(const Sampler& sampler, const std::vector<TestFunctional>& fam,
                                           std::size_t n, const CounterRng& rng, Parallelism par) {
  return replicate_rows(n, fam.size(), rng, [&](CounterRng& r, std::span<double> row) {
    const Configuration phi = sampler(r);
    for (std::size_t j = 0; j < fam.size(); ++j) row[j] = fam[j](phi);
  }, par);
}

inline Estimate column_range(const std::vector<double>& table, std::size_t width, std::size_t col, std::size_t begin,
                             std::size_t end) {
  std::vector<double> xs;
  xs.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) xs.push_back(table[i * width + col]);
  return summarize(xs);
}

}  // namespace detail

/// max_F |E F(Phi_A) - E F(Phi_B)| over a Lip_1 family. With more than one
/// functional, the first half of the replicas picks F and the second half
/// estimates its gap, so the reported value carries no selection bias.
inline EstimateReport kr_lower_bound(const Sampler& a, const Sampler& b, const std::vector<TestFunctional>& fam,
                                     std::size_t n, const CounterRng& rng, Parallelism par = {}) {
  if (fam.empty()) throw std::invalid_argument("kr_lower_bound: empty family");
  const std::size_t w = fam.size();
  const auto ta = detail::evaluate_family(a, fam, n, rng.split("kr/a"), par);
  const auto tb = detail::evaluate_family(b, fam, n, rng.split("kr/b"), par);
  std::size_t best = 0;
  std::size_t begin = 0;
  if (w > 1) {
    const std::size_t half = n / 2;
    double gap = -1.0;
    for (std::size_t j = 0; j < w; ++j) {
      const double g = std::abs(detail::column_range(ta, w, j, 0, half).mean - detail::column_range(tb, w, j, 0, half).mean);
      if (g > gap) {
        gap = g;
        best = j;
      }
    }
    begin = half;
  }
  const Estimate ea = detail::column_range(ta, w, best, begin, n);
  const Estimate eb = detail::column_range(tb, w, best, begin, n);
  EstimateReport rep;
  rep.value = std::abs(ea.mean - eb.mean);
  rep.stderr_ = std::sqrt(ea.se * ea.se + eb.se * eb.se);
  rep.n = n;
  rep.seed = rng.key();
  rep.kind = EstimateKind::lower_bound;
  rep.witness = fam[best].id;
  return rep;
}

using CoupledSampler = std::function<std::pair<Configuration, Configuration>(CounterRng&)>;

//! E tv_config(Phi_A, Phi_B) under a coupling: an upper bound on the distance.
inline EstimateReport kr_upper_bound_coupled(const CoupledSampler& coupled, std::size_t n, const CounterRng& rng,
                                             Parallelism par = {}) {
  const Estimate e = mc_mean(n, rng, [&](CounterRng& r) {
    const auto [x, y] = coupled(r);
    return tv_config(x, y);
  }, par);
  return {e.mean, e.se, n, rng.key(), EstimateKind::upper_bound, "coupling"};
}

//! Wasserstein-1 distance between count laws: sum_k |F_p(k) - F_q(k)|.
inline double w1_counts(const CountDistribution& p, const CountDistribution& q) {
  const std::size_t top = std::max(p.size(), q.size());
  double cp = 0.0, cq = 0.0, total = 0.0;
  for (std::size_t k = 0; k < top; ++k) {
    cp += p.p(k);
    cq += q.p(k);
    total += std::abs(cp - cq);
  }
  return total;
}

/// Boxes A_1, A_2, ... of the Polish distance: the whole bounding box, then
/// the dyadic levels in order, first `count` of them.
inline std::vector<DyadicBox> polish_boxes(const Space& s, std::size_t count = 32) {
  std::vector<DyadicBox> out;
  for (int level = 0; out.size() < count; ++level)
    for (const auto& b : dyadic_boxes(s, level)) {
      if (out.size() == count) break;
      out.push_back(b);
    }
  return out;
}

/// sum_k 2^{-k} Psi(|E f_k(Phi_A) - E f_k(Phi_B)|) with Psi(x) = x / (1 + x)
/// and f_k = 1 - exp(-phi(A_k)), k = 1..32. The standard error is a
/// first-order (delta method) bound.
inline EstimateReport polish_distance(const Sampler& a, const Sampler& b, const Space& s, std::size_t n,
                                      const CounterRng& rng, Parallelism par = {}) {
  const auto boxes = polish_boxes(s);
  std::vector<TestFunctional> fam;
  for (const auto& box : boxes)
    fam.push_back({"polish", [box](const Configuration& phi) { return 1.0 - std::exp(-box_count(phi, box)); }});
  const std::size_t w = fam.size();
  const auto ta = detail::evaluate_family(a, fam, n, rng.split("polish/a"), par);
  const auto tb = detail::evaluate_family(b, fam, n, rng.split("polish/b"), par);
  EstimateReport rep;
  rep.n = n;
  rep.seed = rng.key();
  rep.kind = EstimateKind::exact;
  rep.witness = "polish";
  double weight = 1.0;
  for (std::size_t k = 0; k < w; ++k) {
    weight *= 0.5;
    const Estimate ea = summarize(column(ta, w, k));
    const Estimate eb = summarize(column(tb, w, k));
    const double d = std::abs(ea.mean - eb.mean);
    rep.value += weight * d / (1.0 + d);
    rep.stderr_ += weight * std::sqrt(ea.se * ea.se + eb.se * eb.se) / ((1.0 + d) * (1.0 + d));
  }
  return rep;
}

/// Optimal transport between two finitely supported laws of intensity
/// measures, with cost tv_measures. Solved by successive shortest paths on
/// the bipartite network (at most 16 atoms per side).
inline double cox_distance_bound(const CoxAtomicModel& a, const CoxAtomicModel& b, int resolution = 0) {
  const std::size_t na = a.atoms.size(), nb = b.atoms.size();
  if (na > 16 || nb > 16) throw std::invalid_argument("cox_distance_bound: at most 16 atoms per law");
  std::vector<std::vector<double>> cost(na, std::vector<double>(nb));
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j)
      cost[i][j] = tv_measures(a.atoms[i].intensity, b.atoms[j].intensity, a.space, resolution);

  // nodes: 0 source, 1..na left, na+1..na+nb right, na+nb+1 sink
  const std::size_t nodes = na + nb + 2, src = 0, sink = na + nb + 1;
  struct Edge {
    std::size_t to, rev;
    double cap, cost;
  };
  std::vector<std::vector<Edge>> g(nodes);
  auto add = [&](std::size_t u, std::size_t v, double cap, double c) {
    g[u].push_back({v, g[v].size(), cap, c});
    g[v].push_back({u, g[u].size() - 1, 0.0, -c});
  };
  for (std::size_t i = 0; i < na; ++i) add(src, 1 + i, a.atoms[i].weight, 0.0);
  for (std::size_t j = 0; j < nb; ++j) add(1 + na + j, sink, b.atoms[j].weight, 0.0);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) add(1 + i, 1 + na + j, std::numeric_limits<double>::infinity(), cost[i][j]);

  constexpr double eps = 1e-15;
  double total = 0.0;
  for (int iter = 0; iter < 10000; ++iter) {
    std::vector<double> dist(nodes, std::numeric_limits<double>::infinity());
    std::vector<std::pair<std::size_t, std::size_t>> prev(nodes, {nodes, 0});
    dist[src] = 0.0;
    for (std::size_t round = 0; round < nodes; ++round) {
      bool changed = false;
      for (std::size_t u = 0; u < nodes; ++u) {
        if (dist[u] == std::numeric_limits<double>::infinity()) continue;
        for (std::size_t e = 0; e < g[u].size(); ++e) {
          const Edge& ed = g[u][e];
          if (ed.cap > eps && dist[u] + ed.cost < dist[ed.to] - 1e-15) {
            dist[ed.to] = dist[u] + ed.cost;
            prev[ed.to] = {u, e};
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[sink] == std::numeric_limits<double>::infinity()) break;
    double push = std::numeric_limits<double>::infinity();
    for (std::size_t v = sink; v != src; v = prev[v].first) push = std::min(push, g[prev[v].first][prev[v].second].cap);
    for (std::size_t v = sink; v != src; v = prev[v].first) {
      Edge& ed = g[prev[v].first][prev[v].second];
      ed.cap -= push;
      g[ed.to][ed.rev].cap += push;
    }
    total += push * dist[sink];
  }
  return total;
}

}  // namespace steinpp

#endif  // STEINPP_DISTANCES_HPP
