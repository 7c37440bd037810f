#ifndef STEINPP_GEOMETRY_HPP
#define STEINPP_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "steinpp/error.hpp"

namespace steinpp {

using Coords = std::array<double, 3>;

//! A location in a ground space. On grid spaces `cell` is the site index and
//! identifies the point; elsewhere it is -1 and coordinates are compared
//! exactly.
struct Point {
  Coords x{};
  std::int32_t cell = -1;

  static Point at(double a, double b = 0.0, double c = 0.0) { return Point{{a, b, c}, -1}; }
  static Point site(std::int32_t index, const Coords& where) { return Point{where, index}; }
};

inline bool same_location(const Point& a, const Point& b) noexcept {
  if (a.cell != b.cell) return false;
  return a.cell >= 0 || a.x == b.x;
}

inline bool location_less(const Point& a, const Point& b) noexcept {
  if (a.cell != b.cell) return a.cell < b.cell;
  if (a.cell >= 0) return false;
  return a.x < b.x;
}

inline double distance(const Point& a, const Point& b) noexcept {
  const double dx = a.x[0] - b.x[0];
  const double dy = a.x[1] - b.x[1];
  const double dz = a.x[2] - b.x[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// ---------------------------------------------------------------------------
// Spaces

struct BoxSpace {
  int dim = 1;
  Coords lower{};
  Coords upper{};
};

struct GridSpace {
  int dim = 1;
  std::vector<Coords> sites;
  std::vector<double> weights;
};

struct DiskSpace {
  double radius = 1.0;
  std::array<double, 2> center{};
};

/// Ground set with its reference measure: a box in R^d (Lebesgue), a disk in
/// C (Lebesgue), or a finite weighted grid (sum of weighted Dirac masses).
class Space {
 public:
  using Variant = std::variant<BoxSpace, GridSpace, DiskSpace>;

  static Space box(const std::vector<double>& lower, const std::vector<double>& upper) {
    if (lower.size() != upper.size() || lower.empty() || lower.size() > 3)
      throw std::invalid_argument("box: dimension must be 1, 2 or 3 with matching bounds");
    BoxSpace b;
    b.dim = static_cast<int>(lower.size());
    for (int i = 0; i < b.dim; ++i) {
      if (!(std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] < upper[i]))
        throw std::invalid_argument("box: need finite lower < upper on every axis");
      b.lower[i] = lower[i];
      b.upper[i] = upper[i];
    }
    return Space(b);
  }

  static Space unit_box(int dim) {
    return box(std::vector<double>(static_cast<std::size_t>(dim), 0.0),
               std::vector<double>(static_cast<std::size_t>(dim), 1.0));
  }

  static Space grid(int dim, std::vector<Coords> sites, std::vector<double> weights) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("grid: dimension must be 1, 2 or 3");
    if (sites.size() != weights.size() || sites.empty())
      throw std::invalid_argument("grid: need one positive weight per site");
    for (double w : weights)
      if (!(std::isfinite(w) && w > 0.0)) throw std::invalid_argument("grid: weights must be finite and > 0");
    return Space(GridSpace{dim, std::move(sites), std::move(weights)});
  }

  /// Regular lattice of cells over a box; each site is a cell center weighted
  /// by the cell volume. Sites are ordered with the first axis fastest.
  static Space lattice(const std::vector<double>& lower, const std::vector<double>& upper,
                       const std::vector<int>& cells) {
    const Space bounds = box(lower, upper);
    const auto& b = std::get<BoxSpace>(bounds.v_);
    if (cells.size() != static_cast<std::size_t>(b.dim)) throw std::invalid_argument("lattice: one cell count per axis");
    std::array<int, 3> n{1, 1, 1};
    Coords h{1.0, 1.0, 1.0};
    double vol = 1.0;
    for (int a = 0; a < b.dim; ++a) {
      if (cells[a] < 1) throw std::invalid_argument("lattice: cell counts must be positive");
      n[a] = cells[a];
      h[a] = (b.upper[a] - b.lower[a]) / n[a];
      vol *= h[a];
    }
    std::vector<Coords> sites;
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j)
        for (int i = 0; i < n[0]; ++i) {
          Coords c{};
          const std::array<int, 3> idx{i, j, k};
          for (int a = 0; a < b.dim; ++a) c[a] = b.lower[a] + (idx[a] + 0.5) * h[a];
          sites.push_back(c);
        }
    std::vector<double> weights(sites.size(), vol);
    return grid(b.dim, std::move(sites), std::move(weights));
  }

  static Space disk(double radius, double cx = 0.0, double cy = 0.0) {
    if (!(std::isfinite(radius) && radius > 0.0)) throw std::invalid_argument("disk: radius must be > 0");
    return Space(DiskSpace{radius, {cx, cy}});
  }

  [[nodiscard]] const Variant& variant() const noexcept { return v_; }
  [[nodiscard]] bool is_grid() const noexcept { return std::holds_alternative<GridSpace>(v_); }
  [[nodiscard]] bool is_box() const noexcept { return std::holds_alternative<BoxSpace>(v_); }
  [[nodiscard]] bool is_disk() const noexcept { return std::holds_alternative<DiskSpace>(v_); }
  [[nodiscard]] const GridSpace& as_grid() const { return std::get<GridSpace>(v_); }
  [[nodiscard]] const BoxSpace& as_box() const { return std::get<BoxSpace>(v_); }
  [[nodiscard]] const DiskSpace& as_disk() const { return std::get<DiskSpace>(v_); }

  [[nodiscard]] int dim() const noexcept {
    return std::visit([](const auto& s) -> int {
      if constexpr (std::is_same_v<std::decay_t<decltype(s)>, DiskSpace>) return 2;
      else return s.dim;
    }, v_);
  }

  //! Total reference mass l(X).
  [[nodiscard]] double mass() const {
    return std::visit([](const auto& s) -> double {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, BoxSpace>) {
        double v = 1.0;
        for (int a = 0; a < s.dim; ++a) v *= s.upper[a] - s.lower[a];
        return v;
      } else if constexpr (std::is_same_v<T, GridSpace>) {
        double v = 0.0;
        for (double w : s.weights) v += w;
        return v;
      } else {
        return std::numbers::pi * s.radius * s.radius;
      }
    }, v_);
  }

  [[nodiscard]] std::size_t num_sites() const { return as_grid().sites.size(); }

  [[nodiscard]] Point site(std::size_t i) const {
    const auto& g = as_grid();
    return Point::site(static_cast<std::int32_t>(i), g.sites.at(i));
  }

  [[nodiscard]] bool contains(const Point& p) const {
    return std::visit([&](const auto& s) -> bool {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, BoxSpace>) {
        if (p.cell >= 0) return false;
        for (int a = 0; a < s.dim; ++a)
          if (p.x[a] < s.lower[a] || p.x[a] > s.upper[a]) return false;
        return true;
      } else if constexpr (std::is_same_v<T, GridSpace>) {
        return p.cell >= 0 && static_cast<std::size_t>(p.cell) < s.sites.size();
      } else {
        const double dx = p.x[0] - s.center[0];
        const double dy = p.x[1] - s.center[1];
        return p.cell < 0 && dx * dx + dy * dy <= s.radius * s.radius;
      }
    }, v_);
  }

  //! Axis-aligned bounding box of the space (of the sites, on grids).
  [[nodiscard]] std::pair<Coords, Coords> bounds() const {
    return std::visit([&](const auto& s) -> std::pair<Coords, Coords> {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, BoxSpace>) {
        return {s.lower, s.upper};
      } else if constexpr (std::is_same_v<T, GridSpace>) {
        Coords lo{}, hi{};
        for (int a = 0; a < s.dim; ++a) {
          lo[a] = std::numeric_limits<double>::infinity();
          hi[a] = -lo[a];
          for (const auto& c : s.sites) {
            lo[a] = std::min(lo[a], c[a]);
            hi[a] = std::max(hi[a], c[a]);
          }
          if (hi[a] == lo[a]) {
            lo[a] -= 0.5;
            hi[a] += 0.5;
          }
        }
        return {lo, hi};
      } else {
        return {Coords{s.center[0] - s.radius, s.center[1] - s.radius, 0.0},
                Coords{s.center[0] + s.radius, s.center[1] + s.radius, 0.0}};
      }
    }, v_);
  }

 private:
  explicit Space(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureNode {
  Point point;
  double weight = 0.0;
};

//! Default mesh: 256 cells per axis for d <= 2, 64 for d = 3.
inline int default_resolution(const Space& s) { return s.dim() <= 2 ? 256 : 64; }

/// Midpoint-rule nodes. On boxes and disks the mesh has `resolution` cells per
/// axis; disks use their bounding square with an indicator mask. `shift`
/// moves every node by shift[a] * h inside its cell (0.5 is the midpoint
/// rule); a uniformly random shift gives an unbiased randomized rule. Grid
/// spaces return their sites with their weights.
inline std::vector<QuadratureNode> quadrature_nodes(const Space& s, int resolution = 0,
                                                    const Coords& shift = {0.5, 0.5, 0.5}) {
  std::vector<QuadratureNode> nodes;
  if (s.is_grid()) {
    const auto& g = s.as_grid();
    nodes.reserve(g.sites.size());
    for (std::size_t i = 0; i < g.sites.size(); ++i) nodes.push_back({s.site(i), g.weights[i]});
    return nodes;
  }
  if (resolution <= 0) resolution = default_resolution(s);
  const int d = s.dim();
  const auto [lo, hi] = s.bounds();
  Coords h{1.0, 1.0, 1.0};
  double cell = 1.0;
  for (int a = 0; a < d; ++a) {
    h[a] = (hi[a] - lo[a]) / resolution;
    cell *= h[a];
  }
  const int nz = d >= 3 ? resolution : 1;
  const int ny = d >= 2 ? resolution : 1;
  const bool disk = s.is_disk();
  nodes.reserve(static_cast<std::size_t>(resolution) * ny * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < resolution; ++i) {
        Point p;
        const std::array<int, 3> idx{i, j, k};
        for (int a = 0; a < d; ++a) p.x[a] = lo[a] + (idx[a] + shift[a]) * h[a];
        if (disk && !s.contains(p)) continue;
        nodes.push_back({p, cell});
      }
  return nodes;
}

/// Quadrature of f over the space (midpoint rule on boxes/disks, exact
/// weighted sum on grids). Throws on non-finite integrand values.
template <class F>
double integrate(F&& f, const Space& s, int resolution = 0) {
  double total = 0.0;
  for (const auto& node : quadrature_nodes(s, resolution)) {
    const double v = f(node.point);
    if (!std::isfinite(v)) throw std::domain_error("integrate: non-finite integrand value");
    total += node.weight * v;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Intensity measures

/// Density m of an intensity measure with respect to the reference measure of
/// a space. Knows an upper bound on m when one is available (rejection
/// sampling needs it) and stays a plain constant when it is one.
class Intensity {
 public:
  using Fn = std::function<double(const Point&)>;

  Intensity() : Intensity(constant(0.0)) {}

  static Intensity constant(double c) {
    if (!(std::isfinite(c) && c >= 0.0)) throw std::invalid_argument("intensity: constant must be finite and >= 0");
    Intensity m(Fn([c](const Point&) { return c; }), c, "constant");
    m.constant_ = c;
    return m;
  }

  static Intensity function(Fn f, double sup, std::string label = "function") {
    if (!(sup >= 0.0)) throw std::invalid_argument("intensity: sup must be >= 0 (use +inf when unknown)");
    return Intensity(std::move(f), sup, std::move(label));
  }

  //! One value per grid site, looked up by the point's cell index.
  static Intensity tabulated(std::vector<double> values) {
    double sup = 0.0;
    for (double v : values) {
      if (!(std::isfinite(v) && v >= 0.0)) throw std::invalid_argument("intensity: tabulated values must be finite and >= 0");
      sup = std::max(sup, v);
    }
    auto table = std::make_shared<const std::vector<double>>(std::move(values));
    Intensity m(Fn([table](const Point& p) {
                  if (p.cell < 0 || static_cast<std::size_t>(p.cell) >= table->size())
                    throw std::out_of_range("tabulated intensity: point is not a site of this grid");
                  return (*table)[static_cast<std::size_t>(p.cell)];
                }),
                sup, "tabulated");
    m.table_ = std::move(table);
    return m;
  }

  double operator()(const Point& p) const { return fn_(p); }

  [[nodiscard]] double sup() const noexcept { return sup_; }
  [[nodiscard]] const std::string& label() const noexcept { return label_; }
  [[nodiscard]] std::optional<double> constant_value() const noexcept { return constant_; }
  [[nodiscard]] const Fn& fn() const noexcept { return fn_; }

  //! M(X); exact for constants and tables, quadrature otherwise.
  [[nodiscard]] double total_mass(const Space& s, int resolution = 0) const {
    if (constant_) return *constant_ * s.mass();
    if (table_ && s.is_grid()) {
      const auto& w = s.as_grid().weights;
      if (w.size() != table_->size()) throw std::invalid_argument("tabulated intensity: size does not match grid");
      double total = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) total += w[i] * (*table_)[i];
      return total;
    }
    return integrate(fn_, s, resolution);
  }

  [[nodiscard]] Intensity scaled(double a) const {
    if (!(std::isfinite(a) && a >= 0.0)) throw std::invalid_argument("intensity: scale must be finite and >= 0");
    if (constant_) return constant(a * *constant_);
    if (table_) {
      std::vector<double> t = *table_;
      for (double& v : t) v *= a;
      return tabulated(std::move(t));
    }
    Fn f = fn_;
    return function([f, a](const Point& p) { return a * f(p); }, a * sup_, label_ + "*scaled");
  }

  [[nodiscard]] Intensity plus(const Intensity& other) const {
    if (constant_ && other.constant_) return constant(*constant_ + *other.constant_);
    Fn f = fn_, g = other.fn_;
    return function([f, g](const Point& p) { return f(p) + g(p); }, sup_ + other.sup_, label_ + "+" + other.label_);
  }

  //! Pointwise product with g, where 0 <= g <= g_sup.
  [[nodiscard]] Intensity times(Fn g, double g_sup, std::string label) const {
    Fn f = fn_;
    return function([f, g = std::move(g)](const Point& p) { return f(p) * g(p); }, sup_ * g_sup, std::move(label));
  }

 private:
  Intensity(Fn f, double sup, std::string label) : fn_(std::move(f)), sup_(sup), label_(std::move(label)) {}

  Fn fn_;
  double sup_ = 0.0;
  std::string label_;
  std::optional<double> constant_;
  std::shared_ptr<const std::vector<double>> table_;
};

// ---------------------------------------------------------------------------
// Configurations

/// Finite multiset of points. Entries are kept sorted by (location, label);
/// a label records which component of a superposition produced the point
/// and is ignored by the total-variation metric.
class Configuration {
 public:
  struct Entry {
    Point point;
    std::uint32_t label = 0;
    std::size_t multiplicity = 1;
  };

  Configuration() = default;

  explicit Configuration(const std::vector<Point>& points, std::uint32_t label = 0) {
    for (const auto& p : points) insert(p, 1, label);
  }

  void insert(const Point& p, std::size_t multiplicity = 1, std::uint32_t label = 0) {
    if (multiplicity == 0) return;
    const auto it = lower(p, label);
    if (it != entries_.end() && same_location(it->point, p) && it->label == label) {
      it->multiplicity += multiplicity;
    } else {
      entries_.insert(it, Entry{p, label, multiplicity});
    }
    size_ += multiplicity;
  }

  //! Removes one copy of p carrying `label`.
  bool erase_one(const Point& p, std::uint32_t label) {
    const auto it = lower(p, label);
    if (it == entries_.end() || !same_location(it->point, p) || it->label != label) return false;
    if (--it->multiplicity == 0) entries_.erase(it);
    --size_;
    return true;
  }

  //! Removes one copy of p whatever its label (lowest label first).
  bool erase_one(const Point& p) {
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
      if (same_location(it->point, p)) {
        if (--it->multiplicity == 0) entries_.erase(it);
        --size_;
        return true;
      }
    }
    return false;
  }

  [[nodiscard]] Configuration plus(const Point& p, std::uint32_t label = 0) const {
    Configuration c = *this;
    c.insert(p, 1, label);
    return c;
  }

  [[nodiscard]] Configuration minus(const Point& p, std::uint32_t label) const {
    Configuration c = *this;
    c.erase_one(p, label);
    return c;
  }

  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] bool empty() const noexcept { return size_ == 0; }
  [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }

  //! Multiplicity of the location p summed over labels.
  [[nodiscard]] std::size_t multiplicity(const Point& p) const {
    std::size_t m = 0;
    for (const auto& e : entries_)
      if (same_location(e.point, p)) m += e.multiplicity;
    return m;
  }

  [[nodiscard]] bool contains(const Point& p) const { return multiplicity(p) > 0; }

  //! Points carrying `label`, label preserved.
  [[nodiscard]] Configuration component(std::uint32_t label) const {
    Configuration c;
    for (const auto& e : entries_)
      if (e.label == label) c.insert(e.point, e.multiplicity, label);
    return c;
  }

  //! Same points with every label reset to `label`.
  [[nodiscard]] Configuration relabeled(std::uint32_t label) const {
    Configuration c;
    for (const auto& e : entries_) c.insert(e.point, e.multiplicity, label);
    return c;
  }

  template <class Pred>
  [[nodiscard]] std::size_t count_if(Pred&& pred) const {
    std::size_t n = 0;
    for (const auto& e : entries_)
      if (pred(e.point)) n += e.multiplicity;
    return n;
  }

  //! Points expanded by multiplicity, in canonical order.
  [[nodiscard]] std::vector<Point> points() const {
    std::vector<Point> out;
    out.reserve(size_);
    for (const auto& e : entries_)
      for (std::size_t k = 0; k < e.multiplicity; ++k) out.push_back(e.point);
    return out;
  }

  friend bool operator==(const Configuration& a, const Configuration& b) {
    if (a.size_ != b.size_ || a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
      const auto& x = a.entries_[i];
      const auto& y = b.entries_[i];
      if (!same_location(x.point, y.point) || x.label != y.label || x.multiplicity != y.multiplicity) return false;
    }
    return true;
  }

 private:
  std::vector<Entry>::iterator lower(const Point& p, std::uint32_t label) {
    return std::lower_bound(entries_.begin(), entries_.end(), p, [label](const Entry& e, const Point& q) {
      if (location_less(e.point, q)) return true;
      if (location_less(q, e.point)) return false;
      return e.label < label;
    });
  }

  std::vector<Entry> entries_;
  std::size_t size_ = 0;
};

/// Total variation between finite configurations: |a \ b| + |b \ a| with
/// multiset semantics, labels ignored.
inline double tv_config(const Configuration& a, const Configuration& b) {
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  std::size_t i = 0, j = 0;
  double total = 0.0;
  auto take = [](const std::vector<Configuration::Entry>& es, std::size_t& k) {
    const Point loc = es[k].point;
    std::size_t m = 0;
    while (k < es.size() && same_location(es[k].point, loc)) m += es[k++].multiplicity;
    return std::pair{loc, m};
  };
  while (i < ea.size() || j < eb.size()) {
    if (j == eb.size() || (i < ea.size() && location_less(ea[i].point, eb[j].point))) {
      total += static_cast<double>(take(ea, i).second);
    } else if (i == ea.size() || location_less(eb[j].point, ea[i].point)) {
      total += static_cast<double>(take(eb, j).second);
    } else {
      const auto ma = take(ea, i).second;
      const auto mb = take(eb, j).second;
      total += ma > mb ? static_cast<double>(ma - mb) : static_cast<double>(mb - ma);
    }
  }
  return total;
}

//! Integral of |m1 - m2| against the reference measure.
inline double tv_measures(const Intensity& m1, const Intensity& m2, const Space& s, int resolution = 0) {
  if (m1.constant_value() && m2.constant_value()) return std::abs(*m1.constant_value() - *m2.constant_value()) * s.mass();
  return integrate([&](const Point& p) { return std::abs(m1(p) - m2(p)); }, s, resolution);
}

}  // namespace steinpp

#endif  // STEINPP_GEOMETRY_HPP
