#ifndef STEINPP_CONFIG_HPP
#define STEINPP_CONFIG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "steinpp/configuration_ops.hpp"
#include "steinpp/distances.hpp"
#include "steinpp/error.hpp"
#include "steinpp/geometry.hpp"
#include "steinpp/glauber.hpp"
#include "steinpp/io.hpp"
#include "steinpp/kernel.hpp"
#include "steinpp/models.hpp"
#include "steinpp/papangelou.hpp"
#include "steinpp/stein_bounds.hpp"
#include "steinpp/transforms.hpp"

namespace steinpp {

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kSchema = "steinpp/1";

// ---------------------------------------------------------------------------
// Experiment description

struct SampleJob {
  std::string id;
  std::string model_id;
  ModelPtr model;
  std::size_t replicas = 1;
  std::vector<std::string> notes;
};

struct CheckJob {
  std::string id;
  std::function<std::vector<CheckRow>(const CounterRng&, Parallelism)> run;
};

struct BoundOutcome {
  BoundReport report;
  std::optional<io::DominanceRow> dominance;
};

struct BoundJob {
  std::string id;
  std::function<BoundOutcome(const CounterRng&, Parallelism)> run;
};

struct Experiment {
  std::uint64_t seed = 0;
  std::vector<SampleJob> samples;
  std::vector<CheckJob> checks;
  std::vector<BoundJob> bounds;
};

namespace config {

using json = nlohmann::ordered_json;

/// Strict view of a JSON object: every key must be read before done().
class Obj {
 public:
  Obj(const json& j, std::string path, const std::string* text) : j_(j), path_(std::move(path)), text_(text) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[nodiscard]] const std::string& path() const { return path_; }
  [[nodiscard]] const std::string* text() const { return text_; }
  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    if (!j_.contains(key)) fail(path_, "missing key \"" + key + "\"");
    used_.insert(key);
    return j_.at(key);
  }

  std::optional<std::reference_wrapper<const json>> maybe(const std::string& key) {
    if (!j_.contains(key)) return std::nullopt;
    used_.insert(key);
    return std::cref(j_.at(key));
  }

  [[nodiscard]] std::string sub(const std::string& key) const { return path_ + "/" + key; }

  double number(const std::string& key) { return as_number(at(key), sub(key)); }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }
  std::size_t count(const std::string& key) { return as_count(at(key), sub(key)); }
  std::size_t count(const std::string& key, std::size_t fallback) { return has(key) ? count(key) : fallback; }
  std::string string(const std::string& key) { return as_string(at(key), sub(key)); }
  std::string string(const std::string& key, const std::string& fallback) { return has(key) ? string(key) : fallback; }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) fail(sub(key), "expected true or false");
    return v.get<bool>();
  }
  std::vector<double> numbers(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) fail(sub(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], sub(key) + "/" + std::to_string(i)));
    return out;
  }
  Obj obj(const std::string& key) { return Obj(at(key), sub(key), text_); }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) fail(sub(it.key()), "unknown key \"" + it.key() + "\"" + line_hint(it.key()));
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config " + (path.empty() ? std::string("/") : path) + ": " + what);
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
  }
  static std::size_t as_count(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(path, "expected a non-negative integer");
    return v.get<std::size_t>();
  }
  static std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

 private:
  //! Line of the first occurrence of the quoted key in the source text.
  [[nodiscard]] std::string line_hint(const std::string& key) const {
    if (!text_) return "";
    const auto pos = text_->find("\"" + key + "\"");
    if (pos == std::string::npos) return "";
    return " (line " + std::to_string(1 + std::count(text_->begin(), text_->begin() + static_cast<long>(pos), '\n')) + ")";
  }

  const json& j_;
  std::string path_;
  const std::string* text_;
  std::set<std::string> used_;
};

struct Context {
  const std::string* text = nullptr;
  std::map<std::string, ModelPtr> models;
  std::map<std::string, std::vector<std::string>> notes;
  //! Models declared inline get synthetic ids.
  std::size_t anonymous = 0;
};

// Spaces and measures ---------------------------------------------------------

inline Space parse_space(Obj o) {
  const std::string type = o.string("type");
  Space s = [&] {
    if (type == "box") return Space::box(o.numbers("lower"), o.numbers("upper"));
    if (type == "unit_box") return Space::unit_box(static_cast<int>(o.count("dim")));
    if (type == "disk") {
      std::vector<double> c{0.0, 0.0};
      if (o.has("center")) c = o.numbers("center");
      if (c.size() != 2) Obj::fail(o.sub("center"), "expected two coordinates");
      return Space::disk(o.number("radius"), c[0], c[1]);
    }
    if (type == "lattice") {
      std::vector<int> cells;
      const json& v = o.at("cells");
      if (!v.is_array()) Obj::fail(o.sub("cells"), "expected an array of cell counts");
      for (std::size_t i = 0; i < v.size(); ++i)
        cells.push_back(static_cast<int>(Obj::as_count(v[i], o.sub("cells") + "/" + std::to_string(i))));
      return Space::lattice(o.numbers("lower"), o.numbers("upper"), cells);
    }
    if (type == "grid") {
      const int dim = static_cast<int>(o.count("dim"));
      const json& v = o.at("sites");
      if (!v.is_array()) Obj::fail(o.sub("sites"), "expected an array of points");
      std::vector<Coords> sites;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = o.sub("sites") + "/" + std::to_string(i);
        if (!v[i].is_array() || v[i].size() != static_cast<std::size_t>(dim)) Obj::fail(p, "expected a point of the grid dimension");
        Coords c{};
        for (int a = 0; a < dim; ++a) c[a] = Obj::as_number(v[i][a], p);
        sites.push_back(c);
      }
      return Space::grid(dim, std::move(sites), o.numbers("weights"));
    }
    Obj::fail(o.sub("type"), "unknown space type \"" + type + "\"");
  }();
  o.done();
  return s;
}

inline Intensity parse_intensity(const json& v, const std::string& path, const std::string* text, const Space& s) {
  if (v.is_number()) return Intensity::constant(Obj::as_number(v, path));
  Obj o(v, path, text);
  const std::string type = o.string("type");
  Intensity m;
  if (type == "constant") {
    m = Intensity::constant(o.number("value"));
  } else if (type == "linear") {
    const double base = o.number("base");
    std::vector<double> slope = o.numbers("slope");
    if (slope.size() != static_cast<std::size_t>(s.dim())) Obj::fail(o.sub("slope"), "one slope per axis");
    const auto [lo, hi] = s.bounds();
    double sup = base, inf = base;
    for (int a = 0; a < s.dim(); ++a) {
      sup += std::max(slope[a] * lo[a], slope[a] * hi[a]);
      inf += std::min(slope[a] * lo[a], slope[a] * hi[a]);
    }
    if (inf < 0.0) Obj::fail(path, "linear intensity is negative somewhere on the space");
    m = Intensity::function([base, slope](const Point& p) {
      double v = base;
      for (std::size_t a = 0; a < slope.size(); ++a) v += slope[a] * p.x[a];
      return v;
    }, sup, "linear");
  } else if (type == "table") {
    m = Intensity::tabulated(o.numbers("values"));
  } else {
    Obj::fail(o.sub("type"), "unknown intensity type \"" + type + "\"");
  }
  o.done();
  return m;
}

inline CountDistribution parse_counts(Obj o) {
  const std::string law = o.string("law");
  CountDistribution c = [&] {
    if (law == "poisson") return CountDistribution::poisson(o.number("rate"));
    if (law == "geometric") return CountDistribution::geometric(o.number("ratio"));
    if (law == "bernoulli") return CountDistribution::bernoulli(o.number("p"));
    if (law == "dirac") return CountDistribution::dirac(o.count("k"));
    if (law == "table") return CountDistribution::from_table(o.numbers("p"));
    Obj::fail(o.sub("law"), "unknown count law \"" + law + "\"");
  }();
  o.done();
  return c;
}

inline Condition parse_condition(Obj o) {
  const std::string kind = o.string("kind");
  Condition c = [&] {
    if (kind == "hardcore") return Condition::hardcore(o.number("radius"));
    if (kind == "bounded") return Condition::bounded(o.count("max"));
    Obj::fail(o.sub("kind"), "unknown condition \"" + kind + "\"");
  }();
  o.done();
  return c;
}

// Models ----------------------------------------------------------------------

inline ModelPtr parse_model(const json& v, const std::string& path, Context& ctx, std::string* id_out = nullptr);

inline Kernel parse_kernel(Obj o, unsigned n, std::vector<std::string>& notes) {
  const std::string type = o.string("type");
  Kernel k = [&] {
    if (type == "gaussian") {
      const Space g = parse_space(o.obj("space"));
      if (!g.is_grid()) Obj::fail(o.sub("space"), "kernels need a grid or lattice space");
      return gaussian_kernel(g, o.number("intensity"), o.number("scale"), n);
    }
    if (type == "matrix") {
      const Space g = parse_space(o.obj("space"));
      if (!g.is_grid()) Obj::fail(o.sub("space"), "kernels need a grid or lattice space");
      const json& v = o.at("values");
      const std::size_t sites = g.num_sites();
      if (!v.is_array() || v.size() != sites) Obj::fail(o.sub("values"), "expected one row per site");
      CMatrix m(static_cast<Eigen::Index>(sites), static_cast<Eigen::Index>(sites));
      for (std::size_t i = 0; i < sites; ++i) {
        const std::string p = o.sub("values") + "/" + std::to_string(i);
        if (!v[i].is_array() || v[i].size() != sites) Obj::fail(p, "expected one value per site");
        for (std::size_t j = 0; j < sites; ++j)
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = Obj::as_number(v[i][j], p);
      }
      return Kernel::from_values(g, m, n);
    }
    if (type == "ginibre") {
      std::vector<double> c{0.0, 0.0};
      if (o.has("center")) c = o.numbers("center");
      if (c.size() != 2) Obj::fail(o.sub("center"), "expected two coordinates");
      const DiskSpace disk{o.number("radius"), {c[0], c[1]}};
      const GinibreKernel gk = ginibre_kernel(o.number("gamma"), o.number("beta", 1.0), disk,
                                              static_cast<int>(o.count("rings", 16)),
                                              static_cast<int>(o.count("sectors", 48)));
      if (gk.warning)
        notes.push_back("spectrum clipping moved " + io::num(100.0 * gk.clipped_fraction) + "% of the trace");
      return n == 1 ? gk.kernel : gk.kernel.with_superposition(n);
    }
    Obj::fail(o.sub("type"), "unknown kernel type \"" + type + "\"");
  }();
  o.done();
  return k;
}

inline TransformNode parse_transform(Obj o, Context& ctx, int dim) {
  const std::string op = o.string("op");
  TransformNode node = [&]() -> TransformNode {
    if (op == "restrict") {
      const auto lo = o.numbers("lower"), hi = o.numbers("upper");
      if (lo.size() != static_cast<std::size_t>(dim)) Obj::fail(o.sub("lower"), "region dimension does not match the model");
      return Restrict{Space::box(lo, hi).as_box()};
    }
    if (op == "thin") return Thin{Retention::uniform(o.number("beta"))};
    if (op == "rescale") return Rescale{o.number("epsilon")};
    if (op == "superpose") {
      const json& v = o.at("models");
      if (!v.is_array()) Obj::fail(o.sub("models"), "expected an array of models");
      Superpose s;
      for (std::size_t i = 0; i < v.size(); ++i) s.models.push_back(parse_model(v[i], o.sub("models") + "/" + std::to_string(i), ctx));
      return s;
    }
    Obj::fail(o.sub("op"), "unknown transform \"" + op + "\"");
  }();
  o.done();
  return node;
}

/// A model given inline or by name. Transforms are applied in order, in
/// closed form where one exists.
inline ModelPtr parse_model(const json& v, const std::string& path, Context& ctx, std::string* id_out) {
  if (v.is_string()) {
    const std::string name = v.get<std::string>();
    const auto it = ctx.models.find(name);
    if (it == ctx.models.end()) Obj::fail(path, "unknown model \"" + name + "\" (models must be declared before use)");
    if (id_out) *id_out = name;
    return it->second;
  }
  Obj o(v, path, ctx.text);
  const std::string family = o.string("family");
  std::vector<std::string> notes;
  Model m = [&]() -> Model {
    if (family == "poisson") {
      const Space s = parse_space(o.obj("space"));
      return make_poisson(s, parse_intensity(o.at("intensity"), o.sub("intensity"), ctx.text, s));
    }
    if (family == "binomial") {
      const Space s = parse_space(o.obj("space"));
      const Intensity q = o.has("density") ? parse_intensity(o.at("density"), o.sub("density"), ctx.text, s) : Intensity::constant(1.0);
      return make_binomial(s, o.count("count"), q);
    }
    if (family == "purely_random") {
      const Space s = parse_space(o.obj("space"));
      const Intensity q = o.has("density") ? parse_intensity(o.at("density"), o.sub("density"), ctx.text, s) : Intensity::constant(1.0);
      return make_purely_random(s, parse_counts(o.obj("counts")), q);
    }
    if (family == "conditional") {
      const Space s = parse_space(o.obj("space"));
      const Intensity m = parse_intensity(o.at("intensity"), o.sub("intensity"), ctx.text, s);
      return make_conditional(s, m, parse_condition(o.obj("condition")), o.count("max_attempts", 1000000));
    }
    if (family == "gibbs") {
      const Space s = parse_space(o.obj("space"));
      const Intensity psi1 = o.has("psi1") ? parse_intensity(o.at("psi1"), o.sub("psi1"), ctx.text, s) : Intensity::constant(0.0);
      Obj p = o.obj("psi2");
      const double height = p.number("height"), range = p.number("range");
      p.done();
      if (!(height >= 0.0 && range >= 0.0)) Obj::fail(o.sub("psi2"), "height and range must be >= 0");
      return make_gibbs(s, o.number("theta"), psi1, step_potential(height, range), height, o.count("max_attempts", 1000000));
    }
    if (family == "dpp") {
      const std::size_t n = o.count("alpha_n", 1);
      if (n == 0) Obj::fail(o.sub("alpha_n"), "must be >= 1");
      return make_dpp(parse_kernel(o.obj("kernel"), static_cast<unsigned>(n), notes));
    }
    if (family == "cox_atomic") {
      const Space s = parse_space(o.obj("space"));
      const json& v = o.at("atoms");
      if (!v.is_array() || v.empty()) Obj::fail(o.sub("atoms"), "expected a non-empty array of atoms");
      std::vector<CoxAtomicModel::Atom> atoms;
      for (std::size_t i = 0; i < v.size(); ++i) {
        Obj a(v[i], o.sub("atoms") + "/" + std::to_string(i), ctx.text);
        atoms.push_back({a.number("weight"), parse_intensity(a.at("intensity"), a.sub("intensity"), ctx.text, s)});
        a.done();
      }
      return make_cox_atomic(s, std::move(atoms));
    }
    if (family == "superposition") {
      const json& v = o.at("components");
      if (!v.is_array() || v.empty()) Obj::fail(o.sub("components"), "expected a non-empty array of models");
      std::vector<Model> parts;
      for (std::size_t i = 0; i < v.size(); ++i)
        parts.push_back(*parse_model(v[i], o.sub("components") + "/" + std::to_string(i), ctx));
      return make_superposition(std::move(parts));
    }
    Obj::fail(o.sub("family"), "unknown family \"" + family + "\"");
  }();
  if (auto t = o.maybe("transforms")) {
    const json& arr = t->get();
    if (!arr.is_array()) Obj::fail(o.sub("transforms"), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const TransformNode node = parse_transform(Obj(arr[i], o.sub("transforms") + "/" + std::to_string(i), ctx.text), ctx,
                                                 model_space(m).dim());
      try {
        m = transform_model(m, node);
      } catch (const NotClosed&) {
        m = make_transformed(std::move(m), node);
      }
    }
  }
  o.done();
  const std::string id = "model#" + std::to_string(ctx.anonymous++);
  if (id_out) *id_out = id;
  ctx.notes[id] = notes;
  return std::make_shared<const Model>(std::move(m));
}

// Functionals and integrands --------------------------------------------------

//! Named 1-Lipschitz functionals.
inline TestFunctional functional_by_name(const std::string& name, const Space& s, const std::string& path) {
  if (name == "count") return total_count();
  if (name == "exp_count")
    return {"exp_count", [](const Configuration& phi) { return 1.0 - std::exp(-static_cast<double>(phi.size())); }};
  if (name == "min2")
    return {"min2", [](const Configuration& phi) { return std::min(static_cast<double>(phi.size()), 2.0); }};
  if (name == "half_count") {
    const DyadicBox b = dyadic_boxes(s, 1).front();
    return {"half_count", [b](const Configuration& phi) { return box_count(phi, b); }};
  }
  Obj::fail(path, "unknown functional \"" + name + "\"");
}

inline std::vector<TestFunctional> parse_family(Obj& o, const std::string& key, const Space& s, const std::string& fallback) {
  if (!o.has(key)) {
    if (fallback == "default") return default_family(s);
    return {functional_by_name(fallback, s, o.sub(key))};
  }
  const json& v = o.at(key);
  if (v.is_string() && v.get<std::string>() == "default") return default_family(s);
  if (v.is_string()) return {functional_by_name(v.get<std::string>(), s, o.sub(key))};
  if (!v.is_array()) Obj::fail(o.sub(key), "expected \"default\", a functional name or an array of names");
  std::vector<TestFunctional> fam;
  for (std::size_t i = 0; i < v.size(); ++i)
    fam.push_back(functional_by_name(Obj::as_string(v[i], o.sub(key)), s, o.sub(key) + "/" + std::to_string(i)));
  if (fam.empty()) Obj::fail(o.sub(key), "empty functional family");
  return fam;
}

inline Configuration parse_points(const json& v, const std::string& path, const Space& s) {
  if (!v.is_array()) Obj::fail(path, "expected an array of points");
  Configuration phi;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = path + "/" + std::to_string(i);
    if (!v[i].is_array() || v[i].size() != static_cast<std::size_t>(s.dim())) Obj::fail(p, "expected a point of the space dimension");
    Point q;
    for (int a = 0; a < s.dim(); ++a) q.x[a] = Obj::as_number(v[i][a], p);
    if (s.is_grid()) {
      const auto& g = s.as_grid();
      std::optional<std::size_t> hit;
      for (std::size_t k = 0; k < g.sites.size(); ++k)
        if (std::equal(g.sites[k].begin(), g.sites[k].begin() + s.dim(), q.x.begin())) hit = k;
      if (!hit) Obj::fail(p, "point is not a site of the grid");
      q = s.site(*hit);
    } else if (!s.contains(q)) {
      Obj::fail(p, "point lies outside the space");
    }
    phi.insert(q);
  }
  return phi;
}

inline GlauberTarget parse_target(Obj& o, Context& ctx, std::string* id = nullptr) {
  const ModelPtr t = parse_model(o.at("target"), o.sub("target"), ctx, id);
  const auto* p = std::get_if<PoissonModel>(&t->v);
  if (!p) Obj::fail(o.sub("target"), "the target must be a Poisson model");
  return GlauberTarget::from(*p);
}

inline std::string row_id(const std::string& check, const std::string& label) { return check + "/" + label; }

//! Inverts the pass flag of rows that are expected to fail.
inline std::vector<CheckRow> as_control(std::vector<CheckRow> rows) {
  for (auto& r : rows) {
    r.check_id += "[control]";
    r.pass = !r.pass;
  }
  return rows;
}

// Checks ----------------------------------------------------------------------

inline CheckJob parse_check(const json& v, const std::string& path, Context& ctx) {
  Obj o(v, path, ctx.text);
  const std::string id = o.string("id");
  const std::string kind = o.string("kind");
  const bool control = o.boolean("expect_fail", false);
  CheckJob job;
  job.id = id;
  std::function<std::vector<CheckRow>(const CounterRng&, Parallelism)> run;

  if (kind == "gnz") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const ModelPtr ev = o.has("evaluator") ? parse_model(o.at("evaluator"), o.sub("evaluator"), ctx) : m;
    const std::size_t n = o.count("samples", 100000);
    const int res = static_cast<int>(o.count("resolution", 16));
    const Space s = model_space(*m);
    const DyadicBox half = dyadic_boxes(s, 1).front();
    std::vector<std::pair<std::string, TestIntegrand>> us;
    std::vector<std::string> names{"one", "count_in_box"};
    if (o.has("integrands")) {
      names.clear();
      const json& a = o.at("integrands");
      if (!a.is_array()) Obj::fail(o.sub("integrands"), "expected an array");
      for (std::size_t i = 0; i < a.size(); ++i) names.push_back(Obj::as_string(a[i], o.sub("integrands")));
    }
    for (const auto& name : names) {
      if (name == "one") us.emplace_back(name, [](const Point&, const Configuration&) { return 1.0; });
      else if (name == "count_in_box")
        us.emplace_back(name, [half](const Point&, const Configuration& phi) { return box_count(phi, half); });
      else Obj::fail(o.sub("integrands"), "unknown integrand \"" + name + "\"");
    }
    run = [m, ev, n, res, us, id](const CounterRng& rng, Parallelism par) {
      const PapangelouEvaluator c = papangelou(*ev);
      GnzOptions opt;
      opt.resolution = res;
      opt.par = par;
      std::vector<CheckRow> rows;
      for (const auto& [name, u] : us) {
        const GnzReport r = gnz_check(*m, c, u, n, rng.split(name), opt);
        rows.push_back({id, "gnz[" + name + "]", r.lhs, r.rhs, r.stderr_lhs + r.stderr_rhs, r.pass});
      }
      return rows;
    };
  } else if (kind == "janossy") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const std::size_t cases = o.count("cases", 100);
    const std::size_t max_size = o.count("max_size", 6);
    const double tol = o.number("tolerance", 1e-10);
    run = [m, cases, max_size, tol, id](const CounterRng& rng, Parallelism) {
      const PapangelouEvaluator c = papangelou(*m);
      const Space s = model_space(*m);
      const LocationSampler loc(s, Intensity::constant(1.0));
      double worst = 0.0;
      for (std::size_t i = 0; i < cases; ++i) {
        CounterRng r = rng.replica(i);
        const std::size_t k = static_cast<std::size_t>(r.uniform() * static_cast<double>(max_size + 1));
        const Configuration phi = sample_iid(k, loc, r);
        const Point x = loc(r);
        worst = std::max(worst, std::abs(c(x, phi) - janossy_ratio_oracle(*m, x, phi)));
      }
      return std::vector<CheckRow>{{id, "janossy_oracle", worst, tol, 0.0, worst <= tol}};
    };
  } else if (kind == "structural") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const std::size_t n = o.count("samples", 100000);
    const bool weak = o.boolean("weakly_repulsive", true);
    run = [m, n, weak, id](const CounterRng& rng, Parallelism par) {
      StructuralOptions opt;
      opt.weakly_repulsive = weak;
      opt.par = par;
      return check_structural_lemmas(id, sampler_of(*m), papangelou(*m), n, rng, opt);
    };
  } else if (kind == "monotonicity") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const std::size_t max_size = o.count("max_size", 4);
    const double tol = o.number("tolerance", 1e-10);
    run = [m, max_size, tol, id](const CounterRng&, Parallelism) {
      const double v = static_cast<double>(count_monotonicity_violations(papangelou(*m), max_size, tol));
      return std::vector<CheckRow>{{id, "monotonicity", v, 0.0, 0.0, v == 0.0}};
    };
  } else if (kind == "classify_prpp") {
    const CountDistribution counts = parse_counts(o.obj("counts"));
    const bool expect = o.boolean("expect_weakly_repulsive", true);
    run = [counts, expect, id](const CounterRng&, Parallelism) {
      const RepulsivenessReport r = classify_prpp(counts);
      return std::vector<CheckRow>{{id, "weakly_repulsive", r.weakly_repulsive ? 1.0 : 0.0, expect ? 1.0 : 0.0, 0.0,
                                    r.weakly_repulsive == expect}};
    };
  } else if (kind == "thinned_configuration") {
    const Space s = parse_space(o.obj("space"));
    const Configuration phi = parse_points(o.at("points"), o.sub("points"), s);
    const double p = o.number("p");
    const std::size_t n = o.count("samples", 100000);
    run = [phi, p, n, id](const CounterRng& rng, Parallelism par) {
      const auto retain = [p](const Point&) { return p; };
      const PapangelouEvaluator c = pap_thinned_config(phi, retain);
      const Sampler thinned = [phi, p](CounterRng& r) { return thin_config(phi, Retention::uniform(p), r); };
      GnzOptions opt;
      opt.par = par;
      const GnzReport g = gnz_check(thinned, c, [](const Point&, const Configuration&) { return 1.0; }, n, rng, opt);
      return std::vector<CheckRow>{{id, "gnz[one]", g.lhs, g.rhs, g.stderr_lhs + g.stderr_rhs, g.pass}};
    };
  } else if (kind == "semigroup" || kind == "commutation" || kind == "invariance_rate" || kind == "stein_dirichlet") {
    const GlauberTarget target = parse_target(o, ctx);
    const TestFunctional f = functional_by_name(o.string("functional", "count"), target.space, o.sub("functional"));
    const Configuration phi = o.has("phi") ? parse_points(o.at("phi"), o.sub("phi"), target.space) : Configuration{};
    const std::size_t n = o.count("samples", 20000);
    if (kind == "semigroup") {
      const double t = o.number("t", 0.5), s = o.number("s", 0.7);
      const std::size_t inner = o.count("inner", 4);
      run = [=](const CounterRng& rng, Parallelism par) {
        CheckRow r = verify_semigroup(f, phi, t, s, target, n, rng, inner, par);
        r.model_id = id;
        return std::vector<CheckRow>{r};
      };
    } else if (kind == "commutation") {
      const Configuration xs = parse_points(o.at("x"), o.sub("x"), target.space);
      if (xs.size() != 1) Obj::fail(o.sub("x"), "expected exactly one point");
      const Point x = xs.entries().front().point;
      const double t = o.number("t", 0.5);
      run = [=](const CounterRng& rng, Parallelism par) {
        CheckRow r = verify_commutation(f, x, phi, t, target, n, rng, par);
        r.model_id = id;
        return std::vector<CheckRow>{r};
      };
    } else if (kind == "invariance_rate") {
      run = [=](const CounterRng& rng, Parallelism par) {
        auto rows = verify_invariance_and_rate(f, phi, target, n, rng, par);
        for (auto& r : rows) r.model_id = id;
        return rows;
      };
    } else {
      SteinDirichletOptions opt;
      opt.n = n;
      opt.horizon = o.number("horizon", 20.0);
      opt.nodes = static_cast<int>(o.count("nodes", 16));
      run = [=](const CounterRng& rng, Parallelism par) {
        SteinDirichletOptions local = opt;
        local.par = par;
        CheckRow r = verify_stein_dirichlet(f, phi, target, rng, local);
        r.model_id = id;
        return std::vector<CheckRow>{r};
      };
    }
  } else if (kind == "stationarity") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const GlauberTarget target = parse_target(o, ctx);
    const auto fam = parse_family(o, "functionals", target.space, "count");
    const std::size_t n = o.count("samples", 20000);
    run = [=](const CounterRng& rng, Parallelism par) {
      return verify_stationarity(id, sampler_of(*m), fam, target, n, rng, par);
    };
  } else {
    Obj::fail(o.sub("kind"), "unknown check \"" + kind + "\"");
  }
  o.done();
  job.run = control ? std::function<std::vector<CheckRow>(const CounterRng&, Parallelism)>(
                          [run](const CounterRng& rng, Parallelism par) { return as_control(run(rng, par)); })
                    : run;
  return job;
}

// Bounds ----------------------------------------------------------------------

inline Sampler poisson_sampler(const Space& s, const Intensity& m) {
  const double mass = m.total_mass(s);
  return [s, m, mass](CounterRng& r) { return sample_poisson(m, s, r, mass); };
}

inline io::DominanceRow dominance(const BoundReport& b, const EstimateReport& kr) {
  return {b.bound_id, b.value, b.stderr_, kr.value, kr.stderr_, kr.witness, 3.0};
}

//! Poisson target with the diagonal density of a grid kernel.
inline Intensity diagonal_intensity(const Kernel& k) {
  std::vector<double> d(k.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::max(0.0, k.diagonal_density(i));
  return Intensity::tabulated(std::move(d));
}

template <class T>
const T& expect_family(const ModelPtr& m, const std::string& path, const char* what) {
  const T* p = std::get_if<T>(&m->v);
  if (!p) Obj::fail(path, std::string("expected a ") + what + " model");
  return *p;
}

inline BoundJob parse_bound(const json& v, const std::string& path, Context& ctx) {
  Obj o(v, path, ctx.text);
  const std::string id = o.string("id");
  const std::string kind = o.string("kind");
  const std::size_t n = o.count("samples", 20000);
  const std::size_t kr_n = o.count("kr_samples", 100000);
  const bool with_kr = o.boolean("kr", true);
  BoundJob job;
  job.id = id;

  // Each kind yields the bound, the law of the process and of its target.
  struct Pair {
    std::function<BoundReport(const CounterRng&, Parallelism)> bound;
    Sampler a, b;
    Space space;
    //! Compare by the Polish distance instead of the KR lower bound.
    bool polish = false;
  };
  std::optional<Pair> pair;

  if (kind == "poisson_pair") {
    const auto& a = expect_family<PoissonModel>(parse_model(o.at("model"), o.sub("model"), ctx), o.sub("model"), "Poisson");
    const auto& b = expect_family<PoissonModel>(parse_model(o.at("target"), o.sub("target"), ctx), o.sub("target"), "Poisson");
    const double tv = tv_measures(a.intensity, b.intensity, a.space);
    pair = Pair{[tv](const CounterRng&, Parallelism) {
                  BoundReport r;
                  r.bound_id = "poisson_pair";
                  r.value = tv;
                  return r;
                },
                poisson_sampler(a.space, a.intensity), poisson_sampler(b.space, b.intensity), a.space};
  } else if (kind == "generic") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const auto& t = expect_family<PoissonModel>(parse_model(o.at("target"), o.sub("target"), ctx), o.sub("target"), "Poisson");
    const int res = static_cast<int>(o.count("resolution", 16));
    pair = Pair{[m, t, n, res](const CounterRng& rng, Parallelism par) {
                  return bound_generic(t.intensity, papangelou(*m), sampler_of(*m), n, rng, res, par);
                },
                sampler_of(*m), poisson_sampler(t.space, t.intensity), t.space};
  } else if (kind == "prpp") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const auto& p = expect_family<PurelyRandomModel>(m, o.sub("model"), "purely random");
    const double mx = o.number("MX", p.counts.mean());
    const Intensity target = p.density.scaled(mx);
    pair = Pair{[p, mx](const CounterRng&, Parallelism) { return bound_prpp(p.counts, mx); }, sampler_of(*m),
                poisson_sampler(p.space, target), p.space};
  } else if (kind == "hardcore") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const auto& c = expect_family<ConditionalModel>(m, o.sub("model"), "conditional");
    if (c.condition.kind() != Condition::Kind::hardcore) Obj::fail(o.sub("model"), "expected a hardcore condition");
    const auto lambda = c.intensity.constant_value();
    if (!lambda) Obj::fail(o.sub("model"), "the hardcore bound needs a constant intensity");
    const bool paper_volume = o.boolean("paper_volume", true);
    pair = Pair{[c, l = *lambda, n, paper_volume](const CounterRng& rng, Parallelism par) {
                  const Estimate pr = estimate_acceptance(c.intensity, c.condition, c.space, n, rng.split("p_R"), par);
                  BoundReport r = bound_hardcore(l, c.space.mass(), c.condition.radius(), c.space.dim(), pr.mean,
                                                 paper_volume, pr.se);
                  r.seed = rng.key();
                  return r;
                },
                sampler_of(*m), poisson_sampler(c.space, c.intensity), c.space};
  } else if (kind == "bounded") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const auto& c = expect_family<ConditionalModel>(m, o.sub("model"), "conditional");
    if (c.condition.kind() != Condition::Kind::bounded) Obj::fail(o.sub("model"), "expected a bounded condition");
    pair = Pair{[c](const CounterRng&, Parallelism) { return bound_bounded(c.mass, c.condition.bound()); },
                sampler_of(*m), poisson_sampler(c.space, c.intensity), c.space};
  } else if (kind == "minus1n_dpp") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const auto& d = expect_family<DppModel>(m, o.sub("model"), "determinantal");
    const Kernel k = d.kernel;
    pair = Pair{[k](const CounterRng&, Parallelism) { return bound_minus1n_dpp(k, k.superposition()); }, sampler_of(*m),
                poisson_sampler(k.space(), diagonal_intensity(k)), k.space()};
  } else if (kind == "dpp_thin_rescale") {
    const ModelPtr base = parse_model(o.at("model"), o.sub("model"), ctx);
    const auto& d = expect_family<DppModel>(base, o.sub("model"), "determinantal");
    if (d.kernel.superposition() != 1) Obj::fail(o.sub("model"), "expected alpha = -1");
    const double beta = o.number("beta");
    if (!(beta > 0.0 && beta < 1.0)) Obj::fail(o.sub("beta"), "must lie in (0, 1)");
    double lambda_default = 0.0;
    for (std::size_t i = 0; i < d.kernel.size(); ++i) lambda_default = std::max(lambda_default, d.kernel.diagonal_density(i));
    const double lambda = o.number("lambda", lambda_default);
    const Model out = transform_model(transform_model(*base, Thin{Retention::uniform(beta)}), Rescale{beta});
    const Space s = model_space(out);
    pair = Pair{[beta, lambda, area = s.mass()](const CounterRng&, Parallelism) {
                  return bound_dpp_thin_rescale(beta, lambda, area);
                },
                sampler_of(out), poisson_sampler(s, Intensity::constant(lambda)), s};
  } else if (kind == "gibbs") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const auto& g = expect_family<GibbsModel>(m, o.sub("model"), "Gibbs");
    const Intensity act = g.activity();
    const double mx = act.total_mass(g.space);
    pair = Pair{[mx, g](const CounterRng&, Parallelism) { return bound_gibbs(mx, g.theta, g.epsilon); }, sampler_of(*m),
                poisson_sampler(g.space, act), g.space};
  } else if (kind == "thinned_cox") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const double p = o.number("p");
    if (!(p >= 0.0 && p < 1.0)) Obj::fail(o.sub("p"), "must lie in [0, 1)");
    const Retain retain = [p](const Point&) { return p; };
    const Sampler base = sampler_of(*m);
    pair = Pair{[base, retain, n](const CounterRng& rng, Parallelism par) {
                  return bound_thinned_vs_cox(base, retain, n, rng, par);
                },
                [base, p](CounterRng& r) { return thin_config(base(r), Retention::uniform(p), r); },
                [base, retain](CounterRng& r) { return poisson_directed_by(base(r), retain, r); }, model_space(*m)};
  } else if (kind == "kallenberg") {
    const ModelPtr m = parse_model(o.at("model"), o.sub("model"), ctx);
    const auto& cox = expect_family<CoxAtomicModel>(parse_model(o.at("target"), o.sub("target"), ctx), o.sub("target"),
                                                    "Cox atomic");
    const double p = o.number("p");
    if (!(p >= 0.0 && p < 1.0)) Obj::fail(o.sub("p"), "must lie in [0, 1)");
    const Retain retain = [p](const Point&) { return p; };
    const Sampler base = sampler_of(*m);
    pair = Pair{[base, retain, cox, n](const CounterRng& rng, Parallelism par) {
                  return bound_kallenberg(base, retain, cox, n, rng, par);
                },
                [base, p](CounterRng& r) { return thin_config(base(r), Retention::uniform(p), r); },
                [cox](CounterRng& r) { return sample_cox_atomic(cox, r); }, cox.space, true};
  } else {
    Obj::fail(o.sub("kind"), "unknown bound \"" + kind + "\"");
  }

  const auto fam = parse_family(o, "functionals", pair->space, "default");
  o.done();
  job.run = [p = *pair, fam, kr_n, with_kr, id](const CounterRng& rng, Parallelism par) {
    BoundOutcome out;
    out.report = p.bound(rng.split("bound"), par);
    out.report.bound_id = id;
    if (out.report.seed == 0) out.report.seed = rng.key();
    if (with_kr) {
      const EstimateReport kr = p.polish ? polish_distance(p.a, p.b, p.space, kr_n, rng.split("polish"), par)
                                         : kr_lower_bound(p.a, p.b, fam, kr_n, rng.split("kr"), par);
      out.dominance = dominance(out.report, kr);
    }
    return out;
  };
  return job;
}

// Sample requests -------------------------------------------------------------

inline SampleJob parse_sample(const json& v, const std::string& path, Context& ctx) {
  Obj o(v, path, ctx.text);
  SampleJob job;
  job.id = o.string("id");
  job.model = parse_model(o.at("model"), o.sub("model"), ctx, &job.model_id);
  job.replicas = o.count("replicas", 1);
  if (job.replicas == 0) Obj::fail(o.sub("replicas"), "must be >= 1");
  job.notes = ctx.notes[job.model_id];
  if (job.model_id.rfind("model#", 0) == 0) job.model_id = job.id;
  o.done();
  return job;
}

}  // namespace config

/// Parses a configuration document. Unknown keys, unknown families and
/// references to undeclared models are errors.
inline Experiment load_experiment(const std::string& text) {
  using config::Obj;
  config::json doc;
  try {
    doc = config::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  config::Context ctx;
  ctx.text = &text;
  Obj root(doc, "", &text);
  const std::string schema = root.string("schema");
  if (schema != kSchema) Obj::fail("/schema", "expected \"" + std::string(kSchema) + "\", got \"" + schema + "\"");
  Experiment ex;
  {
    const auto& s = root.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      Obj::fail("/seed", "expected a non-negative integer");
    ex.seed = s.get<std::uint64_t>();
  }
  if (root.has("description")) (void)root.string("description");
  if (auto models = root.maybe("models")) {
    const auto& m = models->get();
    if (!m.is_object()) Obj::fail("/models", "expected an object of named models");
    for (auto it = m.begin(); it != m.end(); ++it) {
      const ModelPtr p = config::parse_model(it.value(), "/models/" + it.key(), ctx);
      ctx.notes[it.key()] = ctx.notes["model#" + std::to_string(ctx.anonymous - 1)];
      ctx.models[it.key()] = p;
    }
  }
  auto list = [&](const char* key, auto&& parse) {
    if (auto arr = root.maybe(key)) {
      const auto& a = arr->get();
      if (!a.is_array()) Obj::fail(std::string("/") + key, "expected an array");
      std::set<std::string> ids;
      for (std::size_t i = 0; i < a.size(); ++i) {
        auto job = parse(a[i], std::string("/") + key + "/" + std::to_string(i), ctx);
        if (!ids.insert(job.id).second) Obj::fail(std::string("/") + key + "/" + std::to_string(i), "duplicate id \"" + job.id + "\"");
        using Job = std::decay_t<decltype(job)>;
        if constexpr (std::is_same_v<Job, SampleJob>) ex.samples.push_back(std::move(job));
        else if constexpr (std::is_same_v<Job, CheckJob>) ex.checks.push_back(std::move(job));
        else ex.bounds.push_back(std::move(job));
      }
    }
  };
  list("sample", config::parse_sample);
  list("checks", config::parse_check);
  list("bounds", config::parse_bound);
  root.done();
  return ex;
}

}  // namespace steinpp

#endif  // STEINPP_CONFIG_HPP
