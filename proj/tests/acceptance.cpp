// Acceptance run: one PASS/FAIL line per criterion A1..A9.
// Usage: steinpp_acceptance <path to steinpp cli>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "steinpp/steinpp.hpp"

using namespace steinpp;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr std::size_t kGnzSamples = 100000;
constexpr double kGnzAbs = 1e-3;
constexpr double kGnzSeconds = 120.0;
constexpr double kJanossyTol = 1e-10;
constexpr double kExactTol = 1e-12;
constexpr double kPrppTol = 1e-9;
constexpr double kKrTol = 0.02;
constexpr std::size_t kKrSamples = 100000;
constexpr double kDominanceSeconds = 600.0;
constexpr double kMonotoneTol = 1e-10;
constexpr std::size_t kGlauberSamples = 20000;
constexpr std::size_t kSteinSamples = 10000;
constexpr double kW1At01 = 0.00952;
constexpr double kW1Tol = 1e-5;

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void note(bool ok, const std::string& line) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "  ok   " : "  FAIL ") + line);
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const CounterRng root(20240601);

const TestIntegrand u_one = [](const Point&, const Configuration&) { return 1.0; };

// ---------------------------------------------------------------------------

Outcome a1_gnz() {
  Outcome out;
  const Space sq = Space::unit_box(2);
  const DyadicBox half = dyadic_boxes(sq, 1).front();
  const TestIntegrand u_box = [half](const Point&, const Configuration& phi) { return box_count(phi, half); };
  const Kernel k16 = gaussian_kernel(Space::lattice({0, 0}, {1, 1}, {4, 4}), 4.0, 0.25);
  const DyadicBox cells = dyadic_boxes(k16.space(), 1).front();
  const TestIntegrand u_cells = [cells](const Point&, const Configuration& phi) { return box_count(phi, cells); };
  const std::vector<std::pair<std::string, Model>> families{
      {"poisson", make_poisson(sq, Intensity::constant(1.0))},
      {"prpp_geometric", make_purely_random(sq, CountDistribution::geometric(0.5), Intensity::constant(1.0))},
      {"hardcore", make_conditional(sq, Intensity::constant(1.0), Condition::hardcore(0.1))},
      {"bounded3", make_conditional(sq, Intensity::constant(1.0), Condition::bounded(3))},
      {"gibbs", make_gibbs(sq, 1.0, Intensity::constant(0.0), step_potential(0.5, 0.2), 0.5)},
      {"dpp16", make_dpp(k16)}};
  GnzOptions opt;
  opt.abs_tol = kGnzAbs;
  opt.sigmas = 3.0;
  for (const auto& [name, m] : families) {
    const auto t0 = std::chrono::steady_clock::now();
    const PapangelouEvaluator c = papangelou(m);
    const CounterRng rng = root.split("A1/" + name);
    const bool grid = model_space(m).is_grid();
    for (const auto& [uname, u] : std::vector<std::pair<std::string, TestIntegrand>>{
             {"u=1", u_one}, {"u=phi(A)", grid ? u_cells : u_box}}) {
      const GnzReport r = gnz_check(m, c, u, kGnzSamples, rng.split(uname), opt);
      const double sigma = r.stderr_lhs + r.stderr_rhs;
      char buf[200];
      std::snprintf(buf, sizeof buf, "%-15s %-9s lhs=%.5f rhs=%.5f |diff|=%.2e limit=%.2e", name.c_str(),
                    uname.c_str(), r.lhs, r.rhs, std::abs(r.lhs - r.rhs), 3.0 * sigma + kGnzAbs);
      out.note(std::abs(r.lhs - r.rhs) <= 3.0 * sigma + kGnzAbs, buf);
    }
    const double secs = seconds_since(t0);
    out.note(secs <= kGnzSeconds, name + fmt(" time %.1fs", secs));
  }
  return out;
}

Outcome a2_janossy() {
  Outcome out;
  const Space sq = Space::unit_box(2);
  const std::vector<std::pair<std::string, Model>> models{
      {"poisson", make_poisson(sq, Intensity::function([](const Point& x) { return 0.5 + x.x[0] * x.x[1]; }, 1.5))},
      {"prpp_geometric", make_purely_random(sq, CountDistribution::geometric(0.5), Intensity::constant(1.0))},
      {"conditional_hardcore", make_conditional(sq, Intensity::constant(1.0), Condition::hardcore(0.1))},
      {"conditional_bounded3", make_conditional(sq, Intensity::constant(1.0), Condition::bounded(3))},
      {"gibbs", make_gibbs(sq, 1.0, Intensity::constant(0.0), step_potential(0.5, 0.2), 0.5)}};
  const LocationSampler loc(sq, Intensity::constant(1.0));
  for (const auto& [name, m] : models) {
    const PapangelouEvaluator c = papangelou(m);
    const CounterRng rng = root.split("A2/" + name);
    double worst = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
      CounterRng r = rng.replica(i);
      const auto k = static_cast<std::size_t>(r.uniform() * 7.0);
      const Configuration phi = sample_iid(k, loc, r);
      const Point x = loc(r);
      worst = std::max(worst, std::abs(c(x, phi) - janossy_ratio_oracle(m, x, phi)));
    }
    out.note(worst <= kJanossyTol, name + fmt(" max |c - oracle| = %.3e over 100 cases", worst));
  }
  return out;
}

Outcome a3_exact() {
  Outcome out;
  const double geo = bound_prpp(CountDistribution::geometric(0.5), 1.0).value;
  out.note(std::abs(geo - 0.5) <= kPrppTol, fmt("bound_prpp(geometric, MX=1) = %.15g", geo));
  const double poi = bound_prpp(CountDistribution::poisson(1.0), 1.0).value;
  out.note(poi == 0.0, fmt("bound_prpp(Poisson counts) = %.17g", poi));
  const double b0 = bound_bounded(1.0, 0).value, b2 = bound_bounded(1.0, 2).value;
  out.note(std::abs(b0 - 1.0) <= kExactTol, fmt("bounded(1,0) = %.17g", b0));
  out.note(std::abs(b2 - 0.2) <= kExactTol, fmt("bounded(1,2) = %.17g", b2));
  const double tr = bound_dpp_thin_rescale(0.1, 1.0, 1.0).value;
  out.note(std::abs(tr - 2.0 / 9.0) <= kExactTol, fmt("dpp_thin_rescale(0.1,1,1) = %.17g", tr));
  return out;
}

Outcome a4_kr_bounded() {
  Outcome out;
  const Space sq = Space::unit_box(2);
  const Model empty = make_conditional(sq, Intensity::constant(1.0), Condition::bounded(0));
  const Model poi = make_poisson(sq, Intensity::constant(1.0));
  const auto rep = kr_lower_bound(sampler_of(empty), sampler_of(poi), {total_count()}, kKrSamples, root.split("A4"));
  char buf[160];
  std::snprintf(buf, sizeof buf, "KR lower bound (F=|phi|) = %.5f +- %.5f, target 1 +- %.2f", rep.value, rep.stderr_, kKrTol);
  out.note(std::abs(rep.value - 1.0) <= kKrTol, buf);
  return out;
}

Outcome a5_dominance(const std::string& config_dir) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const Experiment ex = load_experiment(read_file(fs::path(config_dir) / "bound_suite.json"));
  const CounterRng rng(ex.seed);
  std::map<std::string, bool> seen;
  for (const auto& job : ex.bounds) {
    const BoundOutcome o = job.run(rng.split("bound/" + job.id), {});
    if (!o.dominance) {
      out.note(false, job.id + " has no empirical comparison");
      continue;
    }
    const auto& d = *o.dominance;
    char buf[220];
    std::snprintf(buf, sizeof buf, "%-28s kr_lower=%.5f (se %.5f)  bound=%.5f (se %.5f)  margin=%.5f", job.id.c_str(),
                  d.kr_lower, d.kr_stderr, d.bound, d.bound_stderr, d.margin());
    out.note(d.pass(), buf);
    seen[job.id] = true;
  }
  for (const char* id : {"prpp_vs_poisson", "hardcore_vs_poisson", "bounded2_vs_poisson", "minus1n_dpp_vs_poisson",
                         "dpp_thin_rescale_vs_poisson", "gibbs_01_vs_poisson", "thinned_vs_cox_atomic", "poisson_vs_poisson"})
    if (!seen.count(id)) out.note(false, std::string("missing pair ") + id);
  const double secs = seconds_since(t0);
  out.note(secs <= kDominanceSeconds, fmt("suite time %.1fs", secs));
  return out;
}

//! Random Hermitian kernel on 16 unit-mass cells with spectrum in [0, 0.95].
Kernel random_kernel(const CounterRng& rng) {
  CounterRng r = rng;
  const Space cells = Space::lattice({0, 0}, {4, 4}, {4, 4});
  CMatrix a(16, 16);
  for (Eigen::Index i = 0; i < 16; ++i)
    for (Eigen::Index j = 0; j < 16; ++j) a(i, j) = cplx(r.uniform() - 0.5, r.uniform() - 0.5);
  const CMatrix q = Eigen::HouseholderQR<CMatrix>(a).householderQ();
  Eigen::VectorXd lam(16);
  for (Eigen::Index i = 0; i < 16; ++i) lam(i) = 0.95 * r.uniform();
  return Kernel::from_weighted(cells, q * lam.asDiagonal() * q.adjoint());
}

Outcome a6_monotone() {
  Outcome out;
  const Kernel gauss = gaussian_kernel(Space::lattice({0, 0}, {1, 1}, {4, 4}), 4.0, 0.25);
  const std::vector<std::pair<std::string, Kernel>> kernels{
      {"gaussian", gauss}, {"gaussian_thinned", gauss.scaled(0.5)},
      {"random_hermitian_a", random_kernel(root.split("A6/a"))},
      {"random_hermitian_b", random_kernel(root.split("A6/b"))}};
  for (const auto& [name, k] : kernels) {
    const std::size_t v = count_monotonicity_violations(pap_dpp(k), 4, kMonotoneTol);
    out.note(v == 0, name + ": " + std::to_string(v) + " violations over all |phi| <= 4");
  }
  return out;
}

Outcome a7_glauber() {
  Outcome out;
  const Space sq = Space::unit_box(2);
  const GlauberTarget target = GlauberTarget::make(sq, Intensity::constant(3.0));
  const GlauberTarget unit = GlauberTarget::make(sq, Intensity::constant(1.0));
  auto fn = [&](const char* name) { return config::functional_by_name(name, sq, "/"); };
  const Configuration phi2({Point::at(0.1, 0.2), Point::at(0.8, 0.4)});
  auto row_line = [&](const CheckRow& r) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-34s lhs=%.5f rhs=%.5f se=%.5f", r.check_id.c_str(), r.lhs, r.rhs, r.stderr_);
    out.note(r.pass, buf);
  };
  const CounterRng rng = root.split("A7");
  for (const char* f : {"count", "exp_count"})
    row_line(verify_semigroup(fn(f), phi2, 0.3, 0.7, target, kGlauberSamples, rng.split(std::string("semigroup/") + f)));
  for (const char* f : {"min2", "exp_count"})
    row_line(verify_commutation(fn(f), Point::at(0.5, 0.5), phi2, 0.4, target, kGlauberSamples,
                                rng.split(std::string("commutation/") + f)));
  const Configuration phi5({Point::at(0.1, 0.2), Point::at(0.3, 0.3), Point::at(0.6, 0.6), Point::at(0.9, 0.1),
                            Point::at(0.2, 0.8)});
  for (const auto& r : verify_invariance_and_rate(fn("count"), phi5, target, kGlauberSamples, rng.split("invariance")))
    row_line(r);
  const Sampler zeta = [target](CounterRng& r) { return target.sample(r); };
  for (const auto& r : verify_stationarity("poisson", zeta, {fn("count"), fn("exp_count"), fn("half_count")}, target,
                                           kGlauberSamples, rng.split("stationarity")))
    row_line(r);
  SteinDirichletOptions sd;
  sd.n = kSteinSamples;
  sd.resolution = 8;
  const std::vector<Configuration> configs{
      Configuration{}, Configuration({Point::at(0.25, 0.75)}),
      Configuration({Point::at(0.1, 0.1), Point::at(0.4, 0.6), Point::at(0.7, 0.2), Point::at(0.9, 0.9)})};
  for (const char* f : {"count", "exp_count", "min2"})
    for (std::size_t i = 0; i < configs.size(); ++i)
      row_line(verify_stein_dirichlet(fn(f), configs[i], unit,
                                      rng.split(std::string("stein/") + f + "/" + std::to_string(i)), sd));
  return out;
}

Outcome a8_thinned_cox() {
  Outcome out;
  for (double p : {0.01, 0.05, 0.1, 0.2, 0.5}) {
    const double w = w1_counts(CountDistribution::bernoulli(p), CountDistribution::poisson(p));
    char buf[160];
    std::snprintf(buf, sizeof buf, "p=%-4g W1(Bern, Poi)=%.6f  2p^2=%.6f", p, w, 2.0 * p * p);
    out.note(w <= 2.0 * p * p, buf);
  }
  const double w = w1_counts(CountDistribution::bernoulli(0.1), CountDistribution::poisson(0.1));
  out.note(std::abs(w - kW1At01) <= kW1Tol, fmt("p=0.1 value %.7f vs 0.00952", w));
  return out;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  return files;
}

Outcome a9_determinism(const std::string& cli, const std::string& config_dir) {
  Outcome out;
  const fs::path work = fs::temp_directory_path() / ("steinpp_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  const std::vector<std::pair<std::string, std::string>> runs{
      {"sample", "sample_ginibre.json"}, {"verify", "verify_suite.json"}, {"bound", "bound_suite.json"}};
  for (const auto& [cmd, cfg] : runs) {
    std::vector<std::map<std::string, std::string>> snaps;
    int codes[2] = {0, 0};
    for (int run = 0; run < 2; ++run) {
      const fs::path dir = work / (cmd + std::to_string(run));
      fs::create_directories(dir);
      // the second run uses two workers; output must not depend on it
      const std::string line = "'" + cli + "' " + cmd + " --config '" + (fs::path(config_dir) / cfg).string() +
                               "' --out '" + dir.string() + "' --jobs " + std::to_string(run + 1) + " > '" +
                               (dir / "stdout.txt").string() + "' 2>&1";
      codes[run] = std::system(line.c_str());
      snaps.push_back(snapshot(dir));
    }
    const bool same = snaps[0] == snaps[1] && !snaps[0].empty();
    out.note(same && codes[0] == 0 && codes[1] == 0,
             cmd + " " + cfg + ": " + std::to_string(snaps[0].size()) + " files " +
                 (same ? "byte-identical" : "DIFFER") + ", exit codes " + std::to_string(codes[0]) + "/" +
                 std::to_string(codes[1]));
  }
  fs::remove_all(work);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: " << argv[0] << " <steinpp cli>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const std::string config_dir = STEINPP_CONFIG_DIR;
  struct Criterion {
    const char* id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"A1", "GNZ identity, six families, 1e5 samples", a1_gnz},
      {"A2", "Papangelou closed forms vs Janossy ratios", a2_janossy},
      {"A3", "exact bound values", a3_exact},
      {"A4", "KR lower bound, bounded N=0 vs Poisson", a4_kr_bounded},
      {"A5", "bounds dominate empirical lower bounds", [&] { return a5_dominance(config_dir); }},
      {"A6", "DPP Papangelou monotonicity", a6_monotone},
      {"A7", "Glauber semigroup, invariance and Stein-Dirichlet", a7_glauber},
      {"A8", "thinned Bernoulli vs Poisson counts", a8_thinned_cox},
      {"A9", "CLI byte determinism", [&] { return a9_determinism(cli, config_dir); }}};
  std::size_t passed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.note(false, std::string("exception: ") + e.what());
    }
    std::cout << c.id << (o.pass ? " PASS " : " FAIL ") << c.title << fmt(" (%.1fs)", seconds_since(t0)) << '\n';
    for (const auto& l : o.lines) std::cout << l << '\n';
    std::cout.flush();
    passed += o.pass ? 1 : 0;
  }
  std::cout << passed << '/' << criteria.size() << " criteria passed\n";
  return passed == criteria.size() ? 0 : 1;
}
