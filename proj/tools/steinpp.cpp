// steinpp: sample point processes, verify Papangelou and Glauber identities,
// and compare Stein bounds with empirical distance estimates.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "steinpp/steinpp.hpp"

namespace fs = std::filesystem;
using namespace steinpp;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  unsigned jobs = 0;
  std::string format = "csv";
};

io::Format format_of(const Options& o) { return o.format == "json" ? io::Format::json : io::Format::csv; }
std::string ext(const Options& o) { return o.format == "json" ? ".json" : ".csv"; }

Parallelism parallelism(const Options& o) {
  if (o.jobs > 0) return Parallelism{o.jobs};
  return Parallelism::from_env();
}

Experiment load(const Options& o) {
  std::ifstream in(o.config, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + o.config);
  std::stringstream ss;
  ss << in.rdbuf();
  Experiment ex = load_experiment(ss.str());
  if (o.seed) ex.seed = *o.seed;
  return ex;
}

std::ofstream open_out(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  const fs::path p = fs::path(o.out) / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  return f;
}

int cmd_sample(const Options& o) {
  const Experiment ex = load(o);
  const CounterRng root(ex.seed);
  const Parallelism par = parallelism(o);
  auto summary = open_out(o, "samples" + ext(o));
  nlohmann::ordered_json js = nlohmann::ordered_json::array();
  if (o.format == "csv") summary << "sample_id,model_id,replicas,points,mean_count,mean_count_stderr,expected_count,note\n";
  for (const auto& job : ex.samples) {
    const CounterRng rng = root.split("sample/" + job.id);
    CounterRng first = rng.replica(0);
    const Configuration phi = sample(*job.model, first);
    const int dim = model_space(*job.model).dim();
    {
      auto f = open_out(o, job.id + ext(o));
      io::write_configuration(f, phi, dim, format_of(o));
    }
    const auto counts = replicate(job.replicas, rng, [&](CounterRng& r) {
      return static_cast<double>(sample(*job.model, r).size());
    }, par);
    const Estimate e = summarize(counts);
    const auto expected = expected_count(*job.model);
    std::string note;
    for (const auto& n : job.notes) note += (note.empty() ? "" : "; ") + n;
    if (o.format == "csv") {
      summary << io::csv_field(job.id) << ',' << io::csv_field(job.model_id) << ',' << job.replicas << ',' << phi.size()
              << ',' << io::num(e.mean) << ',' << io::num(e.se) << ',' << (expected ? io::num(*expected) : "") << ','
              << io::csv_field(note) << '\n';
    } else {
      nlohmann::ordered_json row{{"sample_id", job.id}, {"model_id", job.model_id}, {"replicas", job.replicas},
                                 {"points", phi.size()}, {"mean_count", e.mean}, {"mean_count_stderr", e.se}};
      row["expected_count"] = expected ? nlohmann::ordered_json(*expected) : nlohmann::ordered_json(nullptr);
      row["note"] = note;
      js.push_back(row);
    }
    std::cout << job.id << ": " << phi.size() << " points\n";
  }
  if (o.format == "json") summary << js.dump(2) << '\n';
  return 0;
}

int cmd_verify(const Options& o) {
  const Experiment ex = load(o);
  const CounterRng root(ex.seed);
  const Parallelism par = parallelism(o);
  std::vector<CheckRow> rows;
  for (const auto& job : ex.checks) {
    const auto r = job.run(root.split("check/" + job.id), par);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  auto f = open_out(o, "checks" + ext(o));
  io::write_checks(f, rows, format_of(o));
  std::size_t failed = 0;
  for (const auto& r : rows) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.model_id << ' ' << r.check_id << '\n';
    if (!r.pass) ++failed;
  }
  std::cout << rows.size() - failed << '/' << rows.size() << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

int cmd_bound(const Options& o) {
  const Experiment ex = load(o);
  const CounterRng root(ex.seed);
  const Parallelism par = parallelism(o);
  std::vector<BoundReport> reports;
  std::vector<io::DominanceRow> rows;
  for (const auto& job : ex.bounds) {
    BoundOutcome out = job.run(root.split("bound/" + job.id), par);
    reports.push_back(out.report);
    if (out.dominance) rows.push_back(*out.dominance);
  }
  {
    auto f = open_out(o, "bounds" + ext(o));
    io::write_bounds(f, reports, format_of(o));
  }
  auto f = open_out(o, "dominance" + ext(o));
  io::write_dominance(f, rows, format_of(o));
  std::size_t failed = 0;
  for (const auto& r : rows) {
    std::cout << (r.pass() ? "PASS " : "FAIL ") << r.bound_id << " bound=" << io::num(r.bound)
              << " kr_lower=" << io::num(r.kr_lower) << '\n';
    if (!r.pass()) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stein-method bounds for point processes"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "Override the configuration seed");
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--jobs", opt.jobs, "Worker threads (default: STEINPP_JOBS or 1)");
    sub->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  };
  CLI::App* sample_cmd = app.add_subcommand("sample", "Draw realizations");
  CLI::App* verify_cmd = app.add_subcommand("verify", "Run verification checks");
  CLI::App* bound_cmd = app.add_subcommand("bound", "Compute bounds and dominance tables");
  for (auto* s : {sample_cmd, verify_cmd, bound_cmd}) add_common(s);
  CLI11_PARSE(app, argc, argv);
  try {
    if (sample_cmd->parsed()) return cmd_sample(opt);
    if (verify_cmd->parsed()) return cmd_verify(opt);
    return cmd_bound(opt);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
