#ifndef STEINPP_MONTECARLO_HPP
#define STEINPP_MONTECARLO_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "steinpp/rng.hpp"

namespace steinpp {

//! Worker count for replica fan-out. Results never depend on it.
struct Parallelism {
  unsigned jobs = 1;

  /// Reads STEINPP_JOBS, falling back to one worker.
  static Parallelism from_env() {
    Parallelism p;
    if (const char* env = std::getenv("STEINPP_JOBS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v > 0) p.jobs = static_cast<unsigned>(v);
    }
    return p;
  }
};

//! Sample mean with its standard error.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

inline Estimate summarize(std::span<const double> xs) {
  Estimate e;
  e.n = xs.size();
  if (xs.empty()) return e;
  double mean = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mean += (xs[i] - mean) / static_cast<double>(i + 1);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  e.mean = mean;
  if (xs.size() > 1) {
    const double var = ss / static_cast<double>(xs.size() - 1);
    e.se = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return e;
}

/// Runs body(i) for i in [0, n) on `par.jobs` threads. Exceptions from any
/// worker are rethrown on the caller after all workers have joined.
template <class Body>
void parallel_for(std::size_t n, Parallelism par, Body&& body) {
  const unsigned jobs = std::max(1u, std::min<unsigned>(par.jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      const std::size_t begin = n * w / jobs;
      const std::size_t end = n * (w + 1) / jobs;
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Replica i evaluates draw(rng.replica(i)) -> double; returns the per-replica
/// values in index order.
template <class Draw>
std::vector<double> replicate(std::size_t n, const CounterRng& rng, Draw&& draw, Parallelism par = {}) {
  std::vector<double> out(n);
  parallel_for(n, par, [&](std::size_t i) {
    CounterRng r = rng.replica(i);
    out[i] = draw(r);
  });
  return out;
}

/// Vector-valued replication: draw(rng, span<double> row) fills `width`
/// values. Returns a row-major n x width table.
template <class Draw>
std::vector<double> replicate_rows(std::size_t n, std::size_t width, const CounterRng& rng, Draw&& draw,
                                   Parallelism par = {}) {
  std::vector<double> out(n * width, 0.0);
  parallel_for(n, par, [&](std::size_t i) {
    CounterRng r = rng.replica(i);
    draw(r, std::span<double>(out.data() + i * width, width));
  });
  return out;
}

inline std::vector<double> column(const std::vector<double>& table, std::size_t width, std::size_t col) {
  std::vector<double> c;
  c.reserve(table.size() / width);
  for (std::size_t i = col; i < table.size(); i += width) c.push_back(table[i]);
  return c;
}

template <class Draw>
Estimate mc_mean(std::size_t n, const CounterRng& rng, Draw&& draw, Parallelism par = {}) {
  const auto xs = replicate(n, rng, std::forward<Draw>(draw), par);
  return summarize(xs);
}

}  // namespace steinpp

#endif  // STEINPP_MONTECARLO_HPP
