#ifndef STEINPP_IO_HPP
#define STEINPP_IO_HPP

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "steinpp/distances.hpp"
#include "steinpp/geometry.hpp"
#include "steinpp/papangelou.hpp"
#include "steinpp/stein_bounds.hpp"

namespace steinpp::io {

enum class Format { csv, json };

//! Shortest text that reads back to the same double; locale independent.
inline std::string num(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline const char* axis_name(int a) { return a == 0 ? "x" : a == 1 ? "y" : "z"; }

/// Points merged over component labels, in location order.
inline std::vector<std::pair<Point, std::size_t>> merged_points(const Configuration& phi) {
  std::vector<std::pair<Point, std::size_t>> out;
  for (const auto& e : phi.entries()) {
    bool found = false;
    for (auto& [p, k] : out)
      if (same_location(p, e.point)) {
        k += e.multiplicity;
        found = true;
        break;
      }
    if (!found) out.emplace_back(e.point, e.multiplicity);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return location_less(a.first, b.first); });
  return out;
}

//! Header x[,y[,z]],multiplicity; one row per distinct location.
inline void write_configuration(std::ostream& os, const Configuration& phi, int dim, Format f = Format::csv) {
  const auto pts = merged_points(phi);
  if (f == Format::json) {
    nlohmann::ordered_json j;
    j["dim"] = dim;
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& [p, k] : pts) {
      nlohmann::ordered_json row;
      for (int a = 0; a < dim; ++a) row[axis_name(a)] = p.x[a];
      row["multiplicity"] = k;
      j["points"].push_back(row);
    }
    os << j.dump(2) << '\n';
    return;
  }
  for (int a = 0; a < dim; ++a) os << axis_name(a) << ',';
  os << "multiplicity\n";
  for (const auto& [p, k] : pts) {
    for (int a = 0; a < dim; ++a) os << num(p.x[a]) << ',';
    os << k << '\n';
  }
}

//! Header model_id,check_id,lhs,rhs,stderr,pass.
inline void write_checks(std::ostream& os, const std::vector<CheckRow>& rows, Format f = Format::csv) {
  if (f == Format::json) {
    auto j = nlohmann::ordered_json::array();
    for (const auto& r : rows)
      j.push_back({{"model_id", r.model_id}, {"check_id", r.check_id}, {"lhs", r.lhs}, {"rhs", r.rhs},
                   {"stderr", r.stderr_}, {"pass", r.pass}});
    os << j.dump(2) << '\n';
    return;
  }
  os << "model_id,check_id,lhs,rhs,stderr,pass\n";
  for (const auto& r : rows)
    os << csv_field(r.model_id) << ',' << csv_field(r.check_id) << ',' << num(r.lhs) << ',' << num(r.rhs) << ','
       << num(r.stderr_) << ',' << (r.pass ? "true" : "false") << '\n';
}

//! Header bound_id,value,stderr,inputs_hash,seed.
inline void write_bounds(std::ostream& os, const std::vector<BoundReport>& rows, Format f = Format::csv) {
  if (f == Format::json) {
    auto j = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json comps = nlohmann::ordered_json::object(), ins = nlohmann::ordered_json::object();
      for (const auto& [k, v] : r.components) comps[k] = v;
      for (const auto& [k, v] : r.inputs) ins[k] = v;
      j.push_back({{"bound_id", r.bound_id}, {"value", r.value}, {"stderr", r.stderr_}, {"inputs_hash", r.inputs_hash()},
                   {"seed", r.seed}, {"components", comps}, {"inputs", ins}});
    }
    os << j.dump(2) << '\n';
    return;
  }
  os << "bound_id,value,stderr,inputs_hash,seed\n";
  for (const auto& r : rows)
    os << csv_field(r.bound_id) << ',' << num(r.value) << ',' << num(r.stderr_) << ',' << r.inputs_hash() << ','
       << r.seed << '\n';
}

/// One bound paired with the empirical lower bound on the same distance.
struct DominanceRow {
  std::string bound_id;
  double bound = 0.0;
  double bound_stderr = 0.0;
  double kr_lower = 0.0;
  double kr_stderr = 0.0;
  std::string witness;
  double sigmas = 3.0;

  //! bound + sigmas * (total stderr) - kr_lower.
  [[nodiscard]] double margin() const { return bound + sigmas * (bound_stderr + kr_stderr) - kr_lower; }
  [[nodiscard]] bool pass() const { return margin() >= 0.0; }
};

//! Header bound_id,bound,kr_lower,margin,pass,bound_stderr,kr_stderr,witness.
inline void write_dominance(std::ostream& os, const std::vector<DominanceRow>& rows, Format f = Format::csv) {
  if (f == Format::json) {
    auto j = nlohmann::ordered_json::array();
    for (const auto& r : rows)
      j.push_back({{"bound_id", r.bound_id}, {"bound", r.bound}, {"kr_lower", r.kr_lower}, {"margin", r.margin()},
                   {"pass", r.pass()}, {"bound_stderr", r.bound_stderr}, {"kr_stderr", r.kr_stderr},
                   {"witness", r.witness}});
    os << j.dump(2) << '\n';
    return;
  }
  os << "bound_id,bound,kr_lower,margin,pass,bound_stderr,kr_stderr,witness\n";
  for (const auto& r : rows)
    os << csv_field(r.bound_id) << ',' << num(r.bound) << ',' << num(r.kr_lower) << ',' << num(r.margin()) << ','
       << (r.pass() ? "true" : "false") << ',' << num(r.bound_stderr) << ',' << num(r.kr_stderr) << ','
       << csv_field(r.witness) << '\n';
}

}  // namespace steinpp::io

#endif  // STEINPP_IO_HPP
