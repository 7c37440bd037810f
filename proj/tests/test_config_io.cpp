#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace steinpp;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& text) {
  try {
    (void)load_experiment(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Io, NumRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 2.0 / 9.0, 1e-300, 12345.678, -0.0, 0.00952}) EXPECT_EQ(std::strtod(io::num(v).c_str(), nullptr), v);
  EXPECT_EQ(io::num(0.5), "0.5");
  EXPECT_EQ(io::num(3.0), "3");
}

TEST(Io, CsvQuoting) {
  EXPECT_EQ(io::csv_field("plain"), "plain");
  EXPECT_EQ(io::csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(io::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Io, ConfigurationMergesLabels) {
  Configuration phi;
  phi.insert(Point::at(0.5, 0.25), 1, 0);
  phi.insert(Point::at(0.5, 0.25), 2, 1);
  phi.insert(Point::at(0.125, 0.75), 1, 0);
  std::ostringstream os;
  io::write_configuration(os, phi, 2);
  EXPECT_EQ(os.str(), "x,y,multiplicity\n0.125,0.75,1\n0.5,0.25,3\n");
  std::ostringstream js;
  io::write_configuration(js, phi, 2, io::Format::json);
  const auto j = nlohmann::json::parse(js.str());
  EXPECT_EQ(j["points"].size(), 2u);
  EXPECT_EQ(j["points"][1]["multiplicity"], 3);
}

TEST(Io, ChecksAndBoundsTables) {
  std::ostringstream os;
  io::write_checks(os, {{"m", "gnz[one]", 1.0, 1.0, 0.01, true}});
  EXPECT_EQ(os.str(), "model_id,check_id,lhs,rhs,stderr,pass\nm,gnz[one],1,1,0.01,true\n");
  std::ostringstream bs;
  const auto rep = bound_gibbs(1.0, 1.0, 0.1);
  io::write_bounds(bs, {rep});
  EXPECT_EQ(bs.str(), "bound_id,value,stderr,inputs_hash,seed\ngibbs,0.1,0," + rep.inputs_hash() + ",0\n");
  io::DominanceRow row{"pair", 0.5, 0.0, 0.52, 0.01, "count"};
  EXPECT_NEAR(row.margin(), 0.5 + 0.03 - 0.52, 1e-15);
  EXPECT_TRUE(row.pass());
  row.kr_lower = 0.6;
  EXPECT_FALSE(row.pass());
  std::ostringstream ds;
  io::write_dominance(ds, {row});
  EXPECT_EQ(ds.str().substr(0, ds.str().find('\n')), "bound_id,bound,kr_lower,margin,pass,bound_stderr,kr_stderr,witness");
}

TEST(Config, RejectsUnknownKeysWithPathAndLine) {
  const std::string text = "{\n  \"schema\": \"steinpp/1\",\n  \"seed\": 1,\n  \"sede\": 2\n}\n";
  const std::string err = error_of(text);
  EXPECT_NE(err.find("/sede"), std::string::npos) << err;
  EXPECT_NE(err.find("line 4"), std::string::npos) << err;
}

TEST(Config, RejectsBadSchemaAndValues) {
  EXPECT_NE(error_of(R"({"schema": "other/2", "seed": 1})").find("/schema"), std::string::npos);
  EXPECT_NE(error_of(R"({"schema": "steinpp/1", "seed": -3})").find("/seed"), std::string::npos);
  EXPECT_NE(error_of("{not json").find("config"), std::string::npos);
  const std::string nested = R"({"schema": "steinpp/1", "seed": 1, "models": {
      "p": {"family": "poisson", "space": {"type": "unit_box", "dim": 2}, "intensity": 1.0, "colour": 3}}})";
  EXPECT_NE(error_of(nested).find("/models/p/colour"), std::string::npos) << error_of(nested);
  const std::string dup = R"({"schema": "steinpp/1", "seed": 1, "bounds": [
      {"id": "a", "kind": "prpp", "MX": 1, "kr": false,
       "model": {"family": "purely_random", "space": {"type": "unit_box", "dim": 1}, "counts": {"law": "dirac", "k": 1}}},
      {"id": "a", "kind": "prpp", "MX": 1, "kr": false,
       "model": {"family": "purely_random", "space": {"type": "unit_box", "dim": 1}, "counts": {"law": "dirac", "k": 1}}}]})";
  EXPECT_NE(error_of(dup).find("duplicate"), std::string::npos) << error_of(dup);
  const std::string unknown_ref = R"({"schema": "steinpp/1", "seed": 1, "checks": [
      {"id": "g", "kind": "gnz", "model": "nope"}]})";
  EXPECT_NE(error_of(unknown_ref).find("/checks/0/model"), std::string::npos) << error_of(unknown_ref);
}

TEST(Config, EmptyExperimentIsValid) {
  const Experiment ex = load_experiment(R"({"schema": "steinpp/1", "seed": 5})");
  EXPECT_EQ(ex.seed, 5u);
  EXPECT_TRUE(ex.checks.empty());
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"verify_suite.json", "verify_mismatch.json", "verify_empty.json", "bound_suite.json",
                           "sample_ginibre.json"}) {
    const std::string text = read_file(std::string(STEINPP_CONFIG_DIR) + "/" + name);
    ASSERT_FALSE(text.empty()) << name;
    EXPECT_NO_THROW((void)load_experiment(text)) << name;
  }
}

TEST(Config, ClosedFormBoundJobIsDeterministic) {
  const Experiment ex = load_experiment(R"({"schema": "steinpp/1", "seed": 3, "bounds": [
      {"id": "thin", "kind": "dpp_thin_rescale", "beta": 0.1, "lambda": 1, "kr": false,
       "model": {"family": "dpp", "kernel": {"type": "gaussian", "space": {"type": "lattice", "lower": [0, 0],
                 "upper": [1, 1], "cells": [4, 4]}, "intensity": 1.0, "scale": 0.25}}}]})");
  ASSERT_EQ(ex.bounds.size(), 1u);
  const auto out = ex.bounds[0].run(CounterRng(3), {});
  EXPECT_NEAR(out.report.value, 2.0 / 9.0 * 0.1, 1e-12);
  EXPECT_FALSE(out.dominance.has_value());
}
