#include <cmath>

#include "doctest.h"
#include "sd2/cli.hpp"

using namespace sd2;
using nlohmann::json;

namespace {

json identity_example() {
  return {{"task", "example-verify"}, {"params", {{"a", {1, 0}}, {"delta", {{1, 0}, {0, 1}}}, {"samples", 30}}}};
}

std::string without_timestamp(json j) {
  j.erase("timestamp");
  return j.dump();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("example-verify report and resolved config") {
    const RunOutcome r = run_config(identity_example());
    REQUIRE(r.exit_code == kExitOk);
    CHECK(r.report["status"] == "ok");
    CHECK(std::abs(r.report["result"]["gap"].get<double>()) <= 1e-9);
    const json& cfg = r.report["config"];
    CHECK(cfg["N"] == 2);
    CHECK(cfg["seed"] == 0);
    CHECK(cfg["params"]["tolerance"] == 1e-9);
    CHECK(cfg["params"]["resolution"] == 8);
    CHECK(r.report.contains("timestamp"));
  }

  TEST_CASE("unknown keys are rejected and named") {
    json c = identity_example();
    c["pressure"] = 1;
    RunOutcome r = run_config(c);
    CHECK(r.exit_code == kExitValidation);
    CHECK(r.error.find("pressure") != std::string::npos);

    c = identity_example();
    c["params"]["pressure"] = 1;
    r = run_config(c);
    CHECK(r.exit_code == kExitValidation);
    CHECK(r.error.find("params: unknown key 'pressure'") != std::string::npos);

    c = {{"task", "check-hypotheses"}, {"N", 1}, {"densities", {{"psi1", {{"catalog", "psi1_norm"}, {"pressure", 2}}}}}};
    r = run_config(c);
    CHECK(r.exit_code == kExitValidation);
    CHECK(r.error.find("pressure") != std::string::npos);
  }

  TEST_CASE("validation failures") {
    CHECK(run_config(json::array()).exit_code == kExitValidation);
    CHECK(run_config({{"params", json::object()}}).exit_code == kExitValidation);
    const RunOutcome r = run_config({{"task", "solve-everything"}});
    CHECK(r.exit_code == kExitValidation);
    CHECK(r.error.find("solve-everything") != std::string::npos);
    json c = identity_example();
    c["params"]["samples"] = "many";
    CHECK(run_config(c).exit_code == kExitValidation);
    c = identity_example();
    c["params"]["a"] = {1, 1};
    CHECK(run_config(c).exit_code == kExitValidation);
    c = {{"task", "relax-assemble"}, {"sd2", json::object()}};
    CHECK(run_config(c).exit_code == kExitValidation);  // no domain
  }

  TEST_CASE("estimator failures carry the problem") {
    const json c = {
        {"task", "cell-sweep"},
        {"densities", {{"W", {{"catalog", "W_zero"}}}, {"psi1", {{"expression", "0"}}}, {"psi2", {{"catalog", "psi2_proj"}, {"a", {1, 0}}}}}},
        {"params",
         {{"families", {"affine"}},
          {"problem",
           {{"kind", "W2"},
            {"x", {0, 0}},
            {"A", {{0, 0}, {0, 0}}},
            {"L", json::parse("[[[0,0],[0,0]],[[0,0],[0,0]]]")},
            {"M", json::parse("[[[1,0],[0,0]],[[0,0],[1,0]]]")}}}}}};
    const RunOutcome r = run_config(c);
    CHECK(r.exit_code == kExitEstimator);
    CHECK(r.report["error_problem"]["kind"] == "W2");
  }

  TEST_CASE("strict hypothesis failures") {
    const json c = {{"task", "check-hypotheses"},
                    {"N", 1},
                    {"densities", {{"psi1", {{"catalog", "psi1_square"}}}}},
                    {"params", {{"only", {"psi1"}}, {"samples", 300}}}};
    RunOptions strict;
    strict.strict = true;
    CHECK(run_config(c, strict).exit_code == kExitHypotheses);
    CHECK(run_config(c).exit_code == kExitOk);
  }

  TEST_CASE("seed flag overrides the config and threads do not matter") {
    json c = identity_example();
    c["seed"] = 3;
    RunOptions o1, o8;
    o1.seed = 11;
    o8.seed = 11;
    o8.threads = 8;
    const RunOutcome a = run_config(c, o1), b = run_config(c, o8);
    REQUIRE(a.exit_code == kExitOk);
    CHECK(a.report["config"]["seed"] == 11);
    CHECK(without_timestamp(a.report) == without_timestamp(b.report));
    const RunOutcome d = run_config(c);
    CHECK(d.report["config"]["seed"] == 3);
  }

  TEST_CASE("relax-assemble writes the per-cell csv on request") {
    const json c = {{"task", "relax-assemble"},
                    {"domain", {{"lower", {0}}, {"upper", {1}}, {"resolution", {2}}}},
                    {"sd2", {{"g", {{"expression", {"x1"}}}}, {"G", {{"expression", {"0"}}}}}},
                    {"densities", {{"W", {{"catalog", "W_norm"}}}}},
                    {"params", {{"budget", 50}, {"resolution", 4}, {"per_cell_csv", true}}}};
    const RunOutcome r = run_config(c);
    REQUIRE(r.exit_code == kExitOk);
    CHECK(r.report["result"]["total"]["upper"].get<double>() == doctest::Approx(1.0));
    CHECK(r.files.count("assembly_cells.csv") == 1);
    CHECK(r.report["config"]["densities"]["psi1"]["catalog"] == "psi1_norm");
  }
}
