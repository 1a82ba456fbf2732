#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "rm/case_io.hpp"
#include "rm/errors.hpp"
#include "rm/runner.hpp"

using namespace rm;
using namespace rm::cli;

namespace {

const std::string kFixtures = RM_FIXTURE_DIR;
const std::string kBinary = RM_BINARY_PATH;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = "/tmp/" + name;
    std::ofstream out(path);
    out << content;
    return path;
}

} // namespace

TEST_CASE("bundled cases load and validate") {
    for (const char* name : {"bus2", "bus3", "bus5"}) {
        const auto c = load_case(kFixtures + "/" + std::string(name) + ".json");
        CHECK(c.validate().empty());
    }
    const auto c3 = load_case(kFixtures + "/bus3.json");
    CHECK(c3.num_buses() == 3);
    CHECK(c3.num_lines() == 3);
}

TEST_CASE("loader reports structural violations by name") {
    const std::string bad = write_temp("bad_case.json", R"({
        "buses": [1, 2], "reference_bus": 1, "voll": 100.0,
        "lines": [{"id": "LX", "from": 1, "to": 9, "susceptance": 1.0, "rating": 10.0}],
        "generators": [
            {"id": "G", "bus": 1, "pmax": 5.0, "cost": 1.0},
            {"id": "G", "bus": 2, "pmax": 5.0, "cost": 1.0}],
        "loads": [], "wind": []})");
    try {
        load_case(bad);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        CHECK(what.find("LX") != std::string::npos);       // line names missing bus
        CHECK(what.find("duplicate") != std::string::npos); // duplicate generator id
    }
}

TEST_CASE("strict mode rejects unknown keys, loose mode warns") {
    const std::string odd = write_temp("odd_case.json", R"({
        "buses": [1], "reference_bus": 1, "voll": 100.0, "frequency": 50,
        "generators": [{"id": "G", "bus": 1, "pmax": 5.0, "cost": 1.0}],
        "loads": [], "wind": [], "lines": []})");
    LoadDiagnostics diag;
    CHECK_NOTHROW(load_case(odd, {false}, &diag));
    CHECK(diag.warnings.size() == 1);
    CHECK_THROWS_AS(load_case(odd, {true}), ValidationError);
}

TEST_CASE("malformed json reports a parse error") {
    const std::string broken = write_temp("broken.json", "{ not json");
    CHECK_THROWS_AS(load_case(broken), ParseError);
}

TEST_CASE("contingency selectors") {
    const auto c = load_case(kFixtures + "/bus3.json");
    const auto n1 = load_contingencies("nminus1", c);
    CHECK(n1.events.size() == 4);
    CHECK(n1.validate(c.num_lines()).empty());
    const auto n2 = load_contingencies("nminus2:2", c);
    CHECK(n2.events.size() == 6);
    CHECK(n2.validate(c.num_lines()).empty());
    CHECK_THROWS_AS(load_contingencies("bogus", c), ValidationError);
}

TEST_CASE("rt-assess writes the event table and summary") {
    RunConfig cfg;
    cfg.subcommand = "rt-assess";
    cfg.case_path = kFixtures + "/bus3.json";
    cfg.out_path = "/tmp/rt_report.csv";
    cfg.delta_e = 100.0;
    cfg.deterministic = true;
    CHECK(run(cfg) == 0);
    const std::string csv = slurp(cfg.out_path);
    CHECK(csv.find("event_id,pi,criticality,in_subset") != std::string::npos);
    CHECK(csv.find("summary") != std::string::npos);
    CHECK(csv.find("fnv64=") != std::string::npos); // provenance hash
}

TEST_CASE("missing input files exit with code 1") {
    RunConfig cfg;
    cfg.subcommand = "rt-assess";
    cfg.case_path = "/tmp/does_not_exist.json";
    CHECK(run(cfg) == 1);
}

TEST_CASE("st-plan runs on a bundled tree and on a built one") {
    RunConfig cfg;
    cfg.subcommand = "st-plan";
    cfg.case_path = kFixtures + "/bus3.json";
    cfg.tree_path = kFixtures + "/tree22.json";
    cfg.out_path = "/tmp/st_plan.csv";
    cfg.delta_e_rt = 500.0;
    cfg.deterministic = true;
    CHECK(run(cfg) == 0);
    CHECK(slurp(cfg.out_path).find("candidate,direct_cost,expected_cost") != std::string::npos);

    cfg.tree_path.clear();
    cfg.branching = "2,2";
    cfg.out_path = "/tmp/st_plan2.csv";
    CHECK(run(cfg) == 0);

    // explicit candidate file: constant patterns plus an hourly pattern
    const std::string cands = write_temp("cands.json", R"({"candidates": [
        {"commitment": [1, 1], "direct_cost": 40.0},
        {"commitment": [[1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1], 0],
         "direct_cost": 15.0}]})");
    cfg.candidates = "file:" + cands;
    cfg.out_path = "/tmp/st_plan3.csv";
    CHECK(run(cfg) == 0);
}

TEST_CASE("mt-schedule evaluates baselines and flags violated constraints") {
    RunConfig cfg;
    cfg.subcommand = "mt-schedule";
    cfg.case_path = kFixtures + "/bus5.json";
    cfg.out_path = "/tmp/mt_schedule.csv";
    cfg.horizon_months = 2;
    cfg.samples = 3;
    cfg.scheme = "window:1d,1x24h";
    cfg.baseline = "cyclic";
    cfg.deterministic = true;
    CHECK(run(cfg) == 0);
    const std::string csv = slurp(cfg.out_path);
    CHECK(csv.find("month,line_id,action") != std::string::npos);
    CHECK(csv.find("L1,1") != std::string::npos);

    // an absurd severity bound cannot be certified: constraint exit code
    cfg.severity_r = 1e-9;
    cfg.alpha = 0.01;
    cfg.out_path = "/tmp/mt_schedule_viol.csv";
    CHECK(run(cfg) == 2);
}

TEST_CASE("lt-invest writes the named solution rows") {
    RunConfig cfg;
    cfg.subcommand = "lt-invest";
    cfg.instance_path = kFixtures + "/appendix_lt.json";
    cfg.out_path = "/tmp/lt_solution.csv";
    cfg.deterministic = true;
    CHECK(run(cfg) == 0);
    const std::string csv = slurp(cfg.out_path);
    CHECK(csv.find("W,") != std::string::npos);
    CHECK(csv.find("I_i1,") != std::string::npos);
    CHECK(csv.find("mu,1") != std::string::npos);
    CHECK(csv.find("u,1") != std::string::npos);
}

TEST_CASE("lt-plan composes the project evaluation") {
    RunConfig cfg;
    cfg.subcommand = "lt-plan";
    cfg.case_path = kFixtures + "/bus5.json";
    cfg.projects_path = kFixtures + "/projects5.json";
    cfg.out_path = "/tmp/lt_plan.csv";
    cfg.horizon_years = 2;
    cfg.samples = 4;
    cfg.scheme = "window:1d,1x24h";
    cfg.deterministic = true;
    CHECK(run(cfg) == 0);
    const std::string csv = slurp(cfg.out_path);
    CHECK(csv.find("total_cost,") != std::string::npos);
    CHECK(csv.find("construction_cost,3.5e+06") == std::string::npos); // 5.5e6 total
    CHECK(csv.find("construction_cost,5.5e+06") != std::string::npos);
}

TEST_CASE("validate subcommand accepts the bundled fixtures") {
    RunConfig cfg;
    cfg.subcommand = "validate";
    cfg.case_path = kFixtures + "/bus5.json";
    CHECK(run(cfg) == 0);
}

TEST_CASE("deterministic runs are byte-identical through the binary") {
    const std::string out1 = "/tmp/det_run1.csv", out2 = "/tmp/det_run2.csv";
    const std::string cmd1 = kBinary + " rt-assess --case " + kFixtures +
                             "/bus3.json --delta-e 50 --deterministic --seed 99 --out " + out1;
    const std::string cmd2 = kBinary + " rt-assess --case " + kFixtures +
                             "/bus3.json --delta-e 50 --deterministic --seed 99 --out " + out2;
    REQUIRE(std::system(cmd1.c_str()) == 0);
    REQUIRE(std::system(cmd2.c_str()) == 0);
    CHECK(slurp(out1) == slurp(out2));
    CHECK(!slurp(out1).empty());
}
