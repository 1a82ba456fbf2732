#pragma once

#include <cstdint>
#include <limits>
#include <string>

namespace rm::cli {

/// One batch invocation: subcommand plus every knob the front-end exposes.
/// Defaults keep runs reproducible (fixed seed) and single-threaded.
struct RunConfig {
    std::string subcommand;

    std::string case_path;
    std::string instance_path;
    std::string tree_path;
    std::string projects_path;
    std::string candidates = "auto"; // or file:<path>
    std::string out_path = "report.csv";
    std::string trace_path;

    std::string contingencies = "nminus1"; // nminus1 | nminus2:<k> | file:<path>
    std::string mode = "pessimistic";      // pessimistic | iterative | hybrid
    std::string policy = "nminus1";        // nminus1 | prob:<dE>,<eps>
    std::string scheme = "window:3d,1x24h";
    std::string branching;                 // e.g. 2,2,2
    std::string baseline;                  // oldest-first | age-threshold:<h> | cyclic
    std::string dump_lp_dir;
    std::string dump_scenario_dir;

    double delta_e = 0.0;
    double epsilon = 0.0;
    double cr_max = -1.0; // < 0: peak load x VOLL
    int hybrid_exact_count = 2;
    double delta_e_rt = 0.0;
    double delta_e_op = 0.0;
    double severity_r = std::numeric_limits<double>::infinity();
    double alpha = 0.05;
    double achieve_epsilon = 0.05;
    int hour = -1; // real-time snapshot hour; -1 = peak-load hour

    double failure_tilt = 1.0; // importance-sampling multiplier on failure rates
    int horizon_months = 8;
    int horizon_years = 20;
    int population = 50;
    double rho = 0.15;
    int iterations = 15;
    int samples = 20;

    std::uint64_t seed = 20240101; // reproducible by default
    int jobs = 1;
    bool strict = false;
    bool deterministic = false; // suppress the timestamp header line
};

/// Dispatches to the horizon modules and writes the reports.
/// Exit codes: 0 success, 2 a reliability constraint failed, 1 error.
int run(const RunConfig& config);

} // namespace rm::cli
