#include "rm/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "rm/case_io.hpp"
#include "rm/errors.hpp"
#include "rm/exec.hpp"
#include "rm/grid.hpp"
#include "rm/lt.hpp"
#include "rm/mt_optimize.hpp"
#include "rm/mt_scenario.hpp"
#include "rm/rt.hpp"
#include "rm/solver.hpp"
#include "rm/st.hpp"

namespace rm::cli {

namespace {

int log_level() {
    const char* env = std::getenv("RM_LOG");
    if (!env) return 1;
    const std::string v = env;
    if (v == "quiet" || v == "0") return 0;
    if (v == "debug" || v == "2") return 2;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[rm] " << msg << "\n";
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const RunConfig& cfg, const std::string& input_path)
        : os_(path) {
        if (!os_) throw ParseError("cannot write " + path);
        if (!input_path.empty()) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%016llx",
                          static_cast<unsigned long long>(file_hash(input_path)));
            os_ << "# input " << input_path << " fnv64=" << buf << "\n";
        }
        if (!cfg.deterministic) {
            const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
            os_ << "# generated " << now << "\n";
        }
        os_ << "# seed " << cfg.seed << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << "\n";
    }

  private:
    std::ofstream os_;
};

int peak_hour(const grid::GridCase& c) {
    int best = 0;
    double best_load = -1.0;
    for (int h = 0; h < 24; ++h) {
        double tot = 0.0;
        for (double v : c.load_at_hour(h)) tot += v;
        if (tot > best_load) {
            best_load = tot;
            best = h;
        }
    }
    return best;
}

mto::InnerPolicy parse_policy(const std::string& s) {
    mto::InnerPolicy p;
    if (s == "nminus1") {
        p.mode = mto::PolicyMode::NMinusOne;
    } else if (s.rfind("prob:", 0) == 0) {
        p.mode = mto::PolicyMode::Probabilistic;
        const std::string rest = s.substr(5);
        const auto comma = rest.find(',');
        p.delta_e_rt = std::stod(rest.substr(0, comma));
        if (comma != std::string::npos) p.epsilon_rt = std::stod(rest.substr(comma + 1));
    } else {
        throw ValidationError({"unknown policy '" + s + "'"});
    }
    return p;
}

// "complete" | "quasistatic" | "qss:<Ns>" | "window:<Ws>d,<Nrt>x<Wrt>h"
mts::SamplerSpec parse_scheme(const std::string& s) {
    mts::SamplerSpec spec;
    if (s == "complete") {
        spec.scheme = mts::Scheme::Complete;
    } else if (s == "quasistatic") {
        spec.scheme = mts::Scheme::QuasiStatic;
    } else if (s.rfind("qss:", 0) == 0) {
        spec.scheme = mts::Scheme::QuasiStaticSampling;
        spec.n_short = std::stoi(s.substr(4));
    } else if (s.rfind("window:", 0) == 0) {
        spec.scheme = mts::Scheme::WindowSampling;
        const std::string rest = s.substr(7); // <Ws>d,<Nrt>x<Wrt>h
        const auto d = rest.find('d');
        spec.window_days = std::stoi(rest.substr(0, d));
        const auto comma = rest.find(',');
        if (comma != std::string::npos) {
            const std::string rt = rest.substr(comma + 1);
            const auto x = rt.find('x');
            spec.n_rt = std::stoi(rt.substr(0, x));
            spec.window_rt_hours = std::stoi(rt.substr(x + 1));
        }
    } else {
        throw ValidationError({"unknown scheme '" + s + "'"});
    }
    return spec;
}

std::vector<int> parse_branching(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

void dump_scenarios(const std::string& dir, const std::vector<mts::Scenario>& scenarios) {
    using nlohmann::json;
    for (size_t i = 0; i < scenarios.size(); ++i) {
        std::ofstream os(dir + "/scenario_" + std::to_string(i) + ".jsonl");
        if (!os) throw ParseError("cannot write scenario dump in " + dir);
        const mts::Scenario& z = scenarios[i];
        for (size_t t = 0; t < z.states.size(); ++t) {
            json line;
            line["t"] = t;
            line["month"] = z.states[t].month;
            line["ages"] = z.states[t].effective_age_hours;
            line["topology"] = z.states[t].topology.line_status;
            line["cost"] = z.state_cost[t];
            line["severity"] = z.state_severity[t];
            line["achievable"] = static_cast<bool>(z.state_achievable[t]);
            line["log_weight"] = z.log_weight;
            os << line.dump() << "\n";
        }
    }
}

int run_validate(const RunConfig& cfg) {
    LoadDiagnostics diag;
    const grid::GridCase c = load_case(cfg.case_path, {cfg.strict}, &diag);
    for (const auto& w : diag.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "case ok: " << c.num_buses() << " buses, " << c.num_lines() << " lines, "
              << c.generators.size() << " generators, " << c.loads.size() << " loads, "
              << c.wind_units.size() << " wind units\n";
    return 0;
}

int run_rt_assess(const RunConfig& cfg) {
    const grid::GridCase c = load_case(cfg.case_path, {cfg.strict});
    const rt::ContingencyModel model = load_contingencies(cfg.contingencies, c);

    rt::RtParams params;
    params.delta_e = cfg.delta_e;
    params.epsilon = cfg.epsilon;
    params.cr_max = cfg.cr_max > 0.0 ? cfg.cr_max : c.total_peak_load() * c.voll;
    params.hybrid_exact_count = cfg.hybrid_exact_count;

    const int hour = cfg.hour >= 0 ? cfg.hour : peak_hour(c);
    const rt::Snapshot snap = rt::snapshot_at_hour(c, hour);

    std::vector<int> subset;
    rt::RtReport report;
    if (cfg.mode == "pessimistic") {
        subset = rt::select_subset_pessimistic(model, params);
        auto [decision, rep] = rt::rt_rmac_preventive(c, snap, model, subset, params);
        report = rep;
    } else if (cfg.mode == "iterative") {
        std::tie(subset, report) = rt::select_subset_iterative(c, snap, model, params);
    } else if (cfg.mode == "hybrid") {
        std::tie(subset, report) = rt::select_subset_hybrid(c, snap, model, params);
    } else {
        throw ValidationError({"unknown mode '" + cfg.mode + "'"});
    }

    CsvWriter csv(cfg.out_path, cfg, cfg.case_path);
    csv.row({"event_id", "pi", "criticality", "in_subset"});
    for (const auto& e : model.events) {
        const bool in = std::find(subset.begin(), subset.end(), e.id) != subset.end();
        const auto it = report.per_event_criticality.find(e.id);
        csv.row({std::to_string(e.id), fmt(e.probability),
                 it != report.per_event_criticality.end() ? fmt(it->second) : "",
                 in ? "1" : "0"});
    }
    csv.row({"summary", fmt(report.objective), fmt(report.residual_risk),
             std::to_string(report.iterations)});
    log_info("rt-assess: W=" + fmt(report.objective) +
             " residual_risk=" + fmt(report.residual_risk));
    return 0;
}

int run_st_plan(const RunConfig& cfg) {
    const grid::GridCase c = load_case(cfg.case_path, {cfg.strict});

    st::ScenarioTree tree;
    if (!cfg.tree_path.empty()) {
        tree = load_tree(cfg.tree_path);
    } else if (!cfg.branching.empty()) {
        st::TreeSpec spec;
        spec.branching = parse_branching(cfg.branching);
        tree = st::build_tree(spec, cfg.seed);
    } else {
        throw ValidationError({"st-plan needs --tree or --branching"});
    }

    st::StParams params;
    params.delta_e_rt = cfg.delta_e_rt;
    params.epsilon_rt = cfg.epsilon;
    params.delta_e_op = cfg.delta_e_op;

    rt::RtParams rt_params;
    rt_params.cr_max = cfg.cr_max > 0.0 ? cfg.cr_max : c.total_peak_load() * c.voll;
    rt_params.epsilon = cfg.epsilon;

    const rt::ContingencyModel base_model = load_contingencies(cfg.contingencies, c);

    std::vector<st::PlanningDecision> candidates;
    if (cfg.candidates == "auto") {
        candidates = st::auto_candidates(c);
    } else if (cfg.candidates.rfind("file:", 0) == 0) {
        candidates = load_candidates(cfg.candidates.substr(5), c);
    } else {
        candidates = load_candidates(cfg.candidates, c);
    }

    const st::OpChoice choice =
        st::op_rmac_optimize(c, tree, candidates, params, rt_params, base_model);

    CsvWriter csv(cfg.out_path, cfg, cfg.case_path);
    csv.row({"candidate", "direct_cost", "expected_cost", "total_delta", "selected"});
    csv.row({std::to_string(choice.candidate_index), fmt(choice.decision.direct_cost),
             fmt(choice.evaluation.expected_cost), fmt(choice.evaluation.total_delta), "1"});
    csv.row({"discarded_leaves", std::to_string(choice.evaluation.discarded_leaves.size()),
             fmt(choice.evaluation.discarded_risk), "", ""});
    log_info("st-plan: candidate " + std::to_string(choice.candidate_index) + " cost " +
             fmt(choice.evaluation.expected_cost));
    return choice.constraint_violated ? 2 : 0;
}

int run_mt_schedule(const RunConfig& cfg) {
    const grid::GridCase c = load_case(cfg.case_path, {cfg.strict});
    const mto::InnerPolicy policy = parse_policy(cfg.policy);
    mts::SamplerSpec spec = parse_scheme(cfg.scheme);
    spec.months = cfg.horizon_months;
    spec.n_scenarios = cfg.samples;
    spec.seed = cfg.seed;
    spec.importance_failure_tilt = cfg.failure_tilt;
    spec.evaluate_severity = std::isfinite(cfg.severity_r);

    mto::MtConstraints constraints;
    constraints.severity_r = cfg.severity_r;
    constraints.alpha = cfg.alpha;
    constraints.achieve_epsilon = cfg.achieve_epsilon;

    std::unique_ptr<exec::ThreadPool> pool;
    if (cfg.jobs > 1) pool = std::make_unique<exec::ThreadPool>(cfg.jobs);

    MaintenanceSchedule schedule;
    std::vector<mto::CeTraceRow> trace;
    if (!cfg.baseline.empty()) {
        if (cfg.baseline == "oldest-first") {
            schedule = mto::baseline_oldest_first(c, spec.months);
        } else if (cfg.baseline.rfind("age-threshold:", 0) == 0) {
            schedule = mto::baseline_age_threshold(c, spec.months,
                                                   std::stod(cfg.baseline.substr(14)));
        } else if (cfg.baseline == "cyclic") {
            schedule = mto::baseline_cyclic(c, spec.months);
        } else {
            throw ValidationError({"unknown baseline '" + cfg.baseline + "'"});
        }
    } else {
        mto::CeParams ce;
        ce.population = cfg.population;
        ce.rho = cfg.rho;
        ce.max_iters = cfg.iterations;
        const mto::CeResult result =
            mto::cross_entropy_optimize(c, policy, spec, constraints, ce, cfg.seed, pool.get());
        schedule = result.best;
        trace = result.trace;
    }

    const mto::ScheduleEvaluation eval =
        mto::evaluate_schedule(c, schedule, policy, spec, constraints, cfg.seed, pool.get());

    CsvWriter csv(cfg.out_path, cfg, cfg.case_path);
    csv.row({"month", "line_id", "action"});
    for (int m = 0; m < schedule.months; ++m)
        for (int l = 0; l < schedule.num_lines; ++l)
            if (schedule.at(m, l))
                csv.row({std::to_string(m), c.lines[static_cast<size_t>(l)].id, "1"});
    csv.row({"summary", fmt(eval.total_cost), fmt(eval.operation_cost.std_error),
             (eval.chance_ok && eval.achievability_ok) ? "ok" : "violated"});
    csv.row({"estimate", "std_error", "n", "scheme"});
    csv.row({fmt(eval.operation_cost.mean), fmt(eval.operation_cost.std_error),
             std::to_string(eval.operation_cost.n), "\"" + cfg.scheme + "\""});

    if (!cfg.trace_path.empty()) {
        CsvWriter tcsv(cfg.trace_path, cfg, cfg.case_path);
        tcsv.row({"iteration", "elite_mean", "elite_std", "best_cost"});
        for (const auto& row : trace)
            tcsv.row({std::to_string(row.iteration), fmt(row.elite_mean), fmt(row.elite_std),
                      fmt(row.best_cost)});
    }
    if (!cfg.dump_scenario_dir.empty()) {
        std::vector<mts::Scenario> dumped;
        for (int i = 0; i < std::min(4, spec.n_scenarios); ++i) {
            mto::EscalationPolicyEngine engine(policy);
            dumped.push_back(mts::sample_scenario(c, schedule, engine, spec,
                                                  static_cast<std::uint64_t>(i)));
        }
        dump_scenarios(cfg.dump_scenario_dir, dumped);
    }
    log_info("mt-schedule: total cost " + fmt(eval.total_cost));
    return (eval.chance_ok && eval.achievability_ok) ? 0 : 2;
}

int run_lt_invest(const RunConfig& cfg) {
    const lt::RobustLtInstance instance = load_lt_instance(cfg.instance_path, {cfg.strict});
    const lt::RobustLtSolution sol = lt::solve_robust_lt(instance);
    if (sol.status != solver::Status::Optimal)
        throw ValidationError({"robust investment problem not solvable"});

    CsvWriter csv(cfg.out_path, cfg, cfg.instance_path);
    csv.row({"name", "value"});
    csv.row({"W", fmt(sol.worst_case_surplus)});
    csv.row({"objective", fmt(sol.objective)});
    for (size_t i = 0; i < sol.investment.size(); ++i)
        csv.row({"I_" + instance.interconnections[i].id, fmt(sol.investment[i])});
    for (size_t g = 0; g < sol.dispatch.generation.size(); ++g)
        csv.row({"P_" + instance.generators[g].id, fmt(sol.dispatch.generation[g])});
    for (size_t l = 0; l < sol.dispatch.load.size(); ++l)
        csv.row({"L_" + instance.loads[l].id, fmt(sol.dispatch.load[l])});
    for (size_t i = 0; i < sol.dispatch.exports.size(); ++i)
        csv.row({"E_" + instance.interconnections[i].id, fmt(sol.dispatch.exports[i])});
    csv.row({"mu", fmt(sol.mu)});
    csv.row({"u", fmt(sol.u)});
    log_info("lt-invest: W=" + fmt(sol.worst_case_surplus) +
             " objective=" + fmt(sol.objective));
    return 0;
}

int run_lt_plan(const RunConfig& cfg) {
    const grid::GridCase c = load_case(cfg.case_path, {cfg.strict});
    const lt::ProjectPlan plan = load_projects(cfg.projects_path);
    const mto::InnerPolicy policy = parse_policy(cfg.policy);

    mts::SamplerSpec spec = parse_scheme(cfg.scheme);
    spec.months = 2; // per-era probe horizon; cost is annualized
    spec.n_scenarios = std::max(2, cfg.samples / 4);
    spec.evaluate_severity = std::isfinite(cfg.severity_r);

    mto::MtConstraints constraints;
    constraints.severity_r = cfg.severity_r;
    constraints.alpha = cfg.alpha;
    constraints.achieve_epsilon = cfg.achieve_epsilon;

    lt::MtEngineHandle engine = [&](const grid::GridCase& era_case, std::uint64_t seed) {
        const MaintenanceSchedule none =
            MaintenanceSchedule::empty(spec.months, era_case.num_lines());
        const mto::ScheduleEvaluation e =
            mto::evaluate_schedule(era_case, none, policy, spec, constraints, seed);
        lt::MtEngineOutcome out;
        out.annual_operation_cost = e.operation_cost.mean * 12.0 / spec.months;
        out.chance_ok = e.chance_ok;
        out.achievability_ok = e.achievability_ok;
        return out;
    };

    const lt::PlanEvaluation eval =
        lt::evaluate_project_plan(c, plan, cfg.horizon_years * 12, engine, cfg.seed);

    CsvWriter csv(cfg.out_path, cfg, cfg.projects_path);
    csv.row({"name", "value"});
    csv.row({"total_cost", fmt(eval.total_cost)});
    csv.row({"construction_cost", fmt(eval.construction_cost)});
    csv.row({"opex_cost", fmt(eval.opex_cost)});
    csv.row({"operation_cost", fmt(eval.operation_cost)});
    csv.row({"chance_ok", eval.chance_ok ? "1" : "0"});
    csv.row({"achievability_ok", eval.achievability_ok ? "1" : "0"});
    log_info("lt-plan: total cost " + fmt(eval.total_cost));
    return (eval.chance_ok && eval.achievability_ok) ? 0 : 2;
}

} // namespace

int run(const RunConfig& cfg) {
    try {
        if (!cfg.dump_lp_dir.empty()) solver::set_dump_directory(cfg.dump_lp_dir);
        if (cfg.subcommand == "validate") return run_validate(cfg);
        if (cfg.subcommand == "rt-assess") return run_rt_assess(cfg);
        if (cfg.subcommand == "st-plan") return run_st_plan(cfg);
        if (cfg.subcommand == "mt-schedule") return run_mt_schedule(cfg);
        if (cfg.subcommand == "lt-invest") return run_lt_invest(cfg);
        if (cfg.subcommand == "lt-plan") return run_lt_plan(cfg);
        std::cerr << "error: unknown subcommand '" << cfg.subcommand << "'\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error [" << cfg.subcommand << "]: " << e.what() << "\n";
        return 1;
    }
}

} // namespace rm::cli
