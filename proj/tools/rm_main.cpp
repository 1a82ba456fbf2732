#include <CLI11.hpp>

#include "rm/runner.hpp"

// Batch front-end: every subcommand reads JSON inputs, runs one horizon's
// machinery and writes CSV reports. See README for the file schemas.
int main(int argc, char** argv) {
    CLI::App app{"probabilistic reliability management toolkit"};
    app.require_subcommand(1);

    rm::cli::RunConfig cfg;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "master seed (fixed default for reproducibility)");
        sub->add_option("--jobs", cfg.jobs, "worker pool size")->check(CLI::PositiveNumber);
        sub->add_option("--out", cfg.out_path, "output CSV path");
        sub->add_flag("--strict", cfg.strict, "reject unknown keys in input files");
        sub->add_flag("--deterministic", cfg.deterministic, "suppress the timestamp header");
        sub->add_option("--dump-lp", cfg.dump_lp_dir, "dump every solved program to this directory");
    };

    CLI::App* validate = app.add_subcommand("validate", "load a case file and check invariants");
    validate->add_option("--case", cfg.case_path, "case JSON")->required();
    add_common(validate);

    CLI::App* rt = app.add_subcommand("rt-assess", "real-time reliability assessment");
    rt->add_option("--case", cfg.case_path)->required();
    rt->add_option("--contingencies", cfg.contingencies, "nminus1 | nminus2:<k> | file:<path>");
    rt->add_option("--delta-e", cfg.delta_e, "residual-risk accuracy limit");
    rt->add_option("--epsilon", cfg.epsilon, "chance-constraint relaxation");
    rt->add_option("--cr-max", cfg.cr_max, "criticality ceiling (default: peak load x VOLL)");
    rt->add_option("--mode", cfg.mode, "pessimistic | iterative | hybrid");
    rt->add_option("--hybrid-exact", cfg.hybrid_exact_count, "exact criticality count (hybrid)");
    rt->add_option("--hour", cfg.hour, "snapshot hour 0-23 (default: peak)");
    add_common(rt);

    CLI::App* st = app.add_subcommand("st-plan", "short-term operational planning over a tree");
    st->add_option("--case", cfg.case_path)->required();
    st->add_option("--tree", cfg.tree_path, "scenario tree JSON");
    st->add_option("--branching", cfg.branching, "build a tree, e.g. 2,2,2");
    st->add_option("--delta-e-rt", cfg.delta_e_rt);
    st->add_option("--delta-e-op", cfg.delta_e_op);
    st->add_option("--epsilon", cfg.epsilon);
    st->add_option("--cr-max", cfg.cr_max);
    st->add_option("--contingencies", cfg.contingencies);
    st->add_option("--candidates", cfg.candidates, "auto | file:<path>");
    add_common(st);

    CLI::App* mt = app.add_subcommand("mt-schedule", "mid-term maintenance scheduling");
    mt->add_option("--case", cfg.case_path)->required();
    mt->add_option("--horizon-months", cfg.horizon_months);
    mt->add_option("--policy", cfg.policy, "nminus1 | prob:<dE>,<eps>");
    mt->add_option("--scheme", cfg.scheme,
                   "complete | quasistatic | qss:<Ns> | window:<Ws>d,<Nrt>x<Wrt>h");
    mt->add_option("--pop", cfg.population);
    mt->add_option("--rho", cfg.rho);
    mt->add_option("--iters", cfg.iterations);
    mt->add_option("--samples", cfg.samples, "evaluation scenario count");
    mt->add_option("--baseline", cfg.baseline, "oldest-first | age-threshold:<h> | cyclic");
    mt->add_option("--failure-tilt", cfg.failure_tilt,
                   "importance-sampling multiplier on failure rates");
    mt->add_option("--severity-r", cfg.severity_r, "chance-constraint severity bound, MW");
    mt->add_option("--alpha", cfg.alpha);
    mt->add_option("--achieve-eps", cfg.achieve_epsilon);
    mt->add_option("--trace", cfg.trace_path, "per-iteration trace CSV");
    mt->add_option("--dump-scenarios", cfg.dump_scenario_dir);
    add_common(mt);

    CLI::App* lti = app.add_subcommand("lt-invest", "robust long-term capacity investment");
    lti->add_option("--instance", cfg.instance_path)->required();
    add_common(lti);

    CLI::App* ltp = app.add_subcommand("lt-plan", "long-term project plan evaluation");
    ltp->add_option("--case", cfg.case_path)->required();
    ltp->add_option("--projects", cfg.projects_path)->required();
    ltp->add_option("--horizon-years", cfg.horizon_years);
    ltp->add_option("--policy", cfg.policy);
    ltp->add_option("--scheme", cfg.scheme);
    ltp->add_option("--samples", cfg.samples);
    ltp->add_option("--severity-r", cfg.severity_r);
    ltp->add_option("--alpha", cfg.alpha);
    ltp->add_option("--achieve-eps", cfg.achieve_epsilon);
    add_common(ltp);

    CLI11_PARSE(app, argc, argv);

    for (CLI::App* sub : {validate, rt, st, mt, lti, ltp}) {
        if (sub->parsed()) {
            cfg.subcommand = sub->get_name();
            break;
        }
    }
    return rm::cli::run(cfg);
}
