#include <benchmark/benchmark.h>

#include <random>

#include "../tests/fixtures.hpp"
#include "rm/grid.hpp"
#include "rm/rt.hpp"
#include "rm/solver.hpp"
#include "rm/st.hpp"
#include "rm/weibull.hpp"

namespace {

void BM_dc_power_flow(benchmark::State& state) {
    const auto c = fixtures::bus5(false);
    const auto topo = rm::grid::all_lines_up(c);
    const std::vector<double> inj{200.0, -150.0, -250.0, -300.0, 500.0};
    for (auto _ : state) {
        auto sol = rm::grid::dc_power_flow(c, topo, inj);
        benchmark::DoNotOptimize(sol.flows.data());
    }
}
BENCHMARK(BM_dc_power_flow);

void BM_dc_opf(benchmark::State& state) {
    const auto c = fixtures::bus5(false);
    const auto topo = rm::grid::all_lines_up(c);
    const auto load = c.load_at_hour(18);
    const auto wind = c.wind_mean_at_hour(18);
    const std::vector<std::uint8_t> committed(c.generators.size(), 1);
    for (auto _ : state) {
        auto sol = rm::grid::dc_opf(c, topo, load, wind, committed, true);
        benchmark::DoNotOptimize(sol.objective);
    }
}
BENCHMARK(BM_dc_opf);

void BM_solve_lp_dense(benchmark::State& state) {
    using namespace rm::solver;
    std::mt19937 gen(1);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    const int n = static_cast<int>(state.range(0));
    LinearProgram lp;
    for (int j = 0; j < n; ++j) lp.add_var(0.0, 10.0, coef(gen));
    for (int i = 0; i < n; ++i) {
        Row r;
        r.coeffs.resize(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) r.coeffs[static_cast<size_t>(j)] = coef(gen);
        r.rel = Rel::Le;
        r.rhs = 5.0 + std::abs(coef(gen));
        lp.rows.push_back(std::move(r));
    }
    for (auto _ : state) {
        auto res = solve_lp(lp);
        benchmark::DoNotOptimize(res.objective);
    }
}
BENCHMARK(BM_solve_lp_dense)->Arg(10)->Arg(40)->Arg(120);

void BM_rt_preventive_n1(benchmark::State& state) {
    const auto c = fixtures::bus5(false);
    const auto snap = rm::rt::snapshot_at_hour(c, 18);
    const auto model = rm::rt::n_minus_1_universe(c, 1e-4);
    rm::rt::RtParams params;
    params.cr_max = c.total_peak_load() * c.voll;
    std::vector<int> subset;
    for (const auto& e : model.events) subset.push_back(e.id);
    for (auto _ : state) {
        auto out = rm::rt::rt_rmac_preventive(c, snap, model, subset, params);
        benchmark::DoNotOptimize(out.second.objective);
    }
}
BENCHMARK(BM_rt_preventive_n1);

void BM_pessimistic_subset(benchmark::State& state) {
    rm::rt::ContingencyModel m;
    std::mt19937 gen(2);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    const int n = 64;
    std::vector<double> w(n);
    double tot = 0.0;
    for (double& x : w) tot += (x = u(gen));
    for (int i = 0; i < n; ++i) m.events.push_back({i, {}, w[static_cast<size_t>(i)] / tot});
    rm::rt::RtParams p;
    p.cr_max = 1000.0;
    p.delta_e = 50.0;
    for (auto _ : state) {
        auto subset = rm::rt::select_subset_pessimistic(m, p);
        benchmark::DoNotOptimize(subset.size());
    }
}
BENCHMARK(BM_pessimistic_subset);

void BM_weibull_interval(benchmark::State& state) {
    const rm::WeibullLife life{1e-3, 1.0, 5e-4, 1.0};
    double tau = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rm::interval_failure_probability(life, tau, 1.0));
        tau += 1.0;
    }
}
BENCHMARK(BM_weibull_interval);

void BM_build_tree(benchmark::State& state) {
    rm::st::TreeSpec spec;
    spec.branching = {3, 3, 3};
    for (auto _ : state) {
        auto tree = rm::st::build_tree(spec, 7);
        benchmark::DoNotOptimize(tree.nodes.size());
    }
}
BENCHMARK(BM_build_tree);

} // namespace

BENCHMARK_MAIN();
