#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "rm/errors.hpp"
#include "rm/mt_optimize.hpp"
#include "rm/rng.hpp"

using namespace rm;
using namespace rm::mto;

namespace {

std::vector<std::vector<double>> forecast_of(const grid::GridCase& c, bool wind) {
    std::vector<std::vector<double>> out(24);
    for (int h = 0; h < 24; ++h)
        out[static_cast<size_t>(h)] = wind ? c.wind_mean_at_hour(h) : c.load_at_hour(h);
    return out;
}

// 1-bus case with a cheap base unit and an expensive peaker with minimum
// output; used for the commitment-pattern oracle.
grid::GridCase spike_case(double peaker_startup) {
    grid::GridCase c;
    c.buses = {1};
    c.reference_bus = 1;
    c.voll = 10000.0;
    std::array<double, 24> shape{};
    for (int h = 0; h < 24; ++h) shape[static_cast<size_t>(h)] = 0.2;
    shape[9] = shape[10] = 1.0;  // morning spike
    shape[17] = shape[18] = 1.0; // evening spike
    c.generators.push_back({"base", 1, 0.0, 30.0, 5.0, 0.0, 1, 1});
    c.generators.push_back({"peak", 1, 20.0, 100.0, 50.0, peaker_startup, 1, 1});
    c.loads.push_back({"D", 1, 100.0, shape});
    return c;
}

mts::SamplerSpec fast_spec() {
    mts::SamplerSpec s;
    s.scheme = mts::Scheme::WindowSampling;
    s.months = 2;
    s.days_per_month = 4;
    s.window_days = 1;
    s.n_short = 1;
    s.n_rt = 1;
    s.maintenance_days = 1;
    s.repair_hours = 12;
    s.n_scenarios = 3;
    s.evaluate_severity = false;
    return s;
}

} // namespace

TEST_CASE("a single sufficient unit stays committed all day with no shed") {
    grid::GridCase c;
    c.buses = {1};
    c.reference_bus = 1;
    c.voll = 1000.0;
    c.generators.push_back({"G", 1, 0.0, 120.0, 12.0, 50.0, 1, 1});
    c.loads.push_back({"D", 1, 100.0, fixtures::daily_load_shape()});
    InnerPolicy pol;
    const auto uc = unit_commitment(c, grid::all_lines_up(c), forecast_of(c, false),
                                    forecast_of(c, true), pol, false, false);
    REQUIRE(uc.feasible);
    double served = 0.0, demanded = 0.0;
    for (int h = 0; h < 24; ++h) {
        CHECK(uc.commitment[static_cast<size_t>(h)][0] == 1);
        served += uc.dispatch[static_cast<size_t>(h)][0];
        demanded += c.load_at_hour(h)[0];
    }
    CHECK(served == doctest::Approx(demanded).epsilon(1e-6));
}

TEST_CASE("startup cost decides between one long block and two short ones") {
    InnerPolicy pol;
    pol.uc_block_hours = 4; // blocks: spikes sit in blocks 2 and 4

    auto pattern_cost = [&](const grid::GridCase& c, bool bridge) {
        // hand evaluation: peaker on for the spike blocks, optionally bridged
        const auto& base = c.generators[0];
        const auto& peak = c.generators[1];
        double cost = bridge ? peak.startup_cost : 2.0 * peak.startup_cost;
        for (int h = 0; h < 24; ++h) {
            const double load = c.load_at_hour(h)[0];
            const bool spike_block = (h >= 8 && h < 12) || (h >= 16 && h < 20);
            const bool on = spike_block || (bridge && h >= 12 && h < 16);
            if (on) {
                const double peak_out = std::max(peak.pmin, load - base.pmax);
                cost += peak.cost_linear * peak_out +
                        base.cost_linear * std::max(0.0, load - peak_out);
            } else {
                cost += base.cost_linear * load;
            }
        }
        return cost;
    };

    SUBCASE("an enormous startup keeps the unit bridged through the valley") {
        const grid::GridCase c = spike_case(100000.0);
        const auto uc = unit_commitment(c, grid::all_lines_up(c), forecast_of(c, false),
                                        forecast_of(c, true), pol, false, false);
        REQUIRE(uc.feasible);
        CHECK(pattern_cost(c, true) < pattern_cost(c, false));
        CHECK(uc.objective == doctest::Approx(pattern_cost(c, true)).epsilon(1e-6));
        CHECK(uc.commitment[13][1] == 1); // valley hours stay on
    }
    SUBCASE("a cheap startup prefers two separate runs") {
        const grid::GridCase c = spike_case(500.0);
        const auto uc = unit_commitment(c, grid::all_lines_up(c), forecast_of(c, false),
                                        forecast_of(c, true), pol, false, false);
        REQUIRE(uc.feasible);
        CHECK(pattern_cost(c, false) < pattern_cost(c, true));
        CHECK(uc.objective == doctest::Approx(pattern_cost(c, false)).epsilon(1e-6));
        CHECK(uc.commitment[13][1] == 0); // valley hours drop out
    }
}

TEST_CASE("n-1 constraints can only raise the commitment cost") {
    const grid::GridCase c = fixtures::bus5();
    InnerPolicy pol;
    pol.uc_block_hours = 12;
    const auto off = unit_commitment(c, grid::all_lines_up(c), forecast_of(c, false),
                                     forecast_of(c, true), pol, false, true);
    const auto on = unit_commitment(c, grid::all_lines_up(c), forecast_of(c, false),
                                    forecast_of(c, true), pol, true, true);
    REQUIRE(off.feasible);
    REQUIRE(on.feasible);
    CHECK(on.objective >= off.objective - 1e-6);
}

TEST_CASE("escalation walks the relaxation ladder") {
    InnerPolicy pol;
    SUBCASE("ample capacity stays at the secure rung") {
        const grid::GridCase c = fixtures::bus5();
        pol.uc_block_hours = 12;
        const auto esc = escalate(c, grid::all_lines_up(c), forecast_of(c, false),
                                  forecast_of(c, true), pol);
        CHECK(esc.level == 0);
        CHECK(esc.achievable);
    }
    SUBCASE("a radial load survives only without the security margin") {
        const grid::GridCase c = fixtures::bus2(); // one line: any outage is fatal
        const auto esc = escalate(c, grid::all_lines_up(c), forecast_of(c, false),
                                  forecast_of(c, true), pol);
        CHECK(esc.level == 1);
        CHECK(esc.achievable);
    }
    SUBCASE("short capacity escalates to shedding") {
        grid::GridCase c;
        c.buses = {1};
        c.reference_bus = 1;
        c.voll = 1000.0;
        c.generators.push_back({"G", 1, 0.0, 50.0, 10.0, 0.0, 1, 1});
        c.loads.push_back({"D", 1, 80.0, fixtures::flat(1.0)});
        const auto esc = escalate(c, grid::all_lines_up(c), forecast_of(c, false),
                                  forecast_of(c, true), pol);
        CHECK(esc.level == 2);
        REQUIRE(esc.uc.feasible);
        CHECK(esc.uc.objective > 30.0 * 24.0 * 1000.0 * 0.9); // dominated by shed cost
    }
    SUBCASE("the default fine doubles the cost of losing the whole network for a day") {
        const grid::GridCase c = fixtures::bus5();
        CHECK(pol.fine_for(c) == doctest::Approx(2.0 * 900.0 * 24.0 * 1000.0));
    }
}

TEST_CASE("real-time step follows the plan exactly at the forecast") {
    const grid::GridCase c = fixtures::bus5();
    InnerPolicy pol;
    pol.uc_block_hours = 12;
    EscalationPolicyEngine engine(pol);
    mts::DayPlan plan = engine.plan_day(c, grid::all_lines_up(c), forecast_of(c, false),
                                        forecast_of(c, true));
    REQUIRE(plan.achievable);
    const auto rs = real_time_step(c, grid::all_lines_up(c), c.load_at_hour(12),
                                   c.wind_mean_at_hour(12), 12, plan, pol);
    CHECK(rs.redispatch_cost == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(rs.shed_mw == doctest::Approx(0.0));
    CHECK_FALSE(rs.deviated);
}

TEST_CASE("a wind shortfall is repriced at the marginal unit") {
    // single bus, one committed unit at cost 20, wind drops by 1 MW
    grid::GridCase c;
    c.buses = {1};
    c.reference_bus = 1;
    c.voll = 1000.0;
    c.wind_curtail_cost = 0.0;
    c.generators.push_back({"G", 1, 0.0, 100.0, 20.0, 0.0, 1, 1});
    c.wind_units.push_back({"W", 1, 20.0, fixtures::flat(0.5), 0.0});
    c.loads.push_back({"D", 1, 30.0, fixtures::flat(1.0)});
    InnerPolicy pol;
    EscalationPolicyEngine engine(pol);
    mts::DayPlan plan = engine.plan_day(c, grid::all_lines_up(c), forecast_of(c, false),
                                        forecast_of(c, true));
    REQUIRE(plan.achievable);
    const double planned = plan.dispatch[12][0]; // 30 - 10 = 20 MW

    const auto at_forecast = real_time_step(c, grid::all_lines_up(c), {30.0}, {10.0}, 12, plan, pol);
    mts::DayPlan plan2 = plan;
    const auto short_wind = real_time_step(c, grid::all_lines_up(c), {30.0}, {9.0}, 12, plan2, pol);
    CHECK(planned == doctest::Approx(20.0));
    CHECK(short_wind.redispatch_cost == doctest::Approx(20.0)); // 20 per MWh x 1 MW
    // total delta: 1 MWh extra energy at 20 plus the redispatch penalty
    CHECK(short_wind.cost - at_forecast.cost == doctest::Approx(40.0).epsilon(1e-6));
}

TEST_CASE("losing the only line to a load sheds it and enters deviation mode") {
    const grid::GridCase c = fixtures::bus2();
    InnerPolicy pol;
    EscalationPolicyEngine engine(pol);
    mts::DayPlan plan = engine.plan_day(c, grid::all_lines_up(c), forecast_of(c, false),
                                        forecast_of(c, true));
    grid::Topology cut = grid::all_lines_up(c);
    cut.line_status[0] = 0;
    const auto rs = real_time_step(c, cut, c.load_at_hour(6), {}, 6, plan, pol);
    CHECK(rs.shed_mw == doctest::Approx(c.load_at_hour(6)[1]).epsilon(1e-6));
    CHECK(rs.deviated);
    CHECK(plan.deviated);
}

TEST_CASE("schedule evaluation") {
    const grid::GridCase c = fixtures::bus5();
    InnerPolicy pol;
    pol.uc_block_hours = 12;
    const mts::SamplerSpec spec = fast_spec();
    MtConstraints cons;

    SUBCASE("the empty schedule carries no direct cost") {
        const auto eval = evaluate_schedule(c, MaintenanceSchedule::empty(spec.months, c.num_lines()),
                                            pol, spec, cons, 11);
        CHECK(eval.direct_cost == 0.0);
        CHECK(eval.total_cost == doctest::Approx(eval.operation_cost.mean));
    }
    SUBCASE("over-stuffed months violate the action cap") {
        MaintenanceSchedule bad = MaintenanceSchedule::empty(spec.months, c.num_lines());
        for (int l = 0; l < c.num_lines(); ++l) bad.set(0, l, true);
        CHECK_THROWS_AS(evaluate_schedule(c, bad, pol, spec, cons, 11), InfeasibleSchedule);
    }
    SUBCASE("evaluation is deterministic given the seed") {
        MaintenanceSchedule s = MaintenanceSchedule::empty(spec.months, c.num_lines());
        s.set(0, 0, true);
        const auto a = evaluate_schedule(c, s, pol, spec, cons, 11);
        const auto b = evaluate_schedule(c, s, pol, spec, cons, 11);
        CHECK(a.total_cost == b.total_cost);
        const auto d = evaluate_schedule(c, s, pol, spec, cons, 12);
        CHECK(a.total_cost != d.total_cost);
    }
}

TEST_CASE("maintaining a redundant healthy line costs exactly its direct cost") {
    grid::GridCase c = fixtures::bus5();
    // generous ratings keep every limit slack, so the twin is never binding
    for (auto& l : c.lines) l.rating *= 10.0;
    // duplicate of L2 with no life model: never fails
    grid::Line twin = c.lines[1];
    twin.id = "L2b";
    twin.life.reset();
    twin.initial_age_hours = 0.0;
    c.lines.push_back(twin);

    InnerPolicy pol;
    pol.uc_block_hours = 12;
    mts::SamplerSpec spec = fast_spec();
    spec.n_scenarios = 2;
    MtConstraints cons;

    const int twin_idx = c.num_lines() - 1;
    MaintenanceSchedule none = MaintenanceSchedule::empty(spec.months, c.num_lines());
    MaintenanceSchedule one = none;
    one.set(1, twin_idx, true);

    const auto a = evaluate_schedule(c, none, pol, spec, cons, 21);
    const auto b = evaluate_schedule(c, one, pol, spec, cons, 21);
    CHECK(b.total_cost - a.total_cost ==
          doctest::Approx(c.lines[static_cast<size_t>(twin_idx)].maintenance_cost).epsilon(1e-4));
}

TEST_CASE("cross entropy finds the optimum of a separable toy") {
    // 4 lines x 3 months; each action independently changes the cost
    const int months = 3, lines = 4;
    const double value[3][4] = {{-8.0, 2.0, 1.0, 3.0},
                                {-1.0, -6.0, 2.0, 2.0},
                                {4.0, 1.0, -3.0, 5.0}};
    ScheduleObjective objective = [&](const MaintenanceSchedule& s) {
        double cost = 100.0;
        for (int m = 0; m < months; ++m)
            for (int l = 0; l < lines; ++l)
                if (s.at(m, l)) cost += value[m][l];
        return cost;
    };

    // exhaustive enumeration over feasible schedules
    double best = 1e18;
    MaintenanceSchedule best_s = MaintenanceSchedule::empty(months, lines);
    for (std::uint32_t mask = 0; mask < (1u << (months * lines)); ++mask) {
        MaintenanceSchedule s = MaintenanceSchedule::empty(months, lines);
        for (int k = 0; k < months * lines; ++k)
            if ((mask >> k) & 1u) s.actions[static_cast<size_t>(k)] = 1;
        if (!s.validate().empty()) continue;
        const double cost = objective(s);
        if (cost < best) {
            best = cost;
            best_s = s;
        }
    }
    CHECK(best == doctest::Approx(100.0 - 8.0 - 6.0 - 3.0)); // one action per month

    CeParams params;
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const CeResult res = cross_entropy_optimize(months, lines, objective, params, seed);
        if (std::abs(res.best_cost - best) < 1e-9) ++hits;
    }
    CHECK(hits >= 18);
}

TEST_CASE("elite mean does not rise with common random numbers") {
    const int months = 3, lines = 4;
    RngStream vals(55);
    double value[3][4];
    for (auto& row : value)
        for (double& v : row) v = vals.uniform(-5.0, 5.0);
    ScheduleObjective objective = [&](const MaintenanceSchedule& s) {
        double cost = 50.0;
        for (int m = 0; m < months; ++m)
            for (int l = 0; l < lines; ++l)
                if (s.at(m, l)) cost += value[m][l];
        return cost;
    };
    CeParams params;
    int rises = 0, steps = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const CeResult res = cross_entropy_optimize(months, lines, objective, params, seed);
        for (size_t i = 1; i < res.trace.size(); ++i) {
            ++steps;
            if (res.trace[i].elite_mean > res.trace[i - 1].elite_mean + 1e-9) ++rises;
        }
    }
    CHECK(steps > 0);
    CHECK(rises <= steps / 5); // improvement dominates across runs
}

TEST_CASE("degenerate all-zero probabilities converge immediately") {
    ScheduleObjective objective = [](const MaintenanceSchedule& s) {
        return static_cast<double>(s.action_count());
    };
    CeParams params;
    params.init_prob = 0.0;
    const CeResult res = cross_entropy_optimize(3, 4, objective, params, 1);
    CHECK(res.trace.size() == 1);
    CHECK(res.best.action_count() == 0);
    CHECK(res.best_cost == doctest::Approx(0.0));
}

TEST_CASE("population floor is enforced") {
    CeParams params;
    params.population = 5;
    CHECK_THROWS_AS(
        cross_entropy_optimize(2, 2, [](const MaintenanceSchedule&) { return 0.0; }, params, 1),
        ValidationError);
}

TEST_CASE("heuristic baselines produce the documented shapes") {
    const grid::GridCase c = fixtures::bus5(); // ages: L1 oldest, then L6, L5, ...
    SUBCASE("oldest first walks down the age order") {
        const auto s = baseline_oldest_first(c, 3);
        CHECK(s.at(0, 0)); // L1 at 16000 h
        CHECK(s.at(1, 5)); // L6 at 12000 h
        CHECK(s.at(2, 4)); // L5 at 8000 h
    }
    SUBCASE("age threshold only touches old assets") {
        const auto s = baseline_age_threshold(c, 3, 100000.0);
        CHECK(s.action_count() == 0);
        const auto s2 = baseline_age_threshold(c, 3, 10000.0);
        CHECK(s2.at(0, 0));
        CHECK(s2.action_count() >= 2);
    }
    SUBCASE("cyclic sweeps the line list in order") {
        const auto s = baseline_cyclic(c, 3);
        CHECK(s.at(0, 0));
        CHECK(s.at(1, 1));
        CHECK(s.at(2, 2));
    }
    SUBCASE("baselines satisfy the feasibility caps") {
        CHECK(baseline_oldest_first(c, 6).validate().empty());
        CHECK(baseline_cyclic(c, 6).validate().empty());
        CHECK(baseline_age_threshold(c, 6, 5000.0).validate().empty());
    }
}
