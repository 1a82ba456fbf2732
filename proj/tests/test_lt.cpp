#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "rm/errors.hpp"
#include "rm/lt.hpp"
#include "rm/rng.hpp"

using namespace rm;
using namespace rm::lt;

namespace {

RobustLtInstance single_pair() {
    RobustLtInstance in;
    in.generators.push_back({"g", 1, 10.0, 10.0, 0.0, 4.0});
    in.loads.push_back({"l", 1, 30.0, 30.0, 0.0, 3.0});
    return in;
}

std::vector<double> caps(const RobustLtInstance& in, double v) {
    return std::vector<double>(in.interconnections.size(), v);
}

} // namespace

TEST_CASE("market clearing serves profitable demand in full") {
    const RobustLtInstance in = single_pair();
    const auto res = market_clearing(in, {10.0}, {30.0}, caps(in, 0.0));
    REQUIRE(res.status == solver::Status::Optimal);
    CHECK(res.dispatch.generation[0] == doctest::Approx(3.0));
    CHECK(res.dispatch.load[0] == doctest::Approx(3.0));
    CHECK(res.surplus == doctest::Approx(60.0));
}

TEST_CASE("unprofitable prices clear nothing") {
    RobustLtInstance in = single_pair();
    in.generators[0].cost_min = in.generators[0].cost_max = 50.0;
    const auto res = market_clearing(in, {50.0}, {30.0}, caps(in, 0.0));
    CHECK(res.surplus == doctest::Approx(0.0));
    CHECK(res.dispatch.generation[0] == doctest::Approx(0.0));
}

TEST_CASE("prices outside the declared intervals are rejected") {
    const RobustLtInstance in = single_pair();
    CHECK_THROWS_AS(market_clearing(in, {5.0}, {30.0}, caps(in, 0.0)), ValidationError);
}

TEST_CASE("closed interconnection splits the clearing into independent areas") {
    const RobustLtInstance full = fixtures::lt_appendix();
    std::vector<double> gp, lp;
    for (const auto& g : full.generators) gp.push_back(0.5 * (g.cost_min + g.cost_max));
    for (const auto& l : full.loads) lp.push_back(0.5 * (l.worth_min + l.worth_max));
    const auto joint = market_clearing(full, gp, lp, caps(full, 0.0));

    double split_total = 0.0;
    for (int area : {1, 2}) {
        RobustLtInstance part;
        std::vector<double> pgp, plp;
        for (size_t g = 0; g < full.generators.size(); ++g)
            if (full.generators[g].area == area) {
                part.generators.push_back(full.generators[g]);
                pgp.push_back(gp[g]);
            }
        for (size_t l = 0; l < full.loads.size(); ++l)
            if (full.loads[l].area == area) {
                part.loads.push_back(full.loads[l]);
                plp.push_back(lp[l]);
            }
        for (auto& g : part.generators) g.area = 1;
        for (auto& l : part.loads) l.area = 1;
        split_total += market_clearing(part, pgp, plp, {}).surplus;
    }
    CHECK(joint.surplus == doctest::Approx(split_total).epsilon(1e-9));
}

TEST_CASE("degenerate intervals make the robust clearing exact") {
    RobustLtInstance in = single_pair();
    const auto robust = robust_market_clearing(in, caps(in, 0.0));
    const auto exact = market_clearing(in, {10.0}, {30.0}, caps(in, 0.0));
    CHECK(robust.surplus == doctest::Approx(exact.surplus));
}

TEST_CASE("widening a bid interval downward weakly lowers the worst case") {
    RobustLtInstance in = fixtures::lt_appendix();
    const double before = robust_market_clearing(in, caps(in, 0.0)).surplus;
    in.loads[2].worth_min -= 100.0; // l3 floor drops
    const double after = robust_market_clearing(in, caps(in, 0.0)).surplus;
    CHECK(after <= before + 1e-9);
}

TEST_CASE("robust surplus never beats any point-price clearing") {
    const RobustLtInstance in = fixtures::lt_appendix();
    const double worst = robust_market_clearing(in, caps(in, 1.0)).surplus;
    RngStream rng(17);
    for (int k = 0; k < 20; ++k) {
        std::vector<double> gp, lp;
        for (const auto& g : in.generators)
            gp.push_back(rng.uniform(g.cost_min, g.cost_max));
        for (const auto& l : in.loads)
            lp.push_back(rng.uniform(l.worth_min, l.worth_max));
        const auto point = market_clearing(in, gp, lp, caps(in, 1.0));
        CHECK(worst <= point.surplus + 1e-7);
    }
}

TEST_CASE("kkt big-M program has the documented structure") {
    const RobustLtInstance in = fixtures::lt_appendix();
    const auto mip = build_kkt_bigm(in);
    // P(6) + L(8) + E(1) + I(1) + W + mu + u
    CHECK(mip.lp.num_vars() == 19);
    CHECK(mip.binaries.size() == 1);

    // the big-M value appears verbatim in the linearized rows
    bool m_in_rhs = false, m_on_u = false;
    for (const auto& row : mip.lp.rows) {
        if (row.rhs == 10000.0) m_in_rhs = true;
        for (double v : row.coeffs)
            if (v == -10000.0 || v == 10000.0) m_on_u = true;
    }
    CHECK(m_in_rhs);
    CHECK(m_on_u);
}

TEST_CASE("stationarity forces the complementarity binary on") {
    const RobustLtInstance in = fixtures::lt_appendix();
    const auto sol = solve_robust_lt(in);
    REQUIRE(sol.status == solver::Status::Optimal);
    CHECK(sol.u == doctest::Approx(1.0));
    CHECK(sol.mu == doctest::Approx(1.0));
}

TEST_CASE("two-area investment instance solves to its verified optimum") {
    // Reference values cross-checked with an independent LP/MILP solver
    // during development: worst-case surplus 1730 at 2 p.u. of new capacity,
    // objective 1610 + 2 * (110 - 30) = 1670.
    const RobustLtInstance in = fixtures::lt_appendix();
    const auto sol = solve_robust_lt(in);
    REQUIRE(sol.status == solver::Status::Optimal);
    CHECK(sol.objective == doctest::Approx(1670.0).epsilon(1e-6));
    CHECK(sol.worst_case_surplus == doctest::Approx(1730.0).epsilon(1e-6));
    CHECK(sol.investment[0] == doctest::Approx(2.0).epsilon(1e-6));

    // any hand-built feasible point is dominated
    // (serve l1, l3 locally and nothing else: W = 1510, I = 0)
    CHECK(sol.objective >= 1510.0);

    // certificate residuals
    CHECK(sol.kkt_stationarity_residual <= 1e-6);
    CHECK(sol.kkt_complementarity_residual <= 1e-6);
    CHECK(sol.primal_violation <= 1e-6);
}

TEST_CASE("investment stops exactly at the marginal value of capacity") {
    // the bisection oracle: each exported unit is worth 110 - 70 = 40 over
    // the best local use, so investment stops once c_I exceeds 40
    RobustLtInstance in = fixtures::lt_appendix();
    double lo = 0.0, hi = 200.0;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        in.interconnections[0].invest_cost = mid;
        const auto sol = solve_robust_lt(in);
        if (sol.investment[0] > 1e-6) lo = mid;
        else hi = mid;
    }
    CHECK(0.5 * (lo + hi) == doctest::Approx(40.0).epsilon(1e-6));

    in.interconnections[0].invest_cost = 45.0;
    CHECK(solve_robust_lt(in).investment[0] == doctest::Approx(0.0));
    in.interconnections[0].invest_cost = 35.0;
    CHECK(solve_robust_lt(in).investment[0] > 1.0);
}

TEST_CASE("zero investment headroom reduces to the robust clearing") {
    RobustLtInstance in = fixtures::lt_appendix();
    in.interconnections[0].invest_max = 0.0;
    in.interconnections[0].existing_capacity = 1.0;
    const auto sol = solve_robust_lt(in);
    const auto clearing = robust_market_clearing(in, caps(in, 1.0));
    CHECK(sol.worst_case_surplus == doctest::Approx(clearing.surplus).epsilon(1e-9));
    CHECK(sol.investment[0] == doctest::Approx(0.0));
}

TEST_CASE("pre-investment surplus is nondecreasing in the investment ceiling") {
    RobustLtInstance in = fixtures::lt_appendix();
    in.interconnections[0].invest_cost = 0.0; // isolate the capacity effect
    double prev = -1e18;
    for (double cap : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        in.interconnections[0].invest_max = cap;
        const auto sol = solve_robust_lt(in);
        CHECK(sol.worst_case_surplus >= prev - 1e-9);
        prev = sol.worst_case_surplus;
    }
}

TEST_CASE("robust mid-term epigraph form") {
    SUBCASE("free problem sits at zero") {
        RobustMidTermLp form;
        form.cost_coeffs = {1.0};
        form.severity_rows.push_back({{1.0}, 0.0});
        form.severity_r = 5.0;
        form.lower = {0.0};
        form.upper = {solver::kInf};
        const auto res = robust_mt_epigraph(form);
        REQUIRE(res.status == solver::Status::Optimal);
        CHECK(res.objective == doctest::Approx(0.0));
        CHECK(res.x[0] == doctest::Approx(0.0));
    }
    SUBCASE("unattainable severity bound is infeasible") {
        RobustMidTermLp form;
        form.cost_coeffs = {1.0};
        form.severity_rows.push_back({{1.0}, 0.0});
        form.severity_r = 2.0;
        form.lower = {3.0}; // u >= 3 but severity demands u <= 2
        form.upper = {10.0};
        CHECK(robust_mt_epigraph(form).status == solver::Status::Infeasible);
    }
    SUBCASE("optimum matches a grid search on random instances") {
        RngStream rng(23);
        for (int k = 0; k < 25; ++k) {
            RobustMidTermLp form;
            const int n = 2;
            for (int j = 0; j < n; ++j) {
                form.cost_coeffs.push_back(rng.uniform(-3.0, 3.0));
                form.lower.push_back(0.0);
                form.upper.push_back(2.0);
            }
            form.cost_const = rng.uniform(0.0, 2.0);
            form.severity_rows.push_back({{rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0)}, 0.0});
            form.severity_r = rng.uniform(0.5, 4.0);
            form.feasibility_rows.push_back({{1.0, 1.0}, rng.uniform(1.0, 4.0)});

            double best = 1e18;
            for (double a = 0.0; a <= 2.0 + 1e-9; a += 0.05)
                for (double b = 0.0; b <= 2.0 + 1e-9; b += 0.05) {
                    if (form.severity_rows[0].first[0] * a + form.severity_rows[0].first[1] * b >
                        form.severity_r)
                        continue;
                    if (a + b > form.feasibility_rows[0].second) continue;
                    best = std::min(best, form.cost_coeffs[0] * a + form.cost_coeffs[1] * b +
                                              form.cost_const);
                }
            const auto res = robust_mt_epigraph(form);
            REQUIRE(res.status == solver::Status::Optimal);
            CHECK(res.objective <= best + 1e-9);
            CHECK(res.objective >= best - 0.2); // grid resolution slack
        }
    }
}

TEST_CASE("project plan evaluation composes construction, opex and operation") {
    const grid::GridCase c = fixtures::bus3();

    // deterministic stand-in engine: yearly cost falls with added capacity
    MtEngineHandle engine = [](const grid::GridCase& era, std::uint64_t) {
        MtEngineOutcome o;
        double rating = 0.0;
        for (const auto& l : era.lines) rating += l.rating;
        o.annual_operation_cost = 100000.0 - 10.0 * rating;
        return o;
    };

    SUBCASE("empty plan is pure operation cost") {
        const auto eval = evaluate_project_plan(c, {}, 24, engine, 1);
        CHECK(eval.construction_cost == 0.0);
        CHECK(eval.opex_cost == 0.0);
        CHECK(eval.total_cost == doctest::Approx(eval.operation_cost));
        CHECK(eval.operation_cost == doctest::Approx(2.0 * (100000.0 - 10.0 * 260.0)));
    }
    SUBCASE("a project completing after the horizon only bills construction") {
        ProjectPlan plan;
        Project p;
        p.id = "late";
        p.construction_cost = 777.0;
        p.duration_months = 36;
        plan.projects.emplace_back(p, 1);
        const auto eval = evaluate_project_plan(c, plan, 24, engine, 1);
        CHECK(eval.construction_cost == doctest::Approx(777.0));
        CHECK(eval.opex_cost == doctest::Approx(0.0));
        CHECK(eval.operation_cost ==
              doctest::Approx(evaluate_project_plan(c, {}, 24, engine, 1).operation_cost));
    }
    SUBCASE("added capacity lowers the operation bill era by era") {
        ProjectPlan plan;
        Project p;
        p.id = "reinforce";
        p.construction_cost = 1000.0;
        p.duration_months = 5;
        p.new_lines.push_back({"LX", 1, 2, 10.0, 100.0, std::nullopt, 0.0, 0.0});
        plan.projects.emplace_back(p, 1);
        const auto with = evaluate_project_plan(c, plan, 24, engine, 1);
        const auto without = evaluate_project_plan(c, {}, 24, engine, 1);
        CHECK(with.operation_cost < without.operation_cost);
        // 6 months at the base rate, 18 at the reinforced rate
        const double expect = (100000.0 - 2600.0) * 0.5 + (100000.0 - 3600.0) * 1.5;
        CHECK(with.operation_cost == doctest::Approx(expect));
    }
    SUBCASE("linear opex integrates exactly under the trapezoid rule") {
        ProjectPlan plan;
        Project p;
        p.id = "opex";
        p.construction_cost = 0.0;
        p.duration_months = 0;
        p.opex_per_year = 1200.0;
        p.opex_slope_per_year = 1200.0;
        plan.projects.emplace_back(p, 1); // in service from month 1
        const auto eval = evaluate_project_plan(c, plan, 13, engine, 1);
        // integral of 1200 + 1200 tau over one year = 1200 + 600
        CHECK(eval.opex_cost == doctest::Approx(1800.0).epsilon(1e-9));
    }
    SUBCASE("plans violating the rules are rejected with the violation list") {
        ProjectPlan plan;
        Project p;
        p.id = "x";
        p.construction_cost = 10.0;
        plan.projects.emplace_back(p, 99);
        plan.budget = 5.0;
        CHECK_THROWS_AS(evaluate_project_plan(c, plan, 24, engine, 1), InfeasiblePlan);
    }
}
