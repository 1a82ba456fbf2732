#include "rm/lt.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rm/errors.hpp"
#include "rm/rng.hpp"

namespace rm::lt {

using solver::kInf;
using solver::LinearProgram;
using solver::MixedIntegerProgram;
using solver::Rel;
using solver::SolveResult;
using solver::Status;

std::vector<int> RobustLtInstance::areas() const {
    std::set<int> s;
    for (const auto& g : generators) s.insert(g.area);
    for (const auto& l : loads) s.insert(l.area);
    for (const auto& i : interconnections) {
        s.insert(i.from_area);
        s.insert(i.to_area);
    }
    return {s.begin(), s.end()};
}

std::vector<std::string> RobustLtInstance::validate() const {
    std::vector<std::string> v;
    for (const auto& g : generators) {
        if (g.cost_min > g.cost_max) v.push_back("generator " + g.id + " has cost_min > cost_max");
        if (g.p_min > g.p_max) v.push_back("generator " + g.id + " has p_min > p_max");
    }
    for (const auto& l : loads) {
        if (l.worth_min > l.worth_max) v.push_back("load " + l.id + " has worth_min > worth_max");
        if (l.l_min > l.l_max) v.push_back("load " + l.id + " has l_min > l_max");
    }
    for (const auto& i : interconnections) {
        if (i.invest_min > i.invest_max)
            v.push_back("interconnection " + i.id + " has invest_min > invest_max");
        if (i.from_area == i.to_area)
            v.push_back("interconnection " + i.id + " connects an area to itself");
        if (i.existing_capacity < 0.0) v.push_back("interconnection " + i.id + " has negative I0");
    }
    if (big_m <= 0.0) v.push_back("big_m must be positive");
    return v;
}

namespace {

// Shared clearing LP; prices decide the objective, capacities the export box.
ClearingResult clear(const RobustLtInstance& in, const std::vector<double>& gen_prices,
                     const std::vector<double>& load_prices, const std::vector<double>& capacities) {
    const int ng = static_cast<int>(in.generators.size());
    const int nl = static_cast<int>(in.loads.size());
    const int ni = static_cast<int>(in.interconnections.size());

    LinearProgram lp;
    lp.sense = solver::Sense::Maximize;
    for (int g = 0; g < ng; ++g)
        lp.add_var(in.generators[static_cast<size_t>(g)].p_min,
                   in.generators[static_cast<size_t>(g)].p_max, -gen_prices[static_cast<size_t>(g)]);
    for (int l = 0; l < nl; ++l)
        lp.add_var(in.loads[static_cast<size_t>(l)].l_min, in.loads[static_cast<size_t>(l)].l_max,
                   load_prices[static_cast<size_t>(l)]);
    for (int i = 0; i < ni; ++i)
        lp.add_var(-capacities[static_cast<size_t>(i)], capacities[static_cast<size_t>(i)], 0.0);

    for (int a : in.areas()) {
        std::vector<std::pair<int, double>> terms;
        for (int g = 0; g < ng; ++g)
            if (in.generators[static_cast<size_t>(g)].area == a) terms.emplace_back(g, 1.0);
        for (int l = 0; l < nl; ++l)
            if (in.loads[static_cast<size_t>(l)].area == a) terms.emplace_back(ng + l, -1.0);
        for (int i = 0; i < ni; ++i) {
            if (in.interconnections[static_cast<size_t>(i)].from_area == a)
                terms.emplace_back(ng + nl + i, -1.0);
            else if (in.interconnections[static_cast<size_t>(i)].to_area == a)
                terms.emplace_back(ng + nl + i, 1.0);
        }
        lp.add_row(terms, Rel::Eq, 0.0);
    }

    SolveResult res = solver::solve_lp(lp);
    ClearingResult out;
    out.status = res.status;
    if (res.status != Status::Optimal) return out;
    out.surplus = res.objective;
    out.dispatch.generation.assign(res.x.begin(), res.x.begin() + ng);
    out.dispatch.load.assign(res.x.begin() + ng, res.x.begin() + ng + nl);
    out.dispatch.exports.assign(res.x.begin() + ng + nl, res.x.begin() + ng + nl + ni);
    return out;
}

} // namespace

ClearingResult market_clearing(const RobustLtInstance& instance,
                               const std::vector<double>& gen_prices,
                               const std::vector<double>& load_prices,
                               const std::vector<double>& capacities) {
    const auto problems = instance.validate();
    if (!problems.empty()) throw ValidationError(problems);
    for (size_t g = 0; g < instance.generators.size(); ++g)
        if (gen_prices[g] < instance.generators[g].cost_min - 1e-9 ||
            gen_prices[g] > instance.generators[g].cost_max + 1e-9)
            throw ValidationError({"generator price outside its declared interval"});
    for (size_t l = 0; l < instance.loads.size(); ++l)
        if (load_prices[l] < instance.loads[l].worth_min - 1e-9 ||
            load_prices[l] > instance.loads[l].worth_max + 1e-9)
            throw ValidationError({"load price outside its declared interval"});
    return clear(instance, gen_prices, load_prices, capacities);
}

ClearingResult robust_market_clearing(const RobustLtInstance& instance,
                                      const std::vector<double>& capacities) {
    const auto problems = instance.validate();
    if (!problems.empty()) throw ValidationError(problems);
    std::vector<double> gp, lpc;
    for (const auto& g : instance.generators) gp.push_back(g.cost_max);
    for (const auto& l : instance.loads) lpc.push_back(l.worth_min);
    return clear(instance, gp, lpc, capacities);
}

MixedIntegerProgram build_kkt_bigm(const RobustLtInstance& in) {
    const auto problems = in.validate();
    if (!problems.empty()) throw ValidationError(problems);

    const int ng = static_cast<int>(in.generators.size());
    const int nl = static_cast<int>(in.loads.size());
    const int ni = static_cast<int>(in.interconnections.size());
    const double M = in.big_m;

    MixedIntegerProgram mip;
    LinearProgram& lp = mip.lp;
    lp.sense = solver::Sense::Maximize;

    // Variable order: P..., L..., E..., I..., W, mu, u.
    for (const auto& g : in.generators) lp.add_var(g.p_min, g.p_max, 0.0);
    for (const auto& l : in.loads) lp.add_var(l.l_min, l.l_max, 0.0);
    const int e0 = lp.num_vars();
    for (int i = 0; i < ni; ++i) lp.add_var(-kInf, kInf, 0.0);
    const int i0 = lp.num_vars();
    for (const auto& ic : in.interconnections)
        lp.add_var(ic.invest_min, ic.invest_max, -ic.invest_cost);
    const int wv = lp.add_var(-kInf, kInf, 1.0);
    const int mu = lp.add_var(0.0, kInf, 0.0);
    const int uv = lp.add_var(0.0, 1.0, 0.0);
    mip.binaries.push_back(uv);

    // Stationarity of the lower epigraph problem: -1 + mu = 0.
    lp.add_row({{mu, 1.0}}, Rel::Eq, 1.0);
    // Complementarity, big-M linearized.
    lp.add_row({{mu, 1.0}, {uv, -M}}, Rel::Le, 0.0);
    {
        // Slack of the worst-case surplus constraint <= M (1 - u).
        std::vector<std::pair<int, double>> terms{{wv, -1.0}, {uv, M}};
        for (int l = 0; l < nl; ++l)
            terms.emplace_back(ng + l, in.loads[static_cast<size_t>(l)].worth_min);
        for (int g = 0; g < ng; ++g)
            terms.emplace_back(g, -in.generators[static_cast<size_t>(g)].cost_max);
        lp.add_row(terms, Rel::Le, M);
    }
    {
        // Lower-level primal feasibility: worst-case surplus covers W.
        std::vector<std::pair<int, double>> terms{{wv, -1.0}};
        for (int l = 0; l < nl; ++l)
            terms.emplace_back(ng + l, in.loads[static_cast<size_t>(l)].worth_min);
        for (int g = 0; g < ng; ++g)
            terms.emplace_back(g, -in.generators[static_cast<size_t>(g)].cost_max);
        lp.add_row(terms, Rel::Ge, 0.0);
    }
    {
        // Companion worst-case constraint on the opposite price corner.
        std::vector<std::pair<int, double>> terms{{wv, 1.0}};
        for (int g = 0; g < ng; ++g)
            terms.emplace_back(g, -in.generators[static_cast<size_t>(g)].cost_min);
        for (int l = 0; l < nl; ++l)
            terms.emplace_back(ng + l, in.loads[static_cast<size_t>(l)].worth_max);
        lp.add_row(terms, Rel::Ge, 0.0);
    }

    for (int a : in.areas()) {
        std::vector<std::pair<int, double>> terms;
        for (int g = 0; g < ng; ++g)
            if (in.generators[static_cast<size_t>(g)].area == a) terms.emplace_back(g, 1.0);
        for (int l = 0; l < nl; ++l)
            if (in.loads[static_cast<size_t>(l)].area == a) terms.emplace_back(ng + l, -1.0);
        for (int i = 0; i < ni; ++i) {
            if (in.interconnections[static_cast<size_t>(i)].from_area == a)
                terms.emplace_back(e0 + i, -1.0);
            else if (in.interconnections[static_cast<size_t>(i)].to_area == a)
                terms.emplace_back(e0 + i, 1.0);
        }
        lp.add_row(terms, Rel::Eq, 0.0);
    }

    // Investment-expanded export bounds: -I - I0 <= E <= I + I0.
    for (int i = 0; i < ni; ++i) {
        const double cap0 = in.interconnections[static_cast<size_t>(i)].existing_capacity;
        lp.add_row({{e0 + i, 1.0}, {i0 + i, -1.0}}, Rel::Le, cap0);
        lp.add_row({{e0 + i, -1.0}, {i0 + i, -1.0}}, Rel::Le, cap0);
    }
    return mip;
}

RobustLtSolution solve_robust_lt(const RobustLtInstance& in) {
    MixedIntegerProgram mip = build_kkt_bigm(in);
    SolveResult res = solver::solve_milp(mip);

    RobustLtSolution sol;
    sol.status = res.status;
    if (res.status != Status::Optimal) return sol;

    const int ng = static_cast<int>(in.generators.size());
    const int nl = static_cast<int>(in.loads.size());
    const int ni = static_cast<int>(in.interconnections.size());
    sol.objective = res.objective;
    sol.dispatch.generation.assign(res.x.begin(), res.x.begin() + ng);
    sol.dispatch.load.assign(res.x.begin() + ng, res.x.begin() + ng + nl);
    sol.dispatch.exports.assign(res.x.begin() + ng + nl, res.x.begin() + ng + nl + ni);
    sol.investment.assign(res.x.begin() + ng + nl + ni, res.x.begin() + ng + nl + 2 * ni);
    sol.worst_case_surplus = res.x[static_cast<size_t>(ng + nl + 2 * ni)];
    sol.mu = res.x[static_cast<size_t>(ng + nl + 2 * ni + 1)];
    sol.u = res.x[static_cast<size_t>(ng + nl + 2 * ni + 2)];

    // KKT certificate at the returned point.
    sol.kkt_stationarity_residual = std::abs(sol.mu - 1.0);
    double worst = 0.0;
    for (int l = 0; l < nl; ++l)
        worst += in.loads[static_cast<size_t>(l)].worth_min * sol.dispatch.load[static_cast<size_t>(l)];
    for (int g = 0; g < ng; ++g)
        worst -= in.generators[static_cast<size_t>(g)].cost_max *
                 sol.dispatch.generation[static_cast<size_t>(g)];
    sol.kkt_complementarity_residual = std::abs(sol.mu * (worst - sol.worst_case_surplus));
    sol.primal_violation = solver::primal_violation(mip.lp, res.x);
    return sol;
}

SolveResult robust_mt_epigraph(const RobustMidTermLp& form) {
    const int n = static_cast<int>(form.cost_coeffs.size());
    LinearProgram lp;
    for (int j = 0; j < n; ++j)
        lp.add_var(j < static_cast<int>(form.lower.size()) ? form.lower[static_cast<size_t>(j)] : 0.0,
                   j < static_cast<int>(form.upper.size()) ? form.upper[static_cast<size_t>(j)] : kInf,
                   0.0);
    const int tv = lp.add_var(-kInf, kInf, 1.0);

    std::vector<std::pair<int, double>> cost_terms{{tv, -1.0}};
    for (int j = 0; j < n; ++j)
        if (form.cost_coeffs[static_cast<size_t>(j)] != 0.0)
            cost_terms.emplace_back(j, form.cost_coeffs[static_cast<size_t>(j)]);
    lp.add_row(cost_terms, Rel::Le, -form.cost_const);

    for (const auto& [coeffs, offset] : form.severity_rows) {
        std::vector<std::pair<int, double>> terms;
        for (int j = 0; j < n; ++j)
            if (coeffs[static_cast<size_t>(j)] != 0.0) terms.emplace_back(j, coeffs[static_cast<size_t>(j)]);
        lp.add_row(terms, Rel::Le, form.severity_r - offset);
    }
    for (const auto& [coeffs, rhs] : form.feasibility_rows) {
        std::vector<std::pair<int, double>> terms;
        for (int j = 0; j < n; ++j)
            if (coeffs[static_cast<size_t>(j)] != 0.0) terms.emplace_back(j, coeffs[static_cast<size_t>(j)]);
        lp.add_row(terms, Rel::Le, rhs);
    }
    return solver::solve_lp(lp);
}

std::vector<std::string> ProjectPlan::validate(int decision_horizon_months) const {
    std::vector<std::string> v;
    double total = 0.0;
    for (const auto& [p, start] : projects) {
        if (start < 1 || start > decision_horizon_months)
            v.push_back("project " + p.id + " starts outside the decision horizon");
        if (p.duration_months < 0) v.push_back("project " + p.id + " has negative duration");
        total += p.construction_cost;
    }
    if (budget >= 0.0 && total > budget + 1e-9)
        v.push_back("plan exceeds the budget (" + std::to_string(total) + ")");
    return v;
}

PlanEvaluation evaluate_project_plan(const grid::GridCase& c, const ProjectPlan& plan,
                                     int evaluation_horizon_months, const MtEngineHandle& engine,
                                     std::uint64_t seed) {
    const auto problems = plan.validate(evaluation_horizon_months);
    if (!problems.empty()) throw InfeasiblePlan(problems);

    PlanEvaluation out;
    std::vector<std::pair<int, const Project*>> completions; // (month in service, project)
    for (const auto& [p, start] : plan.projects) {
        out.construction_cost += p.construction_cost;
        const int done = start + p.duration_months;
        if (done <= evaluation_horizon_months) completions.emplace_back(done, &p);

        // Trapezoid-integrated opex from entry into service to the horizon end.
        if (done < evaluation_horizon_months) {
            const int months = evaluation_horizon_months - done;
            for (int m = 0; m < months; ++m) {
                const double y0 = m / 12.0, y1 = (m + 1) / 12.0;
                const double r0 = p.opex_per_year + p.opex_slope_per_year * y0;
                const double r1 = p.opex_per_year + p.opex_slope_per_year * y1;
                out.opex_cost += 0.5 * (r0 + r1) * (y1 - y0);
            }
        }
    }
    std::sort(completions.begin(), completions.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // Era-by-era operation cost on the evolving grid.
    grid::GridCase current = c;
    int era_start = 0;
    size_t next = 0;
    std::uint64_t era_index = 0;
    auto run_era = [&](int from, int to) {
        if (to <= from) return;
        MtEngineOutcome o = engine(current, derive_seed(seed, {era_index++}));
        out.operation_cost += o.annual_operation_cost * (to - from) / 12.0;
        out.chance_ok = out.chance_ok && o.chance_ok;
        out.achievability_ok = out.achievability_ok && o.achievability_ok;
    };
    while (next < completions.size()) {
        run_era(era_start, completions[next].first);
        era_start = completions[next].first;
        for (const grid::Line& l : completions[next].second->new_lines) current.lines.push_back(l);
        ++next;
    }
    run_era(era_start, evaluation_horizon_months);

    out.total_cost = out.construction_cost + out.opex_cost + out.operation_cost;
    return out;
}

} // namespace rm::lt
