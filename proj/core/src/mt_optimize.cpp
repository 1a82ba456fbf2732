#include "rm/mt_optimize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rm/errors.hpp"
#include "rm/rng.hpp"
#include "rm/solver.hpp"

namespace rm::mto {

using grid::GridCase;
using grid::Topology;
using solver::kInf;
using solver::LinearProgram;
using solver::MixedIntegerProgram;
using solver::Rel;
using solver::SolveResult;
using solver::Status;

namespace {

// ---------------------------------------------------------------------------
// DC network sensitivities for the commitment problem.

struct IslandPtdf {
    std::vector<std::vector<int>> islands;          // bus indices per island
    std::vector<int> island_of;                     // per bus
    std::vector<std::vector<double>> ptdf;          // [line][bus]; 0 for out lines
};

// Dense solve helper.
bool gauss_solve(std::vector<std::vector<double>> a, std::vector<std::vector<double>>& rhs) {
    const int n = static_cast<int>(a.size());
    const int m = rhs.empty() ? 0 : static_cast<int>(rhs[0].size());
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) < 1e-12) return false;
        std::swap(a[piv], a[c]);
        std::swap(rhs[piv], rhs[c]);
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            if (f == 0.0) continue;
            for (int k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            for (int k = 0; k < m; ++k) rhs[r][k] -= f * rhs[c][k];
        }
    }
    for (int r = 0; r < n; ++r) {
        const double d = a[r][r];
        for (int k = 0; k < m; ++k) rhs[r][k] /= d;
    }
    return true;
}

IslandPtdf compute_ptdf(const GridCase& c, const Topology& topo) {
    const int n = c.num_buses();
    IslandPtdf out;
    out.island_of.assign(n, -1);

    for (int b = 0; b < n; ++b) {
        if (out.island_of[b] >= 0) continue;
        std::vector<int> members;
        std::vector<int> stack{b};
        out.island_of[b] = static_cast<int>(out.islands.size());
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            members.push_back(u);
            for (int li = 0; li < c.num_lines(); ++li) {
                if (!topo.up(li)) continue;
                const int f = c.bus_index(c.lines[li].from_bus);
                const int t = c.bus_index(c.lines[li].to_bus);
                int other = -1;
                if (f == u) other = t;
                else if (t == u) other = f;
                if (other >= 0 && out.island_of[other] < 0) {
                    out.island_of[other] = out.island_of[b];
                    stack.push_back(other);
                }
            }
        }
        std::sort(members.begin(), members.end());
        out.islands.push_back(std::move(members));
    }

    out.ptdf.assign(c.lines.size(), std::vector<double>(static_cast<size_t>(n), 0.0));
    for (const auto& island : out.islands) {
        if (island.size() < 2) continue;
        const int slack = island[0];
        std::vector<int> red(n, -1);
        int k = 0;
        for (int b : island)
            if (b != slack) red[b] = k++;
        std::vector<std::vector<double>> B(k, std::vector<double>(k, 0.0));
        for (int li = 0; li < c.num_lines(); ++li) {
            if (!topo.up(li)) continue;
            const int f = c.bus_index(c.lines[li].from_bus);
            const int t = c.bus_index(c.lines[li].to_bus);
            if (out.island_of[f] != out.island_of[slack]) continue;
            const double s = c.lines[li].susceptance;
            if (red[f] >= 0 && red[t] >= 0) {
                B[red[f]][red[t]] -= s;
                B[red[t]][red[f]] -= s;
            }
            if (red[f] >= 0) B[red[f]][red[f]] += s;
            if (red[t] >= 0) B[red[t]][red[t]] += s;
        }
        // theta response to a unit injection at each non-slack bus.
        std::vector<std::vector<double>> rhs(k, std::vector<double>(k, 0.0));
        for (int i = 0; i < k; ++i) rhs[i][i] = 1.0;
        if (k > 0 && !gauss_solve(B, rhs))
            throw SingularSystem("singular island susceptance matrix");
        for (int li = 0; li < c.num_lines(); ++li) {
            if (!topo.up(li)) continue;
            const int f = c.bus_index(c.lines[li].from_bus);
            const int t = c.bus_index(c.lines[li].to_bus);
            if (out.island_of[f] != out.island_of[slack]) continue;
            for (int b : island) {
                if (b == slack) continue;
                const double th_f = red[f] >= 0 ? rhs[red[f]][red[b]] : 0.0;
                const double th_t = red[t] >= 0 ? rhs[red[t]][red[b]] : 0.0;
                out.ptdf[li][b] = c.lines[li].susceptance * (th_f - th_t);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Unit commitment MILP.

struct UcLayout {
    int hours = 24;
    int blocks = 0, block_hours = 0;
    int alpha0 = 0, start0 = 0, stop0 = 0, p0 = 0, wc0 = 0, ls0 = -1;
    int ng = 0, nw = 0, nb = 0;
    int alpha(int g, int b) const { return alpha0 + g * blocks + b; }
    int start(int g, int b) const { return start0 + g * blocks + b; }
    int stop(int g, int b) const { return stop0 + g * blocks + b; }
    int p(int g, int h) const { return p0 + g * hours + h; }
    int wc(int w, int h) const { return wc0 + w * hours + h; }
    int ls(int b, int h) const { return ls0 + b * hours + h; }
    int block_of(int h) const { return h / block_hours; }
};

int pick_block_hours(int requested, int ng) {
    static const int divisors[] = {1, 2, 3, 4, 6, 8, 12, 24};
    int chosen = 24;
    for (int d : divisors) {
        if (d < requested) continue;
        if (ng * (24 / d) <= 64) {
            chosen = d;
            break;
        }
    }
    return chosen;
}

struct UcModel {
    MixedIntegerProgram mip;
    UcLayout lay;
    std::vector<IslandPtdf> case_ptdf; // index 0 = base, 1.. = line outages
    std::vector<int> case_out_line;    // -1 for base
};

// Net injection at bus b in hour h as sparse LP terms plus a constant.
void injection_terms(const GridCase& c, const UcLayout& lay,
                     const std::vector<std::vector<double>>& load_fc,
                     const std::vector<std::vector<double>>& wind_fc, int b, int h,
                     std::vector<std::pair<int, double>>& terms, double& constant) {
    for (int g = 0; g < lay.ng; ++g)
        if (c.bus_index(c.generators[static_cast<size_t>(g)].bus) == b)
            terms.emplace_back(lay.p(g, h), 1.0);
    for (int w = 0; w < lay.nw; ++w) {
        if (c.bus_index(c.wind_units[static_cast<size_t>(w)].bus) != b) continue;
        terms.emplace_back(lay.wc(w, h), -1.0);
        constant += wind_fc[static_cast<size_t>(h)][static_cast<size_t>(w)];
    }
    if (lay.ls0 >= 0) terms.emplace_back(lay.ls(b, h), 1.0);
    constant -= load_fc[static_cast<size_t>(h)][static_cast<size_t>(b)];
}

UcModel build_uc(const GridCase& c, const Topology& topo,
                 const std::vector<std::vector<double>>& load_fc,
                 const std::vector<std::vector<double>>& wind_fc, const InnerPolicy& policy,
                 bool enforce_n1, bool allow_shed,
                 const std::vector<std::uint8_t>& initial_commitment) {
    UcModel model;
    UcLayout& lay = model.lay;
    lay.ng = static_cast<int>(c.generators.size());
    lay.nw = static_cast<int>(c.wind_units.size());
    lay.nb = c.num_buses();
    lay.block_hours = pick_block_hours(policy.uc_block_hours, lay.ng);
    lay.blocks = 24 / lay.block_hours;

    LinearProgram& lp = model.mip.lp;
    lay.alpha0 = lp.num_vars();
    for (int g = 0; g < lay.ng; ++g)
        for (int b = 0; b < lay.blocks; ++b) {
            model.mip.binaries.push_back(lp.add_var(0.0, 1.0, 0.0));
        }
    lay.start0 = lp.num_vars();
    for (int g = 0; g < lay.ng; ++g)
        for (int b = 0; b < lay.blocks; ++b)
            lp.add_var(0.0, 1.0, c.generators[static_cast<size_t>(g)].startup_cost);
    lay.stop0 = lp.num_vars();
    for (int g = 0; g < lay.ng; ++g)
        for (int b = 0; b < lay.blocks; ++b) lp.add_var(0.0, 1.0, 0.0);
    lay.p0 = lp.num_vars();
    for (int g = 0; g < lay.ng; ++g)
        for (int h = 0; h < lay.hours; ++h)
            lp.add_var(0.0, c.generators[static_cast<size_t>(g)].pmax,
                       c.generators[static_cast<size_t>(g)].cost_linear);
    lay.wc0 = lp.num_vars();
    for (int w = 0; w < lay.nw; ++w)
        for (int h = 0; h < lay.hours; ++h)
            lp.add_var(0.0, wind_fc[static_cast<size_t>(h)][static_cast<size_t>(w)],
                       c.wind_curtail_cost);
    if (allow_shed) {
        lay.ls0 = lp.num_vars();
        for (int b = 0; b < lay.nb; ++b)
            for (int h = 0; h < lay.hours; ++h)
                lp.add_var(0.0, load_fc[static_cast<size_t>(h)][static_cast<size_t>(b)], c.voll);
    }

    // Commitment coupling: dispatch inside [pmin, pmax] when on, zero when off.
    for (int g = 0; g < lay.ng; ++g) {
        const auto& gen = c.generators[static_cast<size_t>(g)];
        for (int h = 0; h < lay.hours; ++h) {
            const int blk = lay.block_of(h);
            lp.add_row({{lay.p(g, h), 1.0}, {lay.alpha(g, blk), -gen.pmax}}, Rel::Le, 0.0);
            if (gen.pmin > 0.0)
                lp.add_row({{lay.p(g, h), 1.0}, {lay.alpha(g, blk), -gen.pmin}}, Rel::Ge, 0.0);
        }
    }

    // Start/stop linking and min up/down in block units. The hour before the
    // day is `initial_commitment`; everything starts offline when it is
    // unknown, so first commitments pay their startup.
    for (int g = 0; g < lay.ng; ++g) {
        const auto& gen = c.generators[static_cast<size_t>(g)];
        for (int b = 0; b < lay.blocks; ++b) {
            if (b == 0) {
                const double init = initial_commitment.empty()
                                        ? 0.0
                                        : (initial_commitment[static_cast<size_t>(g)] ? 1.0 : 0.0);
                lp.add_row({{lay.alpha(g, 0), 1.0}, {lay.start(g, 0), -1.0}}, Rel::Le, init);
                lp.add_row({{lay.alpha(g, 0), -1.0}, {lay.stop(g, 0), -1.0}}, Rel::Le, -init);
            } else {
                lp.add_row({{lay.alpha(g, b), 1.0},
                            {lay.alpha(g, b - 1), -1.0},
                            {lay.start(g, b), -1.0}},
                           Rel::Le, 0.0);
                lp.add_row({{lay.alpha(g, b - 1), 1.0},
                            {lay.alpha(g, b), -1.0},
                            {lay.stop(g, b), -1.0}},
                           Rel::Le, 0.0);
            }
        }
        const int mu = std::max(1, (gen.min_up + lay.block_hours - 1) / lay.block_hours);
        const int md = std::max(1, (gen.min_down + lay.block_hours - 1) / lay.block_hours);
        for (int b = 0; b < lay.blocks; ++b) {
            if (mu > 1) {
                std::vector<std::pair<int, double>> terms{{lay.alpha(g, b), -1.0}};
                for (int t = std::max(0, b - mu + 1); t <= b; ++t)
                    terms.emplace_back(lay.start(g, t), 1.0);
                lp.add_row(terms, Rel::Le, 0.0);
            }
            if (md > 1) {
                std::vector<std::pair<int, double>> terms{{lay.alpha(g, b), 1.0}};
                for (int t = std::max(0, b - md + 1); t <= b; ++t)
                    terms.emplace_back(lay.stop(g, t), 1.0);
                lp.add_row(terms, Rel::Le, 1.0);
            }
        }
    }

    // Outage cases: base plus one per in-service line when N-1 is required.
    model.case_ptdf.push_back(compute_ptdf(c, topo));
    model.case_out_line.push_back(-1);
    if (enforce_n1) {
        for (int li = 0; li < c.num_lines(); ++li) {
            if (!topo.up(li)) continue;
            Topology t = topo;
            t.line_status[static_cast<size_t>(li)] = 0;
            model.case_ptdf.push_back(compute_ptdf(c, t));
            model.case_out_line.push_back(li);
        }
    }

    // One balance row per island per case per hour (identical islands across
    // cases collapse to the same row; the base case usually contributes the
    // single system-wide row).
    std::vector<std::vector<int>> seen_islands;
    for (const auto& cp : model.case_ptdf) {
        for (const auto& island : cp.islands) {
            if (std::find(seen_islands.begin(), seen_islands.end(), island) !=
                seen_islands.end())
                continue;
            seen_islands.push_back(island);
            for (int h = 0; h < lay.hours; ++h) {
                std::vector<std::pair<int, double>> terms;
                double constant = 0.0;
                for (int b : island) injection_terms(c, lay, load_fc, wind_fc, b, h, terms, constant);
                lp.add_row(terms, Rel::Eq, -constant);
            }
        }
    }
    return model;
}

struct FlowViolation {
    int case_idx, line, hour;
    double excess;
};

std::vector<FlowViolation> check_flows(const GridCase& c, const UcModel& model,
                                       const std::vector<std::vector<double>>& load_fc,
                                       const std::vector<std::vector<double>>& wind_fc,
                                       const std::vector<double>& x) {
    std::vector<FlowViolation> out;
    const UcLayout& lay = model.lay;
    for (size_t ci = 0; ci < model.case_ptdf.size(); ++ci) {
        const IslandPtdf& cp = model.case_ptdf[ci];
        for (int h = 0; h < lay.hours; ++h) {
            std::vector<double> inj(static_cast<size_t>(lay.nb), 0.0);
            for (int b = 0; b < lay.nb; ++b) {
                double v = -load_fc[static_cast<size_t>(h)][static_cast<size_t>(b)];
                if (lay.ls0 >= 0) v += x[lay.ls(b, h)];
                inj[static_cast<size_t>(b)] = v;
            }
            for (int g = 0; g < lay.ng; ++g)
                inj[static_cast<size_t>(c.bus_index(c.generators[static_cast<size_t>(g)].bus))] +=
                    x[lay.p(g, h)];
            for (int w = 0; w < lay.nw; ++w)
                inj[static_cast<size_t>(c.bus_index(c.wind_units[static_cast<size_t>(w)].bus))] +=
                    wind_fc[static_cast<size_t>(h)][static_cast<size_t>(w)] - x[lay.wc(w, h)];
            for (int li = 0; li < c.num_lines(); ++li) {
                if (model.case_out_line[ci] == li) continue;
                double flow = 0.0;
                for (int b = 0; b < lay.nb; ++b)
                    flow += cp.ptdf[static_cast<size_t>(li)][static_cast<size_t>(b)] *
                            inj[static_cast<size_t>(b)];
                const double cap = c.lines[static_cast<size_t>(li)].rating;
                if (std::abs(flow) > cap + 1e-5)
                    out.push_back({static_cast<int>(ci), li, h, std::abs(flow) - cap});
            }
        }
    }
    return out;
}

void add_flow_row(const GridCase& c, UcModel& model,
                  const std::vector<std::vector<double>>& load_fc,
                  const std::vector<std::vector<double>>& wind_fc, const FlowViolation& v) {
    const UcLayout& lay = model.lay;
    const IslandPtdf& cp = model.case_ptdf[static_cast<size_t>(v.case_idx)];
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;
    for (int b = 0; b < lay.nb; ++b) {
        const double w = cp.ptdf[static_cast<size_t>(v.line)][static_cast<size_t>(b)];
        if (w == 0.0) continue;
        std::vector<std::pair<int, double>> bus_terms;
        double bus_const = 0.0;
        injection_terms(c, lay, load_fc, wind_fc, b, v.hour, bus_terms, bus_const);
        for (auto [var, coeff] : bus_terms) terms.emplace_back(var, w * coeff);
        constant += w * bus_const;
    }
    const double cap = c.lines[static_cast<size_t>(v.line)].rating;
    model.mip.lp.add_row(terms, Rel::Le, cap - constant);
    model.mip.lp.add_row(terms, Rel::Ge, -cap - constant);
}

} // namespace

UcResult unit_commitment(const GridCase& c, const Topology& topo,
                         const std::vector<std::vector<double>>& load_fc,
                         const std::vector<std::vector<double>>& wind_fc,
                         const InnerPolicy& policy, bool enforce_n1, bool allow_shed,
                         const std::vector<std::uint8_t>& initial_commitment) {
    UcModel model =
        build_uc(c, topo, load_fc, wind_fc, policy, enforce_n1, allow_shed, initial_commitment);

    solver::SolverOptions opts;
    opts.force_branch_and_bound = true; // relaxations are tight for block commitment

    UcResult out;
    SolveResult res;

    // Converge the flow cuts on the cheap LP relaxation first; the integral
    // solve below then usually needs at most one extra round.
    for (int round = 0; round < 12; ++round) {
        res = solver::solve_lp(model.mip.lp, opts);
        if (res.status != Status::Optimal) return out;
        const auto violations = check_flows(c, model, load_fc, wind_fc, res.x);
        if (violations.empty()) break;
        for (const auto& v : violations) add_flow_row(c, model, load_fc, wind_fc, v);
    }
    for (int round = 0; round < 12; ++round) {
        res = solver::solve_milp(model.mip, opts);
        if (res.status != Status::Optimal) return out; // infeasible for this rung
        const auto violations = check_flows(c, model, load_fc, wind_fc, res.x);
        if (violations.empty()) break;
        if (round == 11) return out; // could not close the cut loop: treat as infeasible
        for (const auto& v : violations) add_flow_row(c, model, load_fc, wind_fc, v);
    }

    const UcLayout& lay = model.lay;
    out.feasible = true;
    out.objective = res.objective;
    out.commitment.assign(24, std::vector<std::uint8_t>(static_cast<size_t>(lay.ng), 0));
    out.dispatch.assign(24, std::vector<double>(static_cast<size_t>(lay.ng), 0.0));
    for (int g = 0; g < lay.ng; ++g) {
        for (int h = 0; h < 24; ++h) {
            out.commitment[static_cast<size_t>(h)][static_cast<size_t>(g)] =
                res.x[lay.alpha(g, lay.block_of(h))] > 0.5 ? 1 : 0;
            out.dispatch[static_cast<size_t>(h)][static_cast<size_t>(g)] = res.x[lay.p(g, h)];
        }
        for (int b = 0; b < lay.blocks; ++b)
            out.startup_cost +=
                c.generators[static_cast<size_t>(g)].startup_cost * res.x[lay.start(g, b)];
    }
    return out;
}

EscalationResult escalate(const GridCase& c, const Topology& topo,
                          const std::vector<std::vector<double>>& load_fc,
                          const std::vector<std::vector<double>>& wind_fc,
                          const InnerPolicy& policy,
                          const std::vector<std::uint8_t>& initial_commitment) {
    EscalationResult out;
    struct Rung {
        bool n1, shed;
    };
    // Under the probabilistic criterion the event screening happens hourly in
    // real time, so the planning rung carries no N-1 blocks of its own.
    const bool secure = policy.mode == PolicyMode::NMinusOne;
    const Rung ladder[] = {{secure, false}, {false, false}, {false, true}};
    for (int level = 0; level < 3; ++level) {
        UcResult uc = unit_commitment(c, topo, load_fc, wind_fc, policy, ladder[level].n1,
                                      ladder[level].shed, initial_commitment);
        if (uc.feasible) {
            out.level = level;
            out.uc = std::move(uc);
            return out;
        }
    }
    out.level = 3;
    out.fine = policy.fine_for(c);
    out.achievable = false;
    return out;
}

namespace {

rt::ContingencyModel in_service_universe(const GridCase& c, const Topology& topo,
                                         const InnerPolicy& policy) {
    rt::ContingencyModel m;
    const int nl = c.num_lines();
    m.events.push_back({0, std::vector<std::uint8_t>(static_cast<size_t>(nl), 0), 0.0});
    double rest = 0.0;
    for (int li = 0; li < nl; ++li) {
        if (!topo.up(li)) continue;
        std::vector<std::uint8_t> mask(static_cast<size_t>(nl), 0);
        mask[static_cast<size_t>(li)] = 1;
        double p = policy.default_line_fail_prob_per_hour;
        if (c.lines[static_cast<size_t>(li)].life)
            p = interval_failure_probability(*c.lines[static_cast<size_t>(li)].life,
                                             c.lines[static_cast<size_t>(li)].initial_age_hours,
                                             1.0);
        m.events.push_back({li + 1, std::move(mask), p});
        rest += p;
    }
    m.events[0].probability = 1.0 - rest;
    return m;
}

struct HourSolve {
    bool ok = false;
    double cost = 0.0;
    double shed = 0.0;
    double redispatch = 0.0;
    std::vector<double> dispatch;
};

// One real-time interval under a fixed escalation rung.
HourSolve solve_hour(const GridCase& c, const Topology& topo, const std::vector<double>& load,
                     const std::vector<double>& wind, const std::vector<std::uint8_t>& committed,
                     const std::vector<double>& plan_dispatch, const InnerPolicy& policy,
                     bool with_events, bool allow_shed) {
    rt::ContingencyModel model = in_service_universe(c, topo, policy);
    rt::RtParams params;
    params.allow_shed_base = allow_shed;
    params.allow_shed_post = allow_shed;
    params.cr_max = c.total_peak_load() * c.voll;
    std::vector<int> subset{0};
    if (with_events) {
        if (policy.mode == PolicyMode::Probabilistic) {
            params.delta_e = policy.delta_e_rt;
            params.epsilon = policy.epsilon_rt;
            params.allow_shed_post = true; // criticality is priced, not forbidden
            subset = rt::select_subset_pessimistic(model, params);
        } else {
            for (const auto& e : model.events)
                if (e.id != 0) subset.push_back(e.id);
        }
    }
    rt::RtContext ctx;
    ctx.committed = committed;
    ctx.base_dispatch = plan_dispatch;
    ctx.base_topology = topo;

    HourSolve out;
    try {
        auto [decision, report] = rt::rt_rmac_preventive(c, rt::Snapshot{load, wind}, model,
                                                         subset, params, ctx);
        out.ok = true;
        out.dispatch = decision.dispatch;
        double fuel = 0.0;
        for (size_t g = 0; g < c.generators.size(); ++g)
            fuel += c.generators[g].cost_linear * decision.dispatch[g];
        for (size_t g = 0; g < c.generators.size(); ++g)
            out.redispatch += c.generators[g].cost_linear *
                              std::abs(decision.dispatch[g] - plan_dispatch[g]);
        out.shed = report.base_shed_mw;
        out.cost = fuel + out.redispatch + c.voll * report.base_shed_mw +
                   c.wind_curtail_cost * report.base_curtail_mw;
    } catch (const ValidationError&) {
        out.ok = false;
    }
    return out;
}

} // namespace

RtStepResult real_time_step(const GridCase& c, const Topology& topo,
                            const std::vector<double>& load, const std::vector<double>& wind,
                            int hour, mts::DayPlan& plan, const InnerPolicy& policy) {
    RtStepResult out;
    const auto& committed = plan.commitment[static_cast<size_t>(hour)];
    const auto& planned = plan.dispatch[static_cast<size_t>(hour)];

    struct Rung {
        bool events, shed;
    };
    const Rung ladder[] = {{true, false}, {false, false}, {false, true}};
    const int first = policy.escalation ? 0 : 2;
    for (int level = first; level < 3; ++level) {
        HourSolve hs = solve_hour(c, topo, load, wind, committed, planned, policy,
                                  ladder[level].events, ladder[level].shed);
        if (!hs.ok) continue;

        if (hs.shed > 1e-6 && !plan.deviated) {
            // The plan forces shedding: stop following it, recommit the
            // remaining hours from the current commitment, retry the hour.
            plan.deviated = true;
            std::vector<std::vector<double>> load_fc(24), wind_fc(24);
            for (int h = 0; h < 24; ++h) {
                load_fc[static_cast<size_t>(h)] = load;
                wind_fc[static_cast<size_t>(h)] = wind;
            }
            EscalationResult re = escalate(c, topo, load_fc, wind_fc, policy, committed);
            if (re.level < 3) {
                for (int h = hour; h < 24; ++h) {
                    plan.commitment[static_cast<size_t>(h)] =
                        re.uc.commitment[static_cast<size_t>(h)];
                    plan.dispatch[static_cast<size_t>(h)] = re.uc.dispatch[static_cast<size_t>(h)];
                }
                out.cost += re.uc.startup_cost; // recommitment billed at SU
                RtStepResult retry = real_time_step(c, topo, load, wind, hour, plan, policy);
                retry.cost += out.cost;
                retry.deviated = true;
                return retry;
            }
        }

        out.cost += hs.cost;
        out.shed_mw = hs.shed;
        out.redispatch_cost = hs.redispatch;
        out.escalation_level = level;
        out.dispatch = hs.dispatch;
        out.deviated = plan.deviated;
        return out;
    }

    // Even full shedding failed: pay the fine for this interval.
    out.escalation_level = 3;
    out.achievable = false;
    out.cost += policy.fine_for(c) / 24.0;
    out.dispatch.assign(c.generators.size(), 0.0);
    out.deviated = plan.deviated;
    return out;
}

mts::DayPlan EscalationPolicyEngine::plan_day(const GridCase& c, const Topology& topo,
                                              const std::vector<std::vector<double>>& load_fc,
                                              const std::vector<std::vector<double>>& wind_fc) {
    mts::DayPlan plan;
    EscalationResult esc;
    bool solved = false;
    std::vector<double> key;
    if (cache_) {
        key.reserve(topo.line_status.size() + prev_commitment_.size() + 24 * load_fc[0].size() +
                    24 * wind_fc[0].size() + 2);
        for (auto v : topo.line_status) key.push_back(v);
        key.push_back(-1.0);
        for (auto v : prev_commitment_) key.push_back(v);
        key.push_back(-2.0);
        for (const auto& hr : load_fc)
            for (double v : hr) key.push_back(v);
        for (const auto& hr : wind_fc)
            for (double v : hr) key.push_back(v);
        std::lock_guard lock(cache_->mu);
        auto it = cache_->entries.find(key);
        if (it != cache_->entries.end()) {
            esc = it->second;
            solved = true;
        }
    }
    if (!solved) {
        esc = escalate(c, topo, load_fc, wind_fc, policy_, prev_commitment_);
        if (cache_) {
            std::lock_guard lock(cache_->mu);
            cache_->entries.emplace(std::move(key), esc);
        }
    }
    plan.escalation_level = esc.level;
    if (esc.level == 3) {
        plan.achievable = false;
        plan.plan_cost = esc.fine;
        plan.commitment.assign(24, std::vector<std::uint8_t>(c.generators.size(), 1));
        plan.dispatch.assign(24, std::vector<double>(c.generators.size(), 0.0));
    } else {
        plan.commitment = esc.uc.commitment;
        plan.dispatch = esc.uc.dispatch;
        plan.plan_cost = esc.uc.startup_cost;
    }
    prev_commitment_ = plan.commitment.back();
    return plan;
}

mts::HourOutcome EscalationPolicyEngine::real_time_hour(const GridCase& c, const Topology& topo,
                                                        const std::vector<double>& load,
                                                        const std::vector<double>& wind, int hour,
                                                        mts::DayPlan& plan) {
    mts::HourOutcome out;
    if (!plan.achievable) {
        // The day plan already failed; operation cost was covered by the fine.
        out.cost = 0.0;
        out.achievable = false;
        out.dispatch.assign(c.generators.size(), 0.0);
        return out;
    }
    RtStepResult rs = real_time_step(c, topo, load, wind, hour, plan, policy_);
    out.cost = rs.cost;
    out.shed_mw = rs.shed_mw;
    out.achievable = rs.achievable;
    out.deviated = rs.deviated;
    out.dispatch = rs.dispatch;
    prev_commitment_ = plan.commitment.back();
    return out;
}

ScheduleEvaluation evaluate_schedule(const GridCase& c, const MaintenanceSchedule& schedule,
                                     const InnerPolicy& policy, const mts::SamplerSpec& spec,
                                     const MtConstraints& constraints, std::uint64_t seed,
                                     exec::ThreadPool* pool) {
    const auto problems = schedule.validate();
    if (!problems.empty()) throw InfeasibleSchedule(problems);

    ScheduleEvaluation eval;
    for (int m = 0; m < schedule.months; ++m)
        for (int l = 0; l < schedule.num_lines; ++l)
            if (schedule.at(m, l)) eval.direct_cost += c.lines[static_cast<size_t>(l)].maintenance_cost;

    mts::SamplerSpec run = spec;
    run.seed = seed;
    auto cache = std::make_shared<UcCache>();
    std::vector<mts::Scenario> scenarios(static_cast<size_t>(run.n_scenarios));
    exec::parallel_for(pool, run.n_scenarios, [&](int i) {
        EscalationPolicyEngine engine(policy, cache);
        scenarios[static_cast<size_t>(i)] =
            mts::sample_scenario(c, schedule, engine, run, static_cast<std::uint64_t>(i));
    });
    eval.operation_cost = mts::estimate_expected_cost(scenarios);
    if (std::isfinite(constraints.severity_r)) {
        eval.chance = mts::estimate_chance_constraint(scenarios, constraints.aggregator,
                                                      constraints.severity_r, constraints.alpha);
        eval.chance_ok = eval.chance.satisfied;
    }
    eval.achievability = mts::estimate_achievability(scenarios, constraints.achieve_epsilon);
    eval.achievability_ok = eval.achievability.satisfied;
    eval.total_cost = eval.direct_cost + eval.operation_cost.mean;
    return eval;
}

namespace {

MaintenanceSchedule sample_schedule(int months, int num_lines, const std::vector<double>& probs,
                                    const CeParams& params, RngStream& rng) {
    for (int attempt = 0; attempt < 50; ++attempt) {
        MaintenanceSchedule s = MaintenanceSchedule::empty(months, num_lines);
        for (int m = 0; m < months; ++m)
            for (int l = 0; l < num_lines; ++l)
                if (rng.bernoulli(probs[static_cast<size_t>(m * num_lines + l)])) s.set(m, l, true);
        if (s.validate(params.per_month_cap, params.per_line_cap).empty()) return s;
        if (attempt == 49) {
            // Deterministic repair: keep the first actions per month and per
            // line up to the caps, drop the rest.
            std::vector<int> line_used(static_cast<size_t>(num_lines), 0);
            for (int m = 0; m < months; ++m) {
                int used = 0;
                for (int l = 0; l < num_lines; ++l) {
                    if (!s.at(m, l)) continue;
                    if (used >= params.per_month_cap ||
                        line_used[static_cast<size_t>(l)] >= params.per_line_cap) {
                        s.set(m, l, false);
                    } else {
                        ++used;
                        ++line_used[static_cast<size_t>(l)];
                    }
                }
            }
            return s;
        }
    }
    return MaintenanceSchedule::empty(months, num_lines);
}

} // namespace

CeResult cross_entropy_optimize(int months, int num_lines, const ScheduleObjective& objective,
                                const CeParams& params, std::uint64_t seed) {
    if (params.population < params.min_population)
        throw ValidationError({"population below the minimum of " +
                               std::to_string(params.min_population)});

    CeResult result;
    CeState& state = result.state;
    state.rho = params.rho;
    state.smoothing = params.smoothing;
    state.probs.assign(static_cast<size_t>(months) * num_lines, params.init_prob);

    std::map<std::vector<std::uint8_t>, double> cache; // deterministic objective memo

    for (int iter = 0; iter < params.max_iters; ++iter) {
        state.iteration = iter + 1;
        RngStream rng = make_stream(seed, {static_cast<std::uint64_t>(iter)});

        std::vector<std::pair<double, MaintenanceSchedule>> population;
        population.reserve(static_cast<size_t>(params.population));
        for (int i = 0; i < params.population; ++i) {
            MaintenanceSchedule s = sample_schedule(months, num_lines, state.probs, params, rng);
            auto it = cache.find(s.actions);
            double cost;
            if (it != cache.end()) {
                cost = it->second;
            } else {
                cost = objective(s);
                cache.emplace(s.actions, cost);
            }
            population.emplace_back(cost, std::move(s));
        }
        std::stable_sort(population.begin(), population.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });

        const int elites = std::max(1, static_cast<int>(std::ceil(params.rho * params.population)));
        double mean = 0.0, m2 = 0.0;
        for (int i = 0; i < elites; ++i) mean += population[static_cast<size_t>(i)].first;
        mean /= elites;
        for (int i = 0; i < elites; ++i) {
            const double d = population[static_cast<size_t>(i)].first - mean;
            m2 += d * d;
        }
        result.trace.push_back({state.iteration, mean,
                                elites > 1 ? std::sqrt(m2 / (elites - 1)) : 0.0,
                                population.front().first});

        if (population.front().first < result.best_cost) {
            result.best_cost = population.front().first;
            result.best = population.front().second;
        }

        for (size_t k = 0; k < state.probs.size(); ++k) {
            double freq = 0.0;
            for (int i = 0; i < elites; ++i)
                freq += population[static_cast<size_t>(i)].second.actions[k] ? 1.0 : 0.0;
            freq /= elites;
            state.probs[k] =
                params.smoothing * freq + (1.0 - params.smoothing) * state.probs[k];
        }

        bool degenerate = true;
        for (double p : state.probs)
            if (p > params.degenerate_eps && p < 1.0 - params.degenerate_eps) degenerate = false;
        if (degenerate) break;
    }
    if (result.best.months == 0) result.best = MaintenanceSchedule::empty(months, num_lines);
    return result;
}

CeResult cross_entropy_optimize(const GridCase& c, const InnerPolicy& policy,
                                const mts::SamplerSpec& spec, const MtConstraints& constraints,
                                const CeParams& params, std::uint64_t seed,
                                exec::ThreadPool* pool) {
    const int months = spec.months;
    const int nl = c.num_lines();
    // Common random numbers: every schedule is scored with the same
    // evaluation seed, so population comparisons share their noise.
    const std::uint64_t eval_seed = derive_seed(seed, {0xCE});
    ScheduleObjective objective = [&, pool](const MaintenanceSchedule& s) {
        ScheduleEvaluation e = evaluate_schedule(c, s, policy, spec, constraints, eval_seed, pool);
        double cost = e.total_cost;
        if (!e.chance_ok || !e.achievability_ok) cost += policy.fine_for(c);
        return cost;
    };
    return cross_entropy_optimize(months, nl, objective, params, seed);
}

namespace {

MaintenanceSchedule baseline_from_rule(
    const GridCase& c, int months,
    const std::function<int(const std::vector<double>& ages, const std::vector<int>& used)>& pick) {
    const int nl = c.num_lines();
    MaintenanceSchedule s = MaintenanceSchedule::empty(months, nl);
    std::vector<double> ages(static_cast<size_t>(nl));
    for (int l = 0; l < nl; ++l) ages[static_cast<size_t>(l)] = c.lines[static_cast<size_t>(l)].initial_age_hours;
    std::vector<int> used(static_cast<size_t>(nl), 0);
    for (int m = 0; m < months; ++m) {
        const int choice = pick(ages, used);
        if (choice >= 0) {
            s.set(m, choice, true);
            ages[static_cast<size_t>(choice)] = 0.0;
            ++used[static_cast<size_t>(choice)];
        }
        for (auto& a : ages) a += 30.0 * 24.0;
    }
    return s;
}

} // namespace

MaintenanceSchedule baseline_oldest_first(const GridCase& c, int months) {
    return baseline_from_rule(c, months, [](const std::vector<double>& ages,
                                            const std::vector<int>& used) {
        int best = -1;
        for (size_t l = 0; l < ages.size(); ++l) {
            if (used[l] > 0) continue;
            if (best < 0 || ages[l] > ages[static_cast<size_t>(best)]) best = static_cast<int>(l);
        }
        return best;
    });
}

MaintenanceSchedule baseline_age_threshold(const GridCase& c, int months, double threshold_hours) {
    return baseline_from_rule(
        c, months, [threshold_hours](const std::vector<double>& ages, const std::vector<int>& used) {
            int best = -1;
            for (size_t l = 0; l < ages.size(); ++l) {
                if (used[l] > 0 || ages[l] < threshold_hours) continue;
                if (best < 0 || ages[l] > ages[static_cast<size_t>(best)])
                    best = static_cast<int>(l);
            }
            return best;
        });
}

MaintenanceSchedule baseline_cyclic(const GridCase& c, int months) {
    const int nl = c.num_lines();
    MaintenanceSchedule s = MaintenanceSchedule::empty(months, nl);
    for (int m = 0; m < months && m < nl; ++m) s.set(m, m % nl, true);
    return s;
}

} // namespace rm::mto
