#include "rm/rt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rm/errors.hpp"
#include "rm/solver.hpp"

namespace rm::rt {

using grid::GridCase;
using grid::Topology;

const Contingency* ContingencyModel::find(int id) const {
    for (const auto& e : events)
        if (e.id == id) return &e;
    return nullptr;
}

double ContingencyModel::probability_of(int id) const {
    const Contingency* e = find(id);
    if (!e) throw UnknownEvent("unknown contingency id " + std::to_string(id));
    return e->probability;
}

std::vector<std::string> ContingencyModel::validate(int num_lines) const {
    std::vector<std::string> v;
    double sum = 0.0;
    std::vector<int> ids;
    bool has_zero = false;
    for (const auto& e : events) {
        sum += e.probability;
        ids.push_back(e.id);
        if (e.probability < 0.0 || e.probability > 1.0)
            v.push_back("event " + std::to_string(e.id) + " probability outside [0,1]");
        if (static_cast<int>(e.line_out_mask.size()) != num_lines)
            v.push_back("event " + std::to_string(e.id) + " mask width mismatch");
        if (e.id == 0) {
            has_zero = true;
            for (auto b : e.line_out_mask)
                if (b) v.push_back("event 0 must have an empty outage mask");
        }
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) v.push_back("duplicate event id");
    if (!has_zero) v.push_back("missing the no-contingency pseudo-event (id 0)");
    if (std::abs(sum - 1.0) > 1e-9) v.push_back("event probabilities sum to " + std::to_string(sum));
    return v;
}

namespace {

double line_failure_prob(const grid::Line& l, double fallback) {
    if (l.life) return failure_probability(*l.life, 0.0);
    return fallback;
}

} // namespace

ContingencyModel n_minus_1_universe(const GridCase& c, double default_line_prob) {
    ContingencyModel m;
    const int nl = c.num_lines();
    double rest = 0.0;
    m.events.push_back({0, std::vector<std::uint8_t>(nl, 0), 0.0});
    for (int i = 0; i < nl; ++i) {
        std::vector<std::uint8_t> mask(nl, 0);
        mask[i] = 1;
        const double p = line_failure_prob(c.lines[i], default_line_prob);
        m.events.push_back({i + 1, std::move(mask), p});
        rest += p;
    }
    m.events[0].probability = 1.0 - rest;
    return m;
}

ContingencyModel n_minus_2_universe(const GridCase& c, int max_pairs, double default_line_prob) {
    ContingencyModel m = n_minus_1_universe(c, default_line_prob);
    const int nl = c.num_lines();
    struct Pair {
        int i, j;
        double p;
    };
    std::vector<Pair> pairs;
    for (int i = 0; i < nl; ++i)
        for (int j = i + 1; j < nl; ++j)
            pairs.push_back({i, j,
                             line_failure_prob(c.lines[i], default_line_prob) *
                                 line_failure_prob(c.lines[j], default_line_prob)});
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return a.p > b.p;
    });
    if (max_pairs >= 0 && static_cast<int>(pairs.size()) > max_pairs) pairs.resize(max_pairs);
    int next_id = nl + 1;
    double extra = 0.0;
    for (const Pair& pr : pairs) {
        std::vector<std::uint8_t> mask(nl, 0);
        mask[pr.i] = 1;
        mask[pr.j] = 1;
        m.events.push_back({next_id++, std::move(mask), pr.p});
        extra += pr.p;
    }
    m.events[0].probability -= extra;
    return m;
}

ContingencyModel scale_failure_rates(const ContingencyModel& m, double factor) {
    ContingencyModel out = m;
    double sum = 0.0;
    for (auto& e : out.events)
        if (e.id != 0) sum += (e.probability *= factor);
    if (sum > 1.0) { // keep a proper distribution under aggressive multipliers
        for (auto& e : out.events)
            if (e.id != 0) e.probability /= sum;
        sum = 1.0;
    }
    for (auto& e : out.events)
        if (e.id == 0) e.probability = 1.0 - sum;
    return out;
}

Snapshot snapshot_at_hour(const GridCase& c, int hour, double load_scale, double wind_scale) {
    return Snapshot{c.load_at_hour(hour, load_scale), c.wind_mean_at_hour(hour, wind_scale)};
}

double criticality(const GridCase& c, const Snapshot& snap, const Topology& post_event,
                   double cr_max, const std::optional<std::vector<double>>& fixed_generation) {
    auto sol = grid::min_shed_dispatch(c, post_event, snap.load_mw, snap.wind_mw, fixed_generation);
    if (!sol) return cr_max;
    // One-hour real-time interval: MW shed == MWh of unserved energy.
    return sol->total_shed() * c.voll;
}

double residual_risk(const ContingencyModel& model, const std::vector<int>& subset,
                     const std::map<int, double>& criticality_of) {
    for (int id : subset)
        if (!model.find(id)) throw UnknownEvent("subset references unknown event " + std::to_string(id));
    double r = 0.0;
    for (const auto& e : model.events) {
        if (std::find(subset.begin(), subset.end(), e.id) != subset.end()) continue;
        auto it = criticality_of.find(e.id);
        if (it == criticality_of.end())
            throw UnknownEvent("criticality missing for excluded event " + std::to_string(e.id));
        r += e.probability * it->second;
    }
    return r;
}

std::vector<int> select_subset_pessimistic(const ContingencyModel& model, const RtParams& params) {
    const double threshold = 1.0 - params.delta_e / params.cr_max;
    std::vector<const Contingency*> order;
    for (const auto& e : model.events)
        if (e.id != 0) order.push_back(&e);
    std::sort(order.begin(), order.end(), [](const Contingency* a, const Contingency* b) {
        if (a->probability != b->probability) return a->probability > b->probability;
        return a->id < b->id;
    });
    std::vector<int> subset{0};
    double coverage = model.probability_of(0);
    for (const Contingency* e : order) {
        if (coverage >= threshold - 1e-12) break;
        subset.push_back(e->id);
        coverage += e->probability;
    }
    std::sort(subset.begin(), subset.end());
    return subset;
}

namespace {

using solver::kInf;
using solver::LinearProgram;
using solver::Rel;
using solver::SolveResult;
using solver::Status;

struct EventVars {
    int theta0 = -1, shed0 = -1, spill0 = -1, curt0 = -1;
    int uc_up0 = -1, uc_dn0 = -1; // corrective movement, when enabled
};

struct CoreInput {
    const GridCase* c;
    const Snapshot* snap;
    std::vector<std::uint8_t> committed;
    std::vector<double> base;
    Topology base_topo;
    const RtParams* params;
};

// Adds one post-state block (angles, shed, spill, curtail and the balance and
// line-limit rows) where the nodal generation is expr_gen(g) = sum of
// (var, coeff) terms. Returns the block's variable layout.
EventVars add_state_block(LinearProgram& lp, const CoreInput& in, const Topology& topo,
                          const std::function<std::vector<std::pair<int, double>>(int g)>& gen_terms,
                          double shed_cost, bool allow_shed, double rating_factor,
                          bool priced_spill = false) {
    const GridCase& c = *in.c;
    EventVars ev;
    const int n = c.num_buses();
    const int ng = static_cast<int>(c.generators.size());
    const int nw = static_cast<int>(c.wind_units.size());
    const int ref = c.bus_index(c.reference_bus);

    ev.theta0 = lp.num_vars();
    for (int b = 0; b < n; ++b) lp.add_var(b == ref ? 0.0 : -kInf, b == ref ? 0.0 : kInf, 0.0);
    if (allow_shed) {
        ev.shed0 = lp.num_vars();
        for (int b = 0; b < n; ++b)
            lp.add_var(0.0, std::max(0.0, in.snap->load_mw[b]), shed_cost);
    }
    ev.spill0 = lp.num_vars();
    for (int g = 0; g < ng; ++g)
        lp.add_var(0.0, in.committed[static_cast<size_t>(g)] ? c.generators[g].pmax : 0.0,
                   priced_spill ? c.generators[g].cost_linear : 1e-9);
    ev.curt0 = lp.num_vars();
    for (int w = 0; w < nw; ++w) lp.add_var(0.0, in.snap->wind_mw[w], 1e-9);

    for (int b = 0; b < n; ++b) {
        std::vector<std::pair<int, double>> terms;
        for (int li = 0; li < c.num_lines(); ++li) {
            if (!topo.up(li)) continue;
            const int f = c.bus_index(c.lines[li].from_bus);
            const int t = c.bus_index(c.lines[li].to_bus);
            const double s = c.lines[li].susceptance;
            if (f == b) {
                terms.emplace_back(ev.theta0 + f, s);
                terms.emplace_back(ev.theta0 + t, -s);
            } else if (t == b) {
                terms.emplace_back(ev.theta0 + t, s);
                terms.emplace_back(ev.theta0 + f, -s);
            }
        }
        double rhs = -in.snap->load_mw[b];
        for (int g = 0; g < ng; ++g) {
            if (c.bus_index(c.generators[g].bus) != b) continue;
            for (auto [var, coeff] : gen_terms(g)) terms.emplace_back(var, -coeff);
            terms.emplace_back(ev.spill0 + g, 1.0);
        }
        for (int w = 0; w < nw; ++w) {
            if (c.bus_index(c.wind_units[w].bus) != b) continue;
            terms.emplace_back(ev.curt0 + w, 1.0);
            rhs += in.snap->wind_mw[w];
        }
        if (ev.shed0 >= 0) terms.emplace_back(ev.shed0 + b, -1.0);
        lp.add_row(terms, Rel::Eq, rhs);
    }
    for (int li = 0; li < c.num_lines(); ++li) {
        if (!topo.up(li)) continue;
        const int f = c.bus_index(c.lines[li].from_bus);
        const int t = c.bus_index(c.lines[li].to_bus);
        const double s = c.lines[li].susceptance;
        const double cap = c.lines[li].rating * rating_factor;
        lp.add_row({{ev.theta0 + f, s}, {ev.theta0 + t, -s}}, Rel::Le, cap);
        lp.add_row({{ev.theta0 + f, s}, {ev.theta0 + t, -s}}, Rel::Ge, -cap);
    }
    return ev;
}

struct CoreOutcome {
    bool feasible = false;
    RtDecision decision;
    double lp_objective = 0.0;                 // C_0 + base costs + enforced criticality terms
    std::map<int, double> enforced_criticality; // expected over behaviors where applicable
    double preventive_cost = 0.0;
    double base_shed_mw = 0.0;
    double base_curtail_mw = 0.0;
};

// Shared preventive/corrective solve for a fixed enforce-set. `behaviors`
// null means preventive-only.
CoreOutcome solve_core(const CoreInput& in, const ContingencyModel& model,
                       const std::vector<int>& enforce, const CorrectiveBehaviorModel* behaviors) {
    const GridCase& c = *in.c;
    const RtParams& p = *in.params;
    const int ng = static_cast<int>(c.generators.size());
    const int nbus = c.num_buses();

    LinearProgram lp;
    // Base-point generation and the redispatch split P = base + up - dn.
    const int P0 = lp.num_vars();
    for (int g = 0; g < ng; ++g) {
        const bool on = in.committed[static_cast<size_t>(g)] != 0;
        lp.add_var(on ? c.generators[g].pmin : 0.0, on ? c.generators[g].pmax : 0.0, 0.0);
    }
    const int up0 = lp.num_vars();
    for (int g = 0; g < ng; ++g) lp.add_var(0.0, kInf, c.generators[g].cost_linear);
    const int dn0 = lp.num_vars();
    for (int g = 0; g < ng; ++g) lp.add_var(0.0, kInf, c.generators[g].cost_linear);
    for (int g = 0; g < ng; ++g)
        lp.add_row({{P0 + g, 1.0}, {up0 + g, -1.0}, {dn0 + g, 1.0}}, Rel::Eq, in.base[g]);

    const Topology& base_topo = in.base_topo;
    auto own_gen = [&](int g) {
        return std::vector<std::pair<int, double>>{{P0 + g, 1.0}};
    };

    // Normal-operation state: hard h. Spill here is an operating decision,
    // so it carries the unit's energy price instead of the emergency nudge.
    EventVars base_block =
        add_state_block(lp, in, base_topo, own_gen, c.voll, p.allow_shed_base, 1.0,
                        /*priced_spill=*/true);
    // Base shed/curtail are real delivered-energy costs, not criticality.
    if (base_block.curt0 >= 0)
        for (size_t w = 0; w < c.wind_units.size(); ++w)
            lp.cost[base_block.curt0 + static_cast<int>(w)] = c.wind_curtail_cost;

    struct EventBlock {
        int event_id;
        double pi;
        std::vector<std::pair<double, EventVars>> behavior_blocks; // (pi_b * weight, vars)
        int uc_up0 = -1, uc_dn0 = -1;
    };
    std::vector<EventBlock> blocks;

    for (int id : enforce) {
        if (id == 0) continue;
        const Contingency* e = model.find(id);
        if (!e) throw UnknownEvent("enforce-set references unknown event " + std::to_string(id));
        const Topology topo = grid::apply_outage(base_topo, e->line_out_mask);
        EventBlock blk;
        blk.event_id = id;
        blk.pi = e->probability;

        if (!behaviors) {
            EventVars ev = add_state_block(lp, in, topo, own_gen,
                                           p.allow_shed_post ? e->probability * c.voll : 0.0,
                                           p.allow_shed_post, 1.0);
            blk.behavior_blocks.push_back({e->probability, ev});
        } else {
            // Corrective movement bounded by the ramp box.
            blk.uc_up0 = lp.num_vars();
            for (int g = 0; g < ng; ++g)
                lp.add_var(0.0, p.ramp_fraction * c.generators[g].pmax,
                           e->probability * p.corrective_cost_rate);
            blk.uc_dn0 = lp.num_vars();
            for (int g = 0; g < ng; ++g)
                lp.add_var(0.0, p.ramp_fraction * c.generators[g].pmax,
                           e->probability * p.corrective_cost_rate);

            // Pre-corrective state: short-term ratings on the undisturbed
            // dispatch; its shed is transient and only nudged, not priced.
            add_state_block(lp, in, topo, own_gen, 1e-6 * c.voll, true,
                            p.short_term_rating_factor);

            auto it = behaviors->per_event.find(id);
            if (it == behaviors->per_event.end())
                throw UnknownEvent("behavior model missing event " + std::to_string(id));
            for (const Behavior& b : it->second) {
                auto gen_with_action = [&, eff = b.effectiveness](int g) {
                    std::vector<std::pair<int, double>> terms{{P0 + g, 1.0}};
                    if (eff != 0.0) {
                        terms.emplace_back(blk.uc_up0 + g, eff);
                        terms.emplace_back(blk.uc_dn0 + g, -eff);
                    }
                    return terms;
                };
                const double w = e->probability * b.probability;
                EventVars ev = add_state_block(lp, in, topo, gen_with_action,
                                               p.allow_shed_post ? w * c.voll : 0.0,
                                               p.allow_shed_post, 1.0);
                blk.behavior_blocks.push_back({w, ev});
            }
        }
        // Post-event corrective bounds also cap the ramp around the base
        // point: preventive redispatch already moved the unit, corrective acts
        // on top, both within generator limits (enforced by the P bounds and
        // ramp boxes above).
        blocks.push_back(std::move(blk));
    }

    SolveResult res = solver::solve_lp(lp);
    CoreOutcome out;
    if (res.status != Status::Optimal) return out;

    out.feasible = true;
    out.decision.dispatch.assign(ng, 0.0);
    out.decision.preventive.assign(ng, 0.0);
    out.decision.corrective_cost_rate = p.corrective_cost_rate;
    for (int g = 0; g < ng; ++g) {
        out.decision.dispatch[g] = res.x[P0 + g];
        out.decision.preventive[g] = res.x[P0 + g] - in.base[g];
    }
    for (const auto& blk : blocks) {
        if (blk.uc_up0 >= 0) {
            std::vector<double> uc(ng, 0.0);
            for (int g = 0; g < ng; ++g) uc[g] = res.x[blk.uc_up0 + g] - res.x[blk.uc_dn0 + g];
            out.decision.corrective[blk.event_id] = std::move(uc);
        }
        double crit = 0.0;
        for (const auto& [w, ev] : blk.behavior_blocks) {
            if (ev.shed0 < 0) continue;
            double shed = 0.0;
            for (int b = 0; b < nbus; ++b) shed += res.x[ev.shed0 + b];
            crit += (w / blk.pi) * shed * c.voll; // conditional on the event
        }
        out.enforced_criticality[blk.event_id] = crit;
    }

    // Reassemble the economic objective without the tiny stabilization costs.
    double obj = 0.0;
    for (int g = 0; g < ng; ++g)
        out.preventive_cost += c.generators[g].cost_linear * (res.x[up0 + g] + res.x[dn0 + g]);
    obj += out.preventive_cost;
    if (base_block.shed0 >= 0)
        for (int b = 0; b < nbus; ++b) out.base_shed_mw += res.x[base_block.shed0 + b];
    if (base_block.curt0 >= 0)
        for (size_t w = 0; w < c.wind_units.size(); ++w)
            out.base_curtail_mw += res.x[base_block.curt0 + static_cast<int>(w)];
    obj += c.voll * out.base_shed_mw + c.wind_curtail_cost * out.base_curtail_mw;
    for (const auto& blk : blocks) {
        if (blk.uc_up0 >= 0) {
            double move = 0.0;
            for (int g = 0; g < ng; ++g)
                move += res.x[blk.uc_up0 + g] + res.x[blk.uc_dn0 + g];
            obj += blk.pi * p.corrective_cost_rate * move;
        }
        obj += blk.pi * out.enforced_criticality[blk.event_id];
    }
    out.lp_objective = obj;
    return out;
}

CoreInput make_input(const GridCase& c, const Snapshot& snap, const RtParams& params,
                     const RtContext& ctx) {
    CoreInput in;
    in.c = &c;
    in.snap = &snap;
    in.params = &params;
    in.committed = ctx.committed.empty() ? std::vector<std::uint8_t>(c.generators.size(), 1)
                                         : ctx.committed;
    in.base_topo = ctx.base_topology.line_status.empty() ? grid::all_lines_up(c)
                                                         : ctx.base_topology;
    in.base = ctx.base_dispatch.empty()
                  ? economic_base_dispatch(c, snap, in.committed, in.base_topo)
                  : ctx.base_dispatch;
    return in;
}

// Enumerates enforce-sets meeting the chance budget and returns the best
// outcome. Shared by the preventive and corrective entry points.
std::pair<RtDecision, RtReport>
solve_rmac(const GridCase& c, const Snapshot& snap, const ContingencyModel& model,
           const std::vector<int>& subset, const RtParams& params, const RtContext& ctx,
           const CorrectiveBehaviorModel* behaviors) {
    if (std::find(subset.begin(), subset.end(), 0) == subset.end())
        throw ValidationError({"retained subset must include the no-contingency event"});

    CoreInput in = make_input(c, snap, params, ctx);

    std::vector<const Contingency*> nonzero;
    double pi_sum = 0.0;
    for (int id : subset) {
        if (id == 0) continue;
        const Contingency* e = model.find(id);
        if (!e) throw UnknownEvent("subset references unknown event " + std::to_string(id));
        nonzero.push_back(e);
        pi_sum += e->probability;
    }
    const double coverage_target = (1.0 - params.epsilon) * pi_sum;

    auto evaluate = [&](const std::vector<int>& enforce,
                        const std::vector<const Contingency*>& dropped)
        -> std::optional<std::pair<double, CoreOutcome>> {
        CoreOutcome out = solve_core(in, model, enforce, behaviors);
        if (!out.feasible) return std::nullopt;
        double total = out.lp_objective;
        for (const Contingency* e : dropped) {
            const Topology topo = grid::apply_outage(in.base_topo, e->line_out_mask);
            const double crit = criticality(c, snap, topo, params.cr_max, out.decision.dispatch);
            out.enforced_criticality[e->id] = crit;
            total += e->probability * crit;
        }
        return std::make_pair(total, std::move(out));
    };

    std::optional<std::pair<double, CoreOutcome>> best;
    const int k = static_cast<int>(nonzero.size());

    if (params.epsilon <= 0.0 || k == 0) {
        std::vector<int> enforce{0};
        for (const Contingency* e : nonzero) enforce.push_back(e->id);
        best = evaluate(enforce, {});
    } else if (k <= params.enumeration_limit) {
        for (std::uint64_t mask = 0; mask < (1ULL << k); ++mask) {
            double coverage = 0.0;
            std::vector<int> enforce{0};
            std::vector<const Contingency*> dropped;
            for (int i = 0; i < k; ++i) {
                if ((mask >> i) & 1ULL) {
                    dropped.push_back(nonzero[i]);
                } else {
                    enforce.push_back(nonzero[i]->id);
                    coverage += nonzero[i]->probability;
                }
            }
            if (coverage < coverage_target - 1e-12) continue;
            auto cand = evaluate(enforce, dropped);
            if (cand && (!best || cand->first < best->first - 1e-9)) best = std::move(cand);
        }
    } else {
        // Greedy drop of the event whose removal helps the objective most.
        std::vector<std::uint8_t> kept(k, 1);
        double coverage = pi_sum;
        auto current_sets = [&]() {
            std::vector<int> enforce{0};
            std::vector<const Contingency*> dropped;
            for (int i = 0; i < k; ++i)
                (kept[i] ? enforce.push_back(nonzero[i]->id)
                         : dropped.push_back(nonzero[i]));
            return std::make_pair(enforce, dropped);
        };
        auto [enf, drp] = current_sets();
        best = evaluate(enf, drp);
        bool improved = true;
        while (improved) {
            improved = false;
            int pick = -1;
            std::optional<std::pair<double, CoreOutcome>> pick_out;
            for (int i = 0; i < k; ++i) {
                if (!kept[i]) continue;
                if (coverage - nonzero[i]->probability < coverage_target - 1e-12) continue;
                kept[i] = 0;
                auto [e2, d2] = current_sets();
                auto cand = evaluate(e2, d2);
                kept[i] = 1;
                if (cand && (!pick_out || cand->first < pick_out->first - 1e-9)) {
                    pick = i;
                    pick_out = std::move(cand);
                }
            }
            if (pick >= 0 && (!best || pick_out->first < best->first - 1e-9)) {
                kept[pick] = 0;
                coverage -= nonzero[pick]->probability;
                best = std::move(pick_out);
                improved = true;
            }
        }
    }

    if (!best)
        throw ValidationError({"rt rmac infeasible even under the relaxed chance constraint"});

    RtDecision decision = best->second.decision;
    RtReport report;
    report.objective = best->first;
    report.preventive_cost = best->second.preventive_cost;
    report.base_shed_mw = best->second.base_shed_mw;
    report.base_curtail_mw = best->second.base_curtail_mw;
    report.subset = subset;
    std::sort(report.subset.begin(), report.subset.end());
    report.per_event_criticality = best->second.enforced_criticality;

    // Exact residual over the events outside the retained subset.
    double residual = 0.0;
    for (const auto& e : model.events) {
        if (std::find(subset.begin(), subset.end(), e.id) != subset.end()) continue;
        const Topology topo = grid::apply_outage(in.base_topo, e.line_out_mask);
        const double crit = criticality(c, snap, topo, params.cr_max, decision.dispatch);
        report.per_event_criticality[e.id] = crit;
        residual += e.probability * crit;
    }
    report.residual_risk = residual;
    return {std::move(decision), std::move(report)};
}

} // namespace

std::pair<RtDecision, RtReport>
rt_rmac_preventive(const GridCase& c, const Snapshot& snap, const ContingencyModel& model,
                   const std::vector<int>& subset, const RtParams& params, const RtContext& ctx) {
    return solve_rmac(c, snap, model, subset, params, ctx, nullptr);
}

std::vector<std::string> CorrectiveBehaviorModel::validate(const std::vector<int>& subset) const {
    std::vector<std::string> v;
    for (int id : subset) {
        if (id == 0) continue;
        auto it = per_event.find(id);
        if (it == per_event.end()) {
            v.push_back("no behaviors for event " + std::to_string(id));
            continue;
        }
        double sum = 0.0;
        for (const Behavior& b : it->second) {
            sum += b.probability;
            if (b.effectiveness < 0.0 || b.effectiveness > 1.0)
                v.push_back("behavior effectiveness outside [0,1] for event " + std::to_string(id));
        }
        if (std::abs(sum - 1.0) > 1e-9)
            v.push_back("behavior probabilities for event " + std::to_string(id) + " sum to " +
                        std::to_string(sum));
    }
    return v;
}

std::pair<RtDecision, RtReport>
rt_rmac_corrective(const GridCase& c, const Snapshot& snap, const ContingencyModel& model,
                   const std::vector<int>& subset, const RtParams& params,
                   const CorrectiveBehaviorModel& behaviors, const RtContext& ctx) {
    const auto problems = behaviors.validate(subset);
    if (!problems.empty()) throw ValidationError(problems);
    return solve_rmac(c, snap, model, subset, params, ctx, &behaviors);
}

namespace {

std::pair<std::vector<int>, RtReport>
grow_subset(const GridCase& c, const Snapshot& snap, const ContingencyModel& model,
            const RtParams& params, const RtContext& ctx, RmacSolveFn solve_fn, int exact_count) {
    if (!solve_fn) {
        solve_fn = [&](const std::vector<int>& subset) {
            return rt_rmac_preventive(c, snap, model, subset, params, ctx);
        };
    }

    // Start from the clearly-likely events: probability at least ten times
    // the median across contingencies, plus normal operation.
    std::vector<double> probs;
    for (const auto& e : model.events)
        if (e.id != 0) probs.push_back(e.probability);
    double median = 0.0;
    if (!probs.empty()) {
        std::sort(probs.begin(), probs.end());
        median = probs[probs.size() / 2];
    }
    std::vector<int> subset{0};
    for (const auto& e : model.events)
        if (e.id != 0 && e.probability >= 10.0 * median) subset.push_back(e.id);

    const int max_iters = static_cast<int>(model.events.size());
    RtReport last;
    for (int iter = 1; iter <= max_iters; ++iter) {
        auto [decision, report] = solve_fn(subset);
        report.iterations = iter;

        // Criticalities of the neglected events: exact for the top
        // `exact_count` by probability, cr_max for the rest.
        std::vector<const Contingency*> excluded;
        for (const auto& e : model.events)
            if (std::find(subset.begin(), subset.end(), e.id) == subset.end())
                excluded.push_back(&e);
        std::stable_sort(excluded.begin(), excluded.end(),
                         [](const Contingency* a, const Contingency* b) {
                             if (a->probability != b->probability)
                                 return a->probability > b->probability;
                             return a->id < b->id;
                         });
        double residual = 0.0;
        std::map<int, double> crit;
        for (size_t i = 0; i < excluded.size(); ++i) {
            double value;
            if (exact_count < 0 || static_cast<int>(i) < exact_count) {
                const Topology base = ctx.base_topology.line_status.empty()
                                          ? grid::all_lines_up(c)
                                          : ctx.base_topology;
                const Topology topo = grid::apply_outage(base, excluded[i]->line_out_mask);
                value = criticality(c, snap, topo, params.cr_max, decision.dispatch);
            } else {
                value = params.cr_max;
            }
            crit[excluded[i]->id] = value;
            report.per_event_criticality[excluded[i]->id] = value;
            residual += excluded[i]->probability * value;
        }
        report.residual_risk = residual;

        if (residual <= params.delta_e + 1e-12 || excluded.empty()) {
            std::sort(subset.begin(), subset.end());
            report.subset = subset;
            return {subset, report};
        }

        // Grow by the largest expected consequence; ties by lower id.
        const Contingency* pick = nullptr;
        double best = -1.0;
        for (const Contingency* e : excluded) {
            const double v = e->probability * crit[e->id];
            if (v > best + 1e-15 || (std::abs(v - best) <= 1e-15 && pick && e->id < pick->id)) {
                best = v;
                pick = e;
            }
        }
        subset.push_back(pick->id);
        last = report;
    }
    std::sort(subset.begin(), subset.end());
    last.subset = subset;
    return {subset, last};
}

} // namespace

std::pair<std::vector<int>, RtReport>
select_subset_iterative(const GridCase& c, const Snapshot& snap, const ContingencyModel& model,
                        const RtParams& params, const RtContext& ctx, RmacSolveFn solve_fn) {
    return grow_subset(c, snap, model, params, ctx, std::move(solve_fn), -1);
}

std::pair<std::vector<int>, RtReport>
select_subset_hybrid(const GridCase& c, const Snapshot& snap, const ContingencyModel& model,
                     const RtParams& params, const RtContext& ctx, RmacSolveFn solve_fn) {
    return grow_subset(c, snap, model, params, ctx, std::move(solve_fn),
                       params.hybrid_exact_count);
}

std::vector<double> economic_base_dispatch(const GridCase& c, const Snapshot& snap,
                                           const std::vector<std::uint8_t>& committed,
                                           const grid::Topology& topo) {
    const Topology t = topo.line_status.empty() ? grid::all_lines_up(c) : topo;
    auto sol0 = grid::min_shed_dispatch(c, t, snap.load_mw, snap.wind_mw);
    if (sol0) {
        // cheapest dispatch that serves what the network can carry
        auto sol = grid::dc_opf(c, t, snap.load_mw, snap.wind_mw, committed, /*allow_shed=*/true);
        return sol.generation;
    }
    return std::vector<double>(c.generators.size(), 0.0);
}

} // namespace rm::rt
