#include "rm/st.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rm/errors.hpp"
#include "rm/rng.hpp"

namespace rm::st {

using grid::GridCase;

int ScenarioTree::depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.stage);
    return d;
}

std::vector<int> ScenarioTree::leaves() const {
    std::vector<int> out;
    for (const auto& n : nodes)
        if (n.children.empty()) out.push_back(n.id);
    return out;
}

double ScenarioTree::path_probability(int leaf) const {
    double p = 1.0;
    int id = leaf;
    while (id >= 0) {
        p *= nodes[static_cast<size_t>(id)].cond_prob;
        id = nodes[static_cast<size_t>(id)].parent;
    }
    return p;
}

std::vector<int> ScenarioTree::path_to(int node) const {
    std::vector<int> path;
    int id = node;
    while (id >= 0) {
        path.push_back(id);
        id = nodes[static_cast<size_t>(id)].parent;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<std::string> ScenarioTree::validate() const {
    std::vector<std::string> v;
    if (nodes.empty()) {
        v.push_back("empty tree");
        return v;
    }
    const int T = depth();
    for (const auto& n : nodes) {
        if (n.id != &n - nodes.data()) v.push_back("node ids must be dense and ordered");
        if (n.parent >= n.id) v.push_back("parent must precede child");
        if (!n.children.empty()) {
            double s = 0.0;
            for (int ch : n.children) s += nodes[static_cast<size_t>(ch)].cond_prob;
            if (std::abs(s - 1.0) > 1e-9)
                v.push_back("children of node " + std::to_string(n.id) + " have probability sum " +
                            std::to_string(s));
        } else if (n.stage != T) {
            v.push_back("leaf " + std::to_string(n.id) + " not at the final stage");
        }
    }
    double total = 0.0;
    for (int leaf : leaves()) total += path_probability(leaf);
    if (std::abs(total - 1.0) > 1e-9)
        v.push_back("leaf path probabilities sum to " + std::to_string(total));
    return v;
}

ScenarioTree build_tree(const TreeSpec& spec, std::uint64_t seed) {
    if (spec.branching.empty()) throw ValidationError({"branching must cover at least one stage"});
    for (int b : spec.branching)
        if (b < 1) throw ValidationError({"branching factors must be >= 1"});

    ScenarioTree tree;
    tree.nodes.push_back(TreeNode{0, 0, -1, 1.0, Xi{}, {}});
    std::vector<int> frontier{0};

    for (size_t stage = 0; stage < spec.branching.size(); ++stage) {
        const int k = spec.branching[stage];
        std::vector<double> weights(static_cast<size_t>(k), 1.0 / k);
        if (stage < spec.stage_weights.size() && !spec.stage_weights[stage].empty()) {
            if (static_cast<int>(spec.stage_weights[stage].size()) != k)
                throw ValidationError({"stage weight count does not match branching factor"});
            weights = spec.stage_weights[stage];
            double s = std::accumulate(weights.begin(), weights.end(), 0.0);
            if (std::abs(s - 1.0) > 1e-9)
                throw ValidationError({"stage weights must sum to 1"});
        }
        std::vector<int> next;
        for (int parent : frontier) {
            for (int sib = 0; sib < k; ++sib) {
                RngStream rng = make_stream(seed, {static_cast<std::uint64_t>(stage),
                                                   static_cast<std::uint64_t>(parent),
                                                   static_cast<std::uint64_t>(sib)});
                Xi xi;
                xi.load_scale = rng.truncated_normal(1.0, spec.load_sigma, 0.0, 10.0);
                xi.wind_scale = rng.truncated_normal(1.0, spec.wind_sigma, 0.0, 10.0);
                xi.fail_mult = std::exp(rng.uniform(std::log(spec.fail_mult_lo),
                                                    std::log(spec.fail_mult_hi)));
                TreeNode node;
                node.id = static_cast<int>(tree.nodes.size());
                node.stage = static_cast<int>(stage) + 1;
                node.parent = parent;
                node.cond_prob = weights[static_cast<size_t>(sib)];
                node.xi = xi;
                tree.nodes[static_cast<size_t>(parent)].children.push_back(node.id);
                tree.nodes.push_back(node);
                next.push_back(node.id);
            }
        }
        frontier = std::move(next);
    }
    return tree;
}

std::vector<std::uint8_t> PlanningDecision::committed_at(int hour) const {
    std::vector<std::uint8_t> on(commitment.size(), 1);
    for (size_t g = 0; g < commitment.size(); ++g)
        on[g] = commitment[g][static_cast<size_t>(hour % 24)];
    return on;
}

std::vector<std::string> PlanningDecision::validate(const GridCase& c) const {
    std::vector<std::string> v;
    if (commitment.size() != c.generators.size())
        v.push_back("commitment pattern count does not match generators");
    for (size_t g = 0; g < commitment.size() && g < c.generators.size(); ++g) {
        // Run lengths must respect min up/down, treating the day in isolation.
        const auto& pat = commitment[g];
        int run = 1;
        for (int h = 1; h <= 24; ++h) {
            if (h < 24 && pat[static_cast<size_t>(h)] == pat[static_cast<size_t>(h - 1)]) {
                ++run;
                continue;
            }
            const bool on = pat[static_cast<size_t>(h - 1)] != 0;
            const int need = on ? c.generators[g].min_up : c.generators[g].min_down;
            const bool at_edge = (h - run == 0) || (h == 24);
            if (run < need && !at_edge)
                v.push_back("generator " + c.generators[g].id +
                            (on ? " violates min_up" : " violates min_down"));
            run = 1;
        }
    }
    return v;
}

double delta_rt_star(double residual_risk, const StParams& params) {
    if (residual_risk < 0.0) throw ValidationError({"residual risk must be nonnegative"});
    return std::max(0.0, residual_risk - params.delta_e_rt);
}

namespace {

rt::Snapshot node_snapshot(const GridCase& c, const NodeState& state) {
    return rt::Snapshot{c.load_at_hour(state.hour, state.xi.load_scale),
                        c.wind_mean_at_hour(state.hour, state.xi.wind_scale)};
}

// Smallest pessimistic subset for the node's scaled contingency model.
std::vector<int> pessimistic_subset(const rt::ContingencyModel& model, double delta_e,
                                    double cr_max) {
    rt::RtParams p;
    p.delta_e = delta_e;
    p.cr_max = cr_max;
    return rt::select_subset_pessimistic(model, p);
}

} // namespace

BigMResult rt_feasibility_bigm(const GridCase& c, const NodeState& state,
                               const PlanningDecision& u_p, const StParams& params,
                               const rt::RtParams& rt_params,
                               const rt::ContingencyModel& base_model) {
    const rt::ContingencyModel model = rt::scale_failure_rates(base_model, state.xi.fail_mult);
    const rt::Snapshot snap = node_snapshot(c, state);
    const std::vector<int> subset =
        pessimistic_subset(model, params.delta_e_rt, rt_params.cr_max);

    rt::RtContext ctx;
    ctx.committed = u_p.committed_at(state.hour);

    // Enforce-sets over the retained events, best objective W + M * delta
    // where delta prices the coverage shortfall pessimistically at cr_max.
    double pi_sum = 0.0;
    std::vector<const rt::Contingency*> nonzero;
    for (int id : subset) {
        if (id == 0) continue;
        nonzero.push_back(model.find(id));
        pi_sum += model.probability_of(id);
    }
    const double target = (1.0 - params.epsilon_rt) * pi_sum;

    BigMResult best;
    bool have = false;
    const int k = static_cast<int>(nonzero.size());
    const std::uint64_t limit = k <= 12 ? (1ULL << k) : 1; // beyond 12 events enforce all
    for (std::uint64_t mask = 0; mask < limit; ++mask) {
        std::vector<int> enforce{0};
        double coverage = 0.0;
        for (int i = 0; i < k; ++i) {
            if ((mask >> i) & 1ULL) continue;
            enforce.push_back(nonzero[static_cast<size_t>(i)]->id);
            coverage += nonzero[static_cast<size_t>(i)]->probability;
        }
        rt::RtParams ep = rt_params;
        ep.epsilon = 0.0;
        std::pair<rt::RtDecision, rt::RtReport> sol;
        try {
            sol = rt::rt_rmac_preventive(c, snap, model, enforce, ep, ctx);
        } catch (const ValidationError&) {
            continue;
        }
        const double shortfall = std::max(0.0, target - coverage);
        const double delta = shortfall * rt_params.cr_max;
        const double total = sol.second.objective + params.big_m * delta;
        if (!have || total < best.objective - 1e-9) {
            best.objective = total;
            best.delta = delta;
            best.coverage_shortfall = shortfall;
            best.decision = sol.first;
            have = true;
        }
    }
    if (!have)
        throw ValidationError({"rt feasibility check: no enforce-set admits a solution"});
    return best;
}

namespace {

struct NodeSolve {
    double w_rt = 0.0;
    double delta = 0.0;
    double residual = 0.0;
    std::vector<double> dispatch;
    bool failed = false;
};

NodeSolve solve_node(const GridCase& c, const ScenarioTree& tree, int node_id,
                     const PlanningDecision& u_p, const StParams& params,
                     const rt::RtParams& rt_params, const rt::ContingencyModel& base_model,
                     const std::vector<double>& parent_dispatch) {
    const TreeNode& node = tree.nodes[static_cast<size_t>(node_id)];
    NodeState state{node.xi, node.stage - 1};
    const rt::ContingencyModel model = rt::scale_failure_rates(base_model, node.xi.fail_mult);
    const rt::Snapshot snap = node_snapshot(c, state);
    const std::vector<int> subset =
        pessimistic_subset(model, params.delta_e_rt, rt_params.cr_max);

    rt::RtContext ctx;
    ctx.committed = u_p.committed_at(state.hour);
    ctx.base_dispatch = parent_dispatch;

    NodeSolve out;
    try {
        auto [decision, report] = rt::rt_rmac_preventive(c, snap, model, subset, rt_params, ctx);
        out.w_rt = report.objective;
        out.residual = report.residual_risk;
        out.delta = delta_rt_star(report.residual_risk, params);
        out.dispatch = decision.dispatch;
    } catch (const ValidationError&) {
        out.failed = true;
        out.delta = std::numeric_limits<double>::infinity();
        out.w_rt = params.big_m; // sentinel cost for an unachievable node
        out.dispatch = parent_dispatch;
    }
    return out;
}

} // namespace

OpEvaluation op_rmac_evaluate(const GridCase& c, const ScenarioTree& tree,
                              const PlanningDecision& u_p, const StParams& params,
                              const rt::RtParams& rt_params,
                              const rt::ContingencyModel& base_model) {
    const auto tree_problems = tree.validate();
    if (!tree_problems.empty()) throw ValidationError(tree_problems);
    const auto up_problems = u_p.validate(c);
    if (!up_problems.empty()) throw ValidationError(up_problems);

    OpEvaluation eval;

    // Depth-first through the tree, each node conditioned on its parent
    // dispatch. Shared prefixes are solved exactly once.
    std::vector<std::vector<double>> dispatch_at(tree.nodes.size());
    {
        rt::Snapshot root_snap{c.load_at_hour(0), c.wind_mean_at_hour(0)};
        std::vector<std::uint8_t> committed = u_p.committed_at(0);
        dispatch_at[0] = rt::economic_base_dispatch(c, root_snap, committed);
    }
    for (const TreeNode& node : tree.nodes) {
        if (node.id == 0) continue;
        NodeSolve ns = solve_node(c, tree, node.id, u_p, params, rt_params, base_model,
                                  dispatch_at[static_cast<size_t>(node.parent)]);
        dispatch_at[static_cast<size_t>(node.id)] = ns.dispatch;
        NodeOutcome oc;
        oc.w_rt = ns.w_rt;
        oc.delta_star = ns.delta;
        oc.residual = ns.residual;
        eval.node_outcomes[node.id] = oc;
        if (ns.failed || ns.delta > 0.0) eval.all_feasible = false;
        if (std::isfinite(ns.delta)) eval.total_delta += ns.delta;
        else eval.total_delta += params.big_m;
    }

    // Path costs; then the discarding pass, lowest path probability first.
    struct PathCost {
        int leaf;
        double prob;
        double cost;
    };
    std::vector<PathCost> paths;
    for (int leaf : tree.leaves()) {
        double cost = 0.0;
        for (int id : tree.path_to(leaf)) {
            if (id == 0) continue;
            const NodeOutcome& oc = eval.node_outcomes.at(id);
            cost += oc.w_rt + (std::isfinite(oc.delta_star) ? oc.delta_star : params.big_m);
        }
        paths.push_back({leaf, tree.path_probability(leaf), cost});
    }
    std::stable_sort(paths.begin(), paths.end(), [](const PathCost& a, const PathCost& b) {
        if (a.prob != b.prob) return a.prob < b.prob;
        return a.leaf < b.leaf;
    });
    double budget = params.delta_e_op;
    double retained_cost = 0.0;
    for (const PathCost& p : paths) {
        const double contribution = p.prob * p.cost;
        if (budget > 0.0 && contribution <= budget + 1e-12 &&
            static_cast<int>(eval.discarded_leaves.size()) + 1 < static_cast<int>(paths.size())) {
            budget -= contribution;
            eval.discarded_leaves.push_back(p.leaf);
            eval.discarded_risk += contribution;
        } else {
            retained_cost += contribution;
        }
    }
    std::sort(eval.discarded_leaves.begin(), eval.discarded_leaves.end());
    eval.expected_cost = u_p.direct_cost + retained_cost;
    return eval;
}

OpChoice op_rmac_optimize(const GridCase& c, const ScenarioTree& tree,
                          const std::vector<PlanningDecision>& candidates, const StParams& params,
                          const rt::RtParams& rt_params, const rt::ContingencyModel& base_model) {
    if (candidates.empty()) throw NoCandidates("no planning candidates supplied");

    OpChoice best_feasible, best_any;
    bool have_feasible = false, have_any = false;
    for (size_t i = 0; i < candidates.size(); ++i) {
        OpEvaluation eval;
        try {
            eval = op_rmac_evaluate(c, tree, candidates[i], params, rt_params, base_model);
        } catch (const ValidationError&) {
            continue;
        }
        OpChoice choice;
        choice.candidate_index = static_cast<int>(i);
        choice.decision = candidates[i];
        choice.evaluation = eval;

        // Discarded scenarios are outside the retained set; feasibility is
        // judged on the retained nodes only.
        bool feasible = true;
        for (int leaf : tree.leaves()) {
            if (std::find(eval.discarded_leaves.begin(), eval.discarded_leaves.end(), leaf) !=
                eval.discarded_leaves.end())
                continue;
            for (int id : tree.path_to(leaf)) {
                if (id == 0) continue;
                if (eval.node_outcomes.at(id).delta_star > 1e-12) feasible = false;
            }
        }
        if (feasible &&
            (!have_feasible || eval.expected_cost < best_feasible.evaluation.expected_cost - 1e-9)) {
            best_feasible = choice;
            have_feasible = true;
        }
        if (!have_any || eval.total_delta < best_any.evaluation.total_delta - 1e-9 ||
            (std::abs(eval.total_delta - best_any.evaluation.total_delta) <= 1e-9 &&
             eval.expected_cost < best_any.evaluation.expected_cost - 1e-9)) {
            best_any = choice;
            have_any = true;
        }
    }
    if (have_feasible) return best_feasible;
    if (!have_any) throw NoCandidates("every candidate failed to evaluate");
    best_any.constraint_violated = true;
    return best_any;
}

std::vector<PlanningDecision> auto_candidates(const GridCase& c, int cap) {
    const size_t ng = c.generators.size();
    std::vector<PlanningDecision> out;
    const std::uint64_t total = ng >= 63 ? std::numeric_limits<std::uint64_t>::max()
                                         : (1ULL << ng);
    for (std::uint64_t mask = 1; mask < total && static_cast<int>(out.size()) < cap; ++mask) {
        PlanningDecision d;
        d.commitment.resize(ng);
        double cost = 0.0;
        for (size_t g = 0; g < ng; ++g) {
            const bool on = (mask >> g) & 1ULL;
            d.commitment[g].fill(on ? 1 : 0);
            if (on) cost += c.generators[g].startup_cost;
        }
        d.direct_cost = cost;
        out.push_back(std::move(d));
    }
    // Cheapest plans first so ties resolve toward less commitment.
    std::stable_sort(out.begin(), out.end(), [](const PlanningDecision& a, const PlanningDecision& b) {
        return a.direct_cost < b.direct_cost;
    });
    return out;
}

} // namespace rm::st
