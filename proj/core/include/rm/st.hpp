#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rm/grid.hpp"
#include "rm/rt.hpp"

namespace rm::st {

/// Exogenous realization at a tree node: scale factors against the case
/// profiles plus a multiplier on per-line failure rates.
struct Xi {
    double load_scale = 1.0;
    double wind_scale = 1.0;
    double fail_mult = 1.0;
};

struct TreeNode {
    int id = 0;
    int stage = 0;   // 0 = root (planning point), stages 1..T are real-time intervals
    int parent = -1; // -1 at root
    double cond_prob = 1.0;
    Xi xi;
    std::vector<int> children;
};

struct ScenarioTree {
    std::vector<TreeNode> nodes;

    int depth() const;
    std::vector<int> leaves() const;
    double path_probability(int leaf) const;
    std::vector<int> path_to(int node) const; // root..node
    std::vector<std::string> validate() const;
};

struct TreeSpec {
    std::vector<int> branching;   // per stage, >= 1
    double load_sigma = 0.05;
    double wind_sigma = 0.15;
    double fail_mult_lo = 0.5;
    double fail_mult_hi = 2.0;
    /// Optional per-stage sibling weights; uniform when absent.
    std::vector<std::vector<double>> stage_weights;
};

/// Deterministic given the seed. Sibling realizations are sampled from the
/// configured distributions; conditional probabilities are uniform unless
/// stage weights are given.
ScenarioTree build_tree(const TreeSpec& spec, std::uint64_t seed);

/// Day-ahead plan: commitment pattern per generator over 24 slots plus a
/// reserve margin requirement.
struct PlanningDecision {
    std::vector<std::array<std::uint8_t, 24>> commitment; // per generator
    double reserve_margin_mw = 0.0;
    double direct_cost = 0.0; // C_P(u_p)

    std::vector<std::uint8_t> committed_at(int hour) const;
    std::vector<std::string> validate(const grid::GridCase& c) const;
};

struct StParams {
    double delta_e_rt = 0.0;
    double epsilon_rt = 0.0;
    double delta_e_op = 0.0;
    double big_m = 1e6;
};

/// Consequence of relaxing the real-time criterion: max(0, residual - dE_RT).
double delta_rt_star(double residual_risk, const StParams& params);

struct NodeState {
    Xi xi;
    int hour = 0; // hour-of-day the stage maps to
};

struct BigMResult {
    double delta = 0.0; // currency penalty actually incurred; 0 certifies feasibility
    double objective = 0.0;
    double coverage_shortfall = 0.0; // probability mass the chance constraint missed
    rt::RtDecision decision;
};

/// Solves the real-time problem with a slack on the chance constraint,
/// penalized by big_m. The retained subset is the smallest pessimistic one
/// for delta_e_rt. delta == 0 is sufficient (not necessary) for feasibility.
BigMResult rt_feasibility_bigm(const grid::GridCase& c, const NodeState& state,
                               const PlanningDecision& u_p, const StParams& params,
                               const rt::RtParams& rt_params,
                               const rt::ContingencyModel& base_model);

struct NodeOutcome {
    double w_rt = 0.0;
    double delta_star = 0.0; // currency, infinity when the node solve failed
    double residual = 0.0;
};

struct OpEvaluation {
    double expected_cost = 0.0; // C_P + expectation over retained scenarios
    std::map<int, NodeOutcome> node_outcomes;
    std::vector<int> discarded_leaves;
    double discarded_risk = 0.0; // accumulated contribution of dropped scenarios
    bool all_feasible = true;    // delta* == 0 on every retained node
    double total_delta = 0.0;
};

/// Walks the tree once (shared prefixes solved once, so decisions are
/// non-anticipative by construction), prices every node's real-time problem
/// conditioned on u_p and the parent dispatch, then discards the cheapest
/// slice of scenarios within the delta_e_op budget, lowest path probability
/// first.
OpEvaluation op_rmac_evaluate(const grid::GridCase& c, const ScenarioTree& tree,
                              const PlanningDecision& u_p, const StParams& params,
                              const rt::RtParams& rt_params,
                              const rt::ContingencyModel& base_model);

struct OpChoice {
    int candidate_index = -1;
    PlanningDecision decision;
    OpEvaluation evaluation;
    bool constraint_violated = false; // no candidate achieved delta* = 0 everywhere
};

/// Picks the cheapest candidate that keeps delta* at zero on every retained
/// node; falls back to the minimum-total-delta candidate with a violation
/// flag. Throws NoCandidates on an empty list.
OpChoice op_rmac_optimize(const grid::GridCase& c, const ScenarioTree& tree,
                          const std::vector<PlanningDecision>& candidates, const StParams& params,
                          const rt::RtParams& rt_params, const rt::ContingencyModel& base_model);

/// Commitment patterns over subsets of generators (constant across the day, so
/// min-up/down hold trivially), capped in count; direct cost = startup costs
/// of the units brought online.
std::vector<PlanningDecision> auto_candidates(const grid::GridCase& c, int cap = 256);

} // namespace rm::st
