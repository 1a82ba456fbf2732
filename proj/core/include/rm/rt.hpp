#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rm/grid.hpp"

namespace rm::rt {

/// One outage event. Event 0 is the pseudo-event of normal operation with an
/// empty mask.
struct Contingency {
    int id = 0;
    std::vector<std::uint8_t> line_out_mask;
    double probability = 0.0;
};

struct ContingencyModel {
    std::vector<Contingency> events;

    const Contingency* find(int id) const;
    double probability_of(int id) const;
    std::vector<std::string> validate(int num_lines) const;
};

/// c=0 plus every single line outage. Per-line probabilities come from the
/// line life model at age zero when present, otherwise default_line_prob.
ContingencyModel n_minus_1_universe(const grid::GridCase& c, double default_line_prob = 1e-4);

/// As above plus all line pairs, capped at max_pairs (ordered by probability
/// product descending, ties by index). Pair probability is the product of the
/// single-line probabilities; the no-event probability absorbs the residual.
ContingencyModel n_minus_2_universe(const grid::GridCase& c, int max_pairs,
                                    double default_line_prob = 1e-4);

/// Rescales per-event probabilities by `factor` (event 0 absorbs the slack).
ContingencyModel scale_failure_rates(const ContingencyModel& m, double factor);

enum class SubsetMode { Pessimistic, Iterative, Hybrid };

struct RtParams {
    double delta_e = 0.0; // accuracy limit on residual risk, currency
    double epsilon = 0.0; // chance-constraint relaxation in [0,1]
    double cr_max = 1.0;  // criticality ceiling, currency
    SubsetMode subset_mode = SubsetMode::Pessimistic;
    int hybrid_exact_count = 0;

    double ramp_fraction = 0.5;         // corrective redispatch bound, fraction of pmax
    double corrective_cost_rate = 1.0;  // currency/MWh of corrective movement
    double short_term_rating_factor = 1.2; // pre-corrective line loading allowance
    bool allow_shed_base = true;
    bool allow_shed_post = true;
    int enumeration_limit = 12; // epsilon>0 subset enumeration cutoff
};

/// Operating point the real-time problem is solved against.
struct Snapshot {
    std::vector<double> load_mw; // per bus
    std::vector<double> wind_mw; // per wind unit
};

Snapshot snapshot_at_hour(const grid::GridCase& c, int hour, double load_scale = 1.0,
                          double wind_scale = 1.0);

/// Commitment, the market base point the redispatch is priced against, and
/// the pre-event network state (maintenance or earlier failures).
struct RtContext {
    std::vector<std::uint8_t> committed;   // per generator; empty = all on
    std::vector<double> base_dispatch;     // per generator; empty = economic dispatch
    grid::Topology base_topology;          // empty = all lines in service
};

struct RtDecision {
    std::vector<double> preventive;                   // u_0, per-gen MW from base
    std::map<int, std::vector<double>> corrective;    // u_c per retained event
    double corrective_cost_rate = 0.0;
    std::vector<double> dispatch;                     // base-point generation after u_0
};

struct RtReport {
    double objective = 0.0; // W over the retained subset
    std::vector<int> subset;
    double residual_risk = 0.0;
    std::map<int, double> per_event_criticality;
    int iterations = 1;

    // components of the no-contingency state, for cost accounting
    double preventive_cost = 0.0; // C_0: priced |u_0|
    double base_shed_mw = 0.0;
    double base_curtail_mw = 0.0;
};

/// Post-event consequence in currency: shed energy x VOLL from the minimum
/// shed evaluation on the post-event topology, or cr_max when no dispatch
/// satisfies the constraints. When `fixed_generation` is given the event is
/// assessed without redispatch (preventive-only world); otherwise generators
/// move freely within bounds.
double criticality(const grid::GridCase& c, const Snapshot& snap, const grid::Topology& post_event,
                   double cr_max,
                   const std::optional<std::vector<double>>& fixed_generation = std::nullopt);

/// Sum over events outside `subset` of probability x criticality. Throws
/// UnknownEvent when `subset` names an id missing from the model.
double residual_risk(const ContingencyModel& model, const std::vector<int>& subset,
                     const std::map<int, double>& criticality_of);

/// Smallest subset whose probability mass reaches 1 - delta_e/cr_max, grown in
/// descending probability order. Event 0 is always included.
std::vector<int> select_subset_pessimistic(const ContingencyModel& model, const RtParams& params);

using RmacSolveFn =
    std::function<std::pair<RtDecision, RtReport>(const std::vector<int>& subset)>;

std::pair<std::vector<int>, RtReport>
select_subset_iterative(const grid::GridCase& c, const Snapshot& snap, const ContingencyModel& model,
                        const RtParams& params, const RtContext& ctx = {},
                        RmacSolveFn solve_fn = {});

/// As iterative, but exact criticalities are computed only for the
/// hybrid_exact_count highest-probability excluded events; the rest use cr_max.
std::pair<std::vector<int>, RtReport>
select_subset_hybrid(const grid::GridCase& c, const Snapshot& snap, const ContingencyModel& model,
                     const RtParams& params, const RtContext& ctx = {}, RmacSolveFn solve_fn = {});

/// Preventive RMAC over the retained subset: one LP when epsilon = 0, an
/// enumeration (or greedy drop) over enforce-sets meeting the chance budget
/// when epsilon > 0. Throws ValidationError("infeasible...") when even the
/// relaxed problem admits no solution.
std::pair<RtDecision, RtReport>
rt_rmac_preventive(const grid::GridCase& c, const Snapshot& snap, const ContingencyModel& model,
                   const std::vector<int>& subset, const RtParams& params, const RtContext& ctx = {});

struct Behavior {
    double probability = 1.0;
    double effectiveness = 1.0; // scales the corrective action; 0 = complete failure
};

struct CorrectiveBehaviorModel {
    std::map<int, std::vector<Behavior>> per_event;
    std::vector<std::string> validate(const std::vector<int>& subset) const;
};

/// Joint preventive/corrective RMAC acknowledging corrective failure modes.
std::pair<RtDecision, RtReport>
rt_rmac_corrective(const grid::GridCase& c, const Snapshot& snap, const ContingencyModel& model,
                   const std::vector<int>& subset, const RtParams& params,
                   const CorrectiveBehaviorModel& behaviors, const RtContext& ctx = {});

/// Economic dispatch used as the market base point for redispatch pricing.
std::vector<double> economic_base_dispatch(const grid::GridCase& c, const Snapshot& snap,
                                           const std::vector<std::uint8_t>& committed,
                                           const grid::Topology& topo = {});

} // namespace rm::rt
