#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rm/grid.hpp"
#include "rm/maintenance.hpp"
#include "rm/exec.hpp"
#include "rm/mt_scenario.hpp"
#include "rm/rt.hpp"

namespace rm::mto {

enum class PolicyMode { NMinusOne, Probabilistic };

/// Short-term + real-time decision procedure embedded in mid/long-term
/// evaluation.
struct InnerPolicy {
    PolicyMode mode = PolicyMode::NMinusOne;
    double delta_e_rt = 0.0; // Probabilistic mode: residual-risk accuracy limit
    double epsilon_rt = 0.0; // Probabilistic mode: chance relaxation
    bool escalation = true;
    double failure_fine = -1.0; // < 0: default 2 x peak load x 24h x VOLL
    int uc_block_hours = 8;     // commitment block length; must divide 24
    double default_line_fail_prob_per_hour = 1e-5;

    double fine_for(const grid::GridCase& c) const {
        return failure_fine >= 0.0 ? failure_fine : 2.0 * c.total_peak_load() * 24.0 * c.voll;
    }
};

struct UcResult {
    bool feasible = false;
    std::vector<std::vector<std::uint8_t>> commitment; // [hour][gen]
    std::vector<std::vector<double>> dispatch;         // [hour][gen]
    double objective = 0.0;    // fuel + startup + curtail + shed over the day
    double startup_cost = 0.0;
};

/// Day-ahead unit commitment over 24 hours: commitment binaries in blocks of
/// uc_block_hours, hourly dispatch, curtailment and (optionally) shedding,
/// min up/down constraints, and per-line-outage flow blocks when N-1 is on.
/// Line limits enter lazily as violated flow rows.
UcResult unit_commitment(const grid::GridCase& c, const grid::Topology& topo,
                         const std::vector<std::vector<double>>& load_forecast,
                         const std::vector<std::vector<double>>& wind_forecast,
                         const InnerPolicy& policy, bool enforce_n1, bool allow_shed,
                         const std::vector<std::uint8_t>& initial_commitment = {});

struct EscalationResult {
    int level = 0; // 0: N-1, no shed; 1: no N-1; 2: shed allowed; 3: fine paid
    UcResult uc;
    double fine = 0.0;
    bool achievable = true; // false at level 3
};

/// Ordered relaxation ladder: try N-1 without shedding, drop N-1, allow
/// shedding, and finally pay the fine and mark the state unachievable.
EscalationResult escalate(const grid::GridCase& c, const grid::Topology& topo,
                          const std::vector<std::vector<double>>& load_forecast,
                          const std::vector<std::vector<double>>& wind_forecast,
                          const InnerPolicy& policy,
                          const std::vector<std::uint8_t>& initial_commitment = {});

struct RtStepResult {
    double cost = 0.0; // fuel + redispatch penalty + shed + curtail (+ fine share)
    double shed_mw = 0.0;
    double redispatch_cost = 0.0;
    int escalation_level = 0;
    bool achievable = true;
    bool deviated = false;
    std::vector<double> dispatch;
};

/// Single-hour redispatch against the day-ahead plan at realized wind/load
/// and topology. Shedding under the plan triggers deviation mode: commitment
/// is re-optimized for the remaining hours and the plan is overwritten.
RtStepResult real_time_step(const grid::GridCase& c, const grid::Topology& topo,
                            const std::vector<double>& load, const std::vector<double>& wind,
                            int hour, mts::DayPlan& plan, const InnerPolicy& policy);

/// Memo for day plans: the commitment problem is a pure function of the
/// topology, the forecasts and the initial commitment, and those repeat
/// across scenarios, so caching the escalation outcome removes nearly all
/// MILP solves from a sampling run.
struct UcCache {
    std::mutex mu;
    std::map<std::vector<double>, EscalationResult> entries;
};

/// The concrete inner policy used by scenario sampling: unit commitment with
/// escalation for the day plan, hourly redispatch with deviation handling in
/// real time. Tracks day-end commitment across chained days for startup
/// continuity.
class EscalationPolicyEngine : public mts::InnerPolicyEngine {
  public:
    explicit EscalationPolicyEngine(InnerPolicy policy, std::shared_ptr<UcCache> cache = nullptr)
        : policy_(policy), cache_(std::move(cache)) {}

    mts::DayPlan plan_day(const grid::GridCase& c, const grid::Topology& topo,
                          const std::vector<std::vector<double>>& load_forecast,
                          const std::vector<std::vector<double>>& wind_forecast) override;

    mts::HourOutcome real_time_hour(const grid::GridCase& c, const grid::Topology& topo,
                                    const std::vector<double>& load,
                                    const std::vector<double>& wind, int hour,
                                    mts::DayPlan& plan) override;

    void reset() { prev_commitment_.clear(); }

  private:
    InnerPolicy policy_;
    std::shared_ptr<UcCache> cache_;
    std::vector<std::uint8_t> prev_commitment_;
};

/// Mid-term reliability targets checked per evaluation.
struct MtConstraints {
    double severity_r = std::numeric_limits<double>::infinity(); // MW
    double alpha = 0.05;
    double achieve_epsilon = 0.05;
    mts::SeverityAggregator aggregator;
};

struct ScheduleEvaluation {
    double total_cost = 0.0; // direct maintenance + expected operation cost
    double direct_cost = 0.0;
    mts::Estimate operation_cost;
    bool chance_ok = true;
    bool achievability_ok = true;
    mts::ChanceCheck chance;
    mts::AchievabilityCheck achievability;
};

/// Samples spec.n_scenarios scenarios under the schedule (deterministic given
/// the seed) and aggregates cost and constraint checks. Throws
/// InfeasibleSchedule when h(u) is violated.
ScheduleEvaluation evaluate_schedule(const grid::GridCase& c, const MaintenanceSchedule& schedule,
                                     const InnerPolicy& policy, const mts::SamplerSpec& spec,
                                     const MtConstraints& constraints, std::uint64_t seed,
                                     exec::ThreadPool* pool = nullptr);

struct CeParams {
    int population = 50;
    double rho = 0.15;        // elite fraction
    double smoothing = 0.7;   // weight of the elite frequencies in the update
    int max_iters = 15;
    double degenerate_eps = 0.02; // stop when all probabilities are this close to 0/1
    double init_prob = 0.2;
    int per_month_cap = 1;
    int per_line_cap = 1;
    int min_population = 10;
};

/// Per-entry Bernoulli sampling distribution over the schedule matrix.
struct CeState {
    std::vector<double> probs; // row-major [month][line]
    double rho = 0.15;
    double smoothing = 0.7;
    int iteration = 0;
};

struct CeTraceRow {
    int iteration = 0;
    double elite_mean = 0.0;
    double elite_std = 0.0;
    double best_cost = 0.0;
};

struct CeResult {
    MaintenanceSchedule best;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<CeTraceRow> trace;
    CeState state;
};

using ScheduleObjective = std::function<double(const MaintenanceSchedule&)>;

/// Cross-entropy optimization over maintenance schedules: sample a population
/// from per-entry Bernoullis (rejection + deterministic repair against h(u)),
/// rank by the objective, pull the distribution toward the elite fraction
/// with smoothing. The objective must be deterministic; callers wanting
/// common random numbers bake the evaluation seed into it.
CeResult cross_entropy_optimize(int months, int num_lines, const ScheduleObjective& objective,
                                const CeParams& params, std::uint64_t seed);

/// Convenience wrapper evaluating schedules through the simulation pipeline
/// with paired seeds.
CeResult cross_entropy_optimize(const grid::GridCase& c, const InnerPolicy& policy,
                                const mts::SamplerSpec& spec, const MtConstraints& constraints,
                                const CeParams& params, std::uint64_t seed,
                                exec::ThreadPool* pool = nullptr);

MaintenanceSchedule baseline_oldest_first(const grid::GridCase& c, int months);
MaintenanceSchedule baseline_age_threshold(const grid::GridCase& c, int months,
                                           double threshold_hours);
MaintenanceSchedule baseline_cyclic(const grid::GridCase& c, int months);

} // namespace rm::mto
