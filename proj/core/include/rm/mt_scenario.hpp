#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rm/grid.hpp"
#include "rm/maintenance.hpp"
#include "rm/rng.hpp"
#include "rm/weibull.hpp"

namespace rm::mts {

/// Four-layer state of the world. Layers are ordered by how slowly they
/// evolve; the informational views of the mid/short/real-time deciders are
/// prefixes of this tuple.
struct WorldState {
    // long layer: slow deterministic trends
    double load_growth_factor = 1.0;

    // mid layer: asset condition
    std::vector<double> effective_age_hours; // per line
    int month = 0;

    // short layer: day-ahead forecasts (24 x per-bus / per-unit)
    std::vector<std::vector<double>> load_forecast; // [hour][bus]
    std::vector<std::vector<double>> wind_forecast; // [hour][unit]

    // real-time layer: realizations and topology
    std::vector<double> load_now;  // per bus
    std::vector<double> wind_now;  // per unit
    grid::Topology topology;
    std::vector<int> repair_hours_left;      // per line, >0 while under forced outage
    std::vector<int> maintenance_hours_left; // per line, >0 while under planned outage

    std::vector<std::string> validate(const grid::GridCase& c) const;
};

WorldState initial_state(const grid::GridCase& c);

enum class Scheme { Complete, QuasiStatic, QuasiStaticSampling, WindowSampling };

struct SamplerSpec {
    Scheme scheme = Scheme::WindowSampling;
    int window_days = 3;     // W_s
    int window_rt_hours = 24; // W_RT
    int n_short = 1;          // N_s
    int n_rt = 1;             // N_RT
    std::uint64_t seed = 12345;

    int months = 8;               // evaluation horizon T_E
    int days_per_month = 30;
    int maintenance_days = 7;     // planned outage duration from month start
    int repair_hours = 48;        // forced outage duration (within the month)
    int n_scenarios = 20;         // outer Monte-Carlo replications per estimate
    double load_growth_annual = 0.0;
    double load_sigma_fraction = 0.02; // realized load noise around the forecast
    double default_line_fail_prob_per_hour = 0.0; // for lines without a life model
    double importance_failure_tilt = 1.0;         // g: multiplier on failure probabilities
    bool evaluate_severity = true;

    std::vector<std::string> validate() const;
};

/// Scenario over [0, T_E] months: state snapshots plus the per-state cost,
/// severity and achievability records and the importance-sampling log weight.
struct Scenario {
    std::vector<WorldState> states;  // length months+1, index 0 is the initial state
    std::vector<double> state_cost;  // currency per state
    std::vector<double> state_severity; // expected MW loss per state
    std::vector<std::uint8_t> state_achievable; // delta_theta per state
    double log_weight = 0.0;         // log pi_z - log g_z; 0 under nominal sampling
    double total_cost() const;
    bool fully_achievable() const;
};

struct SeverityAggregator {
    enum class Kind { Mean, Max, Quantile } kind = Kind::Mean;
    double q = 0.9; // used by Quantile: mean of the values at or above this quantile

    double operator()(const std::vector<double>& severities) const;
};

/// Day plan handed back by the inner policy: hourly commitment and the
/// dispatch the real-time step is priced against.
struct DayPlan {
    std::vector<std::vector<std::uint8_t>> commitment; // [hour][gen]
    std::vector<std::vector<double>> dispatch;         // [hour][gen]
    double plan_cost = 0.0;                            // startup + fines incurred planning
    int escalation_level = 0;
    bool achievable = true;
    bool deviated = false; // real-time operation stopped following the plan
};

struct HourOutcome {
    double cost = 0.0;
    double shed_mw = 0.0;
    bool achievable = true;
    bool deviated = false;
    std::vector<double> dispatch; // realized per-gen output
};

/// Short/real-time decision process embedded in mid/long-term evaluation.
/// Implementations live with the optimizer; a stub is enough for tests.
class InnerPolicyEngine {
  public:
    virtual ~InnerPolicyEngine() = default;

    virtual DayPlan plan_day(const grid::GridCase& c, const grid::Topology& topo,
                             const std::vector<std::vector<double>>& load_forecast,
                             const std::vector<std::vector<double>>& wind_forecast) = 0;

    virtual HourOutcome real_time_hour(const grid::GridCase& c, const grid::Topology& topo,
                                       const std::vector<double>& load,
                                       const std::vector<double>& wind, int hour,
                                       DayPlan& plan) = 0;
};

/// One mid-tick transition of the world (Delta t = 1 month): ages advance,
/// completed maintenance resets them, scheduled outages are applied.
WorldState advance_month(const grid::GridCase& c, const WorldState& state,
                         const MaintenanceSchedule& schedule, const SamplerSpec& spec);

/// One real-time tick (Delta t = 1 hour) within a day: wind/load sampled as
/// truncated normals around the forecast, line failures drawn from the life
/// model at the current age, outage countdowns advanced.
WorldState transition(const grid::GridCase& c, const WorldState& state,
                      const MaintenanceSchedule& schedule, const SamplerSpec& spec,
                      RngStream& wind_rng, RngStream& load_rng, RngStream& fail_rng,
                      double* log_weight_accum = nullptr);

/// Samples one scenario under the given schedule and inner policy. Scheme
/// semantics: Complete chains every hour of the horizon; QuasiStatic does the
/// same with the long layer frozen; QuasiStaticSampling draws n_short
/// independent days per month; WindowSampling draws n_short windows of
/// window_days chained days with n_rt real-time sub-trajectories each.
/// Deterministic given (case, schedule, spec, seed, index).
Scenario sample_scenario(const grid::GridCase& c, const MaintenanceSchedule& schedule,
                         InnerPolicyEngine& policy, const SamplerSpec& spec,
                         std::uint64_t scenario_index);

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    int n = 0;
};

/// Importance-weighted mean of the total scenario cost, weights exp(log_weight).
Estimate estimate_expected_cost(const std::vector<Scenario>& scenarios);

struct ChanceCheck {
    bool satisfied = false;
    double empirical_prob = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
};

/// Importance-weighted probability that the aggregated scenario severity
/// stays at or below R, with a Wilson interval on the effective sample size;
/// satisfied iff the lower bound reaches 1 - alpha.
ChanceCheck estimate_chance_constraint(const std::vector<Scenario>& scenarios,
                                       const SeverityAggregator& aggregator, double severity_r,
                                       double alpha);

struct AchievabilityCheck {
    bool satisfied = false;
    double violated_fraction = 0.0;
};

/// Fraction of sampled scenarios containing at least one unachievable state;
/// satisfied iff it stays at or below epsilon.
AchievabilityCheck estimate_achievability(const std::vector<Scenario>& scenarios, double epsilon);

} // namespace rm::mts
