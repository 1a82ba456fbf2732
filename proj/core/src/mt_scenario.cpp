#include "rm/mt_scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rm/errors.hpp"

namespace rm::mts {

using grid::GridCase;
using grid::Topology;

std::vector<std::string> WorldState::validate(const GridCase& c) const {
    std::vector<std::string> v;
    if (effective_age_hours.size() != c.lines.size()) v.push_back("age vector width mismatch");
    for (double a : effective_age_hours)
        if (a < 0.0) v.push_back("negative effective age");
    if (topology.line_status.size() != c.lines.size()) v.push_back("topology width mismatch");
    for (const auto& hr : load_forecast)
        for (double x : hr)
            if (x < 0.0) v.push_back("negative load forecast");
    for (double x : load_now)
        if (x < 0.0) v.push_back("negative realized load");
    for (double x : wind_now)
        if (x < 0.0) v.push_back("negative realized wind");
    return v;
}

WorldState initial_state(const GridCase& c) {
    WorldState s;
    s.load_growth_factor = 1.0;
    s.effective_age_hours.resize(c.lines.size());
    for (size_t l = 0; l < c.lines.size(); ++l)
        s.effective_age_hours[l] = c.lines[l].initial_age_hours;
    s.month = 0;
    s.load_forecast.resize(24);
    s.wind_forecast.resize(24);
    for (int h = 0; h < 24; ++h) {
        s.load_forecast[static_cast<size_t>(h)] = c.load_at_hour(h);
        s.wind_forecast[static_cast<size_t>(h)] = c.wind_mean_at_hour(h);
    }
    s.load_now = c.load_at_hour(0);
    s.wind_now = c.wind_mean_at_hour(0);
    s.topology = grid::all_lines_up(c);
    s.repair_hours_left.assign(c.lines.size(), 0);
    s.maintenance_hours_left.assign(c.lines.size(), 0);
    return s;
}

std::vector<std::string> SamplerSpec::validate() const {
    std::vector<std::string> v;
    if (window_days < 1 || window_rt_hours < 1) v.push_back("window lengths must be >= 1");
    if (n_short < 1 || n_rt < 1) v.push_back("replication counts must be >= 1");
    if (months < 1) v.push_back("months must be >= 1");
    if (importance_failure_tilt <= 0.0) v.push_back("importance tilt must be positive");
    return v;
}

double Scenario::total_cost() const {
    return std::accumulate(state_cost.begin(), state_cost.end(), 0.0);
}

bool Scenario::fully_achievable() const {
    for (auto a : state_achievable)
        if (!a) return false;
    return true;
}

double SeverityAggregator::operator()(const std::vector<double>& severities) const {
    if (severities.empty()) return 0.0;
    switch (kind) {
        case Kind::Max:
            return *std::max_element(severities.begin(), severities.end());
        case Kind::Quantile: {
            std::vector<double> s = severities;
            std::sort(s.begin(), s.end());
            const size_t from = static_cast<size_t>(std::floor(q * (s.size() - 1)));
            double sum = 0.0;
            for (size_t i = from; i < s.size(); ++i) sum += s[i];
            return sum / static_cast<double>(s.size() - from);
        }
        case Kind::Mean:
        default:
            return std::accumulate(severities.begin(), severities.end(), 0.0) /
                   static_cast<double>(severities.size());
    }
}

namespace {

double growth_at_month(const SamplerSpec& spec, int month) {
    if (spec.scheme != Scheme::Complete) return 1.0; // quasi-static long layer
    return std::pow(1.0 + spec.load_growth_annual, month / 12.0);
}

double hourly_failure_prob(const GridCase& c, const SamplerSpec& spec, int line, double age_hours) {
    if (c.lines[static_cast<size_t>(line)].life)
        return interval_failure_probability(*c.lines[static_cast<size_t>(line)].life, age_hours,
                                            1.0);
    return spec.default_line_fail_prob_per_hour;
}

} // namespace

WorldState advance_month(const GridCase& c, const WorldState& state,
                         const MaintenanceSchedule& schedule, const SamplerSpec& spec) {
    WorldState next = state;
    const int hours = spec.days_per_month * 24;
    const int next_month = state.month + 1;

    const bool had_schedule = state.month < schedule.months;
    for (size_t l = 0; l < c.lines.size(); ++l) {
        const bool maintained =
            had_schedule && schedule.at(state.month, static_cast<int>(l));
        if (maintained) {
            // Maintenance completed during the month; refurbishment credited
            // at the month boundary.
            next.effective_age_hours[l] = 0.0;
        } else {
            next.effective_age_hours[l] += hours;
        }
        next.maintenance_hours_left[l] = 0;
        next.repair_hours_left[l] = 0; // forced outages are repaired within the month
    }
    next.month = next_month;
    next.load_growth_factor = growth_at_month(spec, next_month);

    // Planned outages for the incoming month start at its first hour.
    if (next_month < schedule.months) {
        for (int l = 0; l < schedule.num_lines; ++l)
            if (schedule.at(next_month, l))
                next.maintenance_hours_left[static_cast<size_t>(l)] = spec.maintenance_days * 24;
    }
    next.topology = grid::all_lines_up(c);
    for (size_t l = 0; l < c.lines.size(); ++l)
        if (next.maintenance_hours_left[l] > 0) next.topology.line_status[l] = 0;

    for (int h = 0; h < 24; ++h) {
        next.load_forecast[static_cast<size_t>(h)] = c.load_at_hour(h, next.load_growth_factor);
        next.wind_forecast[static_cast<size_t>(h)] = c.wind_mean_at_hour(h);
    }
    return next;
}

WorldState transition(const GridCase& c, const WorldState& state,
                      const MaintenanceSchedule& schedule, const SamplerSpec& spec,
                      RngStream& wind_rng, RngStream& load_rng, RngStream& fail_rng,
                      double* log_weight_accum) {
    (void)schedule;
    WorldState next = state;

    for (size_t l = 0; l < c.lines.size(); ++l) {
        if (next.maintenance_hours_left[l] > 0) --next.maintenance_hours_left[l];
        if (next.repair_hours_left[l] > 0) --next.repair_hours_left[l];
        next.effective_age_hours[l] += 1.0;
    }

    // Failures strike lines that are actually in service. Every line consumes
    // one draw regardless, so streams stay aligned across schedules (common
    // random numbers for paired comparisons).
    for (size_t l = 0; l < c.lines.size(); ++l) {
        const double draw = fail_rng.uniform();
        const bool out =
            next.maintenance_hours_left[l] > 0 || next.repair_hours_left[l] > 0;
        if (out) continue;
        const double p = hourly_failure_prob(c, spec, static_cast<int>(l),
                                             state.effective_age_hours[l]);
        if (p <= 0.0) continue;
        const double pg = std::min(1.0, p * spec.importance_failure_tilt);
        const bool fails = draw < pg;
        if (log_weight_accum && pg != p) {
            if (fails) *log_weight_accum += std::log(p) - std::log(pg);
            else *log_weight_accum += std::log1p(-p) - std::log1p(-pg);
        }
        if (fails) next.repair_hours_left[l] = spec.repair_hours;
    }
    for (size_t l = 0; l < c.lines.size(); ++l)
        next.topology.line_status[l] =
            (next.maintenance_hours_left[l] > 0 || next.repair_hours_left[l] > 0) ? 0 : 1;

    const int hour = 0; // callers resample per hour; this op draws one tick
    for (size_t w = 0; w < c.wind_units.size(); ++w) {
        const double mean = state.wind_forecast.empty()
                                ? c.wind_mean_at_hour(hour)[w]
                                : state.wind_forecast[static_cast<size_t>(hour)][w];
        const double sigma = c.wind_units[w].sigma_fraction * mean;
        next.wind_now[w] = wind_rng.truncated_normal(mean, sigma, 0.0, c.wind_units[w].capacity_mw);
    }
    for (size_t b = 0; b < state.load_now.size(); ++b) {
        const double mean = state.load_forecast.empty()
                                ? c.load_at_hour(hour)[b]
                                : state.load_forecast[static_cast<size_t>(hour)][b];
        next.load_now[b] = load_rng.truncated_normal(mean, spec.load_sigma_fraction * mean, 0.0,
                                                     10.0 * mean + 1.0);
    }
    return next;
}

namespace {

struct DayTally {
    double cost = 0.0;
    double severity_sum = 0.0;
    int severity_hours = 0;
    bool achievable = true;
};

// Working outage bookkeeping for one simulated day.
struct LineClock {
    std::vector<int> maint_left;
    std::vector<int> repair_left;

    bool out(size_t l) const { return maint_left[l] > 0 || repair_left[l] > 0; }

    // Positions the clock at an offset into the month: countdowns that started
    // at the month boundary burn down through skipped hours too.
    void advance(int hours) {
        for (auto& v : maint_left) v = std::max(0, v - hours);
        for (auto& v : repair_left) v = std::max(0, v - hours);
    }
    Topology topology(const GridCase& c) const {
        Topology t = grid::all_lines_up(c);
        for (size_t l = 0; l < t.line_status.size(); ++l)
            if (out(l)) t.line_status[l] = 0;
        return t;
    }
};

double total_load(const std::vector<double>& load) {
    return std::accumulate(load.begin(), load.end(), 0.0);
}

// Expected MW lost to a single further outage, given the realized dispatch.
double hourly_severity(const GridCase& c, const SamplerSpec& spec, const LineClock& clock,
                       const std::vector<double>& ages_now, const std::vector<double>& load,
                       const std::vector<double>& wind, const std::vector<double>& dispatch) {
    double sev = 0.0;
    const Topology topo = clock.topology(c);
    for (int l = 0; l < c.num_lines(); ++l) {
        if (clock.out(static_cast<size_t>(l))) continue;
        const double p = hourly_failure_prob(c, spec, l, ages_now[static_cast<size_t>(l)]);
        if (p <= 0.0) continue;
        Topology post = topo;
        post.line_status[static_cast<size_t>(l)] = 0;
        auto sol = grid::min_shed_dispatch(c, post, load, wind, dispatch);
        const double shed = sol ? sol->total_shed() : total_load(load);
        sev += p * shed;
    }
    return sev;
}

// Simulates one day. Replication 0 both evaluates and owns the chained world
// evolution (failures persist into following days through `clock` and the
// importance weight); additional replications are nominal-probability
// evaluations on copies.
DayTally simulate_day(const GridCase& c, const SamplerSpec& spec, InnerPolicyEngine& policy,
                      LineClock& clock, const std::vector<double>& ages_month_start,
                      double growth, std::uint64_t scen, int month, int day, int n_rt,
                      int rt_hours, double* log_weight) {
    DayTally tally;

    std::vector<std::vector<double>> load_fc(24), wind_fc(24);
    for (int h = 0; h < 24; ++h) {
        load_fc[static_cast<size_t>(h)] = c.load_at_hour(h, growth);
        wind_fc[static_cast<size_t>(h)] = c.wind_mean_at_hour(h);
    }

    DayPlan base_plan = policy.plan_day(c, clock.topology(c), load_fc, wind_fc);
    tally.cost += base_plan.plan_cost;
    if (!base_plan.achievable) tally.achievable = false;

    const double rt_scale = 24.0 / rt_hours;
    double rt_cost_sum = 0.0;

    for (int rep = 0; rep < n_rt; ++rep) {
        LineClock local = clock;
        DayPlan plan = base_plan;
        const auto path = [&](std::uint64_t field) {
            return make_stream(spec.seed, {scen, static_cast<std::uint64_t>(month),
                                           static_cast<std::uint64_t>(day),
                                           static_cast<std::uint64_t>(rep), field});
        };
        RngStream wind_rng = path(0), load_rng = path(1), fail_rng = path(2);
        double rep_cost = 0.0;

        for (int h = 0; h < rt_hours; ++h) {
            const int hour = h % 24;
            const double age_off = (day * 24.0) + h;

            // Outage countdowns tick, then failures strike in-service lines.
            for (size_t l = 0; l < local.maint_left.size(); ++l) {
                if (local.maint_left[l] > 0) --local.maint_left[l];
                if (local.repair_left[l] > 0) --local.repair_left[l];
            }
            for (size_t l = 0; l < local.maint_left.size(); ++l) {
                // one draw per line per hour, consumed unconditionally: keeps
                // the streams aligned across schedules for paired seeds
                const double draw = fail_rng.uniform();
                if (local.out(l)) continue;
                const double p = hourly_failure_prob(
                    c, spec, static_cast<int>(l), ages_month_start[l] + age_off);
                if (p <= 0.0) continue;
                const bool tilted = rep == 0 && spec.importance_failure_tilt != 1.0;
                const double pg =
                    tilted ? std::min(1.0, p * spec.importance_failure_tilt) : p;
                const bool fails = draw < pg;
                if (tilted && log_weight) {
                    if (fails) *log_weight += std::log(p) - std::log(pg);
                    else *log_weight += std::log1p(-p) - std::log1p(-pg);
                }
                if (fails) local.repair_left[l] = spec.repair_hours;
            }

            std::vector<double> load(c.num_buses()), wind(c.wind_units.size());
            for (size_t w = 0; w < wind.size(); ++w) {
                const double mean = wind_fc[static_cast<size_t>(hour)][w];
                wind[w] = wind_rng.truncated_normal(mean, c.wind_units[w].sigma_fraction * mean,
                                                    0.0, c.wind_units[w].capacity_mw);
            }
            for (size_t b = 0; b < load.size(); ++b) {
                const double mean = load_fc[static_cast<size_t>(hour)][b];
                load[b] = load_rng.truncated_normal(mean, spec.load_sigma_fraction * mean, 0.0,
                                                    10.0 * mean + 1.0);
            }

            HourOutcome out =
                policy.real_time_hour(c, local.topology(c), load, wind, hour, plan);
            rep_cost += out.cost;
            if (!out.achievable) tally.achievable = false;

            if (spec.evaluate_severity) {
                std::vector<double> ages_now = ages_month_start;
                for (auto& a : ages_now) a += age_off;
                tally.severity_sum +=
                    hourly_severity(c, spec, local, ages_now, load, wind, out.dispatch);
                ++tally.severity_hours;
            }
        }
        rt_cost_sum += rep_cost;
        if (rep == 0) clock = local; // replication 0 carries the chained state
    }
    tally.cost += rt_scale * rt_cost_sum / n_rt;
    return tally;
}

} // namespace

Scenario sample_scenario(const GridCase& c, const MaintenanceSchedule& schedule,
                         InnerPolicyEngine& policy, const SamplerSpec& spec,
                         std::uint64_t scenario_index) {
    const auto spec_problems = spec.validate();
    if (!spec_problems.empty()) throw ValidationError(spec_problems);

    Scenario z;
    WorldState state = initial_state(c);
    // Month 0 maintenance applies from the very start.
    if (schedule.months > 0) {
        for (int l = 0; l < schedule.num_lines; ++l)
            if (schedule.at(0, l))
                state.maintenance_hours_left[static_cast<size_t>(l)] = spec.maintenance_days * 24;
        for (size_t l = 0; l < c.lines.size(); ++l)
            if (state.maintenance_hours_left[l] > 0) state.topology.line_status[l] = 0;
    }
    state.load_growth_factor = growth_at_month(spec, 0);

    z.states.push_back(state);
    z.state_cost.push_back(0.0);
    z.state_severity.push_back(0.0);
    z.state_achievable.push_back(1);

    for (int month = 0; month < spec.months; ++month) {
        const double growth = state.load_growth_factor;
        double month_cost = 0.0;
        double sev_sum = 0.0;
        int sev_hours = 0;
        bool achievable = true;
        double day_cost_sum = 0.0;
        int days_evaluated = 0;

        LineClock clock{state.maintenance_hours_left, state.repair_hours_left};

        switch (spec.scheme) {
            case Scheme::Complete:
            case Scheme::QuasiStatic: {
                for (int day = 0; day < spec.days_per_month; ++day) {
                    DayTally t = simulate_day(c, spec, policy, clock, state.effective_age_hours,
                                              growth, scenario_index, month, day, 1, 24,
                                              &z.log_weight);
                    month_cost += t.cost;
                    sev_sum += t.severity_sum;
                    sev_hours += t.severity_hours;
                    achievable = achievable && t.achievable;
                }
                break;
            }
            case Scheme::QuasiStaticSampling: {
                for (int i = 0; i < spec.n_short; ++i) {
                    // Stratified day pick; draws share no temporal chain.
                    const int day = static_cast<int>((i + 0.5) * spec.days_per_month /
                                                     spec.n_short);
                    LineClock local = clock;
                    local.advance(day * 24);
                    DayTally t = simulate_day(c, spec, policy, local, state.effective_age_hours,
                                              growth, scenario_index, month, day, spec.n_rt, 24,
                                              &z.log_weight);
                    day_cost_sum += t.cost;
                    sev_sum += t.severity_sum;
                    sev_hours += t.severity_hours;
                    achievable = achievable && t.achievable;
                    ++days_evaluated;
                }
                month_cost = spec.days_per_month * day_cost_sum / days_evaluated;
                break;
            }
            case Scheme::WindowSampling: {
                for (int i = 0; i < spec.n_short; ++i) {
                    RngStream pick = make_stream(
                        spec.seed, {scenario_index, static_cast<std::uint64_t>(month),
                                    0xA11DAFULL, static_cast<std::uint64_t>(i)});
                    const int span = std::max(1, spec.days_per_month - spec.window_days + 1);
                    const int start = static_cast<int>(pick.uniform() * span) % span;
                    LineClock local = clock;
                    local.advance(start * 24);
                    for (int j = 0; j < spec.window_days; ++j) {
                        const int day = std::min(start + j, spec.days_per_month - 1);
                        DayTally t = simulate_day(
                            c, spec, policy, local, state.effective_age_hours, growth,
                            scenario_index, month, day, spec.n_rt,
                            std::min(spec.window_rt_hours, 24), &z.log_weight);
                        day_cost_sum += t.cost;
                        sev_sum += t.severity_sum;
                        sev_hours += t.severity_hours;
                        achievable = achievable && t.achievable;
                        ++days_evaluated;
                    }
                    if (spec.window_days >= spec.days_per_month && i == 0)
                        clock = local; // full-month window chains like Complete
                }
                month_cost = spec.days_per_month * day_cost_sum / days_evaluated;
                break;
            }
        }

        z.state_cost[static_cast<size_t>(month)] = month_cost;
        z.state_severity[static_cast<size_t>(month)] =
            sev_hours > 0 ? sev_sum / sev_hours : 0.0;
        z.state_achievable[static_cast<size_t>(month)] = achievable ? 1 : 0;

        state.maintenance_hours_left = clock.maint_left;
        state.repair_hours_left = clock.repair_left;
        state = advance_month(c, state, schedule, spec);
        z.states.push_back(state);
        z.state_cost.push_back(0.0);
        z.state_severity.push_back(0.0);
        z.state_achievable.push_back(1);
    }
    return z;
}

Estimate estimate_expected_cost(const std::vector<Scenario>& scenarios) {
    if (scenarios.empty()) throw EmptySample("no scenarios");
    const int n = static_cast<int>(scenarios.size());
    double sum = 0.0, sum2 = 0.0;
    for (const Scenario& z : scenarios) {
        const double v = std::exp(z.log_weight) * z.total_cost();
        sum += v;
        sum2 += v * v;
    }
    Estimate e;
    e.n = n;
    e.mean = sum / n;
    if (n > 1) {
        const double var = std::max(0.0, (sum2 - sum * sum / n) / (n - 1));
        e.std_error = std::sqrt(var / n);
    }
    return e;
}

ChanceCheck estimate_chance_constraint(const std::vector<Scenario>& scenarios,
                                       const SeverityAggregator& aggregator, double severity_r,
                                       double alpha) {
    if (scenarios.empty()) throw EmptySample("no scenarios");
    double wsum = 0.0, w2sum = 0.0, hit = 0.0;
    for (const Scenario& z : scenarios) {
        const double w = std::exp(z.log_weight);
        wsum += w;
        w2sum += w * w;
        if (aggregator(z.state_severity) <= severity_r) hit += w;
    }
    ChanceCheck out;
    out.empirical_prob = wsum > 0.0 ? hit / wsum : 0.0;
    const double n_eff = w2sum > 0.0 ? wsum * wsum / w2sum : 0.0;
    // Wilson interval at z = 1.96 on the effective sample size.
    const double zc = 1.96;
    const double denom = 1.0 + zc * zc / n_eff;
    const double center = (out.empirical_prob + zc * zc / (2.0 * n_eff)) / denom;
    const double half =
        zc *
        std::sqrt(out.empirical_prob * (1.0 - out.empirical_prob) / n_eff +
                  zc * zc / (4.0 * n_eff * n_eff)) /
        denom;
    out.ci_low = std::max(0.0, center - half);
    out.ci_high = std::min(1.0, center + half);
    out.satisfied = out.ci_low >= 1.0 - alpha;
    return out;
}

AchievabilityCheck estimate_achievability(const std::vector<Scenario>& scenarios, double epsilon) {
    if (scenarios.empty()) throw EmptySample("no scenarios");
    int violated = 0;
    for (const Scenario& z : scenarios)
        if (!z.fully_achievable()) ++violated;
    AchievabilityCheck out;
    out.violated_fraction = static_cast<double>(violated) / scenarios.size();
    out.satisfied = out.violated_fraction <= epsilon + 1e-12;
    return out;
}

} // namespace rm::mts
