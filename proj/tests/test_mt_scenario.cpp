#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "rm/errors.hpp"
#include "rm/mt_scenario.hpp"
#include "rm/weibull.hpp"

using namespace rm;
using namespace rm::mts;

namespace {

// Cheap deterministic stand-in for the commitment/redispatch machinery: cost
// tracks load net of wind plus a penalty per line out, so every sampled draw
// leaves a visible fingerprint.
class StubPolicy : public InnerPolicyEngine {
  public:
    DayPlan plan_day(const grid::GridCase& c, const grid::Topology&,
                     const std::vector<std::vector<double>>&,
                     const std::vector<std::vector<double>>&) override {
        DayPlan p;
        p.commitment.assign(24, std::vector<std::uint8_t>(c.generators.size(), 1));
        p.dispatch.assign(24, std::vector<double>(c.generators.size(), 0.0));
        p.plan_cost = 1.0;
        return p;
    }
    HourOutcome real_time_hour(const grid::GridCase& c, const grid::Topology& topo,
                               const std::vector<double>& load, const std::vector<double>& wind,
                               int, DayPlan&) override {
        HourOutcome o;
        o.cost = std::accumulate(load.begin(), load.end(), 0.0) -
                 0.5 * std::accumulate(wind.begin(), wind.end(), 0.0);
        for (auto s : topo.line_status)
            if (!s) o.cost += 100.0;
        o.dispatch.assign(c.generators.size(), 0.0);
        return o;
    }
};

SamplerSpec small_spec(Scheme scheme) {
    SamplerSpec s;
    s.scheme = scheme;
    s.months = 2;
    s.days_per_month = 4;
    s.maintenance_days = 1;
    s.repair_hours = 12;
    s.evaluate_severity = false;
    s.seed = 42;
    return s;
}

} // namespace

TEST_CASE("weibull life model") {
    SUBCASE("zero nu never fails") {
        WeibullLife w{0.0, 1.0, 1e-3, 1.2};
        for (double tau : {0.0, 10.0, 1e5}) CHECK(failure_probability(w, tau) == 0.0);
    }
    SUBCASE("zero gamma is age-independent") {
        WeibullLife w{0.3, 2.0, 0.0, 1.5};
        const double expect = 1.0 - std::exp(-0.3 * std::pow(2.0, 1.5));
        for (double tau : {0.0, 50.0, 5000.0})
            CHECK(failure_probability(w, tau) == doctest::Approx(expect));
    }
    SUBCASE("strictly increasing in age for positive parameters") {
        WeibullLife w{1e-4, 1.0, 1e-4, 1.3};
        double prev = -1.0;
        for (double tau = 0.0; tau < 30000.0; tau += 500.0) {
            const double h = failure_probability(w, tau);
            CHECK(h > prev);
            CHECK(h < 1.0);
            prev = h;
        }
    }
    SUBCASE("closed form at age zero") {
        WeibullLife w{2e-3, 1.5, 1e-4, 1.1};
        CHECK(failure_probability(w, 0.0) ==
              doctest::Approx(1.0 - std::exp(-2e-3 * std::pow(1.5, 1.1))));
    }
    SUBCASE("interval probability is a proper conditional") {
        WeibullLife w{1e-3, 1.0, 5e-4, 1.0};
        const double p = interval_failure_probability(w, 1000.0, 1.0);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
        CHECK(interval_failure_probability(w, 2.0e4, 1.0) > p); // older fails more
    }
}

TEST_CASE("hourly transition advances ages and respects degenerate noise") {
    grid::GridCase c = fixtures::bus5(false); // no life model: no failures
    for (auto& w : c.wind_units) w.sigma_fraction = 0.0;
    const MaintenanceSchedule none = MaintenanceSchedule::empty(2, c.num_lines());
    SamplerSpec spec = small_spec(Scheme::Complete);

    WorldState s = initial_state(c);
    RngStream wind(1), load(2), fail(3);
    const WorldState next = transition(c, s, none, spec, wind, load, fail);
    for (size_t l = 0; l < c.lines.size(); ++l) {
        CHECK(next.effective_age_hours[l] == doctest::Approx(s.effective_age_hours[l] + 1.0));
        CHECK(next.topology.line_status[l] == 1);
    }
    // zero sigma: realizations equal the forecast means exactly
    for (size_t w = 0; w < c.wind_units.size(); ++w)
        CHECK(next.wind_now[w] == doctest::Approx(s.wind_forecast[0][w]));
}

TEST_CASE("monthly advance resets maintained assets and applies outages") {
    const grid::GridCase c = fixtures::bus5(false);
    MaintenanceSchedule sched = MaintenanceSchedule::empty(3, c.num_lines());
    sched.set(0, 3, true); // maintain line index 3 in month 0
    sched.set(1, 1, true);
    SamplerSpec spec = small_spec(Scheme::Complete);

    WorldState s0 = initial_state(c);
    const WorldState s1 = advance_month(c, s0, sched, spec);
    CHECK(s1.month == 1);
    CHECK(s1.effective_age_hours[3] == doctest::Approx(0.0)); // reset rule
    CHECK(s1.effective_age_hours[0] ==
          doctest::Approx(c.lines[0].initial_age_hours + spec.days_per_month * 24.0));
    CHECK(s1.maintenance_hours_left[1] == spec.maintenance_days * 24);
    CHECK(s1.topology.line_status[1] == 0); // scheduled outage in force
}

TEST_CASE("degenerate window sampling reproduces the complete trajectory bit for bit") {
    const grid::GridCase c = fixtures::bus5();
    MaintenanceSchedule sched = MaintenanceSchedule::empty(2, c.num_lines());
    sched.set(0, 0, true);

    SamplerSpec complete = small_spec(Scheme::Complete);
    SamplerSpec window = small_spec(Scheme::WindowSampling);
    window.window_days = window.days_per_month; // full-month window
    window.n_short = 1;
    window.n_rt = 1;
    window.window_rt_hours = 24;

    StubPolicy policy_a, policy_b;
    const Scenario a = sample_scenario(c, sched, policy_a, complete, 7);
    const Scenario b = sample_scenario(c, sched, policy_b, window, 7);

    REQUIRE(a.states.size() == b.states.size());
    CHECK(a.log_weight == b.log_weight);
    for (size_t t = 0; t < a.states.size(); ++t) {
        CHECK(a.state_cost[t] == b.state_cost[t]); // bit-exact, no tolerance
        CHECK(a.state_severity[t] == b.state_severity[t]);
        CHECK(a.state_achievable[t] == b.state_achievable[t]);
        CHECK(a.states[t].effective_age_hours == b.states[t].effective_age_hours);
    }
}

TEST_CASE("identical seeds give bit-identical scenarios") {
    const grid::GridCase c = fixtures::bus5();
    const MaintenanceSchedule none = MaintenanceSchedule::empty(2, c.num_lines());
    const SamplerSpec spec = small_spec(Scheme::WindowSampling);
    StubPolicy p1, p2;
    const Scenario a = sample_scenario(c, none, p1, spec, 3);
    const Scenario b = sample_scenario(c, none, p2, spec, 3);
    CHECK(a.total_cost() == b.total_cost());
    CHECK(a.log_weight == b.log_weight);
    StubPolicy p3;
    const Scenario d = sample_scenario(c, none, p3, spec, 4);
    CHECK(a.total_cost() != d.total_cost());
}

TEST_CASE("quasi-static sampling with zero noise repeats the same draw") {
    grid::GridCase c = fixtures::bus5(false);
    for (auto& w : c.wind_units) w.sigma_fraction = 0.0;
    const MaintenanceSchedule none = MaintenanceSchedule::empty(1, c.num_lines());
    SamplerSpec spec = small_spec(Scheme::QuasiStaticSampling);
    spec.months = 1;
    spec.n_short = 3;
    spec.load_sigma_fraction = 0.0;
    StubPolicy policy;
    const Scenario z = sample_scenario(c, none, policy, spec, 0);
    // three identical draws average to the single-draw value
    SamplerSpec one = spec;
    one.n_short = 1;
    StubPolicy policy2;
    const Scenario z1 = sample_scenario(c, none, policy2, one, 0);
    CHECK(z.state_cost[0] ==
          doctest::Approx(z1.state_cost[0]).epsilon(1e-6)); // load profile repeats daily
}

TEST_CASE("window sampling cuts the month-cost variance against complete sampling") {
    const grid::GridCase c = fixtures::bus5();
    const MaintenanceSchedule none = MaintenanceSchedule::empty(1, c.num_lines());

    auto variance_over_seeds = [&](const SamplerSpec& spec) {
        std::vector<double> costs;
        for (std::uint64_t i = 0; i < 20; ++i) {
            StubPolicy policy;
            SamplerSpec s = spec;
            costs.push_back(sample_scenario(c, none, policy, s, i).total_cost());
        }
        const double mean = std::accumulate(costs.begin(), costs.end(), 0.0) / costs.size();
        double var = 0.0;
        for (double x : costs) var += (x - mean) * (x - mean);
        return var / (costs.size() - 1);
    };

    SamplerSpec complete = small_spec(Scheme::Complete);
    complete.months = 1;
    complete.days_per_month = 6;
    SamplerSpec window = small_spec(Scheme::WindowSampling);
    window.months = 1;
    window.days_per_month = 6;
    window.window_days = 2;
    window.n_short = 3;
    window.n_rt = 4;
    CHECK(variance_over_seeds(window) < variance_over_seeds(complete));
}

TEST_CASE("expected-cost estimator") {
    SUBCASE("empty sample throws") {
        CHECK_THROWS_AS(estimate_expected_cost({}), EmptySample);
    }
    SUBCASE("identical nominal costs have zero standard error") {
        Scenario z;
        z.state_cost = {5.0, 5.0};
        const std::vector<Scenario> sample(10, z);
        const auto est = estimate_expected_cost(sample);
        CHECK(est.mean == doctest::Approx(10.0));
        CHECK(est.std_error == doctest::Approx(0.0));
        CHECK(est.n == 10);
    }
    SUBCASE("two-point toy converges within three standard errors") {
        RngStream rng(5);
        std::vector<Scenario> sample;
        for (int i = 0; i < 1000; ++i) {
            Scenario z;
            z.state_cost = {rng.bernoulli(0.5) ? 10.0 : 30.0};
            sample.push_back(std::move(z));
        }
        const auto est = estimate_expected_cost(sample);
        CHECK(std::abs(est.mean - 20.0) <= 3.0 * est.std_error);
    }
    SUBCASE("nominal weights match the unweighted mean exactly") {
        RngStream rng(6);
        std::vector<Scenario> sample;
        double plain = 0.0;
        for (int i = 0; i < 64; ++i) {
            Scenario z;
            z.state_cost = {rng.uniform() * 100.0};
            z.log_weight = 0.0; // g = pi
            plain += z.state_cost[0];
            sample.push_back(std::move(z));
        }
        plain /= 64.0;
        CHECK(estimate_expected_cost(sample).mean == doctest::Approx(plain).epsilon(1e-12));
    }
}

TEST_CASE("importance weights keep the estimator unbiased on an analytic toy") {
    // three outcomes with known probabilities and costs; sample from a tilted
    // distribution and reweight
    const double pi[3] = {0.7, 0.2, 0.1};
    const double g[3] = {0.4, 0.3, 0.3};
    const double cost[3] = {1.0, 10.0, 100.0};
    const double truth = pi[0] * cost[0] + pi[1] * cost[1] + pi[2] * cost[2];

    RngStream rng(8);
    std::vector<Scenario> sample;
    for (int i = 0; i < 4000; ++i) {
        const double u = rng.uniform();
        const int k = u < g[0] ? 0 : (u < g[0] + g[1] ? 1 : 2);
        Scenario z;
        z.state_cost = {cost[k]};
        z.log_weight = std::log(pi[k]) - std::log(g[k]);
        sample.push_back(std::move(z));
    }
    const auto est = estimate_expected_cost(sample);
    CHECK(std::abs(est.mean - truth) <= 3.0 * est.std_error);
}

TEST_CASE("chance-constraint estimator") {
    auto scenario_with_severity = [](double sev) {
        Scenario z;
        z.state_severity = {sev, sev};
        z.state_cost = {0.0, 0.0};
        return z;
    };
    SeverityAggregator mean_agg;
    SUBCASE("all severities below the bound satisfy once the sample can certify") {
        // the Wilson lower bound at p = 1 is n / (n + z^2), so alpha = 0.05
        // needs at least 74 clean scenarios
        std::vector<Scenario> sample(100, scenario_with_severity(10.0));
        const auto check = estimate_chance_constraint(sample, mean_agg, 20.0, 0.05);
        CHECK(check.empirical_prob == doctest::Approx(1.0));
        CHECK(check.satisfied);
        std::vector<Scenario> thin(20, scenario_with_severity(10.0));
        CHECK_FALSE(estimate_chance_constraint(thin, mean_agg, 20.0, 0.05).satisfied);
    }
    SUBCASE("bound below every severity is violated") {
        std::vector<Scenario> sample(50, scenario_with_severity(30.0));
        const auto check = estimate_chance_constraint(sample, mean_agg, 20.0, 0.05);
        CHECK(check.empirical_prob == doctest::Approx(0.0));
        CHECK_FALSE(check.satisfied);
    }
    SUBCASE("wilson bound is conservative near the threshold") {
        std::vector<Scenario> sample;
        for (int i = 0; i < 100; ++i) sample.push_back(scenario_with_severity(i < 97 ? 1.0 : 9.0));
        const auto check = estimate_chance_constraint(sample, mean_agg, 5.0, 0.05);
        CHECK(check.empirical_prob == doctest::Approx(0.97));
        CHECK(check.ci_low < 0.97); // the interval widens below the point estimate
    }
    SUBCASE("aggregators reduce the severity vector differently") {
        Scenario z;
        z.state_severity = {1.0, 2.0, 9.0};
        SeverityAggregator max_agg{SeverityAggregator::Kind::Max};
        SeverityAggregator q_agg{SeverityAggregator::Kind::Quantile, 0.6};
        CHECK(mean_agg(z.state_severity) == doctest::Approx(4.0));
        CHECK(max_agg(z.state_severity) == doctest::Approx(9.0));
        CHECK(q_agg(z.state_severity) > mean_agg(z.state_severity));
    }
}

TEST_CASE("achievability estimator counts violating scenarios") {
    Scenario good;
    good.state_achievable = {1, 1, 1};
    Scenario bad = good;
    bad.state_achievable[1] = 0;
    SUBCASE("all achievable") {
        std::vector<Scenario> sample(4, good);
        const auto check = estimate_achievability(sample, 0.0);
        CHECK(check.violated_fraction == doctest::Approx(0.0));
        CHECK(check.satisfied);
    }
    SUBCASE("one of four violates") {
        std::vector<Scenario> sample{good, good, good, bad};
        const auto check = estimate_achievability(sample, 0.2);
        CHECK(check.violated_fraction == doctest::Approx(0.25));
        CHECK_FALSE(check.satisfied);
    }
    SUBCASE("empty sample throws") { CHECK_THROWS_AS(estimate_achievability({}, 0.1), EmptySample); }
}

TEST_CASE("importance tilt leaves the mean weight near one") {
    const grid::GridCase c = fixtures::bus5();
    const MaintenanceSchedule none = MaintenanceSchedule::empty(1, c.num_lines());
    SamplerSpec spec = small_spec(Scheme::Complete);
    spec.months = 1;
    spec.importance_failure_tilt = 3.0;
    double wsum = 0.0, w2sum = 0.0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        StubPolicy policy;
        const Scenario z = sample_scenario(c, none, policy, spec, static_cast<std::uint64_t>(i));
        const double w = std::exp(z.log_weight);
        wsum += w;
        w2sum += w * w;
    }
    const double mean = wsum / n;
    const double se = std::sqrt(std::max(0.0, (w2sum - wsum * wsum / n) / (n - 1)) / n);
    CHECK(std::abs(mean - 1.0) <= 3.0 * se + 1e-9);
}
