#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rm/weibull.hpp"

namespace rm::grid {

struct Line {
    std::string id;
    int from_bus = 0;
    int to_bus = 0;
    double susceptance = 0.0; // p.u.
    double rating = 0.0;      // MW
    std::optional<WeibullLife> life;
    double maintenance_cost = 0.0;
    double initial_age_hours = 0.0; // effective age at the start of the horizon
};

struct Generator {
    std::string id;
    int bus = 0;
    double pmin = 0.0;
    double pmax = 0.0;
    double cost_linear = 0.0; // currency/MWh
    double startup_cost = 0.0;
    int min_up = 1;   // hours
    int min_down = 1; // hours
};

struct Load {
    std::string id;
    int bus = 0;
    double peak_mw = 0.0;
    std::array<double, 24> profile{}; // fraction of peak per hour
};

struct WindUnit {
    std::string id;
    int bus = 0;
    double capacity_mw = 0.0;
    std::array<double, 24> profile{}; // fraction of capacity per hour
    double sigma_fraction = 0.0;
};

/// Static network and cost data shared by every horizon. Immutable after
/// load; safe to share across threads.
struct GridCase {
    std::vector<int> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<Load> loads;
    std::vector<WindUnit> wind_units;
    double voll = 0.0;              // currency/MWh
    double wind_curtail_cost = 0.0; // currency/MWh
    int reference_bus = 0;

    int num_buses() const { return static_cast<int>(buses.size()); }
    int num_lines() const { return static_cast<int>(lines.size()); }
    int bus_index(int bus_id) const; // -1 when unknown

    /// All invariant violations, empty when the case is well-formed.
    std::vector<std::string> validate() const;

    std::vector<double> load_at_hour(int hour, double scale = 1.0) const;  // per bus, MW
    std::vector<double> wind_mean_at_hour(int hour, double scale = 1.0) const; // per unit, MW
    double total_peak_load() const;
};

struct Topology {
    std::vector<std::uint8_t> line_status; // 1 = in service

    bool up(int line) const { return line_status[static_cast<size_t>(line)] != 0; }
};

Topology all_lines_up(const GridCase& c);
Topology apply_outage(const Topology& base, const std::vector<std::uint8_t>& out_mask);

struct FlowSolution {
    std::vector<double> angles;     // per bus, radians
    std::vector<double> flows;      // per line, MW (zero on out-of-service lines)
    std::vector<double> generation; // per generator, MW
    std::vector<double> shed;       // per bus, MW of load not served
    std::vector<double> curtailed;  // per wind unit, MW
    double objective = 0.0;

    double total_shed() const;
};

/// Solves B theta = P for the in-service network with theta(reference) = 0
/// and returns the implied line flows. Pure flow: no dispatch fields.
///
/// Throws DisconnectedNetwork when a bus is unreachable from the reference,
/// SingularSystem when the reduced susceptance matrix is not invertible.
FlowSolution dc_power_flow(const GridCase& c, const Topology& topo,
                           const std::vector<double>& injections_mw);

/// Single-period DC optimal power flow. Minimizes generation cost plus
/// curtailment and (when allowed) shedding penalties subject to nodal
/// balance, line ratings and generator bounds; pmin binds committed units
/// only. Islands balance locally. Throws on LP infeasibility only when no
/// feasible dispatch exists under the given switches.
FlowSolution dc_opf(const GridCase& c, const Topology& topo,
                    const std::vector<double>& load_mw, const std::vector<double>& wind_mw,
                    const std::vector<std::uint8_t>& committed, bool allow_shed);

/// Minimum-shed dispatch used for post-event criticality checks: same model
/// as dc_opf with shedding allowed and generation spill permitted so that
/// gen-heavy islands stay balanced. When fixed_generation is given the units
/// hold that output (spill may still trip them down); otherwise they
/// redispatch freely. Returns nullopt when infeasible.
std::optional<FlowSolution> min_shed_dispatch(const GridCase& c, const Topology& topo,
                                              const std::vector<double>& load_mw,
                                              const std::vector<double>& wind_mw,
                                              const std::optional<std::vector<double>>&
                                                  fixed_generation = std::nullopt);

} // namespace rm::grid
