#include "rm/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rm/errors.hpp"
#include "rm/solver.hpp"

namespace rm::grid {

int GridCase::bus_index(int bus_id) const {
    for (size_t i = 0; i < buses.size(); ++i)
        if (buses[i] == bus_id) return static_cast<int>(i);
    return -1;
}

std::vector<std::string> GridCase::validate() const {
    std::vector<std::string> v;
    std::set<int> bus_set(buses.begin(), buses.end());
    if (bus_set.size() != buses.size()) v.push_back("duplicate bus id");
    if (!bus_set.count(reference_bus)) v.push_back("reference bus not in bus list");

    auto check_profile = [&v](const std::array<double, 24>& p, const std::string& owner, bool unit) {
        for (double x : p) {
            if (x < 0.0) v.push_back(owner + ": profile entry negative");
            if (unit && x > 1.0) v.push_back(owner + ": profile entry above 1");
        }
    };

    std::set<std::string> ids;
    for (const Line& l : lines) {
        if (!ids.insert("line:" + l.id).second) v.push_back("duplicate line id " + l.id);
        if (l.from_bus == l.to_bus) v.push_back("line " + l.id + " connects a bus to itself");
        if (!bus_set.count(l.from_bus)) v.push_back("line " + l.id + " from_bus unknown");
        if (!bus_set.count(l.to_bus)) v.push_back("line " + l.id + " to_bus unknown");
        if (l.susceptance <= 0.0) v.push_back("line " + l.id + " susceptance must be > 0");
        if (l.rating < 0.0) v.push_back("line " + l.id + " rating negative");
    }
    for (const Generator& g : generators) {
        if (!ids.insert("gen:" + g.id).second) v.push_back("duplicate generator id " + g.id);
        if (!bus_set.count(g.bus)) v.push_back("generator " + g.id + " bus unknown");
        if (g.pmin < 0.0 || g.pmin > g.pmax)
            v.push_back("generator " + g.id + " needs 0 <= pmin <= pmax");
    }
    for (const Load& l : loads) {
        if (!ids.insert("load:" + l.id).second) v.push_back("duplicate load id " + l.id);
        if (!bus_set.count(l.bus)) v.push_back("load " + l.id + " bus unknown");
        if (l.peak_mw < 0.0) v.push_back("load " + l.id + " peak negative");
        check_profile(l.profile, "load " + l.id, false);
    }
    for (const WindUnit& w : wind_units) {
        if (!ids.insert("wind:" + w.id).second) v.push_back("duplicate wind id " + w.id);
        if (!bus_set.count(w.bus)) v.push_back("wind " + w.id + " bus unknown");
        if (w.capacity_mw < 0.0) v.push_back("wind " + w.id + " capacity negative");
        if (w.sigma_fraction < 0.0) v.push_back("wind " + w.id + " sigma_fraction negative");
        check_profile(w.profile, "wind " + w.id, true);
    }
    if (voll < 0.0) v.push_back("voll negative");
    if (wind_curtail_cost < 0.0) v.push_back("wind_curtail_cost negative");
    return v;
}

std::vector<double> GridCase::load_at_hour(int hour, double scale) const {
    std::vector<double> out(buses.size(), 0.0);
    for (const Load& l : loads)
        out[bus_index(l.bus)] += scale * l.peak_mw * l.profile[static_cast<size_t>(hour % 24)];
    return out;
}

std::vector<double> GridCase::wind_mean_at_hour(int hour, double scale) const {
    std::vector<double> out(wind_units.size(), 0.0);
    for (size_t i = 0; i < wind_units.size(); ++i)
        out[i] =
            scale * wind_units[i].capacity_mw * wind_units[i].profile[static_cast<size_t>(hour % 24)];
    return out;
}

double GridCase::total_peak_load() const {
    double s = 0.0;
    for (const Load& l : loads) s += l.peak_mw;
    return s;
}

Topology all_lines_up(const GridCase& c) {
    return Topology{std::vector<std::uint8_t>(c.lines.size(), 1)};
}

Topology apply_outage(const Topology& base, const std::vector<std::uint8_t>& out_mask) {
    Topology t = base;
    for (size_t i = 0; i < out_mask.size() && i < t.line_status.size(); ++i)
        if (out_mask[i]) t.line_status[i] = 0;
    return t;
}

double FlowSolution::total_shed() const {
    double s = 0.0;
    for (double v : shed) s += v;
    return s;
}

namespace {

// Dense Gaussian elimination with partial pivoting; enough for desk-scale
// susceptance systems.
bool lu_solve(std::vector<std::vector<double>> a, std::vector<double>& b) {
    const int n = static_cast<int>(a.size());
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) < 1e-12) return false;
        std::swap(a[piv], a[c]);
        std::swap(b[piv], b[c]);
        for (int r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            if (f == 0.0) continue;
            for (int k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < n; ++k) s -= a[r][k] * b[k];
        b[r] = s / a[r][r];
    }
    return true;
}

std::vector<int> reachable_from(const GridCase& c, const Topology& topo, int root_idx) {
    std::vector<int> mark(c.buses.size(), 0);
    std::vector<int> stack{root_idx};
    mark[root_idx] = 1;
    while (!stack.empty()) {
        const int b = stack.back();
        stack.pop_back();
        for (int li = 0; li < c.num_lines(); ++li) {
            if (!topo.up(li)) continue;
            const int f = c.bus_index(c.lines[li].from_bus);
            const int t = c.bus_index(c.lines[li].to_bus);
            int other = -1;
            if (f == b) other = t;
            else if (t == b) other = f;
            if (other >= 0 && !mark[other]) {
                mark[other] = 1;
                stack.push_back(other);
            }
        }
    }
    return mark;
}

} // namespace

FlowSolution dc_power_flow(const GridCase& c, const Topology& topo,
                           const std::vector<double>& injections_mw) {
    const int n = c.num_buses();
    double sum = 0.0;
    for (double p : injections_mw) sum += p;
    if (std::abs(sum) > 1e-6)
        throw ValidationError({"injections do not balance (sum = " + std::to_string(sum) + " MW)"});

    const int ref = c.bus_index(c.reference_bus);
    const auto mark = reachable_from(c, topo, ref);
    for (int b = 0; b < n; ++b)
        if (!mark[b])
            throw DisconnectedNetwork("bus " + std::to_string(c.buses[b]) +
                                      " unreachable from reference");

    // Reduced susceptance matrix, reference row and column removed.
    std::vector<int> red(n, -1);
    int k = 0;
    for (int b = 0; b < n; ++b)
        if (b != ref) red[b] = k++;
    std::vector<std::vector<double>> B(k, std::vector<double>(k, 0.0));
    std::vector<double> rhs(k, 0.0);
    for (int li = 0; li < c.num_lines(); ++li) {
        if (!topo.up(li)) continue;
        const int f = c.bus_index(c.lines[li].from_bus);
        const int t = c.bus_index(c.lines[li].to_bus);
        const double b = c.lines[li].susceptance;
        if (f != ref && t != ref) {
            B[red[f]][red[t]] -= b;
            B[red[t]][red[f]] -= b;
        }
        if (f != ref) B[red[f]][red[f]] += b;
        if (t != ref) B[red[t]][red[t]] += b;
    }
    for (int b = 0; b < n; ++b)
        if (b != ref) rhs[red[b]] = injections_mw[b];

    if (k > 0 && !lu_solve(B, rhs)) throw SingularSystem("reduced susceptance matrix singular");

    FlowSolution sol;
    sol.angles.assign(n, 0.0);
    for (int b = 0; b < n; ++b)
        if (b != ref) sol.angles[b] = rhs[red[b]];
    sol.flows.assign(c.lines.size(), 0.0);
    for (int li = 0; li < c.num_lines(); ++li) {
        if (!topo.up(li)) continue;
        const int f = c.bus_index(c.lines[li].from_bus);
        const int t = c.bus_index(c.lines[li].to_bus);
        sol.flows[li] = c.lines[li].susceptance * (sol.angles[f] - sol.angles[t]);
    }
    sol.generation.assign(c.generators.size(), 0.0);
    sol.shed.assign(c.loads.size(), 0.0);
    sol.curtailed.assign(c.wind_units.size(), 0.0);
    return sol;
}

namespace {

struct OpfLayout {
    int theta0 = 0, gen0 = 0, shed0 = -1, curt0 = -1, spill0 = -1;
};

FlowSolution run_opf(const GridCase& c, const Topology& topo, const std::vector<double>& load_mw,
                     const std::vector<double>& wind_mw, const std::vector<std::uint8_t>& committed,
                     bool allow_shed, bool allow_spill, bool shed_priority,
                     const std::optional<std::vector<double>>& fixed_generation) {
    using namespace rm::solver;
    LinearProgram lp;
    OpfLayout lay;
    const int n = c.num_buses();
    const int ng = static_cast<int>(c.generators.size());
    const int nw = static_cast<int>(c.wind_units.size());
    const int ref = c.bus_index(c.reference_bus);

    // shed_priority scales energy/curtail prices down so that minimizing shed
    // dominates; used for the post-event criticality evaluation.
    const double energy_scale = shed_priority ? 1e-6 : 1.0;

    lay.theta0 = 0;
    for (int b = 0; b < n; ++b)
        lp.add_var(b == ref ? 0.0 : -kInf, b == ref ? 0.0 : kInf, 0.0);
    lay.gen0 = lp.num_vars();
    for (int g = 0; g < ng; ++g) {
        if (fixed_generation) {
            lp.add_var((*fixed_generation)[g], (*fixed_generation)[g], 0.0);
        } else {
            const bool on = committed[static_cast<size_t>(g)] != 0;
            lp.add_var(on ? c.generators[g].pmin : 0.0, on ? c.generators[g].pmax : 0.0,
                       energy_scale * c.generators[g].cost_linear);
        }
    }
    if (allow_shed) {
        lay.shed0 = lp.num_vars();
        for (int b = 0; b < n; ++b) lp.add_var(0.0, kInf, c.voll); // tightened per bus below
    }
    lay.curt0 = lp.num_vars();
    for (int w = 0; w < nw; ++w) lp.add_var(0.0, wind_mw[w], energy_scale * c.wind_curtail_cost);
    if (allow_spill) {
        lay.spill0 = lp.num_vars();
        for (int g = 0; g < ng; ++g) {
            double cap = committed[static_cast<size_t>(g)] ? c.generators[g].pmax : 0.0;
            if (fixed_generation) cap = std::max(0.0, (*fixed_generation)[g]);
            lp.add_var(0.0, cap, 1e-9);
        }
    }

    // Nodal balance per bus b:
    //   flow_out(b) - sum_g (P_g - spill_g) + sum_w curtail_w - shed_b
    //     = wind(b) - load(b)
    for (int b = 0; b < n; ++b) {
        std::vector<std::pair<int, double>> terms;
        for (int li = 0; li < c.num_lines(); ++li) {
            if (!topo.up(li)) continue;
            const int f = c.bus_index(c.lines[li].from_bus);
            const int t = c.bus_index(c.lines[li].to_bus);
            const double s = c.lines[li].susceptance;
            if (f == b) {
                terms.emplace_back(lay.theta0 + f, s);
                terms.emplace_back(lay.theta0 + t, -s);
            } else if (t == b) {
                terms.emplace_back(lay.theta0 + t, s);
                terms.emplace_back(lay.theta0 + f, -s);
            }
        }
        double rhs = -load_mw[b];
        for (int g = 0; g < ng; ++g) {
            if (c.bus_index(c.generators[g].bus) != b) continue;
            terms.emplace_back(lay.gen0 + g, -1.0);
            if (lay.spill0 >= 0) terms.emplace_back(lay.spill0 + g, 1.0);
        }
        for (int w = 0; w < nw; ++w) {
            if (c.bus_index(c.wind_units[w].bus) != b) continue;
            terms.emplace_back(lay.curt0 + w, 1.0);
            rhs += wind_mw[w];
        }
        if (lay.shed0 >= 0) {
            terms.emplace_back(lay.shed0 + b, -1.0);
            lp.upper[lay.shed0 + b] = std::max(0.0, load_mw[b]);
        }
        lp.add_row(terms, Rel::Eq, rhs);
    }

    // Committed units cannot be spilled below pmin (units holding a fixed
    // output may trip all the way down).
    if (lay.spill0 >= 0 && !fixed_generation) {
        for (int g = 0; g < ng; ++g) {
            if (!committed[static_cast<size_t>(g)] || c.generators[g].pmin <= 0.0) continue;
            lp.add_row({{lay.gen0 + g, 1.0}, {lay.spill0 + g, -1.0}}, Rel::Ge, c.generators[g].pmin);
        }
    }

    for (int li = 0; li < c.num_lines(); ++li) {
        if (!topo.up(li)) continue;
        const int f = c.bus_index(c.lines[li].from_bus);
        const int t = c.bus_index(c.lines[li].to_bus);
        const double s = c.lines[li].susceptance;
        lp.add_row({{lay.theta0 + f, s}, {lay.theta0 + t, -s}}, Rel::Le, c.lines[li].rating);
        lp.add_row({{lay.theta0 + f, s}, {lay.theta0 + t, -s}}, Rel::Ge, -c.lines[li].rating);
    }

    SolveResult res = solve_lp(lp);
    if (res.status == Status::Infeasible)
        throw ValidationError({"dc_opf infeasible under the given switches"});
    if (res.status == Status::Unbounded) throw NumericalBreakdown("dc_opf unbounded");

    FlowSolution sol;
    sol.angles.assign(n, 0.0);
    for (int b = 0; b < n; ++b) sol.angles[b] = res.x[lay.theta0 + b];
    sol.flows.assign(c.lines.size(), 0.0);
    for (int li = 0; li < c.num_lines(); ++li) {
        if (!topo.up(li)) continue;
        const int f = c.bus_index(c.lines[li].from_bus);
        const int t = c.bus_index(c.lines[li].to_bus);
        sol.flows[li] = c.lines[li].susceptance * (sol.angles[f] - sol.angles[t]);
    }
    sol.generation.assign(c.generators.size(), 0.0);
    for (int g = 0; g < ng; ++g) {
        sol.generation[g] = res.x[lay.gen0 + g];
        if (lay.spill0 >= 0) sol.generation[g] -= res.x[lay.spill0 + g];
    }
    sol.shed.assign(static_cast<size_t>(n), 0.0);
    if (lay.shed0 >= 0)
        for (int b = 0; b < n; ++b) sol.shed[b] = res.x[lay.shed0 + b];
    sol.curtailed.assign(c.wind_units.size(), 0.0);
    for (int w = 0; w < nw; ++w) sol.curtailed[w] = res.x[lay.curt0 + w];

    // Report the un-rescaled economic objective.
    double obj = 0.0;
    for (int g = 0; g < ng; ++g) obj += c.generators[g].cost_linear * sol.generation[g];
    for (int b = 0; b < n; ++b) obj += c.voll * sol.shed[static_cast<size_t>(b)];
    for (int w = 0; w < nw; ++w) obj += c.wind_curtail_cost * sol.curtailed[static_cast<size_t>(w)];
    sol.objective = obj;
    return sol;
}

} // namespace

FlowSolution dc_opf(const GridCase& c, const Topology& topo, const std::vector<double>& load_mw,
                    const std::vector<double>& wind_mw, const std::vector<std::uint8_t>& committed,
                    bool allow_shed) {
    if (committed.size() != c.generators.size())
        throw ValidationError({"committed vector length does not match generators"});
    return run_opf(c, topo, load_mw, wind_mw, committed, allow_shed, /*allow_spill=*/false,
                   /*shed_priority=*/false, std::nullopt);
}

std::optional<FlowSolution> min_shed_dispatch(const GridCase& c, const Topology& topo,
                                              const std::vector<double>& load_mw,
                                              const std::vector<double>& wind_mw,
                                              const std::optional<std::vector<double>>&
                                                  fixed_generation) {
    std::vector<std::uint8_t> committed(c.generators.size(), 1);
    try {
        return run_opf(c, topo, load_mw, wind_mw, committed, /*allow_shed=*/true,
                       /*allow_spill=*/true, /*shed_priority=*/true, fixed_generation);
    } catch (const ValidationError&) {
        return std::nullopt;
    }
}

} // namespace rm::grid
