#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rm/grid.hpp"
#include "rm/solver.hpp"

namespace rm::lt {

struct LtGenerator {
    std::string id;
    int area = 1;
    double cost_min = 0.0, cost_max = 0.0; // ask-price interval
    double p_min = 0.0, p_max = 0.0;
};

struct LtLoad {
    std::string id;
    int area = 1;
    double worth_min = 0.0, worth_max = 0.0; // bid-price interval
    double l_min = 0.0, l_max = 0.0;
};

struct Interconnection {
    std::string id;
    int from_area = 1, to_area = 2; // positive export flows from -> to
    double existing_capacity = 0.0; // I0
    double invest_min = 0.0, invest_max = 0.0;
    double invest_cost = 0.0; // per unit of added capacity
};

/// Two-area (or more) robust capacity-investment instance with interval
/// prices.
struct RobustLtInstance {
    std::vector<LtGenerator> generators;
    std::vector<LtLoad> loads;
    std::vector<Interconnection> interconnections;
    double big_m = 1e4;

    std::vector<int> areas() const;
    std::vector<std::string> validate() const;
};

struct Dispatch {
    std::vector<double> generation; // per generator
    std::vector<double> load;       // per load
    std::vector<double> exports;    // per interconnection
};

struct ClearingResult {
    double surplus = 0.0;
    Dispatch dispatch;
    solver::Status status = solver::Status::Infeasible;
};

/// Deterministic market clearing at point prices inside the declared
/// intervals: max sum(w L) - sum(c P) subject to per-area balance, export
/// bounds at the given capacities, and dispatch bounds.
ClearingResult market_clearing(const RobustLtInstance& instance,
                               const std::vector<double>& gen_prices,
                               const std::vector<double>& load_prices,
                               const std::vector<double>& capacities);

/// Worst-case (epigraph) clearing: load worth at the interval floor,
/// generation cost at the ceiling.
ClearingResult robust_market_clearing(const RobustLtInstance& instance,
                                      const std::vector<double>& capacities);

/// Single-level MILP of the bi-level investment problem: KKT stationarity of
/// the epigraph variable, big-M linearized complementarity, primal
/// feasibility with investment-expanded export bounds, and the companion
/// worst-case constraint on the opposite price corner. Variable order is
/// P..., L..., E..., I..., W, mu, u.
solver::MixedIntegerProgram build_kkt_bigm(const RobustLtInstance& instance);

struct RobustLtSolution {
    solver::Status status = solver::Status::Infeasible;
    double objective = 0.0; // W - sum(c_I I)
    double worst_case_surplus = 0.0;
    std::vector<double> investment;
    Dispatch dispatch;
    double mu = 0.0;
    double u = 0.0;
    double kkt_stationarity_residual = 0.0;
    double kkt_complementarity_residual = 0.0;
    double primal_violation = 0.0;
};

RobustLtSolution solve_robust_lt(const RobustLtInstance& instance);

/// Linear robust mid-term epigraph form: min t over (u, t) subject to
/// cost. u + cost_const <= t, each severity row . u + offset <= severity_r,
/// and feasibility rows . u <= rhs.
struct RobustMidTermLp {
    std::vector<double> cost_coeffs;
    double cost_const = 0.0;
    std::vector<std::pair<std::vector<double>, double>> severity_rows; // (coeffs, offset)
    double severity_r = 0.0;
    std::vector<std::pair<std::vector<double>, double>> feasibility_rows; // coeffs . u <= rhs
    std::vector<double> lower, upper; // bounds on u
};

solver::SolveResult robust_mt_epigraph(const RobustMidTermLp& form);

/// One development project: direct cost, build duration, operating expenses
/// once in service, and the lines it adds to the grid on completion.
struct Project {
    std::string id;
    double construction_cost = 0.0;
    int duration_months = 0;
    double opex_per_year = 0.0;
    double opex_slope_per_year = 0.0; // opex rate grows linearly with service age
    std::vector<grid::Line> new_lines;
};

struct ProjectPlan {
    std::vector<std::pair<Project, int>> projects; // (project, start month, 1-based)
    double budget = -1.0;                          // < 0: unconstrained

    std::vector<std::string> validate(int decision_horizon_months) const;
};

struct MtEngineOutcome {
    double annual_operation_cost = 0.0;
    bool chance_ok = true;
    bool achievability_ok = true;
};

/// Evaluation hook into the mid-term machinery: expected yearly operation
/// cost (plus constraint flags) of a given grid.
using MtEngineHandle = std::function<MtEngineOutcome(const grid::GridCase&, std::uint64_t seed)>;

struct PlanEvaluation {
    double total_cost = 0.0;
    double construction_cost = 0.0;
    double opex_cost = 0.0;
    double operation_cost = 0.0;
    bool chance_ok = true;
    bool achievability_ok = true;
};

/// Construction costs plus trapezoid-integrated opex from each completion to
/// the end of the horizon plus the expected operation cost of the
/// project-modified grid, evaluated era by era between completions.
PlanEvaluation evaluate_project_plan(const grid::GridCase& c, const ProjectPlan& plan,
                                     int evaluation_horizon_months, const MtEngineHandle& engine,
                                     std::uint64_t seed);

} // namespace rm::lt
