#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace rm::solver {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class Rel { Le, Eq, Ge };
enum class Status { Optimal, Infeasible, Unbounded };

struct Row {
    std::vector<double> coeffs; // dense; rows created before later add_var
                                // calls are implicitly zero-padded
    Rel rel = Rel::Le;
    double rhs = 0.0;

    double coeff(int j) const {
        return j < static_cast<int>(coeffs.size()) ? coeffs[static_cast<size_t>(j)] : 0.0;
    }
};

struct LinearProgram {
    Sense sense = Sense::Minimize;
    std::vector<double> cost;
    std::vector<Row> rows;
    std::vector<double> lower; // -inf allowed
    std::vector<double> upper; // +inf allowed

    int num_vars() const { return static_cast<int>(cost.size()); }
    int num_rows() const { return static_cast<int>(rows.size()); }

    /// Appends a variable, returns its index.
    int add_var(double lb, double ub, double c) {
        cost.push_back(c);
        lower.push_back(lb);
        upper.push_back(ub);
        return num_vars() - 1;
    }

    /// Appends a row given sparse (index, coeff) terms.
    void add_row(const std::vector<std::pair<int, double>>& terms, Rel rel, double rhs);

    /// Checks shape invariants; returns human-readable problems, empty when well-formed.
    std::vector<std::string> validate() const;
};

struct MixedIntegerProgram {
    LinearProgram lp;
    std::vector<int> binaries; // variable indices restricted to {0,1}
};

struct SolveResult {
    Status status = Status::Infeasible;
    std::vector<double> x;
    std::vector<double> dual; // one per row; empty for MILP solves
    double objective = 0.0;
    bool farkas_witness = false; // set when infeasibility was certified by phase 1
    int iterations = 0;
};

struct SolverOptions {
    double tol = 1e-9;
    int pivot_limit_factor = 100; // limit = factor * (rows + cols)
    int degenerate_pivot_limit = 50; // switch to Bland's rule beyond this
    int enumeration_threshold = 16; // MILPs with <= this many binaries are enumerated
    bool force_branch_and_bound = false;
};

SolveResult solve_lp(const LinearProgram& lp, const SolverOptions& opts = {});

/// Globally optimal over the binary assignments. Instances with few binaries
/// are enumerated outright; larger ones go through best-first branch and bound
/// on LP relaxations.
SolveResult solve_milp(const MixedIntegerProgram& mip, const SolverOptions& opts = {});

/// Dual objective including reduced-cost terms for variables sitting at finite
/// bounds. Equals the primal objective at any Optimal result.
double dual_objective(const LinearProgram& lp, const SolveResult& result, double tol = 1e-7);

/// Largest violation of rows and bounds at the given point.
double primal_violation(const LinearProgram& lp, const std::vector<double>& x);

/// Plain-text listing for inspection (--dump-lp).
void dump_lp(const LinearProgram& lp, std::ostream& os, const std::string& name = "lp");

/// Debug hook: when set, every solved program is also written to numbered
/// .lp files under this directory. Empty disables.
void set_dump_directory(const std::string& dir);

} // namespace rm::solver
