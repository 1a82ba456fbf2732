#include "rm/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <ostream>
#include <queue>

#include "rm/errors.hpp"

namespace rm::solver {

void LinearProgram::add_row(const std::vector<std::pair<int, double>>& terms, Rel rel, double rhs) {
    Row r;
    r.coeffs.assign(cost.size(), 0.0);
    for (auto [j, v] : terms) r.coeffs[j] += v;
    r.rel = rel;
    r.rhs = rhs;
    rows.push_back(std::move(r));
}

std::vector<std::string> LinearProgram::validate() const {
    std::vector<std::string> problems;
    const size_t n = cost.size();
    if (lower.size() != n || upper.size() != n)
        problems.push_back("bound vectors do not match variable count");
    for (size_t j = 0; j < std::min({lower.size(), upper.size()}); ++j)
        if (lower[j] > upper[j])
            problems.push_back("variable " + std::to_string(j) + " has lower > upper");
    for (size_t i = 0; i < rows.size(); ++i)
        if (rows[i].coeffs.size() > n)
            problems.push_back("row " + std::to_string(i) + " wider than the variable count");
    return problems;
}

namespace {

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, FreeZero };

// Bounded-variable primal simplex on the canonical form
//   min c'x  s.t.  A x + s = b,  l <= (x,s) <= u
// with an explicit dense basis inverse. Phase 1 minimizes a fixed sum of
// artificial variables, so Bland's rule keeps both phases cycle-free.
class Simplex {
  public:
    Simplex(const LinearProgram& lp, const SolverOptions& opts) : opts_(opts) {
        m_ = lp.num_rows();
        n_struct_ = lp.num_vars();
        n_ = n_struct_ + 2 * m_; // structurals, slacks, artificials

        // Row equilibration: divide each row by its max-abs coefficient.
        // VOLL-sized costs against p.u. susceptances spread conditioning
        // badly otherwise. Duals are rescaled on the way out.
        row_scale_.assign(m_, 1.0);
        a_.assign(static_cast<size_t>(m_) * n_, 0.0);
        b_.assign(m_, 0.0);
        lb_.assign(n_, 0.0);
        ub_.assign(n_, 0.0);
        cost_.assign(n_, 0.0);

        const double sign = lp.sense == Sense::Maximize ? -1.0 : 1.0;
        for (int j = 0; j < n_struct_; ++j) {
            cost_[j] = sign * lp.cost[j];
            lb_[j] = lp.lower[j];
            ub_[j] = lp.upper[j];
        }
        for (int i = 0; i < m_; ++i) {
            const Row& r = lp.rows[i];
            double mx = 0.0;
            for (double v : r.coeffs) mx = std::max(mx, std::abs(v));
            if (mx <= 0.0) mx = 1.0;
            row_scale_[i] = mx;
            for (int j = 0; j < n_struct_; ++j) at(i, j) = r.coeff(j) / mx;
            at(i, slack(i)) = 1.0;
            b_[i] = r.rhs / mx;
            switch (r.rel) {
                case Rel::Le: lb_[slack(i)] = 0.0; ub_[slack(i)] = kInf; break;
                case Rel::Ge: lb_[slack(i)] = -kInf; ub_[slack(i)] = 0.0; break;
                case Rel::Eq: lb_[slack(i)] = 0.0; ub_[slack(i)] = 0.0; break;
            }
            // artificial column; direction fixed once the start point is known
            lb_[artificial(i)] = 0.0;
            ub_[artificial(i)] = 0.0;
        }
    }

    void build_columns() {
        cols_.assign(static_cast<size_t>(n_), {});
        for (int j = 0; j < n_; ++j)
            for (int i = 0; i < m_; ++i)
                if (col(i, j) != 0.0) cols_[static_cast<size_t>(j)].emplace_back(i, col(i, j));
    }

    SolveResult run(const LinearProgram& lp) {
        pivot_limit_ = opts_.pivot_limit_factor * (m_ + n_);
        init_start_point();
        build_columns();

        SolveResult res;
        if (need_phase1_) {
            std::vector<double> w(n_, 0.0);
            for (int i = 0; i < m_; ++i) w[artificial(i)] = 1.0;
            if (!optimize(w)) {
                // artificial objective is bounded below by zero
                throw NumericalBreakdown("phase 1 reported an unbounded ray");
            }
            double infeas = 0.0;
            for (int i = 0; i < m_; ++i) infeas += value_[artificial(i)];
            if (infeas > 1e-7) {
                res.status = Status::Infeasible;
                res.farkas_witness = true;
                res.iterations = iters_;
                return res;
            }
            // Pin the artificials to zero for phase 2.
            for (int i = 0; i < m_; ++i) {
                lb_[artificial(i)] = 0.0;
                ub_[artificial(i)] = 0.0;
                value_[artificial(i)] = 0.0;
            }
        }

        degenerate_run_ = 0;
        if (!optimize(cost_)) {
            res.status = Status::Unbounded;
            res.iterations = iters_;
            return res;
        }

        res.status = Status::Optimal;
        res.iterations = iters_;
        res.x.assign(n_struct_, 0.0);
        for (int j = 0; j < n_struct_; ++j) res.x[j] = value_[j];

        const double sign = lp.sense == Sense::Maximize ? -1.0 : 1.0;
        double obj = 0.0;
        for (int j = 0; j < n_struct_; ++j) obj += lp.cost[j] * res.x[j];
        res.objective = obj;

        // y = c_B B^-1, then undo row scaling and the min/max sign flip.
        std::vector<double> y = dual_prices(cost_);
        res.dual.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) res.dual[i] = sign * y[i] / row_scale_[i];
        return res;
    }

  private:
    int slack(int i) const { return n_struct_ + i; }
    int artificial(int i) const { return n_struct_ + m_ + i; }
    double& at(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
    double col(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }

    // Nonbasic structurals at their nearest bound, slacks clamped into range,
    // artificials absorbing whatever imbalance remains.
    void init_start_point() {
        state_.assign(n_, VarState::AtLower);
        basis_.assign(m_, 0);
        value_.assign(n_, 0.0);

        for (int j = 0; j < n_struct_; ++j) {
            if (std::isfinite(lb_[j])) {
                state_[j] = VarState::AtLower;
                value_[j] = lb_[j];
            } else if (std::isfinite(ub_[j])) {
                state_[j] = VarState::AtUpper;
                value_[j] = ub_[j];
            } else {
                state_[j] = VarState::FreeZero;
                value_[j] = 0.0;
            }
        }
        binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
        need_phase1_ = false;
        for (int i = 0; i < m_; ++i) {
            double resid = b_[i];
            for (int j = 0; j < n_struct_; ++j)
                if (value_[j] != 0.0) resid -= col(i, j) * value_[j];

            // slack takes as much as its bounds allow
            const double s = std::min(ub_[slack(i)], std::max(lb_[slack(i)], resid));
            value_[slack(i)] = s;
            resid -= s;

            if (std::abs(resid) > 1e-9) {
                need_phase1_ = true;
                // artificial points toward the residual and starts basic
                const double dir = resid > 0 ? 1.0 : -1.0;
                at(i, artificial(i)) = dir;
                ub_[artificial(i)] = kInf;
                value_[artificial(i)] = std::abs(resid);
                basis_[i] = artificial(i);
                state_[artificial(i)] = VarState::Basic;
                state_[slack(i)] = std::abs(s - lb_[slack(i)]) <= std::abs(s - ub_[slack(i)])
                                       ? VarState::AtLower
                                       : VarState::AtUpper;
                if (!std::isfinite(lb_[slack(i)]) && s == 0.0) state_[slack(i)] = VarState::AtUpper;
                // the start basis column is +-1, so its inverse carries the sign
                binv_[static_cast<size_t>(i) * m_ + i] = dir;
            } else {
                basis_[i] = slack(i);
                state_[slack(i)] = VarState::Basic;
                binv_[static_cast<size_t>(i) * m_ + i] = 1.0;
            }
        }
    }

    std::vector<double> dual_prices(const std::vector<double>& c) const {
        std::vector<double> y(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            const double cb = c[basis_[i]];
            if (cb == 0.0) continue;
            for (int k = 0; k < m_; ++k) y[k] += cb * binv_[static_cast<size_t>(i) * m_ + k];
        }
        return y;
    }

    // B^-1 column of variable j.
    std::vector<double> ftran(int j) const {
        std::vector<double> d(m_, 0.0);
        for (auto [k, v] : cols_[static_cast<size_t>(j)])
            for (int i = 0; i < m_; ++i) d[i] += binv_[static_cast<size_t>(i) * m_ + k] * v;
        return d;
    }

    // Minimizes c over the current basis. Returns false on an unbounded ray.
    bool optimize(const std::vector<double>& c) {
        while (true) {
            if (iters_ >= pivot_limit_)
                throw NumericalBreakdown("simplex pivot limit exceeded (" +
                                         std::to_string(pivot_limit_) + ")");
            const bool bland = degenerate_run_ >= opts_.degenerate_pivot_limit;
            const std::vector<double> y = dual_prices(c);

            int enter = -1, enter_dir = 0;
            double best_score = opts_.tol;
            for (int j = 0; j < n_; ++j) {
                if (state_[j] == VarState::Basic) continue;
                if (lb_[j] == ub_[j]) continue; // fixed, never enters
                double d = c[j];
                for (auto [i, v] : cols_[static_cast<size_t>(j)]) d -= y[i] * v;
                int dir = 0;
                if (state_[j] == VarState::AtLower || state_[j] == VarState::FreeZero) {
                    if (d < -opts_.tol) dir = +1;
                    if (dir == 0 && state_[j] == VarState::FreeZero && d > opts_.tol) dir = -1;
                } else if (state_[j] == VarState::AtUpper) {
                    if (d > opts_.tol) dir = -1;
                }
                if (dir == 0) continue;
                if (bland) {
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if (std::abs(d) > best_score) {
                    best_score = std::abs(d);
                    enter = j;
                    enter_dir = dir;
                }
            }
            if (enter < 0) return true; // optimal for c

            const std::vector<double> d = ftran(enter);

            // Ratio test: entering moves by t*dir, basic i by -t*dir*d[i].
            double t_max = ub_[enter] - lb_[enter];
            if (!std::isfinite(t_max)) t_max = kInf;
            int leave = -1;
            double leave_to = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double rate = -enter_dir * d[i];
                if (std::abs(rate) <= 1e-11) continue;
                const int j = basis_[i];
                double limit;
                double target;
                if (rate > 0.0) {
                    if (!std::isfinite(ub_[j])) continue;
                    limit = (ub_[j] - value_[j]) / rate;
                    target = ub_[j];
                } else {
                    if (!std::isfinite(lb_[j])) continue;
                    limit = (lb_[j] - value_[j]) / rate;
                    target = lb_[j];
                }
                limit = std::max(limit, 0.0);
                const bool better = limit < t_max - 1e-12;
                const bool tie = leave >= 0 && std::abs(limit - t_max) <= 1e-12;
                if ((better || leave < 0) && limit <= t_max) {
                    t_max = limit;
                    leave = i;
                    leave_to = target;
                } else if (tie && basis_[i] < basis_[leave]) {
                    leave = i;
                    leave_to = target;
                }
            }

            if (!std::isfinite(t_max)) return false; // unbounded ray

            ++iters_;
            degenerate_run_ = (t_max <= opts_.tol) ? degenerate_run_ + 1 : 0;

            value_[enter] += enter_dir * t_max;
            for (int i = 0; i < m_; ++i) value_[basis_[i]] -= enter_dir * t_max * d[i];

            if (leave < 0) {
                // bound flip
                state_[enter] = enter_dir > 0 ? VarState::AtUpper : VarState::AtLower;
                continue;
            }

            const int out = basis_[leave];
            state_[out] = (std::abs(leave_to - lb_[out]) <= std::abs(leave_to - ub_[out]))
                              ? VarState::AtLower
                              : VarState::AtUpper;
            value_[out] = leave_to;
            basis_[leave] = enter;
            state_[enter] = VarState::Basic;

            update_inverse(leave, d);
            if (++pivots_since_refactor_ >= 100) refactorize();
        }
    }

    void update_inverse(int r, const std::vector<double>& d) {
        const double piv = d[r];
        if (std::abs(piv) < 1e-12) {
            refactorize();
            return;
        }
        const double inv = 1.0 / piv;
        for (int k = 0; k < m_; ++k) binv_[static_cast<size_t>(r) * m_ + k] *= inv;
        for (int i = 0; i < m_; ++i) {
            if (i == r || d[i] == 0.0) continue;
            const double f = d[i];
            for (int k = 0; k < m_; ++k)
                binv_[static_cast<size_t>(i) * m_ + k] -= f * binv_[static_cast<size_t>(r) * m_ + k];
        }
    }

    void refactorize() {
        pivots_since_refactor_ = 0;
        // Gauss-Jordan on [B | I].
        std::vector<double> work(static_cast<size_t>(m_) * 2 * m_, 0.0);
        const int w = 2 * m_;
        for (int i = 0; i < m_; ++i) {
            for (int r = 0; r < m_; ++r) work[static_cast<size_t>(r) * w + i] = col(r, basis_[i]);
            work[static_cast<size_t>(i) * w + m_ + i] = 1.0;
        }
        for (int c = 0; c < m_; ++c) {
            int piv = c;
            for (int r = c + 1; r < m_; ++r)
                if (std::abs(work[static_cast<size_t>(r) * w + c]) >
                    std::abs(work[static_cast<size_t>(piv) * w + c]))
                    piv = r;
            if (std::abs(work[static_cast<size_t>(piv) * w + c]) < 1e-12)
                throw NumericalBreakdown("singular basis during refactorization");
            if (piv != c)
                for (int k = 0; k < w; ++k)
                    std::swap(work[static_cast<size_t>(piv) * w + k],
                              work[static_cast<size_t>(c) * w + k]);
            const double inv = 1.0 / work[static_cast<size_t>(c) * w + c];
            for (int k = 0; k < w; ++k) work[static_cast<size_t>(c) * w + k] *= inv;
            for (int r = 0; r < m_; ++r) {
                if (r == c) continue;
                const double f = work[static_cast<size_t>(r) * w + c];
                if (f == 0.0) continue;
                for (int k = 0; k < w; ++k)
                    work[static_cast<size_t>(r) * w + k] -= f * work[static_cast<size_t>(c) * w + k];
            }
        }
        for (int r = 0; r < m_; ++r)
            for (int k = 0; k < m_; ++k)
                binv_[static_cast<size_t>(r) * m_ + k] = work[static_cast<size_t>(r) * w + m_ + k];

        // x_B = B^-1 (b - N x_N)
        std::vector<double> rhs = b_;
        for (int j = 0; j < n_; ++j) {
            if (state_[j] == VarState::Basic || value_[j] == 0.0) continue;
            for (int i = 0; i < m_; ++i)
                if (col(i, j) != 0.0) rhs[i] -= col(i, j) * value_[j];
        }
        for (int i = 0; i < m_; ++i) {
            double v = 0.0;
            for (int k = 0; k < m_; ++k) v += binv_[static_cast<size_t>(i) * m_ + k] * rhs[k];
            value_[basis_[i]] = v;
        }
    }

    const SolverOptions& opts_;
    int m_ = 0, n_struct_ = 0, n_ = 0;
    std::vector<double> a_, b_, lb_, ub_, cost_, row_scale_;
    std::vector<double> binv_, value_;
    std::vector<std::vector<std::pair<int, double>>> cols_;
    std::vector<int> basis_;
    std::vector<VarState> state_;
    bool need_phase1_ = false;
    int iters_ = 0, pivot_limit_ = 0, degenerate_run_ = 0, pivots_since_refactor_ = 0;
};

} // namespace

namespace {
std::mutex g_dump_mu;
std::string g_dump_dir;
std::atomic<int> g_dump_counter{0};

void maybe_dump(const LinearProgram& lp) {
    std::string dir;
    {
        std::lock_guard lock(g_dump_mu);
        dir = g_dump_dir;
    }
    if (dir.empty()) return;
    const int n = g_dump_counter.fetch_add(1);
    std::ofstream os(dir + "/program_" + std::to_string(n) + ".lp");
    if (os) dump_lp(lp, os, "program_" + std::to_string(n));
}
} // namespace

void set_dump_directory(const std::string& dir) {
    std::lock_guard lock(g_dump_mu);
    g_dump_dir = dir;
}

SolveResult solve_lp(const LinearProgram& lp, const SolverOptions& opts) {
    const auto problems = lp.validate();
    if (!problems.empty()) throw ValidationError(problems);
    maybe_dump(lp);
    if (lp.num_rows() == 0) {
        // Pure bound problem: each variable goes to its cheaper bound.
        SolveResult res;
        res.x.assign(lp.num_vars(), 0.0);
        const double sign = lp.sense == Sense::Maximize ? -1.0 : 1.0;
        double obj = 0.0;
        for (int j = 0; j < lp.num_vars(); ++j) {
            const double c = sign * lp.cost[j];
            double v;
            if (c > 0) v = lp.lower[j];
            else if (c < 0) v = lp.upper[j];
            else v = std::isfinite(lp.lower[j]) ? lp.lower[j]
                                                : (std::isfinite(lp.upper[j]) ? lp.upper[j] : 0.0);
            if (!std::isfinite(v)) {
                res.status = Status::Unbounded;
                return res;
            }
            if (lp.lower[j] > lp.upper[j]) {
                res.status = Status::Infeasible;
                return res;
            }
            res.x[j] = v;
            obj += lp.cost[j] * v;
        }
        res.status = Status::Optimal;
        res.objective = obj;
        return res;
    }
    Simplex s(lp, opts);
    return s.run(lp);
}

double primal_violation(const LinearProgram& lp, const std::vector<double>& x) {
    double worst = 0.0;
    for (int j = 0; j < lp.num_vars(); ++j) {
        worst = std::max(worst, lp.lower[j] - x[j]);
        worst = std::max(worst, x[j] - lp.upper[j]);
    }
    for (const Row& r : lp.rows) {
        double lhs = 0.0;
        for (int j = 0; j < lp.num_vars(); ++j) lhs += r.coeff(j) * x[j];
        switch (r.rel) {
            case Rel::Le: worst = std::max(worst, lhs - r.rhs); break;
            case Rel::Ge: worst = std::max(worst, r.rhs - lhs); break;
            case Rel::Eq: worst = std::max(worst, std::abs(lhs - r.rhs)); break;
        }
    }
    return worst;
}

double dual_objective(const LinearProgram& lp, const SolveResult& result, double tol) {
    double obj = 0.0;
    for (int i = 0; i < lp.num_rows(); ++i) obj += result.dual[i] * lp.rows[i].rhs;
    // Reduced-cost contributions of variables held at a finite bound.
    for (int j = 0; j < lp.num_vars(); ++j) {
        double d = lp.cost[j];
        for (int i = 0; i < lp.num_rows(); ++i) d -= result.dual[i] * lp.rows[i].coeff(j);
        if (std::abs(d) <= tol) continue;
        const bool at_lower = std::isfinite(lp.lower[j]) && result.x[j] <= lp.lower[j] + tol;
        const bool at_upper = std::isfinite(lp.upper[j]) && result.x[j] >= lp.upper[j] - tol;
        if (at_lower && (lp.sense == Sense::Minimize ? d > 0 : d < 0)) obj += d * lp.lower[j];
        else if (at_upper) obj += d * lp.upper[j];
        else if (at_lower) obj += d * lp.lower[j];
    }
    return obj;
}

namespace {

SolveResult solve_fixed(const MixedIntegerProgram& mip, std::uint64_t assignment,
                        const SolverOptions& opts) {
    LinearProgram lp = mip.lp;
    for (size_t k = 0; k < mip.binaries.size(); ++k) {
        const double v = (assignment >> k) & 1u ? 1.0 : 0.0;
        lp.lower[mip.binaries[k]] = v;
        lp.upper[mip.binaries[k]] = v;
    }
    return solve_lp(lp, opts);
}

SolveResult enumerate_milp(const MixedIntegerProgram& mip, const SolverOptions& opts) {
    const size_t k = mip.binaries.size();
    SolveResult best;
    best.status = Status::Infeasible;
    const double sign = mip.lp.sense == Sense::Maximize ? -1.0 : 1.0;
    for (std::uint64_t mask = 0; mask < (1ULL << k); ++mask) {
        SolveResult r = solve_fixed(mip, mask, opts);
        if (r.status != Status::Optimal) continue;
        if (best.status != Status::Optimal || sign * r.objective < sign * best.objective - 1e-12) {
            best = std::move(r);
        }
    }
    best.dual.clear();
    return best;
}

struct BnbNode {
    double bound;
    std::uint64_t fixed_mask;   // which binaries are fixed
    std::uint64_t fixed_value;  // their values
    bool operator<(const BnbNode& o) const { return bound > o.bound; } // min-heap by bound
};

SolveResult branch_and_bound(const MixedIntegerProgram& mip, const SolverOptions& opts) {
    const double sign = mip.lp.sense == Sense::Maximize ? -1.0 : 1.0;
    const size_t k = mip.binaries.size();

    auto relax = [&](std::uint64_t mask, std::uint64_t val) {
        LinearProgram lp = mip.lp;
        for (size_t i = 0; i < k; ++i) {
            if ((mask >> i) & 1u) {
                const double v = (val >> i) & 1u ? 1.0 : 0.0;
                lp.lower[mip.binaries[i]] = v;
                lp.upper[mip.binaries[i]] = v;
            }
        }
        return solve_lp(lp, opts);
    };

    SolveResult incumbent;
    incumbent.status = Status::Infeasible;
    double incumbent_score = kInf;

    auto consider = [&](SolveResult&& r) {
        const double score = sign * r.objective;
        if (incumbent.status != Status::Optimal || score < incumbent_score - 1e-12) {
            incumbent = std::move(r);
            incumbent_score = score;
        }
    };

    std::priority_queue<BnbNode> open;
    {
        SolveResult root = relax(0, 0);
        if (root.status == Status::Infeasible) return root;
        if (root.status == Status::Unbounded) return root;
        open.push({sign * root.objective, 0, 0});

        // Rounding heuristic for an early incumbent.
        std::uint64_t rounded = 0;
        for (size_t i = 0; i < k; ++i)
            if (root.x[mip.binaries[i]] >= 0.5) rounded |= 1ULL << i;
        SolveResult h = solve_fixed(mip, rounded, opts);
        if (h.status == Status::Optimal) consider(std::move(h));
    }

    while (!open.empty()) {
        BnbNode node = open.top();
        open.pop();
        if (incumbent.status == Status::Optimal && node.bound >= incumbent_score - 1e-9) continue;

        SolveResult r = relax(node.fixed_mask, node.fixed_value);
        if (r.status != Status::Optimal) continue;
        const double bound = sign * r.objective;
        if (incumbent.status == Status::Optimal && bound >= incumbent_score - 1e-9) continue;

        // Most fractional unfixed binary.
        int branch = -1;
        double worst_frac = 1e-6;
        for (size_t i = 0; i < k; ++i) {
            if ((node.fixed_mask >> i) & 1u) continue;
            const double v = r.x[mip.binaries[i]];
            const double frac = std::min(v, 1.0 - v);
            if (frac > worst_frac) {
                worst_frac = frac;
                branch = static_cast<int>(i);
            }
        }
        if (branch < 0) {
            // Integral relaxation; it is feasible for the MILP.
            consider(std::move(r));
            continue;
        }
        for (int v = 0; v <= 1; ++v) {
            BnbNode child;
            child.bound = bound;
            child.fixed_mask = node.fixed_mask | (1ULL << branch);
            child.fixed_value = node.fixed_value | (static_cast<std::uint64_t>(v) << branch);
            open.push(child);
        }
    }
    incumbent.dual.clear();
    return incumbent;
}

} // namespace

SolveResult solve_milp(const MixedIntegerProgram& mip, const SolverOptions& opts) {
    if (mip.binaries.size() > 64)
        throw ValidationError({"more than 64 binary variables"});
    for (int j : mip.binaries) {
        if (j < 0 || j >= mip.lp.num_vars())
            throw ValidationError({"binary index out of range"});
        if (mip.lp.lower[j] < -1e-12 || mip.lp.upper[j] > 1.0 + 1e-12)
            throw ValidationError({"binary variable " + std::to_string(j) + " not bounded to [0,1]"});
    }
    if (mip.binaries.empty()) return solve_lp(mip.lp, opts);
    if (!opts.force_branch_and_bound &&
        static_cast<int>(mip.binaries.size()) <= opts.enumeration_threshold)
        return enumerate_milp(mip, opts);
    return branch_and_bound(mip, opts);
}

void dump_lp(const LinearProgram& lp, std::ostream& os, const std::string& name) {
    os << "\\ " << name << ": " << lp.num_vars() << " vars, " << lp.num_rows() << " rows\n";
    os << (lp.sense == Sense::Minimize ? "Minimize\n obj:" : "Maximize\n obj:");
    for (int j = 0; j < lp.num_vars(); ++j)
        if (lp.cost[j] != 0.0) os << " " << (lp.cost[j] >= 0 ? "+" : "") << lp.cost[j] << " x" << j;
    os << "\nSubject To\n";
    for (int i = 0; i < lp.num_rows(); ++i) {
        os << " r" << i << ":";
        const Row& r = lp.rows[i];
        for (int j = 0; j < lp.num_vars(); ++j)
            if (r.coeff(j) != 0.0)
                os << " " << (r.coeff(j) >= 0 ? "+" : "") << r.coeff(j) << " x" << j;
        os << (r.rel == Rel::Le ? " <= " : r.rel == Rel::Ge ? " >= " : " = ") << r.rhs << "\n";
    }
    os << "Bounds\n";
    for (int j = 0; j < lp.num_vars(); ++j)
        os << " " << lp.lower[j] << " <= x" << j << " <= " << lp.upper[j] << "\n";
    os << "End\n";
}

} // namespace rm::solver
