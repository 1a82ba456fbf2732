#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rm/errors.hpp"
#include "rm/solver.hpp"

using namespace rm::solver;

namespace {

// Deterministic random LP generator for the property tests.
LinearProgram random_lp(std::mt19937& gen, int max_vars = 6, int max_rows = 5) {
    std::uniform_int_distribution<int> nv(1, max_vars), nr(0, max_rows);
    std::uniform_real_distribution<double> coef(-4.0, 4.0), bnd(0.0, 6.0);
    std::uniform_int_distribution<int> rel(0, 2), sense(0, 1);

    LinearProgram lp;
    lp.sense = sense(gen) ? Sense::Maximize : Sense::Minimize;
    const int n = nv(gen);
    for (int j = 0; j < n; ++j) {
        const double lo = -bnd(gen);
        lp.add_var(lo, lo + bnd(gen), coef(gen));
    }
    const int m = nr(gen);
    for (int i = 0; i < m; ++i) {
        Row r;
        r.coeffs.resize(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) r.coeffs[static_cast<size_t>(j)] = coef(gen);
        r.rel = static_cast<Rel>(rel(gen));
        r.rhs = coef(gen);
        lp.rows.push_back(std::move(r));
    }
    return lp;
}

} // namespace

TEST_CASE("single variable maximization hits its bound") {
    LinearProgram lp;
    lp.sense = Sense::Maximize;
    lp.add_var(0.0, kInf, 1.0);
    lp.add_row({{0, 1.0}}, Rel::Le, 3.0);
    const auto res = solve_lp(lp);
    REQUIRE(res.status == Status::Optimal);
    CHECK(res.x[0] == doctest::Approx(3.0));
    CHECK(res.objective == doctest::Approx(3.0));
}

TEST_CASE("contradictory bounds report infeasible with a witness") {
    LinearProgram lp;
    lp.add_var(-kInf, kInf, 1.0);
    lp.add_row({{0, 1.0}}, Rel::Ge, 1.0);
    lp.add_row({{0, 1.0}}, Rel::Le, 0.0);
    const auto res = solve_lp(lp);
    CHECK(res.status == Status::Infeasible);
    CHECK(res.farkas_witness);
}

TEST_CASE("two-unit dispatch splits in merit order") {
    // min 10a + 20b s.t. a + b = 5, 0 <= a,b <= 4
    LinearProgram lp;
    lp.add_var(0.0, 4.0, 10.0);
    lp.add_var(0.0, 4.0, 20.0);
    lp.add_row({{0, 1.0}, {1, 1.0}}, Rel::Eq, 5.0);
    const auto res = solve_lp(lp);
    REQUIRE(res.status == Status::Optimal);
    CHECK(res.x[0] == doctest::Approx(4.0));
    CHECK(res.x[1] == doctest::Approx(1.0));
    CHECK(res.objective == doctest::Approx(60.0));
}

TEST_CASE("unbounded detection") {
    LinearProgram lp;
    lp.sense = Sense::Maximize;
    lp.add_var(0.0, kInf, 1.0);
    lp.add_var(0.0, kInf, 0.0);
    lp.add_row({{0, 1.0}, {1, -1.0}}, Rel::Le, 1.0);
    CHECK(solve_lp(lp).status == Status::Unbounded);
}

TEST_CASE("free variables are handled") {
    // max x0 + 2 x1 with x0 + x1 = 3 and x0 - x1 >= -1: substitute x0 = 3 - x1
    // to get 3 + x1 with x1 <= 2.
    LinearProgram lp;
    lp.sense = Sense::Maximize;
    lp.add_var(-kInf, kInf, 1.0);
    lp.add_var(-kInf, kInf, 2.0);
    lp.add_row({{0, 1.0}, {1, 1.0}}, Rel::Eq, 3.0);
    lp.add_row({{0, 1.0}, {1, -1.0}}, Rel::Ge, -1.0);
    const auto res = solve_lp(lp);
    REQUIRE(res.status == Status::Optimal);
    CHECK(res.x[0] == doctest::Approx(1.0));
    CHECK(res.x[1] == doctest::Approx(2.0));
    CHECK(res.objective == doctest::Approx(5.0));
}

TEST_CASE("duality holds on random instances") {
    std::mt19937 gen(7);
    int optimal_seen = 0;
    for (int k = 0; k < 400; ++k) {
        const LinearProgram lp = random_lp(gen);
        SolveResult res;
        try {
            res = solve_lp(lp);
        } catch (const rm::NumericalBreakdown&) {
            continue;
        }
        if (res.status != Status::Optimal) continue;
        ++optimal_seen;
        CHECK(primal_violation(lp, res.x) < 1e-6);
        const double dual = dual_objective(lp, res);
        const double scale = std::max({1.0, std::abs(res.objective), std::abs(dual)});
        CHECK(std::abs(dual - res.objective) / scale < 1e-6);
    }
    CHECK(optimal_seen > 150);
}

TEST_CASE("row permutation leaves the objective unchanged") {
    std::mt19937 gen(11);
    for (int k = 0; k < 50; ++k) {
        LinearProgram lp = random_lp(gen, 5, 5);
        const auto base = solve_lp(lp);
        LinearProgram rotated_lp = lp;
        if (!rotated_lp.rows.empty())
            std::rotate(rotated_lp.rows.begin(), rotated_lp.rows.begin() + 1,
                        rotated_lp.rows.end());
        const auto rotated = solve_lp(rotated_lp);
        REQUIRE(base.status == rotated.status);
        if (base.status == Status::Optimal)
            CHECK(base.objective == doctest::Approx(rotated.objective).epsilon(1e-9));
    }
}

TEST_CASE("single binary forced up by a fractional floor") {
    MixedIntegerProgram mip;
    mip.lp.add_var(0.0, 1.0, 1.0);
    mip.lp.add_row({{0, 1.0}}, Rel::Ge, 0.3);
    mip.binaries.push_back(0);
    const auto res = solve_milp(mip);
    REQUIRE(res.status == Status::Optimal);
    CHECK(res.x[0] == doctest::Approx(1.0));
}

TEST_CASE("tiny knapsack picks the heavier item") {
    MixedIntegerProgram mip;
    mip.lp.sense = Sense::Maximize;
    mip.lp.add_var(0.0, 1.0, 3.0);
    mip.lp.add_var(0.0, 1.0, 2.0);
    mip.lp.add_row({{0, 1.0}, {1, 1.0}}, Rel::Le, 1.0);
    mip.binaries = {0, 1};
    const auto res = solve_milp(mip);
    REQUIRE(res.status == Status::Optimal);
    CHECK(res.x[0] == doctest::Approx(1.0));
    CHECK(res.objective == doctest::Approx(3.0));
}

TEST_CASE("branch and bound matches exhaustive enumeration") {
    std::mt19937 gen(23);
    std::uniform_int_distribution<int> nbin(1, 8);
    for (int k = 0; k < 60; ++k) {
        MixedIntegerProgram mip;
        mip.lp = random_lp(gen, 5, 4);
        const int nb = std::min(nbin(gen), mip.lp.num_vars());
        for (int j = 0; j < nb; ++j) {
            mip.lp.lower[j] = 0.0;
            mip.lp.upper[j] = 1.0;
            mip.binaries.push_back(j);
        }
        SolverOptions enumerate;
        SolverOptions bnb;
        bnb.force_branch_and_bound = true;
        const auto a = solve_milp(mip, enumerate);
        const auto b = solve_milp(mip, bnb);
        REQUIRE(a.status == b.status);
        if (a.status == Status::Optimal)
            CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-6));
    }
}

TEST_CASE("milp validation rejects misbounded binaries") {
    MixedIntegerProgram mip;
    mip.lp.add_var(0.0, 2.0, 1.0);
    mip.binaries.push_back(0);
    CHECK_THROWS_AS(solve_milp(mip), rm::ValidationError);
}
