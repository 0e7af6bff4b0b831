#include "doctest.h"
#include "qthru/errors.hpp"
#include "qthru/network.hpp"
#include "qthru/static_allocation.hpp"
#include "qthru/tree_flow.hpp"

using namespace qthru;

TEST_SUITE_BEGIN("static");

namespace {

void check_balance_identities(const NetworkSpec& spec, const StaticAllocation& a, double tol) {
    for (int i = 0; i < spec.I; ++i) {
        double rate = 0, row = 0;
        for (int j = 0; j < spec.J; ++j) {
            rate += spec.mu(i, j) * a.psi_star(i, j);
            row += a.psi_star(i, j);
        }
        CHECK(rate == doctest::Approx(spec.lambda[i]).epsilon(tol));
        CHECK(row == doctest::Approx(a.x_star[i]).epsilon(tol));
    }
    for (int j = 0; j < spec.J; ++j) {
        double col = 0;
        for (int i = 0; i < spec.I; ++i) col += a.psi_star(i, j);
        CHECK(col == doctest::Approx(spec.nu[j]).epsilon(tol));
    }
}

}  // namespace

TEST_CASE("first example reproduces the known allocation") {
    NetworkSpec spec = builtin_example(1);
    StaticAllocation a = solve_static(spec);
    CHECK(a.rho_star == doctest::Approx(1.0).epsilon(1e-9));
    const double expected[2][3] = {{1, 0.5, 0}, {0, 0.5, 1}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(a.psi_star(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-9));
    CHECK(a.x_star[0] == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(a.x_star[1] == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(a.basic_edges.size() == 4);
}

TEST_CASE("second example keeps the same allocation") {
    NetworkSpec spec = builtin_example(2);
    StaticAllocation a = solve_static(spec);
    const double expected[2][3] = {{1, 0.5, 0}, {0, 0.5, 1}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(a.psi_star(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-9));
}

TEST_CASE("third example allocation and totals") {
    NetworkSpec spec = builtin_example(3);
    StaticAllocation a = solve_static(spec);
    const double expected[3][3] = {{1, 0.5, 0}, {0, 0.5, 0.5}, {0, 0, 0.5}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(a.psi_star(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-9));
    CHECK(a.x_star[0] == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(a.x_star[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.x_star[2] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("balance identities and tree support on random instances") {
    for (uint64_t seed = 1; seed <= 12; ++seed) {
        GeneratedNetwork g = random_critical_network(2 + seed % 4, 2 + (seed / 2) % 4, seed);
        StaticAllocation a = solve_static(g.spec);
        check_balance_identities(g.spec, a, 1e-9);
        CHECK(static_cast<int>(a.basic_edges.size()) == g.spec.I + g.spec.J - 1);
        CHECK_NOTHROW(TreeSolver::build(g.spec.I, g.spec.J, a.basic_edges));
        for (int i = 0; i < g.spec.I; ++i)
            for (int j = 0; j < g.spec.J; ++j)
                if (!g.spec.activity(i, j)) CHECK(a.xi_star(i, j) == 0.0);
    }
}

TEST_CASE("subcritical load is rejected") {
    NetworkSpec spec = builtin_example(1);
    spec.lambda = {4, 2};
    CHECK_THROWS_WITH_AS(solve_static(spec), doctest::Contains("critically loaded"), Error);
    try {
        solve_static(spec);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::AssumptionFailed);
    }
}

TEST_CASE("supercritical load is infeasible") {
    NetworkSpec spec = builtin_example(1);
    spec.lambda = {80, 40};
    CHECK_THROWS_AS(solve_static(spec), Error);
}

TEST_CASE("partial utilization is called out") {
    NetworkSpec spec;
    spec.I = 1;
    spec.J = 2;
    spec.lambda = {1};
    spec.nu = {1, 1};
    spec.mu = Mat(1, 2, 0.0);
    spec.mu(0, 0) = 1.0;
    CHECK_THROWS_WITH_AS(solve_static(spec), doctest::Contains("partial utilization"), Error);
}

TEST_CASE("allocation override is validated then used") {
    NetworkSpec spec = builtin_example(1);
    Mat xi(2, 3, 0.0);
    xi(0, 0) = 1;
    xi(0, 1) = 0.5;
    xi(1, 1) = 0.5;
    xi(1, 2) = 1;
    StaticOptions opts;
    opts.xi_star_override = xi;
    StaticAllocation a = solve_static(spec, opts);
    CHECK(a.psi_star(0, 0) == doctest::Approx(1.0));

    Mat bad = xi;
    bad(0, 0) = 0.9;  // pool one no longer fully used
    opts.xi_star_override = bad;
    CHECK_THROWS_AS(solve_static(spec, opts), Error);
}

TEST_SUITE_END();
