#include "doctest.h"
#include "oracles.hpp"
#include "qthru/errors.hpp"
#include "qthru/network.hpp"
#include "qthru/static_allocation.hpp"
#include "qthru/tree_flow.hpp"

using namespace qthru;

TEST_SUITE_BEGIN("tree_flow");

TEST_CASE("recovers the static allocation from its totals") {
    NetworkSpec spec = builtin_example(1);
    StaticAllocation a = solve_static(spec);
    TreeSolver tree = TreeSolver::build(spec.I, spec.J, a.basic_edges);
    Mat phi = tree.solve(a.x_star, spec.nu);
    for (int i = 0; i < spec.I; ++i)
        for (int j = 0; j < spec.J; ++j)
            CHECK(phi(i, j) == doctest::Approx(a.psi_star(i, j)).epsilon(1e-12));
}

TEST_CASE("zero totals give the zero matrix") {
    TreeSolver tree = TreeSolver::build(2, 2, {{0, 0}, {0, 1}, {1, 1}});
    Mat phi = tree.solve({0, 0}, {0, 0});
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(phi(i, j) == 0.0);
}

TEST_CASE("agrees with the dense reference on random instances") {
    CounterRng rng(555);
    for (int trial = 0; trial < 200; ++trial) {
        int I = 1 + static_cast<int>(rng.below(5));
        int J = 1 + static_cast<int>(rng.below(5));
        auto edges = oracle::random_tree(I, J, rng);
        TreeSolver tree = TreeSolver::build(I, J, edges);
        Vec a(I), b(J);
        double sa = 0;
        for (int i = 0; i < I; ++i) { a[i] = rng.uniform(-5, 5); sa += a[i]; }
        double sb = 0;
        for (int j = 0; j + 1 < J; ++j) { b[j] = rng.uniform(-5, 5); sb += b[j]; }
        b[J - 1] = sa - sb;
        Mat mine = tree.solve(a, b);
        Mat ref = oracle::dense_tree_solve(I, J, edges, a, b);
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j)
                CHECK(std::fabs(mine(i, j) - ref(i, j)) <= 1e-9);
    }
}

TEST_CASE("integer totals give integer flows exactly") {
    CounterRng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        int I = 1 + static_cast<int>(rng.below(4));
        int J = 1 + static_cast<int>(rng.below(4));
        auto edges = oracle::random_tree(I, J, rng);
        TreeSolver tree = TreeSolver::build(I, J, edges);
        std::vector<long long> a(I), b(J);
        long long sa = 0;
        for (int i = 0; i < I; ++i) { a[i] = static_cast<long long>(rng.below(1000)); sa += a[i]; }
        long long sb = 0;
        for (int j = 0; j + 1 < J; ++j) { b[j] = static_cast<long long>(rng.below(500)); sb += b[j]; }
        b[J - 1] = sa - sb;
        MatI flow = tree.solve_int(a, b);
        // exactness: the double path gives the same values bit for bit
        Vec ad(a.begin(), a.end()), bd(b.begin(), b.end());
        Mat flow_d = tree.solve(ad, bd);
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j)
                CHECK(static_cast<double>(flow(i, j)) == flow_d(i, j));
    }
}

TEST_CASE("linearity holds to machine precision") {
    CounterRng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        int I = 2 + static_cast<int>(rng.below(3));
        int J = 2 + static_cast<int>(rng.below(3));
        auto edges = oracle::random_tree(I, J, rng);
        TreeSolver tree = TreeSolver::build(I, J, edges);
        auto draw = [&](int len) {
            Vec v(len);
            for (auto& x : v) x = rng.uniform(-2, 2);
            return v;
        };
        Vec a1 = draw(I), a2 = draw(I), b1(J, 0.0), b2(J, 0.0);
        for (int j = 0; j + 1 < J; ++j) { b1[j] = rng.uniform(-2, 2); b2[j] = rng.uniform(-2, 2); }
        b1[J - 1] = sum(a1) - sum(Vec(b1.begin(), b1.end() - 1));
        b2[J - 1] = sum(a2) - sum(Vec(b2.begin(), b2.end() - 1));
        Vec a12(I), b12(J);
        for (int i = 0; i < I; ++i) a12[i] = a1[i] + a2[i];
        for (int j = 0; j < J; ++j) b12[j] = b1[j] + b2[j];
        Mat f1 = tree.solve(a1, b1), f2 = tree.solve(a2, b2), f12 = tree.solve(a12, b12);
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j)
                CHECK(std::fabs(f12(i, j) - f1(i, j) - f2(i, j)) <= 1e-12);
    }
}

TEST_CASE("solutions carry the requested row and column totals") {
    CounterRng rng(808);
    for (int trial = 0; trial < 60; ++trial) {
        int I = 1 + static_cast<int>(rng.below(4));
        int J = 1 + static_cast<int>(rng.below(4));
        auto edges = oracle::random_tree(I, J, rng);
        TreeSolver tree = TreeSolver::build(I, J, edges);
        Vec a(I), b(J, 0.0);
        for (auto& v : a) v = rng.uniform(-4, 4);
        for (int j = 0; j + 1 < J; ++j) b[j] = rng.uniform(-4, 4);
        b[J - 1] = sum(a) - sum(b);
        Mat phi = tree.solve(a, b);
        Vec rows = phi.row_sums(), cols = phi.col_sums();
        for (int i = 0; i < I; ++i) CHECK(std::fabs(rows[i] - a[i]) <= 1e-9);
        for (int j = 0; j < J; ++j) CHECK(std::fabs(cols[j] - b[j]) <= 1e-9);
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j)
                if (phi(i, j) != 0.0) {
                    bool on_tree = false;
                    for (auto& [ti, tj] : edges) on_tree = on_tree || (ti == i && tj == j);
                    CHECK(on_tree);
                }
    }
}

TEST_CASE("mismatched totals are rejected beyond the fold tolerance") {
    TreeSolver tree = TreeSolver::build(1, 1, {{0, 0}});
    CHECK_NOTHROW(tree.solve({1.0}, {1.0 + 1e-10}));
    CHECK_THROWS_AS(tree.solve({1.0}, {1.1}), Error);
    CHECK_THROWS_AS(tree.solve_int({5}, {6}), Error);
}

TEST_CASE("rejects edge sets that are not spanning trees") {
    CHECK_THROWS_AS(TreeSolver::build(2, 2, {{0, 0}, {1, 1}}), Error);          // too few
    CHECK_THROWS_AS(TreeSolver::build(2, 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}), Error);
    CHECK_THROWS_AS(TreeSolver::build(2, 3, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}), Error);
}

TEST_CASE("gain bound is one on a single edge") {
    TreeSolver tree = TreeSolver::build(1, 1, {{0, 0}});
    CHECK(tree.gain_bound() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gain bound dominates a unit certificate on the first example") {
    NetworkSpec spec = builtin_example(1);
    StaticAllocation a = solve_static(spec);
    TreeSolver tree = TreeSolver::build(spec.I, spec.J, a.basic_edges);
    CHECK(tree.gain_bound() >= 1.0 - 1e-9);
}

TEST_CASE("gain bound matches vertex enumeration on random trees") {
    CounterRng rng(991);
    for (int trial = 0; trial < 12; ++trial) {
        int I = 1 + static_cast<int>(rng.below(4));
        int J = 1 + static_cast<int>(rng.below(4));
        auto edges = oracle::random_tree(I, J, rng);
        TreeSolver tree = TreeSolver::build(I, J, edges);
        double lp_val = tree.gain_bound();

        // candidate extreme points of the balanced unit-norm set: paired
        // signed units and zero-sum in-block pairs
        double best = 0;
        auto eval = [&](const Vec& a, const Vec& b) {
            Mat phi = tree.solve(a, b);
            for (int i = 0; i < I; ++i)
                for (int j = 0; j < J; ++j) best = std::max(best, std::fabs(phi(i, j)));
        };
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j)
                for (int s : {+1, -1}) {
                    Vec a(I, 0.0), b(J, 0.0);
                    a[i] = s;
                    b[j] = s;
                    eval(a, b);
                }
        for (int i = 0; i < I; ++i)
            for (int i2 = 0; i2 < I; ++i2)
                if (i != i2) {
                    Vec a(I, 0.0), b(J, 0.0);
                    a[i] = 0.5;
                    a[i2] = -0.5;
                    eval(a, b);
                }
        for (int j = 0; j < J; ++j)
            for (int j2 = 0; j2 < J; ++j2)
                if (j != j2) {
                    Vec a(I, 0.0), b(J, 0.0);
                    b[j] = 0.5;
                    b[j2] = -0.5;
                    eval(a, b);
                }
        CHECK(lp_val == doctest::Approx(best).epsilon(1e-6));
    }
}

TEST_SUITE_END();
