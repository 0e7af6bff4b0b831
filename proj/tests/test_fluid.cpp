#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "qthru/errors.hpp"
#include "qthru/fluid.hpp"
#include "qthru/network.hpp"
#include "qthru/paths.hpp"
#include "qthru/sim.hpp"

using namespace qthru;

TEST_SUITE_BEGIN("fluid");

namespace {

struct Fixture {
    NetworkSpec spec;
    StaticAllocation alloc;
    SuboptimalityVerdict verdict;
    TreeSolver tree;
    FluidConstants constants;

    explicit Fixture(int builtin_id) {
        spec = builtin_example(builtin_id);
        alloc = solve_static(spec);
        verdict = classify(alloc, spec);
        REQUIRE(verdict.witness.has_value());
        tree = TreeSolver::build(spec.I, spec.J, alloc.basic_edges);
        constants = compute_constants(alloc, *verdict.witness, spec, tree);
    }

    FluidTrajectory integrate(const Perturbation& pert, double step = 0.0) const {
        Mat beta(spec.I, spec.J, 0.0);
        Mat psi = build_psi_tilde(alloc, constants, *verdict.witness, beta, pert.eps);
        double h = step > 0 ? step : std::min(1e-3, pert.eps / 10.0);
        return integrate_trajectory(spec, alloc, constants, psi, tree, pert, 0, 0, h);
    }
};

}  // namespace

TEST_CASE("constants for the first example") {
    Fixture f(1);
    const FluidConstants& c = f.constants;
    CHECK(c.sigma_plus == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(c.sigma_minus == doctest::Approx(11.0).epsilon(1e-12));
    CHECK(c.sigma_zero == doctest::Approx(0.0));
    CHECK(c.alpha == doctest::Approx(9.0 / 11.0).epsilon(1e-12));
    CHECK(c.delta1 == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(c.delta2 == doctest::Approx(0.0));
    CHECK(c.e_dot_r == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(c.m1 == doctest::Approx(48.0).epsilon(1e-9));
    CHECK(c.c_g == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(c.a0 == doctest::Approx(c.delta1 / (2 * c.c_g)).epsilon(1e-12));
    CHECK(c.alpha > 0.5);
    CHECK(c.alpha < 1.0);
    CHECK(c.e_dot_r < 0.0);
    CHECK(c.m3 < 1.0);
    CHECK(c.m1 > 0.0);
}

TEST_CASE("constants for the second example (open witness)") {
    Fixture f(2);
    const FluidConstants& c = f.constants;
    CHECK(f.verdict.witness->kind == SimplePath::Kind::Open);
    CHECK(c.sigma_plus == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(c.sigma_minus == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(c.alpha == doctest::Approx(0.85).epsilon(1e-12));
    CHECK(c.e_dot_r == doctest::Approx(-0.375).epsilon(1e-9));
    CHECK(c.m1 == doctest::Approx(64.0).epsilon(1e-9));
}

TEST_CASE("constants stay in range for every suboptimal fixture") {
    for (int id : {1, 2}) {
        Fixture f(id);
        CHECK(f.constants.alpha > 0.5);
        CHECK(f.constants.alpha < 1.0);
        CHECK(f.constants.e_dot_r < 0.0);
        CHECK(f.constants.delta2 >= 0.0);
        CHECK(f.constants.delta2 < f.constants.delta1);
    }
}

TEST_CASE("drain allocation values on the first example") {
    Fixture f(1);
    Mat beta(2, 3, 0.0);
    Mat psi = build_psi_tilde(f.alloc, f.constants, *f.verdict.witness, beta, 1e-3);
    CHECK(psi(0, 0) == doctest::Approx(0.75).epsilon(1e-12));                 // +1 edge
    CHECK(psi(0, 1) == doctest::Approx(0.5 + 9.0 / 44.0).epsilon(1e-12));     // -1 edge
    CHECK(psi(1, 0) == doctest::Approx(9.0 / 44.0).epsilon(1e-12));           // closing edge
    CHECK(psi(1, 2) == doctest::Approx(1.0).epsilon(1e-12));                  // untouched

    // column slack at pools touched by the path
    Vec cols = psi.col_sums();
    double slack = (1.0 - f.constants.alpha) * f.constants.delta1;
    CHECK(cols[0] == doctest::Approx(1.0 - slack).epsilon(1e-9));
    CHECK(cols[1] == doctest::Approx(1.0 - slack).epsilon(1e-9));
    for (int j = 0; j < 3; ++j) CHECK(cols[j] <= f.spec.nu[j] + 1e-12);
}

TEST_CASE("oversized rounding offsets are rejected") {
    Fixture f(1);
    Mat beta(2, 3, 0.0);
    double eps = 1e-3;
    beta(0, 0) = 2 * eps * eps;
    CHECK_THROWS_AS(build_psi_tilde(f.alloc, f.constants, *f.verdict.witness, beta, eps), Error);
}

TEST_CASE("perturbation generators respect the envelope") {
    for (double eps : {1e-2, 1e-3}) {
        Perturbation z = zero_perturbation(2, 3, eps, 2.0);
        CHECK_NOTHROW(z.validate(2, 3));
        Perturbation s = sine_perturbation(2, 3, eps, 2.0);
        CHECK_NOTHROW(s.validate(2, 3));
        Perturbation w = walk_perturbation(2, 3, eps, 2.0, 99);
        CHECK_NOTHROW(w.validate(2, 3));
        for (const Vec& v : w.w) CHECK(l1_norm(v) <= 0.9 * eps + 1e-12);
    }
}

TEST_CASE("undisturbed run: exact first switch time and empty hold queues") {
    Fixture f(1);
    double eps = 1e-3;
    Perturbation pert = zero_perturbation(2, 3, eps, 2.0);
    FluidTrajectory traj = f.integrate(pert);

    REQUIRE(!traj.zeta.empty());
    // drop of 7 eps at rate 1/2 means the switch lands at 14 eps exactly
    CHECK(std::fabs(traj.zeta[0] - 0.014) <= 1e-4);

    for (size_t k = 0; k < traj.hold_max_eY.size(); ++k)
        CHECK(traj.hold_max_eY[k] == 0.0);

    for (double len : traj.drain_lengths) CHECK(len <= f.constants.m1 * eps + 1e-12);

    // conservation along the samples
    for (const auto& s : traj.samples) {
        for (double y : s.Y) CHECK(y >= -1e-8);
        for (double z : s.Z) CHECK(z >= -1e-8);
        if (s.phase == FluidPhase::Hold) {
            double gap = sum(s.X) - sum(f.spec.nu);
            CHECK(s.e_dot_Y == doctest::Approx(std::max(0.0, gap)).epsilon(1e-8));
        }
    }
}

TEST_CASE("undisturbed busy time shrinks with the scale parameter") {
    // 4e-3 sits inside the feasibility envelope for this network; 1e-2 does
    // not (the sqrt(eps) deviation allowance exceeds the class-one slack)
    Fixture f(1);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {4e-3, 1e-3, 1e-4}) {
        Perturbation pert = zero_perturbation(2, 3, eps, 2.0);
        FluidTrajectory traj = f.integrate(pert);
        CHECK(traj.busy_measure <= prev + 1e-12);
        prev = traj.busy_measure;
    }
    CHECK_THROWS_AS(f.integrate(zero_perturbation(2, 3, 1e-2, 2.0)), Error);
}

TEST_CASE("bound report passes on the undisturbed run") {
    Fixture f(1);
    double eps = 1e-3;
    FluidTrajectory traj = f.integrate(zero_perturbation(2, 3, eps, 2.0));
    BoundReport rep = verify_fluid_bounds(traj, f.constants, eps);
    CHECK(rep.gamma1 == doctest::Approx(2 * 48 * std::sqrt(eps)).epsilon(1e-9));
    for (const auto& ch : rep.checks) CHECK_MESSAGE(ch.pass, ch.name);
    CHECK(rep.all_pass);
}

TEST_CASE("coarse scale parameter fails loudly") {
    Fixture f(1);
    double eps = 0.5 * f.constants.delta1;
    Perturbation pert = zero_perturbation(2, 3, eps, 2.0);
    CHECK_THROWS_AS(f.integrate(pert), Error);
    try {
        f.integrate(pert);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::RegimeViolated);
    }
}

TEST_CASE("disturbed runs are deterministic and well formed") {
    Fixture f(2);
    double eps = 1e-3;
    FluidTrajectory a = f.integrate(walk_perturbation(2, 3, eps, 1.0, 4242));
    FluidTrajectory b = f.integrate(walk_perturbation(2, 3, eps, 1.0, 4242));
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(a.tau == b.tau);
    CHECK(a.busy_measure == b.busy_measure);

    FluidTrajectory s = f.integrate(sine_perturbation(2, 3, eps, 1.0));
    CHECK(s.tau > 0);
}

TEST_CASE("capacity offsets flow through the model") {
    Fixture f(1);
    double eps = 1e-3;

    // a nonnegative offset leaves every pool feasible
    Perturbation up = zero_perturbation(2, 3, eps, 1.0);
    up.theta = {0.3 * eps, 0.3 * eps, 0.3 * eps};
    FluidTrajectory traj = f.integrate(up);
    CHECK(traj.tau > 0);

    // pool three carries no idle slack in the drain allocation, so a
    // negative offset there is caught by the feasibility assertion
    Perturbation down = zero_perturbation(2, 3, eps, 1.0);
    down.theta = {0.0, 0.0, -0.5 * eps};
    CHECK_THROWS_AS(f.integrate(down), Error);

    Perturbation too_big = zero_perturbation(2, 3, eps, 1.0);
    too_big.theta = {2 * eps, 0.0, 0.0};
    CHECK_THROWS_AS(too_big.validate(2, 3), Error);
}

TEST_CASE("trajectory export carries the schema and one row per sample") {
    Fixture f(1);
    FluidTrajectory traj = f.integrate(zero_perturbation(2, 3, 1e-3, 1.0));
    std::string path = "/tmp/qthru_test_traj.csv";
    write_trajectory_csv(traj, path);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "# schema: qthru.trajectory.v1");
    std::getline(in, line);
    CHECK(line == "t,X_1,X_2,Y_1,Y_2,Z_1,Z_2,Z_3,eY,phase,k");
    size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == traj.samples.size());
}

TEST_CASE("balanced-response map obeys the gain bound") {
    Fixture f(1);
    CounterRng rng(123);
    double c_h = f.constants.c_h;
    const int j0 = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Vec x(f.spec.I);
        for (auto& v : x) v = rng.uniform(-1, 1);
        Vec b(f.spec.J, 0.0);
        b[j0] = sum(x);
        Mat g = f.tree.solve(x, b);
        Vec h(f.spec.I, 0.0);
        for (int i = 0; i < f.spec.I; ++i)
            for (int j = 0; j < f.spec.J; ++j) h[i] -= f.spec.mu(i, j) * g(i, j);
        CHECK(l1_norm(h) <= c_h * l1_norm(x) + 1e-9);
    }
}

TEST_SUITE_END();
