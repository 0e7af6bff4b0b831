#include <string>

#include "doctest.h"
#include "qthru/errors.hpp"
#include "qthru/network.hpp"
#include "qthru/static_allocation.hpp"

using namespace qthru;

TEST_SUITE_BEGIN("network");

namespace {

const char* kExample1Doc = R"({
  "classes": 2, "pools": 3,
  "lambda": [8, 4], "nu": [1, 1, 1],
  "mu": [[3, 10, 1], [1, 4, 2]]
})";

}  // namespace

TEST_CASE("document load derives the activity set") {
    NetworkSpec s = load_spec(kExample1Doc);
    CHECK(s.I == 2);
    CHECK(s.J == 3);
    CHECK(s.activity_count() == 6);

    std::string doc2 = kExample1Doc;
    doc2.replace(doc2.find("[1, 4, 2]"), 9, "[0, 4, 2]");
    NetworkSpec s2 = load_spec(doc2);
    CHECK(s2.activity_count() == 5);
    CHECK_FALSE(s2.activity(1, 0));
}

TEST_CASE("rejects bad documents with specific diagnostics") {
    std::string zero_lambda = kExample1Doc;
    zero_lambda.replace(zero_lambda.find("[8, 4]"), 6, "[0, 4]");
    CHECK_THROWS_WITH_AS(load_spec(zero_lambda),
                         doctest::Contains("non-positive arrival rate"), Error);

    std::string bad_dims = kExample1Doc;
    bad_dims.replace(bad_dims.find("[8, 4]"), 6, "[8, 4, 1]");
    CHECK_THROWS_AS(load_spec(bad_dims), Error);

    std::string neg_mu = kExample1Doc;
    neg_mu.replace(neg_mu.find("[3, 10, 1]"), 10, "[3, -1, 1]");
    CHECK_THROWS_WITH_AS(load_spec(neg_mu), doctest::Contains("negative service rate"), Error);

    std::string no_activity = kExample1Doc;
    no_activity.replace(no_activity.find("[1, 4, 2]"), 9, "[0, 0, 0]");
    CHECK_THROWS_WITH_AS(load_spec(no_activity), doctest::Contains("no activity"), Error);

    CHECK_THROWS_AS(load_spec("not json"), Error);
}

TEST_CASE("round trip through the document format") {
    NetworkSpec s = builtin_example(1);
    NetworkSpec back = load_spec(save_spec(s));
    CHECK(back.I == s.I);
    CHECK(back.J == s.J);
    CHECK(back.lambda == s.lambda);
    CHECK(back.nu == s.nu);
    CHECK(back.mu == s.mu);
}

TEST_CASE("builtin fixtures") {
    NetworkSpec e1 = builtin_example(1);
    CHECK(e1.I == 2);
    CHECK(e1.J == 3);
    CHECK(e1.lambda == Vec{8, 4});

    NetworkSpec e2 = builtin_example(2);
    CHECK(e2.mu(1, 0) == 0.0);
    CHECK(e2.activity_count() == 5);

    NetworkSpec e3 = builtin_example(3);
    CHECK(e3.I == 3);
    CHECK(e3.lambda == Vec{4, 1, 2});

    CHECK_THROWS_AS(builtin_example(4), Error);
    CHECK_THROWS_AS(builtin_example(0), Error);
}

TEST_CASE("random generator embeds a spanning-tree witness") {
    GeneratedNetwork g = random_critical_network(2, 3, 7);
    int positive = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            if (g.psi_star(i, j) > 0) ++positive;
    CHECK(positive == 4);  // classes + pools - 1

    // balance identities of the witness
    for (int j = 0; j < g.spec.J; ++j) {
        double col = 0;
        for (int i = 0; i < g.spec.I; ++i) col += g.psi_star(i, j);
        CHECK(col == doctest::Approx(g.spec.nu[j]).epsilon(1e-12));
    }
    for (int i = 0; i < g.spec.I; ++i) {
        double rate = 0;
        for (int j = 0; j < g.spec.J; ++j) rate += g.spec.mu(i, j) * g.psi_star(i, j);
        CHECK(rate == doctest::Approx(g.spec.lambda[i]).epsilon(1e-12));
    }
}

TEST_CASE("smallest generator case") {
    GeneratedNetwork g = random_critical_network(1, 1, 0);
    CHECK(g.spec.lambda[0] == doctest::Approx(g.spec.mu(0, 0) * g.spec.nu[0]).epsilon(1e-12));
}

TEST_CASE("generated instances are critically loaded") {
    // the static solver rejects anything with utilization away from one
    for (uint64_t seed : {42ull, 11ull, 99ull}) {
        GeneratedNetwork g = random_critical_network(3, 3, seed);
        StaticAllocation a = solve_static(g.spec);
        CHECK(a.rho_star == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("system scaling rounds to integers") {
    NetworkSpec e1 = builtin_example(1);
    Vec x_star{1.5, 1.5};
    ScaledSystem sys = scale_system(e1, x_star, 100);
    CHECK(sys.N_n == std::vector<long long>{100, 100, 100});
    CHECK(sys.X0_n == std::vector<long long>{150, 150});
    CHECK(sys.lambda_n == Vec{800, 400});

    ScaledSystem s1 = scale_system(e1, x_star, 1);
    for (long long nj : s1.N_n) CHECK(nj >= 1);

    ScaledSystem s400 = scale_system(e1, x_star, 400);
    for (int i = 0; i < 2; ++i)
        CHECK(static_cast<double>(s400.X0_n[i]) / 400.0 == x_star[i]);
}

TEST_CASE("scaling stays within the square-root envelope") {
    for (uint64_t seed : {3ull, 17ull}) {
        GeneratedNetwork g = random_critical_network(3, 2, seed);
        Vec x_star = g.psi_star.row_sums();
        for (long long n : {2ll, 5ll, 37ll, 1000ll}) {
            ScaledSystem sys = scale_system(g.spec, x_star, n);
            double bound = 1.0 / std::sqrt(static_cast<double>(n));
            for (int i = 0; i < g.spec.I; ++i) {
                CHECK(std::fabs(sys.lambda_n[i] / n - g.spec.lambda[i]) <= bound);
                CHECK(std::fabs(static_cast<double>(sys.X0_n[i]) / n - x_star[i]) <= bound);
            }
            for (int j = 0; j < g.spec.J; ++j)
                CHECK(std::fabs(static_cast<double>(sys.N_n[j]) / n - g.spec.nu[j]) <= bound);
            CHECK(sys.mu_n == g.spec.mu);
        }
    }
}

TEST_SUITE_END();
