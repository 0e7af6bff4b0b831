#include "qthru/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qthru/errors.hpp"
#include "qthru/lp.hpp"
#include "qthru/rng.hpp"

namespace qthru {

using nlohmann::json;

int NetworkSpec::activity_count() const {
    int c = 0;
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j)
            if (activity(i, j)) ++c;
    return c;
}

double NetworkSpec::mu_total() const {
    double s = 0;
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) s += mu(i, j);
    return s;
}

void NetworkSpec::validate() const {
    if (I <= 0 || J <= 0) throw spec_error("class and pool counts must be positive");
    if (static_cast<int>(lambda.size()) != I || static_cast<int>(nu.size()) != J ||
        mu.rows() != I || mu.cols() != J)
        throw spec_error("dimension mismatch between classes/pools and rate arrays");
    for (int i = 0; i < I; ++i) {
        if (!(lambda[i] > 0) || !std::isfinite(lambda[i]))
            throw spec_error("non-positive arrival rate for class " + std::to_string(i + 1));
    }
    for (int j = 0; j < J; ++j) {
        if (!(nu[j] > 0) || !std::isfinite(nu[j]))
            throw spec_error("non-positive pool capacity for pool " + std::to_string(j + 1));
    }
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) {
            double v = mu(i, j);
            if (v < 0 || !std::isfinite(v))
                throw spec_error("negative service rate at (" + std::to_string(i + 1) + "," +
                                 std::to_string(j + 1) + ")");
        }
    for (int i = 0; i < I; ++i) {
        bool any = false;
        for (int j = 0; j < J; ++j) any = any || activity(i, j);
        if (!any)
            throw spec_error("class " + std::to_string(i + 1) + " has no activity");
    }
}

NetworkSpec load_spec(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw spec_error(std::string("network document is not valid JSON: ") + e.what());
    }
    NetworkSpec s;
    try {
        s.I = doc.at("classes").get<int>();
        s.J = doc.at("pools").get<int>();
        s.lambda = doc.at("lambda").get<Vec>();
        s.nu = doc.at("nu").get<Vec>();
        auto rows = doc.at("mu").get<std::vector<Vec>>();
        if (static_cast<int>(rows.size()) != s.I)
            throw spec_error("dimension mismatch: mu row count");
        s.mu = Mat(s.I, s.J, 0.0);
        for (int i = 0; i < s.I; ++i) {
            if (static_cast<int>(rows[i].size()) != s.J)
                throw spec_error("dimension mismatch: mu column count");
            for (int j = 0; j < s.J; ++j) s.mu(i, j) = rows[i][j];
        }
    } catch (const json::exception& e) {
        throw spec_error(std::string("network document missing or mistyped field: ") + e.what());
    }
    s.validate();
    return s;
}

NetworkSpec load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw usage_error("cannot open network file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_spec(ss.str());
}

std::string save_spec(const NetworkSpec& spec) {
    json doc;
    doc["schema"] = "qthru.network.v1";
    doc["classes"] = spec.I;
    doc["pools"] = spec.J;
    doc["lambda"] = spec.lambda;
    doc["nu"] = spec.nu;
    std::vector<Vec> rows(spec.I, Vec(spec.J));
    for (int i = 0; i < spec.I; ++i)
        for (int j = 0; j < spec.J; ++j) rows[i][j] = spec.mu(i, j);
    doc["mu"] = rows;
    return doc.dump(2);
}

NetworkSpec builtin_example(int id) {
    NetworkSpec s;
    switch (id) {
        case 1:
            s.I = 2; s.J = 3;
            s.lambda = {8, 4};
            s.nu = {1, 1, 1};
            s.mu = Mat(2, 3);
            s.mu(0, 0) = 3; s.mu(0, 1) = 10; s.mu(0, 2) = 1;
            s.mu(1, 0) = 1; s.mu(1, 1) = 4;  s.mu(1, 2) = 2;
            break;
        case 2:
            s = builtin_example(1);
            s.mu(1, 0) = 0;  // (2,1) is no longer an activity
            return s;
        case 3:
            // Throughput-optimal fixture: every non-tree pair closes a path of
            // nonnegative signed weight, so the redistribution value is zero.
            s.I = 3; s.J = 3;
            s.lambda = {4, 1, 2};
            s.nu = {1, 1, 1};
            s.mu = Mat(3, 3);
            s.mu(0, 0) = 3;   s.mu(0, 1) = 2;   s.mu(0, 2) = 0.5;
            s.mu(1, 0) = 0.3; s.mu(1, 1) = 1.5; s.mu(1, 2) = 0.5;
            s.mu(2, 0) = 0.1; s.mu(2, 1) = 0.5; s.mu(2, 2) = 4;
            break;
        default:
            throw usage_error("unknown builtin example id " + std::to_string(id) +
                              " (valid: 1, 2, 3)");
    }
    s.validate();
    return s;
}

namespace {

// Uniform spanning tree of the complete bipartite graph on I classes and
// J pools (Aldous-Broder walk). Edges returned as (class, pool).
std::vector<std::pair<int, int>> random_bipartite_tree(int I, int J, CounterRng& rng) {
    const int n = I + J;
    std::vector<bool> visited(n, false);
    std::vector<std::pair<int, int>> edges;
    int cur = static_cast<int>(rng.below(n));
    visited[cur] = true;
    int seen = 1;
    while (seen < n) {
        int nxt;
        if (cur < I)
            nxt = I + static_cast<int>(rng.below(J));  // class -> pool
        else
            nxt = static_cast<int>(rng.below(I));      // pool -> class
        if (!visited[nxt]) {
            visited[nxt] = true;
            ++seen;
            int i = (cur < I) ? cur : nxt;
            int j = (cur < I) ? nxt - I : cur - I;
            edges.emplace_back(i, j);
        }
        cur = nxt;
    }
    return edges;
}

// Smallest utilization factor at which the rate-balance equalities are
// feasible; the generator retries until this equals one.
double min_utilization(const NetworkSpec& s) {
    int nv = 0;
    Matrix<int> var(s.I, s.J, -1);
    for (int i = 0; i < s.I; ++i)
        for (int j = 0; j < s.J; ++j)
            if (s.activity(i, j)) var(i, j) = nv++;
    const int rho = nv++;

    LpProblem p;
    p.c.assign(nv, 0.0);
    p.c[rho] = 1.0;
    p.A_eq = Mat(s.I, nv, 0.0);
    p.b_eq = s.lambda;
    for (int i = 0; i < s.I; ++i)
        for (int j = 0; j < s.J; ++j)
            if (var(i, j) >= 0) p.A_eq(i, var(i, j)) = s.mu(i, j) * s.nu[j];
    p.A_le = Mat(s.J, nv, 0.0);
    p.b_le.assign(s.J, 0.0);
    for (int j = 0; j < s.J; ++j) {
        for (int i = 0; i < s.I; ++i)
            if (var(i, j) >= 0) p.A_le(j, var(i, j)) = 1.0;
        p.A_le(j, rho) = -1.0;
    }
    LpSolution sol = lp_solve(p);
    if (sol.status != LpStatus::Optimal) return -1.0;
    return sol.value;
}

}  // namespace

GeneratedNetwork random_critical_network(int I, int J, uint64_t seed) {
    if (I < 1 || J < 1) throw usage_error("network dimensions must be at least 1");
    CounterRng base(mix64(seed ^ 0x7c1592fd3a60b1c5ULL));

    for (int attempt = 0; attempt < 64; ++attempt) {
        CounterRng rng = base.split(attempt);
        auto tree = random_bipartite_tree(I, J, rng);

        GeneratedNetwork g;
        g.spec.I = I;
        g.spec.J = J;
        g.spec.nu.resize(J);
        for (int j = 0; j < J; ++j) g.spec.nu[j] = rng.uniform(0.5, 2.0);

        // positive masses on tree edges, normalized so each pool is full
        g.psi_star = Mat(I, J, 0.0);
        for (int j = 0; j < J; ++j) {
            Vec w;
            std::vector<int> rows;
            for (auto& [ti, tj] : tree)
                if (tj == j) { rows.push_back(ti); w.push_back(rng.uniform(0.2, 1.0)); }
            double tot = sum(w);
            for (size_t k = 0; k < rows.size(); ++k)
                g.psi_star(rows[k], j) = g.spec.nu[j] * w[k] / tot;
        }

        g.spec.mu = Mat(I, J, 0.0);
        for (auto& [ti, tj] : tree) g.spec.mu(ti, tj) = rng.uniform(0.5, 3.0);

        // off-tree activities kept slow enough that the tree allocation stays
        // the cheapest way to meet the arrival rates (checked below anyway)
        Vec row_min(I, 0.0);
        for (int i = 0; i < I; ++i) {
            double m = 0;
            for (int j = 0; j < J; ++j)
                if (g.spec.mu(i, j) > 0) {
                    double mb = g.spec.mu(i, j) * g.spec.nu[j];
                    m = (m == 0) ? mb : std::min(m, mb);
                }
            row_min[i] = m;
        }
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j)
                if (g.spec.mu(i, j) == 0.0 && rng.next_u01() < 0.35)
                    g.spec.mu(i, j) = rng.uniform(0.1, 0.8) * row_min[i] / g.spec.nu[j];

        g.spec.lambda.assign(I, 0.0);
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j) g.spec.lambda[i] += g.spec.mu(i, j) * g.psi_star(i, j);

        g.spec.validate();
        double rho = min_utilization(g.spec);
        if (std::fabs(rho - 1.0) <= 1e-9) return g;
        // off-tree capacity made the instance subcritical; redraw
    }
    throw internal_error("random network generator failed to produce a critical instance");
}

ScaledSystem scale_system(const NetworkSpec& spec, const Vec& x_star, long long n) {
    if (n < 1) throw usage_error("scale parameter n must be >= 1");
    if (static_cast<int>(x_star.size()) != spec.I)
        throw usage_error("x_star size does not match class count");
    ScaledSystem sys;
    sys.n = n;
    sys.lambda_n.resize(spec.I);
    for (int i = 0; i < spec.I; ++i) sys.lambda_n[i] = static_cast<double>(n) * spec.lambda[i];
    sys.N_n.resize(spec.J);
    for (int j = 0; j < spec.J; ++j)
        sys.N_n[j] = std::max<long long>(1, std::llround(static_cast<double>(n) * spec.nu[j]));
    sys.mu_n = spec.mu;
    sys.X0_n.resize(spec.I);
    for (int i = 0; i < spec.I; ++i)
        sys.X0_n[i] = std::max<long long>(0, std::llround(static_cast<double>(n) * x_star[i]));

    // rounding keeps every parameter within n^{-1/2} of its fluid value
    double envelope = 1.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < spec.I; ++i) {
        if (std::fabs(sys.lambda_n[i] / n - spec.lambda[i]) > envelope ||
            std::fabs(static_cast<double>(sys.X0_n[i]) / n - x_star[i]) > envelope)
            throw internal_error("scaled system left the square-root envelope");
    }
    for (int j = 0; j < spec.J; ++j)
        if (std::fabs(static_cast<double>(sys.N_n[j]) / n - spec.nu[j]) > envelope)
            throw internal_error("scaled system left the square-root envelope");
    return sys;
}

}  // namespace qthru
