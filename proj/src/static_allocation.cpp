#include "qthru/static_allocation.hpp"

#include <cmath>
#include <queue>
#include <string>

#include "qthru/errors.hpp"
#include "qthru/lp.hpp"

namespace qthru {

namespace {

constexpr double kRhoTol = 1e-9;

struct VarMap {
    Matrix<int> idx;  // -1 where (i,j) is not an activity
    int count = 0;
};

VarMap activity_vars(const NetworkSpec& s) {
    VarMap m;
    m.idx = Matrix<int>(s.I, s.J, -1);
    for (int i = 0; i < s.I; ++i)
        for (int j = 0; j < s.J; ++j)
            if (s.activity(i, j)) m.idx(i, j) = m.count++;
    return m;
}

// Utilization program: minimize rho with rate balance per class and column
// loads bounded by rho.
LpProblem primary_lp(const NetworkSpec& s, const VarMap& vars) {
    const int nv = vars.count + 1;
    const int rho = vars.count;
    LpProblem p;
    p.c.assign(nv, 0.0);
    p.c[rho] = 1.0;
    p.A_eq = Mat(s.I, nv, 0.0);
    p.b_eq = s.lambda;
    for (int i = 0; i < s.I; ++i)
        for (int j = 0; j < s.J; ++j)
            if (vars.idx(i, j) >= 0) p.A_eq(i, vars.idx(i, j)) = s.mu(i, j) * s.nu[j];
    p.A_le = Mat(s.J, nv, 0.0);
    p.b_le.assign(s.J, 0.0);
    for (int j = 0; j < s.J; ++j) {
        for (int i = 0; i < s.I; ++i)
            if (vars.idx(i, j) >= 0) p.A_le(j, vars.idx(i, j)) = 1.0;
        p.A_le(j, rho) = -1.0;
    }
    return p;
}

// Over the rho = 1 face, maximize total utilization; the optimum equals J
// exactly when every station can be fully used.
LpProblem secondary_lp(const NetworkSpec& s, const VarMap& vars) {
    const int nv = vars.count;
    LpProblem p;
    p.c.assign(nv, -1.0);  // maximize sum -> minimize negative
    p.A_eq = Mat(s.I, nv, 0.0);
    p.b_eq = s.lambda;
    for (int i = 0; i < s.I; ++i)
        for (int j = 0; j < s.J; ++j)
            if (vars.idx(i, j) >= 0) p.A_eq(i, vars.idx(i, j)) = s.mu(i, j) * s.nu[j];
    p.A_le = Mat(s.J, nv, 0.0);
    p.b_le.assign(s.J, 1.0);
    for (int j = 0; j < s.J; ++j)
        for (int i = 0; i < s.I; ++i)
            if (vars.idx(i, j) >= 0) p.A_le(j, vars.idx(i, j)) = 1.0;
    return p;
}

Mat unpack(const NetworkSpec& s, const VarMap& vars, const Vec& x) {
    Mat xi(s.I, s.J, 0.0);
    for (int i = 0; i < s.I; ++i)
        for (int j = 0; j < s.J; ++j)
            if (vars.idx(i, j) >= 0) xi(i, j) = std::max(0.0, x[vars.idx(i, j)]);
    return xi;
}

struct TreeCheck {
    bool ok = false;
    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<int>> adjacency;
};

TreeCheck check_tree(const NetworkSpec& s, const Mat& xi) {
    TreeCheck r;
    for (int i = 0; i < s.I; ++i)
        for (int j = 0; j < s.J; ++j)
            if (xi(i, j) > kBasicTol) r.edges.emplace_back(i, j);
    const int n = s.I + s.J;
    if (static_cast<int>(r.edges.size()) != n - 1) return r;
    r.adjacency.assign(n, {});
    for (auto& [i, j] : r.edges) {
        r.adjacency[i].push_back(s.I + j);
        r.adjacency[s.I + j].push_back(i);
    }
    std::vector<bool> seen(n, false);
    std::queue<int> q;
    q.push(0);
    seen[0] = true;
    int cnt = 1;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int w : r.adjacency[v])
            if (!seen[w]) { seen[w] = true; ++cnt; q.push(w); }
    }
    r.ok = (cnt == n);  // n-1 edges + connected => acyclic
    return r;
}

StaticAllocation finish(const NetworkSpec& s, const Mat& xi, const TreeCheck& tree) {
    StaticAllocation a;
    a.xi_star = xi;
    a.rho_star = 1.0;
    a.psi_star = Mat(s.I, s.J, 0.0);
    a.x_star.assign(s.I, 0.0);
    for (int i = 0; i < s.I; ++i)
        for (int j = 0; j < s.J; ++j) {
            a.psi_star(i, j) = xi(i, j) * s.nu[j];
            a.x_star[i] += a.psi_star(i, j);
        }
    a.basic_edges = tree.edges;
    a.tree_adjacency = tree.adjacency;
    return a;
}

void validate_override(const NetworkSpec& s, const Mat& xi) {
    if (xi.rows() != s.I || xi.cols() != s.J)
        throw usage_error("xi_star_override has wrong dimensions");
    for (int i = 0; i < s.I; ++i)
        for (int j = 0; j < s.J; ++j) {
            if (xi(i, j) < -kBasicTol) throw usage_error("xi_star_override has negative entries");
            if (!s.activity(i, j) && xi(i, j) > kBasicTol)
                throw usage_error("xi_star_override allocates a non-activity pair");
        }
    for (int j = 0; j < s.J; ++j) {
        double col = 0;
        for (int i = 0; i < s.I; ++i) col += xi(i, j);
        if (std::fabs(col - 1.0) > 1e-7)
            throw usage_error("xi_star_override must use every pool fully");
    }
    for (int i = 0; i < s.I; ++i) {
        double rate = 0;
        for (int j = 0; j < s.J; ++j) rate += s.mu(i, j) * s.nu[j] * xi(i, j);
        if (std::fabs(rate - s.lambda[i]) > 1e-7)
            throw usage_error("xi_star_override does not balance the arrival rates");
    }
}

}  // namespace

StaticAllocation solve_static(const NetworkSpec& spec, const StaticOptions& opts) {
    spec.validate();

    if (opts.xi_star_override) {
        validate_override(spec, *opts.xi_star_override);
        TreeCheck tree = check_tree(spec, *opts.xi_star_override);
        if (!tree.ok) throw assumption_error("basic graph not a tree (override)");
        return finish(spec, *opts.xi_star_override, tree);
    }

    VarMap vars = activity_vars(spec);
    LpSolution primal = lp_solve(primary_lp(spec, vars));
    if (primal.status == LpStatus::Infeasible)
        throw assumption_error("LP infeasible: no allocation meets the arrival rates");
    if (primal.status == LpStatus::Unbounded)
        throw internal_error("utilization program unbounded");
    double rho = primal.value;
    if (std::fabs(rho - 1.0) > kRhoTol)
        throw assumption_error("not critically loaded: subcritical or supercritical (rho* = " +
                               std::to_string(rho) + ")");

    LpProblem sec = secondary_lp(spec, vars);
    LpSolution s2 = lp_solve(sec);
    if (s2.status != LpStatus::Optimal)
        throw internal_error("full-utilization program did not solve");
    double total = -s2.value;
    if (total < spec.J - 1e-7)
        throw assumption_error("partial utilization: stations cannot all be fully used (total " +
                               std::to_string(total) + " of " + std::to_string(spec.J) + ")");

    Mat xi = unpack(spec, vars, s2.x);
    TreeCheck tree = check_tree(spec, xi);
    if (!tree.ok) {
        // The chosen vertex carries a cycle; walk other vertices of the
        // optimal face looking for a tree-supported one.
        for (int attempt = 0; attempt < opts.basis_search_cap && !tree.ok; ++attempt) {
            LpSolution alt = lp_optimal_face_vertex(sec, s2.value, 0x51edULL + attempt);
            if (alt.status != LpStatus::Optimal) continue;
            Mat cand = unpack(spec, vars, alt.x);
            TreeCheck t2 = check_tree(spec, cand);
            if (t2.ok) {
                xi = cand;
                tree = t2;
            }
        }
    }
    if (!tree.ok)
        throw assumption_error(
            "basic graph not a tree: no tree-supported optimal allocation found "
            "(searched alternative optimal bases; a config override may help)");

    return finish(spec, xi, tree);
}

}  // namespace qthru
