#include "qthru/paths.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "json.hpp"
#include "qthru/errors.hpp"
#include "qthru/lp.hpp"

namespace qthru {

namespace {

constexpr double kVerdictTol = 1e-9;

// Vertex path through the basic tree from class i (vertex i) to pool j
// (vertex I + j); BFS parent walk.
std::vector<int> tree_path(const StaticAllocation& alloc, int from, int to) {
    const auto& adj = alloc.tree_adjacency;
    std::vector<int> parent(adj.size(), -2);
    std::queue<int> q;
    q.push(from);
    parent[from] = -1;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        if (v == to) break;
        for (int w : adj[v])
            if (parent[w] == -2) { parent[w] = v; q.push(w); }
    }
    std::vector<int> path;
    for (int v = to; v != -1; v = parent[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

SimplePath make_path(const StaticAllocation& alloc, const NetworkSpec& spec, int i, int j) {
    SimplePath p;
    std::vector<int> verts = tree_path(alloc, i, spec.I + j);
    // verts alternates class, pool, class, pool, ... from i to pool j
    for (size_t k = 0; k < verts.size(); ++k) {
        if (k % 2 == 0)
            p.class_seq.push_back(verts[k]);
        else
            p.pool_seq.push_back(verts[k] - spec.I);
    }
    const int k = static_cast<int>(p.pool_seq.size()) - 1;
    for (int m = 0; m <= k; ++m) {
        p.edges.emplace_back(p.class_seq[m], p.pool_seq[m]);
        p.signs.push_back(+1);
        if (m + 1 <= k) {
            p.edges.emplace_back(p.class_seq[m + 1], p.pool_seq[m]);
            p.signs.push_back(-1);
        }
    }
    if (spec.activity(i, j)) {
        p.kind = SimplePath::Kind::Closed;
        p.edges.emplace_back(i, j);
        p.signs.push_back(-1);
    } else {
        p.kind = SimplePath::Kind::Open;
    }
    p.weight = path_signed_weight(p, spec);
    return p;
}

}  // namespace

bool SimplePath::on_path(int i, int j) const {
    for (auto& [pi, pj] : edges)
        if (pi == i && pj == j) return true;
    return false;
}

int SimplePath::sign_of(int i, int j) const {
    for (size_t e = 0; e < edges.size(); ++e)
        if (edges[e].first == i && edges[e].second == j) return signs[e];
    return 0;
}

std::vector<SimplePath> enumerate_simple_paths(const StaticAllocation& alloc,
                                               const NetworkSpec& spec) {
    std::vector<SimplePath> out;
    for (int i = 0; i < spec.I; ++i)
        for (int j = 0; j < spec.J; ++j) {
            if (alloc.is_basic(i, j)) continue;  // distance 1, no path
            out.push_back(make_path(alloc, spec, i, j));
        }
    return out;
}

double path_signed_weight(const SimplePath& path, const NetworkSpec& spec) {
    double w = 0;
    for (size_t e = 0; e < path.edges.size(); ++e)
        w += path.signs[e] * spec.mu(path.edges[e].first, path.edges[e].second);
    return w;
}

std::pair<double, Mat> solve_mmax(const StaticAllocation& alloc, const NetworkSpec& spec) {
    // variables: signed deviation per activity, split into +/- parts
    std::vector<std::pair<int, int>> acts;
    Matrix<int> vidx(spec.I, spec.J, -1);
    for (int i = 0; i < spec.I; ++i)
        for (int j = 0; j < spec.J; ++j)
            if (spec.activity(i, j)) {
                vidx(i, j) = static_cast<int>(acts.size());
                acts.emplace_back(i, j);
            }
    const int na = static_cast<int>(acts.size());
    const int nv = 2 * na;

    LpProblem p;
    p.c.assign(nv, 0.0);
    for (int a = 0; a < na; ++a) {
        double mu = spec.mu(acts[a].first, acts[a].second);
        p.c[2 * a] = -mu;     // maximize
        p.c[2 * a + 1] = mu;
    }
    // row sums <= 0, column sums <= 0, lower bounds -psi*
    p.A_le = Mat(spec.I + spec.J + na, nv, 0.0);
    p.b_le.assign(spec.I + spec.J + na, 0.0);
    for (int a = 0; a < na; ++a) {
        auto [i, j] = acts[a];
        p.A_le(i, 2 * a) = 1.0;
        p.A_le(i, 2 * a + 1) = -1.0;
        p.A_le(spec.I + j, 2 * a) = 1.0;
        p.A_le(spec.I + j, 2 * a + 1) = -1.0;
        // -sigma <= psi*
        p.A_le(spec.I + spec.J + a, 2 * a) = -1.0;
        p.A_le(spec.I + spec.J + a, 2 * a + 1) = 1.0;
        p.b_le[spec.I + spec.J + a] = alloc.psi_star(i, j);
    }

    LpSolution sol = lp_solve(p);
    if (sol.status != LpStatus::Optimal)
        throw internal_error("redistribution LP did not reach an optimum");

    Mat sigma(spec.I, spec.J, 0.0);
    for (int a = 0; a < na; ++a)
        sigma(acts[a].first, acts[a].second) = sol.x[2 * a] - sol.x[2 * a + 1];
    return {-sol.value, sigma};
}

SuboptimalityVerdict classify(const StaticAllocation& alloc, const NetworkSpec& spec) {
    SuboptimalityVerdict v;
    v.all_paths = enumerate_simple_paths(alloc, spec);

    const SimplePath* best = nullptr;
    for (const auto& p : v.all_paths) {
        if (!best || p.weight < best->weight - 1e-15 ||
            (std::fabs(p.weight - best->weight) <= 1e-15 &&
             std::make_pair(p.closure_class(), p.closure_pool()) <
                 std::make_pair(best->closure_class(), best->closure_pool())))
            best = &p;
    }

    auto [m_max, sigma] = solve_mmax(alloc, spec);
    v.m_max = m_max;
    v.sigma_opt = sigma;

    bool path_negative = best && best->weight < -kVerdictTol;
    bool lp_positive = m_max > kVerdictTol;
    if (path_negative != lp_positive)
        throw internal_error(
            "path enumeration and redistribution LP disagree on the verdict "
            "(min path weight " + std::to_string(best ? best->weight : 0.0) +
            ", excess rate " + std::to_string(m_max) + ")");

    v.suboptimal = lp_positive;
    if (path_negative) v.witness = *best;
    return v;
}

std::string verdict_to_json(const SuboptimalityVerdict& v, const StaticAllocation& alloc) {
    nlohmann::json doc;
    doc["schema"] = "qthru.verdict.v1";
    doc["verdict"] = v.suboptimal ? "suboptimal" : "optimal";
    doc["m_max"] = v.m_max;
    auto path_json = [](const SimplePath& p) {
        nlohmann::json jp;
        jp["kind"] = (p.kind == SimplePath::Kind::Closed) ? "closed" : "open";
        jp["weight"] = p.weight;
        jp["classes"] = p.class_seq;
        jp["pools"] = p.pool_seq;
        nlohmann::json edges = nlohmann::json::array();
        for (size_t e = 0; e < p.edges.size(); ++e)
            edges.push_back({{"class", p.edges[e].first},
                             {"pool", p.edges[e].second},
                             {"sign", p.signs[e]}});
        jp["edges"] = edges;
        return jp;
    };
    if (v.witness) doc["witness"] = path_json(*v.witness);
    nlohmann::json all = nlohmann::json::array();
    for (const auto& p : v.all_paths) all.push_back(path_json(p));
    doc["paths"] = all;
    std::vector<Vec> sig(v.sigma_opt.rows(), Vec(v.sigma_opt.cols()));
    for (int i = 0; i < v.sigma_opt.rows(); ++i)
        for (int j = 0; j < v.sigma_opt.cols(); ++j) sig[i][j] = v.sigma_opt(i, j);
    doc["sigma"] = sig;
    std::vector<Vec> psi(alloc.psi_star.rows(), Vec(alloc.psi_star.cols()));
    for (int i = 0; i < alloc.psi_star.rows(); ++i)
        for (int j = 0; j < alloc.psi_star.cols(); ++j) psi[i][j] = alloc.psi_star(i, j);
    doc["psi_star"] = psi;
    doc["x_star"] = alloc.x_star;
    return doc.dump(2);
}

}  // namespace qthru
