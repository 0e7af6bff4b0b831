#include "qthru/tree_flow.hpp"

#include <algorithm>
#include <cmath>

#include "qthru/errors.hpp"
#include "qthru/lp.hpp"

namespace qthru {

TreeSolver TreeSolver::build(int I, int J, const std::vector<std::pair<int, int>>& edges) {
    TreeSolver t;
    t.I_ = I;
    t.J_ = J;
    t.edges_ = edges;
    const int n = I + J;
    if (static_cast<int>(edges.size()) != n - 1)
        throw internal_error("tree solver: edge count is not classes + pools - 1");

    std::vector<std::vector<int>> incident(n);  // edge indices per vertex
    for (size_t e = 0; e < edges.size(); ++e) {
        auto [i, j] = edges[e];
        if (i < 0 || i >= I || j < 0 || j >= J)
            throw internal_error("tree solver: edge endpoint out of range");
        incident[i].push_back(static_cast<int>(e));
        incident[I + j].push_back(static_cast<int>(e));
    }

    // peel leaves, lowest vertex id first, for a schedule that depends only
    // on the edge set
    std::vector<int> degree(n);
    for (int v = 0; v < n; ++v) degree[v] = static_cast<int>(incident[v].size());
    std::vector<bool> edge_done(edges.size(), false);
    std::vector<bool> vertex_done(n, false);

    for (size_t round = 0; round < edges.size(); ++round) {
        int leaf = -1;
        for (int v = 0; v < n; ++v)
            if (!vertex_done[v] && degree[v] == 1) { leaf = v; break; }
        if (leaf < 0) throw internal_error("tree solver: edges contain a cycle");
        int eidx = -1;
        for (int e : incident[leaf])
            if (!edge_done[e]) { eidx = e; break; }
        auto [i, j] = edges[eidx];
        int other = (leaf == i) ? I + j : i;
        t.schedule_.push_back({leaf, eidx, other});
        edge_done[eidx] = true;
        vertex_done[leaf] = true;
        --degree[leaf];
        --degree[other];
    }
    int left = 0;
    for (int v = 0; v < n; ++v)
        if (!vertex_done[v]) ++left;
    if (left != 1) throw internal_error("tree solver: edge set is not connected");
    return t;
}

template <class T>
Matrix<T> TreeSolver::run_schedule(std::vector<T> demand) const {
    Matrix<T> out(I_, J_, T{});
    for (const Step& s : schedule_) {
        auto [i, j] = edges_[s.edge];
        T flow = demand[s.vertex];
        out(i, j) = flow;
        demand[s.vertex] = T{};
        demand[s.neighbor] -= flow;
    }
    return out;
}

Mat TreeSolver::solve(const Vec& a, const Vec& b) const {
    if (static_cast<int>(a.size()) != I_ || static_cast<int>(b.size()) != J_)
        throw usage_error("tree solver: input sizes do not match tree");
    double resid = sum(a) - sum(b);
    if (std::fabs(resid) > 1e-9)
        throw usage_error("tree solver: row and column totals differ by " + std::to_string(resid));
    std::vector<double> demand(I_ + J_);
    for (int i = 0; i < I_; ++i) demand[i] = a[i];
    for (int j = 0; j < J_; ++j) demand[I_ + j] = b[j];
    demand[I_ + J_ - 1] += resid;  // fold the rounding slack into the last pool
    return run_schedule(demand);
}

MatI TreeSolver::solve_int(const std::vector<long long>& a,
                           const std::vector<long long>& b) const {
    if (static_cast<int>(a.size()) != I_ || static_cast<int>(b.size()) != J_)
        throw usage_error("tree solver: input sizes do not match tree");
    if (sum_ll(a) != sum_ll(b))
        throw usage_error("tree solver: integer totals must match exactly");
    std::vector<long long> demand(I_ + J_);
    for (int i = 0; i < I_; ++i) demand[i] = a[i];
    for (int j = 0; j < J_; ++j) demand[I_ + j] = b[j];
    return run_schedule(demand);
}

std::vector<TreeSolver::Functional> TreeSolver::functionals() const {
    // symbolic demands: coefficient vector over (a_0..a_{I-1}, b_0..b_{J-1})
    const int dim = I_ + J_;
    std::vector<Vec> demand(dim, Vec(dim, 0.0));
    for (int v = 0; v < dim; ++v) demand[v][v] = 1.0;

    std::vector<Functional> out(edges_.size());
    for (const Step& s : schedule_) {
        Vec flow = demand[s.vertex];
        out[s.edge].coef_a.assign(flow.begin(), flow.begin() + I_);
        out[s.edge].coef_b.assign(flow.begin() + I_, flow.end());
        std::fill(demand[s.vertex].begin(), demand[s.vertex].end(), 0.0);
        for (int k = 0; k < dim; ++k) demand[s.neighbor][k] -= flow[k];
    }
    return out;
}

double TreeSolver::gain_bound() const {
    // maximize +-(ga.a + gb.b) over sum(a)=sum(b), |a|_1 <= 1, |b|_1 <= 1,
    // split into nonnegative parts
    auto fns = functionals();
    const int nv = 2 * (I_ + J_);
    double best = 0.0;
    for (const auto& f : fns) {
        for (int sign : {+1, -1}) {
            LpProblem p;
            p.c.assign(nv, 0.0);
            for (int i = 0; i < I_; ++i) {
                p.c[2 * i] = -sign * f.coef_a[i];
                p.c[2 * i + 1] = sign * f.coef_a[i];
            }
            for (int j = 0; j < J_; ++j) {
                p.c[2 * (I_ + j)] = -sign * f.coef_b[j];
                p.c[2 * (I_ + j) + 1] = sign * f.coef_b[j];
            }
            p.A_eq = Mat(1, nv, 0.0);
            p.b_eq = {0.0};
            for (int i = 0; i < I_; ++i) {
                p.A_eq(0, 2 * i) = 1.0;
                p.A_eq(0, 2 * i + 1) = -1.0;
            }
            for (int j = 0; j < J_; ++j) {
                p.A_eq(0, 2 * (I_ + j)) = -1.0;
                p.A_eq(0, 2 * (I_ + j) + 1) = 1.0;
            }
            p.A_le = Mat(2, nv, 0.0);
            p.b_le = {1.0, 1.0};
            for (int i = 0; i < I_; ++i) {
                p.A_le(0, 2 * i) = 1.0;
                p.A_le(0, 2 * i + 1) = 1.0;
            }
            for (int j = 0; j < J_; ++j) {
                p.A_le(1, 2 * (I_ + j)) = 1.0;
                p.A_le(1, 2 * (I_ + j) + 1) = 1.0;
            }
            LpSolution sol = lp_solve(p);
            if (sol.status != LpStatus::Optimal)
                throw internal_error("gain bound LP failed to solve");
            best = std::max(best, -sol.value);
        }
    }
    return best;
}

}  // namespace qthru
