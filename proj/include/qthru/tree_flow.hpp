#pragma once

#include <utility>
#include <vector>

#include "qthru/types.hpp"

namespace qthru {

/// Linear solver for the tree-supported balance system: given per-class totals
/// a and per-pool totals b with equal sums, find the unique matrix supported
/// on the tree with row sums a and column sums b. Solved by eliminating leaf
/// vertices in a fixed schedule, so integer inputs give integer outputs.
class TreeSolver {
  public:
    TreeSolver() = default;

    /// Throws if the edges do not form a spanning tree on I classes + J pools.
    static TreeSolver build(int I, int J, const std::vector<std::pair<int, int>>& edges);

    int classes() const { return I_; }
    int pools() const { return J_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    /// Residual |sum(a) - sum(b)| up to 1e-9 is folded into the last pool
    /// coordinate; a larger residual is an error.
    Mat solve(const Vec& a, const Vec& b) const;

    /// Integer version; sums must match exactly.
    MatI solve_int(const std::vector<long long>& a, const std::vector<long long>& b) const;

    /// Per-edge linear functionals: solve(a,b) at edge e equals
    /// coef_a[e].a + coef_b[e].b. Obtained by running the schedule with
    /// symbolic inputs.
    struct Functional {
        Vec coef_a;  // size I
        Vec coef_b;  // size J
    };
    std::vector<Functional> functionals() const;

    /// Largest entry magnitude over balanced inputs with unit l1 norms,
    /// maximized edge by edge with an LP over the split-variable polytope.
    double gain_bound() const;

  private:
    template <class T>
    Matrix<T> run_schedule(std::vector<T> demand) const;

    int I_ = 0, J_ = 0;
    std::vector<std::pair<int, int>> edges_;
    struct Step {
        int vertex;     // class i -> i, pool j -> I + j
        int edge;       // index into edges_
        int neighbor;   // the other endpoint
    };
    std::vector<Step> schedule_;
};

}  // namespace qthru
