#include "qthru/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qthru/errors.hpp"
#include "qthru/rng.hpp"

namespace qthru {

namespace {

constexpr double kPivotEps = 1e-9;
constexpr double kFeasEps = 1e-8;
constexpr int kRefactorEvery = 50;

// Standard-form tableau: rows = b_eq then b_le, columns =
// [structural | slack | artificial | rhs]. One artificial per row keeps
// phase 1 uniform; rows are sign-flipped so rhs >= 0.
struct Tableau {
    int m = 0;        // rows
    int n_struct = 0; // structural vars
    int n_slack = 0;
    int n_art = 0;
    Mat orig;              // m x (n_total + 1), the sign-fixed original system
    Mat t;                 // working tableau, same shape
    std::vector<int> basis;
    Vec cost;              // phase-2 cost over all columns (artificials: 0)

    int n_total() const { return n_struct + n_slack + n_art; }
};

Tableau build_tableau(const LpProblem& p, const Vec& shift) {
    const int n = p.num_vars();
    const int m_eq = p.A_eq.rows();
    const int m_le = p.A_le.rows();
    Tableau tb;
    tb.m = m_eq + m_le;
    tb.n_struct = n;
    tb.n_slack = m_le;
    tb.n_art = tb.m;
    tb.orig = Mat(tb.m, tb.n_total() + 1, 0.0);

    for (int r = 0; r < m_eq; ++r) {
        double rhs = p.b_eq[r];
        for (int j = 0; j < n; ++j) {
            tb.orig(r, j) = p.A_eq(r, j);
            rhs -= p.A_eq(r, j) * shift[j];
        }
        tb.orig(r, tb.n_total()) = rhs;
    }
    for (int r = 0; r < m_le; ++r) {
        double rhs = p.b_le[r];
        for (int j = 0; j < n; ++j) {
            tb.orig(m_eq + r, j) = p.A_le(r, j);
            rhs -= p.A_le(r, j) * shift[j];
        }
        tb.orig(m_eq + r, n + r) = 1.0;  // slack
        tb.orig(m_eq + r, tb.n_total()) = rhs;
    }
    // make rhs nonnegative, then attach artificials on the diagonal
    for (int r = 0; r < tb.m; ++r) {
        if (tb.orig(r, tb.n_total()) < 0) {
            for (int j = 0; j <= tb.n_total(); ++j) tb.orig(r, j) = -tb.orig(r, j);
        }
        tb.orig(r, n + tb.n_slack + r) = 1.0;
    }

    tb.cost.assign(tb.n_total(), 0.0);
    for (int j = 0; j < n; ++j) tb.cost[j] = p.c[j];

    tb.basis.resize(tb.m);
    for (int r = 0; r < tb.m; ++r) tb.basis[r] = n + tb.n_slack + r;
    tb.t = tb.orig;
    return tb;
}

// Rebuild the tableau for the current basis directly from the original data
// using Gaussian elimination with partial pivoting.
void refactor(Tableau& tb) {
    const int m = tb.m;
    Mat work(m, m + tb.n_total() + 1, 0.0);
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) work(r, c) = tb.orig(r, tb.basis[c]);
        for (int c = 0; c <= tb.n_total(); ++c) work(r, m + c) = tb.orig(r, c);
    }
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::fabs(work(r, col)) > std::fabs(work(piv, col))) piv = r;
        if (std::fabs(work(piv, col)) < 1e-14)
            throw internal_error("singular basis during tableau refactorization");
        if (piv != col)
            for (int c = 0; c < m + tb.n_total() + 1; ++c) std::swap(work(piv, c), work(col, c));
        double inv = 1.0 / work(col, col);
        for (int c = 0; c < m + tb.n_total() + 1; ++c) work(col, c) *= inv;
        for (int r = 0; r < m; ++r) {
            if (r == col) continue;
            double f = work(r, col);
            if (f == 0.0) continue;
            for (int c = 0; c < m + tb.n_total() + 1; ++c) work(r, c) -= f * work(col, c);
        }
    }
    for (int r = 0; r < m; ++r)
        for (int c = 0; c <= tb.n_total(); ++c) tb.t(r, c) = work(r, m + c);
}

void pivot(Tableau& tb, int row, int col) {
    const int w = tb.n_total() + 1;
    double inv = 1.0 / tb.t(row, col);
    for (int c = 0; c < w; ++c) tb.t(row, c) *= inv;
    tb.t(row, col) = 1.0;
    for (int r = 0; r < tb.m; ++r) {
        if (r == row) continue;
        double f = tb.t(r, col);
        if (f == 0.0) continue;
        for (int c = 0; c < w; ++c) tb.t(r, c) -= f * tb.t(row, c);
        tb.t(r, col) = 0.0;
    }
    tb.basis[row] = col;
}

// Reduced costs for the given cost vector under the current basis.
Vec reduced_costs(const Tableau& tb, const Vec& cost) {
    Vec red(tb.n_total());
    Vec cb(tb.m);
    for (int r = 0; r < tb.m; ++r) cb[r] = cost[tb.basis[r]];
    for (int j = 0; j < tb.n_total(); ++j) {
        double z = 0;
        for (int r = 0; r < tb.m; ++r) z += cb[r] * tb.t(r, j);
        red[j] = cost[j] - z;
    }
    return red;
}

// Bland's rule simplex on the given cost; `allowed(j)` filters entering
// columns. Returns false on unboundedness.
bool run_simplex(Tableau& tb, const Vec& cost, const std::vector<bool>& allowed) {
    int pivots = 0;
    for (;;) {
        Vec red = reduced_costs(tb, cost);
        int enter = -1;
        for (int j = 0; j < tb.n_total(); ++j) {
            if (!allowed[j]) continue;
            if (red[j] < -kPivotEps) { enter = j; break; }  // smallest index
        }
        if (enter < 0) return true;

        int leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int r = 0; r < tb.m; ++r) {
            double a = tb.t(r, enter);
            if (a > kPivotEps) {
                double ratio = tb.t(r, tb.n_total()) / a;
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 && (leave < 0 || tb.basis[r] < tb.basis[leave]))) {
                    best_ratio = ratio;
                    leave = r;
                }
            }
        }
        if (leave < 0) return false;  // unbounded along `enter`

        pivot(tb, leave, enter);
        if (++pivots % kRefactorEvery == 0) refactor(tb);
    }
}

}  // namespace

void LpProblem::check() const {
    const int n = num_vars();
    auto bad = [](double v) { return !std::isfinite(v); };
    for (double v : c)
        if (bad(v)) throw usage_error("lp: non-finite objective coefficient");
    if (A_eq.rows() != static_cast<int>(b_eq.size()) ||
        A_le.rows() != static_cast<int>(b_le.size()))
        throw usage_error("lp: constraint matrix / rhs size mismatch");
    if ((A_eq.rows() > 0 && A_eq.cols() != n) || (A_le.rows() > 0 && A_le.cols() != n))
        throw usage_error("lp: constraint column count does not match variables");
    if (!lower.empty() && static_cast<int>(lower.size()) != n)
        throw usage_error("lp: lower bound size mismatch");
    for (int r = 0; r < A_eq.rows(); ++r)
        for (int j = 0; j < n; ++j)
            if (bad(A_eq(r, j))) throw usage_error("lp: non-finite equality coefficient");
    for (int r = 0; r < A_le.rows(); ++r)
        for (int j = 0; j < n; ++j)
            if (bad(A_le(r, j))) throw usage_error("lp: non-finite inequality coefficient");
    for (double v : b_eq)
        if (bad(v)) throw usage_error("lp: non-finite rhs");
    for (double v : b_le)
        if (bad(v)) throw usage_error("lp: non-finite rhs");
}

LpSolution lp_solve(const LpProblem& p) {
    p.check();
    const int n = p.num_vars();
    Vec shift = p.lower.empty() ? Vec(n, 0.0) : p.lower;

    Tableau tb = build_tableau(p, shift);

    // phase 1: minimize the artificial sum
    Vec phase1_cost(tb.n_total(), 0.0);
    for (int j = tb.n_struct + tb.n_slack; j < tb.n_total(); ++j) phase1_cost[j] = 1.0;
    std::vector<bool> allow_all(tb.n_total(), true);
    run_simplex(tb, phase1_cost, allow_all);  // phase 1 is bounded below by 0

    double art_sum = 0;
    for (int r = 0; r < tb.m; ++r)
        if (tb.basis[r] >= tb.n_struct + tb.n_slack) art_sum += tb.t(r, tb.n_total());
    if (art_sum > kFeasEps) return {LpStatus::Infeasible, 0.0, {}};

    // drive still-basic artificials out on any usable column
    for (int r = 0; r < tb.m; ++r) {
        if (tb.basis[r] < tb.n_struct + tb.n_slack) continue;
        int col = -1;
        for (int j = 0; j < tb.n_struct + tb.n_slack; ++j)
            if (std::fabs(tb.t(r, j)) > kPivotEps) { col = j; break; }
        if (col >= 0) pivot(tb, r, col);
        // else: redundant row, artificial stays basic at zero
    }

    // phase 2: artificials barred from entering
    std::vector<bool> allowed(tb.n_total(), true);
    for (int j = tb.n_struct + tb.n_slack; j < tb.n_total(); ++j) allowed[j] = false;
    if (!run_simplex(tb, tb.cost, allowed)) return {LpStatus::Unbounded, 0.0, {}};

    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.x.assign(n, 0.0);
    for (int r = 0; r < tb.m; ++r)
        if (tb.basis[r] < n) sol.x[tb.basis[r]] = tb.t(r, tb.n_total());
    for (int j = 0; j < n; ++j) sol.x[j] += shift[j];
    sol.value = 0;
    for (int j = 0; j < n; ++j) sol.value += p.c[j] * sol.x[j];
    return sol;
}

LpSolution lp_optimal_face_vertex(const LpProblem& p, double opt_value, uint64_t seed) {
    LpProblem q = p;
    const int n = p.num_vars();
    // pin the objective at its optimum (one extra <= row; objective is minimized)
    Mat A_le(p.A_le.rows() + 1, n, 0.0);
    Vec b_le = p.b_le;
    for (int r = 0; r < p.A_le.rows(); ++r)
        for (int j = 0; j < n; ++j) A_le(r, j) = p.A_le(r, j);
    for (int j = 0; j < n; ++j) A_le(p.A_le.rows(), j) = p.c[j];
    b_le.push_back(opt_value + 1e-9);
    q.A_le = A_le;
    q.b_le = b_le;

    CounterRng rng(seed);
    q.c.assign(n, 0.0);
    for (int j = 0; j < n; ++j) q.c[j] = rng.uniform(-1.0, 1.0);
    return lp_solve(q);
}

}  // namespace qthru
