#pragma once

#include <cstdint>
#include <vector>

#include "qthru/types.hpp"

namespace qthru {

/// min c.x subject to A_eq x = b_eq, A_le x <= b_le, x >= lower (0 by default).
struct LpProblem {
    Vec c;
    Mat A_eq;
    Vec b_eq;
    Mat A_le;
    Vec b_le;
    Vec lower;  // empty means all zeros

    int num_vars() const { return static_cast<int>(c.size()); }
    void check() const;  // dimension / finiteness validation
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    Vec x;  // vertex solution when status == Optimal
};

/// Dense two-phase simplex with Bland's rule. Tableau is rebuilt from the
/// original data every 50 pivots (partial-pivot elimination) to shed
/// accumulated rounding.
LpSolution lp_solve(const LpProblem& p);

/// Another vertex of the optimal face, found by re-solving with a random
/// objective after pinning the original objective at its optimum.
LpSolution lp_optimal_face_vertex(const LpProblem& p, double opt_value, uint64_t seed);

}  // namespace qthru
