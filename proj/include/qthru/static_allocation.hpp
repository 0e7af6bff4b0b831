#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qthru/network.hpp"
#include "qthru/types.hpp"

namespace qthru {

/// Classification of activity edges as "basic" (carrying allocation mass).
constexpr double kBasicTol = 1e-9;

struct StaticAllocation {
    Mat xi_star;    // I x J fractions, column sums 1
    double rho_star = 0.0;
    Mat psi_star;   // xi * nu
    Vec x_star;     // row sums of psi
    std::vector<std::pair<int, int>> basic_edges;     // (class, pool)
    std::vector<std::vector<int>> tree_adjacency;     // vertex ids: class i, pool I+j

    bool is_basic(int i, int j) const { return xi_star(i, j) > kBasicTol; }
};

struct StaticOptions {
    std::optional<Mat> xi_star_override;  // validated against the model before use
    int basis_search_cap = 1000;          // tries when the first vertex is not tree-supported
};

/// Solves the utilization program, verifies critical load with full station
/// utilization, extracts a tree-supported optimal allocation and returns the
/// derived quantities. Throws assumption_error on structural failures.
StaticAllocation solve_static(const NetworkSpec& spec, const StaticOptions& opts = {});

}  // namespace qthru
