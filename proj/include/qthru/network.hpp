#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qthru/types.hpp"

namespace qthru {

/// Static network data: I customer classes, J server pools, fluid arrival
/// rates lambda, pool capacities nu and per-server rates mu. The activity set
/// is derived from mu (never stored), so the two cannot drift apart.
struct NetworkSpec {
    int I = 0;
    int J = 0;
    Vec lambda;  // size I, > 0
    Vec nu;      // size J, > 0
    Mat mu;      // I x J, >= 0

    bool activity(int i, int j) const { return mu(i, j) > 0.0; }
    int activity_count() const;
    double mu_total() const;  // sum of mu over activities

    /// Throws spec_error on any invariant violation.
    void validate() const;
};

/// The n-th system: integer server counts and initial customer counts, arrival
/// rates scaled by n. Service rates are kept equal to the fluid rates.
struct ScaledSystem {
    long long n = 0;
    Vec lambda_n;                  // size I
    std::vector<long long> N_n;    // size J, >= 1
    Mat mu_n;                      // I x J
    std::vector<long long> X0_n;   // size I
};

/// Random instance together with the allocation witness it was built around.
struct GeneratedNetwork {
    NetworkSpec spec;
    Mat psi_star;  // I x J, supported on a spanning tree, column sums = nu
};

NetworkSpec load_spec(const std::string& json_text);
NetworkSpec load_spec_file(const std::string& path);
std::string save_spec(const NetworkSpec& spec);

NetworkSpec builtin_example(int id);

GeneratedNetwork random_critical_network(int I, int J, uint64_t seed);

ScaledSystem scale_system(const NetworkSpec& spec, const Vec& x_star, long long n);

}  // namespace qthru
