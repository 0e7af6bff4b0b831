#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qthru/network.hpp"
#include "qthru/paths.hpp"
#include "qthru/static_allocation.hpp"
#include "qthru/tree_flow.hpp"
#include "qthru/types.hpp"

namespace qthru {

/// Derived constants of the drain/hold construction for one witness path.
/// All are fixed once the network and witness are fixed.
struct FluidConstants {
    double sigma_plus = 0;   // mu mass of +1 path edges
    double sigma_minus = 0;  // mu mass of -1 path edges
    double sigma_zero = 0;   // mu mass of trimmed off-path edges (see below)
    double alpha = 0;        // in (1/2, 1)
    double delta1 = 0;       // half the smallest basic mass
    double delta2 = 0;       // trim applied to off-path classes' basic edges
    double a0 = 0;
    double c_g = 0;          // tree-solver gain bound
    Vec r;                   // drain drift per class
    double e_dot_r = 0;      // < 0
    double r_norm = 0;
    double m1 = 0, m2 = 0, m3 = 0;
    double c_h = 0, l_h = 0;

    // edges whose allocation is trimmed by delta2: basic, off the path, and
    // belonging to a class that is not a path vertex
    std::vector<std::pair<int, int>> trimmed_edges;
};

/// Bounded disturbance for the deterministic model: piecewise-linear W on
/// [0, sigma] with |W(t)|_1 <= eps, plus a constant capacity offset theta
/// with |theta|_1 <= eps.
struct Perturbation {
    std::vector<double> t;        // breakpoints, t.front() == 0, t.back() >= sigma
    std::vector<Vec> w;           // values at breakpoints, size I each
    Vec theta;                    // size J
    double eps = 0;
    double sigma = 0;

    Vec value(double time) const;
    void validate(int I, int J) const;
};

Perturbation zero_perturbation(int I, int J, double eps, double sigma);
Perturbation sine_perturbation(int I, int J, double eps, double sigma);
Perturbation walk_perturbation(int I, int J, double eps, double sigma, uint64_t seed);

enum class FluidPhase { Drain, Hold };

struct TrajectorySample {
    double t = 0;
    Vec X, Y, Z;
    double e_dot_Y = 0;
    FluidPhase phase = FluidPhase::Drain;
    int k = 0;
    double busy_cum = 0;  // measure of {e.Y > 0} on [0, t]
    double sup_cum = 0;   // sup |X - x*|_1 on [0, t]
};

struct FluidTrajectory {
    std::vector<TrajectorySample> samples;
    std::vector<double> zeta;          // drain -> hold switch times
    std::vector<double> eta;           // hold -> drain switch times (eta_0 = 0 not stored)
    double tau = 0;                    // end of the constructed segment
    bool tau_tilde_fired = false;      // deviation stop rather than horizon end
    int K = 0;                         // completed drain/hold rounds
    double busy_measure = 0;           // over the full [0, tau)
    double sup_dev = 0;                // over the full [0, tau)
    std::vector<double> drain_lengths;
    std::vector<double> hold_lengths;  // completed holds only
    std::vector<double> hold_max_eY;   // aligned with hold_lengths
};

FluidConstants compute_constants(const StaticAllocation& alloc, const SimplePath& witness,
                                 const NetworkSpec& spec, const TreeSolver& tree);

/// The drain-phase allocation: shift mass onto -1 path edges, off +1 path
/// edges, trim off-path classes, plus the rounding offset beta
/// (|beta| <= eps^2 entrywise).
Mat build_psi_tilde(const StaticAllocation& alloc, const FluidConstants& c,
                    const SimplePath& witness, const Mat& beta, double eps);

FluidTrajectory integrate_trajectory(const NetworkSpec& spec, const StaticAllocation& alloc,
                                     const FluidConstants& c, const Mat& psi_tilde,
                                     const TreeSolver& tree, const Perturbation& pert,
                                     int i0, int j0, double step);

struct BoundCheck {
    std::string name;
    double measured = 0;
    double bound = 0;
    bool pass = false;
};

struct BoundReport {
    double gamma1 = 0;
    double gamma2 = 0;
    std::vector<BoundCheck> checks;
    bool all_pass = true;
    // When a bound fails on a trajectory whose feasibility assertions all
    // held, the constant derivation is the suspect, not the trajectory.
    std::string note;
};

BoundReport verify_fluid_bounds(const FluidTrajectory& traj, const FluidConstants& c,
                                double eps);

void write_trajectory_csv(const FluidTrajectory& traj, const std::string& path);
std::string bound_report_json(const BoundReport& r);

}  // namespace qthru
