#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qthru/fluid.hpp"
#include "qthru/network.hpp"
#include "qthru/paths.hpp"
#include "qthru/rng.hpp"
#include "qthru/static_allocation.hpp"
#include "qthru/tree_flow.hpp"
#include "qthru/types.hpp"

namespace qthru {

/// Everything derived from the network that runs share: verdict witness,
/// drain/hold constants and the balanced-allocation tree.
struct SimModel {
    NetworkSpec spec;
    StaticAllocation alloc;
    SuboptimalityVerdict verdict;
    FluidConstants constants;
    TreeSolver tree;
    Mat psi_tilde0;  // drain allocation before integer rounding

    /// Throws assumption_error when the network is throughput optimal (the
    /// control needs a negative-weight witness).
    static SimModel build(const NetworkSpec& spec, const StaticOptions& opts = {});
};

enum class SimPhase { Drain, Hold, PostTau };
enum class ArrivalKind { Exponential, Deterministic, Uniform };

struct SimOptions {
    ArrivalKind arrivals = ArrivalKind::Exponential;
    double eps_scale = 1.0;   // multiplies the n^{-1/2} log n threshold scale
    bool sigma_stops = true;  // noise-envelope crossing enters the stopped phase
};

struct SimState {
    double t = 0;
    std::vector<long long> X, Y;  // per class
    std::vector<long long> Z;     // per pool
    MatI Psi;                     // in service
    std::vector<long long> A;     // cumulative arrivals
    MatI D;                       // cumulative departures
    Mat T_int;                    // integrated in-service mass
    Vec next_arrival;             // scheduled epochs per class
};

struct PolicyState {
    SimPhase phase = SimPhase::Drain;
    int k = 1;
    long long anchor_drain_Xe = 0;
    std::vector<long long> anchor_hold_X;
    double eps_n = 0;
    MatI n_psi_tilde;  // integer drain allocation
    Mat beta_n;        // rounding offset actually used
    Vec W;             // disturbance tracker value
    Vec W_slope;
    double W_sup = 0;
    bool tau_fired = false, sigma_fired = false;
    double tau_time = 0, sigma_time = 0;
    uint64_t psi_hash = 1469598103934665603ULL;  // running digest of decisions
};

struct SimEvent {
    enum class Type : uint8_t { Arrival, Departure, SigmaCross, PhaseChange };
    Type type;
    double t;
    int cls = -1;
    int pool = -1;
    SimPhase phase;       // after the event
    long long eY = 0;     // after the event
    long long x_dev = 0;  // l1(X - X0) after the event
    uint64_t psi_hash;    // decision digest after the event
};

struct RunMetrics {
    double busy_time = 0;      // measure of {queued customers exist}
    double sup_x_dev = 0;      // sup l1(X - X0)
    int K = 0;                 // completed drain/hold rounds
    std::optional<double> tau_time, sigma_time;
    uint64_t event_count = 0;
    uint64_t seed = 0;
    double t_end = 0;
    double w_sup_scaled = 0;   // sqrt(n) * sup |W|
    bool error = false;
    std::string error_message;
};

/// One event-driven run. Regime violations do not throw here; they end the
/// run early with metrics.error set so sweeps can tabulate them.
RunMetrics run_simulation(const SimModel& model, const ScaledSystem& sys, double T,
                          uint64_t seed, const SimOptions& opts = {},
                          std::vector<SimEvent>* log = nullptr,
                          size_t log_cap = 0);

/// Low-level deterministic core, exposed so a recorded event sequence can be
/// replayed through the policy and must reproduce every decision.
class SimRunner {
  public:
    SimRunner(const SimModel& model, const ScaledSystem& sys, uint64_t seed,
              const SimOptions& opts);

    /// Samples and applies the next event; false once t would pass T.
    bool step(double T);

    // replay interface: advance between events, then apply one
    void advance_time(double t_next);
    void apply_arrival(int cls);
    void apply_departure(int cls, int pool);
    void apply_sigma_cross();

    const SimState& state() const { return st_; }
    const PolicyState& policy() const { return pol_; }
    const RunMetrics& metrics() const { return met_; }
    RunMetrics finish(double T);

    std::vector<SimEvent>* log = nullptr;
    size_t log_cap = 0;

  private:
    void apply_drain_allocation();
    void apply_hold_allocation();
    void apply_stopped_allocation();
    void policy_transitions();
    void check_invariants() const;
    void schedule_arrival(int cls);
    double sigma_crossing(double t_next) const;
    void push_log(SimEvent::Type type, int cls, int pool);
    void mix_decision();

    const SimModel& model_;
    const ScaledSystem& sys_;
    SimOptions opts_;
    SimState st_;
    PolicyState pol_;
    RunMetrics met_;
    std::vector<CounterRng> arrival_rng_;
    CounterRng service_rng_;
    double inv_n_ = 0;
    double sqrt_eps_n_ = 0;
    std::vector<long long> drain_rows_, drain_cols_;
};

struct SweepRow {
    long long n = 0;
    int rep = 0;
    uint64_t seed = 0;
    double busy_fraction = 0;
    double scaled_sup_dev = 0;
    int K = 0;
    bool tau_fired = false, sigma_fired = false;
    bool error = false;
    std::string error_message;
    double t_end = 0;
    double w_sup_scaled = 0;
};

struct SweepSummary {
    long long n = 0;
    int completed = 0, errors = 0;
    double busy_q25 = 0, busy_med = 0, busy_q75 = 0;
    double dev_med = 0;
    double fired_fraction = 0;  // tau or sigma before T
    double w95 = 0;             // 95th percentile of sqrt(n) sup |W|
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepSummary> summaries;
};

SweepResult sweep(const SimModel& model, const std::vector<long long>& n_list, int reps,
                  double T, uint64_t base_seed, double rho, const SimOptions& opts = {},
                  int threads = 0);

void write_run_log_csv(const std::vector<SimEvent>& log, const std::string& path);
void write_sweep_csv(const SweepResult& r, const std::string& path);
void write_plot_csv(const SweepResult& r, const std::string& path);

}  // namespace qthru
