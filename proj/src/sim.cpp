#include "qthru/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "qthru/errors.hpp"
#include "qthru/rng.hpp"

namespace qthru {

namespace {

// stream ids for splitting the run seed
constexpr uint64_t kServiceStream = 1ULL << 40;

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    double pos = q * (static_cast<double>(v.size()) - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

}  // namespace

SimModel SimModel::build(const NetworkSpec& spec, const StaticOptions& opts) {
    SimModel m;
    m.spec = spec;
    m.alloc = solve_static(spec, opts);
    m.verdict = classify(m.alloc, spec);
    if (!m.verdict.suboptimal)
        throw assumption_error("network is throughput optimal; no witness path");
    m.tree = TreeSolver::build(spec.I, spec.J, m.alloc.basic_edges);
    m.constants = compute_constants(m.alloc, *m.verdict.witness, spec, m.tree);
    m.psi_tilde0 = build_psi_tilde(m.alloc, m.constants, *m.verdict.witness,
                                   Mat(spec.I, spec.J, 0.0), 1.0);
    return m;
}

SimRunner::SimRunner(const SimModel& model, const ScaledSystem& sys, uint64_t seed,
                     const SimOptions& opts)
    : model_(model), sys_(sys), opts_(opts) {
    const int I = model.spec.I, J = model.spec.J;
    const long long n = sys.n;
    if (n < 2) throw usage_error("scale parameter must be at least 2");
    inv_n_ = 1.0 / static_cast<double>(n);

    met_.seed = seed;
    pol_.eps_n = opts.eps_scale * std::log(static_cast<double>(n)) /
                 std::sqrt(static_cast<double>(n));
    sqrt_eps_n_ = std::sqrt(pol_.eps_n);

    // integer drain allocation: round, then push column overshoot back down
    // so no pool is assigned more servers than it has
    pol_.n_psi_tilde = MatI(I, J, 0);
    pol_.beta_n = Mat(I, J, 0.0);
    for (int j = 0; j < J; ++j) {
        long long col = 0;
        for (int i = 0; i < I; ++i) {
            if (model.psi_tilde0(i, j) <= 0.0) continue;
            long long r = std::llround(static_cast<double>(n) * model.psi_tilde0(i, j));
            pol_.n_psi_tilde(i, j) = std::max<long long>(0, r);
            col += pol_.n_psi_tilde(i, j);
        }
        while (col > sys.N_n[j]) {
            int best = -1;
            double best_excess = -1e300;
            for (int i = 0; i < I; ++i) {
                if (pol_.n_psi_tilde(i, j) <= 0) continue;
                double excess = static_cast<double>(pol_.n_psi_tilde(i, j)) -
                                static_cast<double>(n) * model.psi_tilde0(i, j);
                if (excess > best_excess) { best_excess = excess; best = i; }
            }
            if (best < 0) throw internal_error("drain rounding cannot satisfy pool capacity");
            --pol_.n_psi_tilde(best, j);
            --col;
        }
    }
    double eps_sq = pol_.eps_n * pol_.eps_n;
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) {
            pol_.beta_n(i, j) = static_cast<double>(pol_.n_psi_tilde(i, j)) * inv_n_ -
                                model.psi_tilde0(i, j);
            if (model.psi_tilde0(i, j) <= 0.0 && pol_.n_psi_tilde(i, j) == 0) continue;
            if (std::fabs(pol_.beta_n(i, j)) > eps_sq)
                throw regime_error(
                    "n below n_min: rounding offset " + std::to_string(pol_.beta_n(i, j)) +
                    " at (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                    ") exceeds eps_n^2 = " + std::to_string(eps_sq));
        }
    drain_rows_ = pol_.n_psi_tilde.row_sums();
    drain_cols_ = pol_.n_psi_tilde.col_sums();

    // state at time zero
    st_.X = sys.X0_n;
    st_.Y.assign(I, 0);
    st_.Z.assign(J, 0);
    st_.A.assign(I, 0);
    st_.D = MatI(I, J, 0);
    st_.T_int = Mat(I, J, 0.0);
    st_.next_arrival.assign(I, 0.0);

    // initial placement balances everyone into service before the first
    // drain decision is applied
    apply_hold_allocation();

    pol_.W.assign(I, 0.0);
    pol_.W_slope.assign(I, 0.0);
    for (int i = 0; i < I; ++i)
        pol_.W[i] = static_cast<double>(st_.X[i]) * inv_n_ - model.alloc.x_star[i];
    pol_.W_sup = l1_norm(pol_.W);

    pol_.phase = SimPhase::Drain;
    pol_.k = 1;
    pol_.anchor_drain_Xe = sum_ll(st_.X);
    apply_drain_allocation();
    check_invariants();

    arrival_rng_.reserve(I);
    for (int i = 0; i < I; ++i) arrival_rng_.push_back(CounterRng(seed).split(i));
    service_rng_ = CounterRng(seed).split(kServiceStream);
    for (int i = 0; i < I; ++i) schedule_arrival(i);
}

void SimRunner::schedule_arrival(int cls) {
    double rate = sys_.lambda_n[cls];
    double gap;
    switch (opts_.arrivals) {
        case ArrivalKind::Exponential: gap = arrival_rng_[cls].exponential(rate); break;
        case ArrivalKind::Deterministic: gap = 1.0 / rate; break;
        case ArrivalKind::Uniform: gap = arrival_rng_[cls].uniform(0.5, 1.5) / rate; break;
        default: gap = arrival_rng_[cls].exponential(rate);
    }
    st_.next_arrival[cls] = st_.t + gap;
}

void SimRunner::mix_decision() {
    uint64_t h = pol_.psi_hash;
    for (int i = 0; i < model_.spec.I; ++i)
        for (int j = 0; j < model_.spec.J; ++j) {
            h ^= static_cast<uint64_t>(st_.Psi(i, j)) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
    h ^= static_cast<uint64_t>(pol_.phase) + (h << 6);
    pol_.psi_hash = h;
}

void SimRunner::apply_drain_allocation() {
    const int I = model_.spec.I, J = model_.spec.J;
    st_.Psi = pol_.n_psi_tilde;
    for (int i = 0; i < I; ++i) {
        st_.Y[i] = st_.X[i] - drain_rows_[i];
        if (st_.Y[i] < 0)
            throw regime_error("epsilon regime violated at n=" + std::to_string(sys_.n) +
                               ": class " + std::to_string(i + 1) + " queue would be " +
                               std::to_string(st_.Y[i]) + " at t=" + std::to_string(st_.t));
    }
    for (int j = 0; j < J; ++j) {
        st_.Z[j] = sys_.N_n[j] - drain_cols_[j];
        if (st_.Z[j] < 0)
            throw regime_error("epsilon regime violated at n=" + std::to_string(sys_.n) +
                               ": pool " + std::to_string(j + 1) + " oversubscribed in drain");
    }
    mix_decision();
}

void SimRunner::apply_hold_allocation() {
    const int I = model_.spec.I, J = model_.spec.J;
    long long gap = sum_ll(st_.X) - sum_ll(sys_.N_n);
    std::vector<long long> a(st_.X), b(sys_.N_n);
    st_.Y.assign(I, 0);
    st_.Z.assign(J, 0);
    if (gap > 0) { st_.Y[0] = gap; a[0] -= gap; }
    if (gap < 0) { st_.Z[0] = -gap; b[0] += gap; }
    MatI psi = model_.tree.solve_int(a, b);
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j)
            if (psi(i, j) < 0)
                throw regime_error("epsilon regime violated at n=" + std::to_string(sys_.n) +
                                   ": balanced assignment negative at (" + std::to_string(i + 1) +
                                   "," + std::to_string(j + 1) + ") at t=" + std::to_string(st_.t));
    st_.Psi = psi;
    mix_decision();
}

void SimRunner::apply_stopped_allocation() {
    const int I = model_.spec.I, J = model_.spec.J;
    st_.Psi = MatI(I, J, 0);
    for (int i = 0; i < I; ++i) st_.Y[i] = st_.X[i];
    for (int j = 0; j < J; ++j) st_.Z[j] = sys_.N_n[j];
    mix_decision();
}

void SimRunner::check_invariants() const {
    const int I = model_.spec.I, J = model_.spec.J;
    for (int i = 0; i < I; ++i) {
        long long total = sys_.X0_n[i] + st_.A[i];
        long long served = 0, in_service = 0;
        for (int j = 0; j < J; ++j) {
            served += st_.D(i, j);
            in_service += st_.Psi(i, j);
            if (st_.Psi(i, j) < 0 || (!model_.spec.activity(i, j) && st_.Psi(i, j) != 0))
                throw internal_error("assignment outside the activity set");
        }
        if (st_.X[i] != total - served) throw internal_error("customer count drifted");
        if (st_.Y[i] + in_service != st_.X[i]) throw internal_error("queue balance broken");
        if (st_.Y[i] < 0) throw internal_error("negative queue");
    }
    for (int j = 0; j < J; ++j) {
        long long in_service = 0;
        for (int i = 0; i < I; ++i) in_service += st_.Psi(i, j);
        if (st_.Z[j] + in_service != sys_.N_n[j]) throw internal_error("server balance broken");
        if (st_.Z[j] < 0) throw internal_error("negative idle count");
    }
}

void SimRunner::advance_time(double t_next) {
    double dt = t_next - st_.t;
    if (dt < 0) throw internal_error("time went backwards");
    if (dt == 0) return;
    if (sum_ll(st_.Y) > 0) met_.busy_time += dt;
    const int I = model_.spec.I, J = model_.spec.J;
    for (int i = 0; i < I; ++i) {
        double slope = -model_.spec.lambda[i];
        for (int j = 0; j < J; ++j) {
            st_.T_int(i, j) += static_cast<double>(st_.Psi(i, j)) * dt;
            slope += model_.spec.mu(i, j) * static_cast<double>(st_.Psi(i, j)) * inv_n_;
        }
        pol_.W_slope[i] = slope;
        pol_.W[i] += slope * dt;
    }
    pol_.W_sup = std::max(pol_.W_sup, l1_norm(pol_.W));
    st_.t = t_next;
}

double SimRunner::sigma_crossing(double t_next) const {
    if (pol_.sigma_fired) return -1.0;
    double dt = t_next - st_.t;
    if (dt <= 0) return -1.0;
    const int I = model_.spec.I;
    Vec slope(I);
    for (int i = 0; i < I; ++i) {
        slope[i] = -model_.spec.lambda[i];
        for (int j = 0; j < model_.spec.J; ++j)
            slope[i] += model_.spec.mu(i, j) * static_cast<double>(st_.Psi(i, j)) * inv_n_;
    }
    auto norm_at = [&](double s) {
        double nn = 0;
        for (int i = 0; i < I; ++i) nn += std::fabs(pol_.W[i] + slope[i] * s);
        return nn;
    };
    if (norm_at(dt) < pol_.eps_n) return -1.0;
    double a = 0, b = dt;
    for (int it = 0; it < 64 && b - a > 1e-15 + 1e-12 * dt; ++it) {
        double mid = 0.5 * (a + b);
        (norm_at(mid) >= pol_.eps_n ? b : a) = mid;
    }
    return st_.t + b;
}

void SimRunner::policy_transitions() {
    if (pol_.phase == SimPhase::PostTau) return;
    const long long n = sys_.n;
    double n_d = static_cast<double>(n);

    double dev = 0;
    for (int i = 0; i < model_.spec.I; ++i)
        dev += std::fabs(static_cast<double>(st_.X[i]) - n_d * model_.alloc.x_star[i]);
    if (dev >= sqrt_eps_n_ * n_d) {
        pol_.tau_fired = true;
        pol_.tau_time = st_.t;
        pol_.phase = SimPhase::PostTau;
        apply_stopped_allocation();
        push_log(SimEvent::Type::PhaseChange, -1, -1);
        return;
    }

    if (pol_.phase == SimPhase::Drain) {
        if (static_cast<double>(sum_ll(st_.X) - pol_.anchor_drain_Xe) <=
            -7.0 * pol_.eps_n * n_d) {
            pol_.phase = SimPhase::Hold;
            pol_.anchor_hold_X = st_.X;
            apply_hold_allocation();
            push_log(SimEvent::Type::PhaseChange, -1, -1);
        }
        return;
    }

    // Hold
    long long move = 0;
    for (size_t i = 0; i < st_.X.size(); ++i)
        move += std::llabs(st_.X[i] - pol_.anchor_hold_X[i]);
    if (static_cast<double>(move) >= 3.0 * pol_.eps_n * n_d) {
        pol_.phase = SimPhase::Drain;
        ++pol_.k;
        pol_.anchor_drain_Xe = sum_ll(st_.X);
        apply_drain_allocation();
        push_log(SimEvent::Type::PhaseChange, -1, -1);
    } else {
        apply_hold_allocation();
    }
}

void SimRunner::push_log(SimEvent::Type type, int cls, int pool) {
    if (!log || (log_cap && log->size() >= log_cap)) return;
    SimEvent e;
    e.type = type;
    e.t = st_.t;
    e.cls = cls;
    e.pool = pool;
    e.phase = pol_.phase;
    e.eY = sum_ll(st_.Y);
    long long dev = 0;
    for (size_t i = 0; i < st_.X.size(); ++i) dev += std::llabs(st_.X[i] - sys_.X0_n[i]);
    e.x_dev = dev;
    e.psi_hash = pol_.psi_hash;
    log->push_back(e);
}

void SimRunner::apply_arrival(int cls) {
    ++met_.event_count;
    ++st_.X[cls];
    ++st_.A[cls];
    pol_.W[cls] += inv_n_;
    pol_.W_sup = std::max(pol_.W_sup, l1_norm(pol_.W));
    if (pol_.phase == SimPhase::Drain)
        ++st_.Y[cls];  // frozen assignment, the newcomer queues
    else if (pol_.phase == SimPhase::PostTau)
        ++st_.Y[cls];
    // Hold recomputes the assignment in policy_transitions
    policy_transitions();
    long long dev = 0;
    for (size_t i = 0; i < st_.X.size(); ++i) dev += std::llabs(st_.X[i] - sys_.X0_n[i]);
    met_.sup_x_dev = std::max(met_.sup_x_dev, static_cast<double>(dev));
    check_invariants();
    push_log(SimEvent::Type::Arrival, cls, -1);
}

void SimRunner::apply_departure(int cls, int pool) {
    ++met_.event_count;
    if (st_.Psi(cls, pool) <= 0) throw internal_error("departure from an empty assignment");
    --st_.X[cls];
    st_.D(cls, pool) += 1;
    pol_.W[cls] -= inv_n_;
    pol_.W_sup = std::max(pol_.W_sup, l1_norm(pol_.W));
    if (pol_.phase == SimPhase::Drain) {
        --st_.Y[cls];  // a queued customer refills the frozen assignment
        if (st_.Y[cls] < 0)
            throw regime_error("epsilon regime violated at n=" + std::to_string(sys_.n) +
                               ": class " + std::to_string(cls + 1) +
                               " ran out of customers for the drain assignment at t=" +
                               std::to_string(st_.t));
    }
    policy_transitions();
    long long dev = 0;
    for (size_t i = 0; i < st_.X.size(); ++i) dev += std::llabs(st_.X[i] - sys_.X0_n[i]);
    met_.sup_x_dev = std::max(met_.sup_x_dev, static_cast<double>(dev));
    check_invariants();
    push_log(SimEvent::Type::Departure, cls, pool);
}

void SimRunner::apply_sigma_cross() {
    ++met_.event_count;
    pol_.sigma_fired = true;
    pol_.sigma_time = st_.t;
    if (opts_.sigma_stops && pol_.phase != SimPhase::PostTau) {
        pol_.phase = SimPhase::PostTau;
        apply_stopped_allocation();
    }
    check_invariants();
    push_log(SimEvent::Type::SigmaCross, -1, -1);
}

bool SimRunner::step(double T) {
    if (st_.t >= T) return false;

    double t_arr = 1e300;
    int arr_cls = -1;
    for (int i = 0; i < model_.spec.I; ++i)
        if (st_.next_arrival[i] < t_arr) { t_arr = st_.next_arrival[i]; arr_cls = i; }

    double rate = 0;
    for (int i = 0; i < model_.spec.I; ++i)
        for (int j = 0; j < model_.spec.J; ++j)
            rate += model_.spec.mu(i, j) * static_cast<double>(st_.Psi(i, j));
    double t_dep = 1e300;
    double pick = 0;
    if (rate > 0) {
        t_dep = st_.t + service_rng_.exponential(rate);
        pick = service_rng_.next_u01() * rate;
    }

    double t_next = std::min(t_arr, t_dep);
    if (t_next > T) t_next = T;

    double t_sigma = sigma_crossing(std::min(t_next, T));
    if (t_sigma >= 0 && t_sigma <= t_next) {
        advance_time(t_sigma);
        apply_sigma_cross();
        return st_.t < T;
    }

    if (t_next >= T) {
        advance_time(T);
        return false;
    }

    advance_time(t_next);
    if (t_arr <= t_dep) {
        schedule_arrival(arr_cls);
        apply_arrival(arr_cls);
    } else {
        double acc = 0;
        int ci = 0, cj = 0;
        bool found = false;
        for (int i = 0; i < model_.spec.I && !found; ++i)
            for (int j = 0; j < model_.spec.J && !found; ++j) {
                acc += model_.spec.mu(i, j) * static_cast<double>(st_.Psi(i, j));
                if (pick < acc) { ci = i; cj = j; found = true; }
            }
        if (!found) {  // numerical tail: last positive-rate pair
            for (int i = model_.spec.I - 1; i >= 0 && !found; --i)
                for (int j = model_.spec.J - 1; j >= 0 && !found; --j)
                    if (model_.spec.mu(i, j) * static_cast<double>(st_.Psi(i, j)) > 0) {
                        ci = i; cj = j; found = true;
                    }
        }
        apply_departure(ci, cj);
    }
    return st_.t < T;
}

RunMetrics SimRunner::finish(double T) {
    (void)T;
    met_.t_end = st_.t;
    met_.K = pol_.k;
    met_.w_sup_scaled = std::sqrt(static_cast<double>(sys_.n)) * pol_.W_sup;
    if (pol_.tau_fired) met_.tau_time = pol_.tau_time;
    if (pol_.sigma_fired) met_.sigma_time = pol_.sigma_time;
    return met_;
}

RunMetrics run_simulation(const SimModel& model, const ScaledSystem& sys, double T,
                          uint64_t seed, const SimOptions& opts,
                          std::vector<SimEvent>* log, size_t log_cap) {
    try {
        SimRunner r(model, sys, seed, opts);
        r.log = log;
        r.log_cap = log_cap;
        try {
            while (r.step(T)) {}
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::RegimeViolated) throw;
            // keep whatever was measured up to the violation
            RunMetrics m = r.finish(T);
            m.error = true;
            m.error_message = e.what();
            return m;
        }
        return r.finish(T);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::RegimeViolated) throw;
        RunMetrics m;
        m.seed = seed;
        m.error = true;
        m.error_message = e.what();
        return m;
    }
}

namespace {

RunMetrics run_one_guarded(const SimModel& model, const NetworkSpec& spec, long long n,
                           double T, uint64_t seed, const SimOptions& opts) {
    ScaledSystem sys = scale_system(spec, model.alloc.x_star, n);
    return run_simulation(model, sys, T, seed, opts);
}

}  // namespace

SweepResult sweep(const SimModel& model, const std::vector<long long>& n_list, int reps,
                  double T, uint64_t base_seed, double rho, const SimOptions& opts,
                  int threads) {
    SweepResult out;
    struct Job { long long n; int rep; };
    std::vector<Job> jobs;
    for (long long n : n_list)
        for (int r = 0; r < reps; ++r) jobs.push_back({n, r});
    out.rows.resize(jobs.size());

    int nthreads = threads > 0 ? threads
                               : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min<int>(nthreads, static_cast<int>(jobs.size()));
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t idx = next.fetch_add(1);
            if (idx >= jobs.size()) return;
            const Job& jb = jobs[idx];
            uint64_t seed = derive_seed(base_seed, static_cast<uint64_t>(jb.n),
                                        static_cast<uint64_t>(jb.rep));
            RunMetrics m = run_one_guarded(model, model.spec, jb.n, T, seed, opts);
            SweepRow row;
            row.n = jb.n;
            row.rep = jb.rep;
            row.seed = seed;
            row.busy_fraction = (T > 0) ? m.busy_time / T : 0.0;
            row.scaled_sup_dev = std::pow(static_cast<double>(jb.n), -rho) * m.sup_x_dev;
            row.K = m.K;
            row.tau_fired = m.tau_time.has_value();
            row.sigma_fired = m.sigma_time.has_value();
            row.error = m.error;
            row.error_message = m.error_message;
            row.t_end = m.t_end;
            row.w_sup_scaled = m.w_sup_scaled;
            out.rows[idx] = row;
        }
    };
    std::vector<std::thread> pool;
    for (int k = 0; k < nthreads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    for (long long n : n_list) {
        SweepSummary s;
        s.n = n;
        std::vector<double> busy, dev, wsup;
        int fired = 0, total = 0;
        for (const auto& row : out.rows) {
            if (row.n != n) continue;
            ++total;
            if (row.tau_fired || row.sigma_fired) ++fired;
            if (row.w_sup_scaled > 0) wsup.push_back(row.w_sup_scaled);
            if (row.error) { ++s.errors; continue; }
            ++s.completed;
            busy.push_back(row.busy_fraction);
            dev.push_back(row.scaled_sup_dev);
        }
        s.busy_q25 = quantile(busy, 0.25);
        s.busy_med = quantile(busy, 0.5);
        s.busy_q75 = quantile(busy, 0.75);
        s.dev_med = quantile(dev, 0.5);
        s.fired_fraction = total ? static_cast<double>(fired) / total : 0.0;
        s.w95 = quantile(wsup, 0.95);
        out.summaries.push_back(s);
    }
    return out;
}

namespace {

const char* event_name(SimEvent::Type t) {
    switch (t) {
        case SimEvent::Type::Arrival: return "arrival";
        case SimEvent::Type::Departure: return "departure";
        case SimEvent::Type::SigmaCross: return "sigma-cross";
        default: return "phase-change";
    }
}

const char* phase_name(SimPhase p) {
    switch (p) {
        case SimPhase::Drain: return "drain";
        case SimPhase::Hold: return "hold";
        default: return "stopped";
    }
}

}  // namespace

void write_run_log_csv(const std::vector<SimEvent>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw usage_error("cannot write run log: " + path);
    out << "# schema: qthru.runlog.v1\n";
    out << "event,t,type,class,pool,phase,eY,x_dev\n";
    char buf[64];
    size_t idx = 0;
    for (const auto& e : log) {
        snprintf(buf, sizeof buf, "%.12g", e.t);
        out << idx++ << ',' << buf << ',' << event_name(e.type) << ',';
        if (e.cls >= 0) out << (e.cls + 1);
        out << ',';
        if (e.pool >= 0) out << (e.pool + 1);
        out << ',' << phase_name(e.phase) << ',' << e.eY << ',' << e.x_dev << '\n';
    }
}

void write_sweep_csv(const SweepResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw usage_error("cannot write sweep file: " + path);
    out << "# schema: qthru.sweep.v1\n";
    out << "n,rep,seed,busy_fraction,scaled_sup_dev,K,tau_fired,sigma_fired,error,t_end,"
           "w_sup_scaled\n";
    char buf[64];
    for (const auto& row : r.rows) {
        out << row.n << ',' << row.rep << ',' << row.seed << ',';
        snprintf(buf, sizeof buf, "%.12g", row.busy_fraction);
        out << buf << ',';
        snprintf(buf, sizeof buf, "%.12g", row.scaled_sup_dev);
        out << buf << ',' << row.K << ',' << (row.tau_fired ? 1 : 0) << ','
            << (row.sigma_fired ? 1 : 0) << ',' << (row.error ? 1 : 0) << ',';
        snprintf(buf, sizeof buf, "%.12g", row.t_end);
        out << buf << ',';
        snprintf(buf, sizeof buf, "%.12g", row.w_sup_scaled);
        out << buf << '\n';
    }
}

void write_plot_csv(const SweepResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw usage_error("cannot write plot file: " + path);
    out << "# schema: qthru.plotdata.v1\n";
    out << "n,busy_q25,busy_median,busy_q75,dev_median,fired_fraction,completed,errors\n";
    char buf[64];
    for (const auto& s : r.summaries) {
        out << s.n << ',';
        snprintf(buf, sizeof buf, "%.12g", s.busy_q25);
        out << buf << ',';
        snprintf(buf, sizeof buf, "%.12g", s.busy_med);
        out << buf << ',';
        snprintf(buf, sizeof buf, "%.12g", s.busy_q75);
        out << buf << ',';
        snprintf(buf, sizeof buf, "%.12g", s.dev_med);
        out << buf << ',';
        snprintf(buf, sizeof buf, "%.12g", s.fired_fraction);
        out << buf << ',' << s.completed << ',' << s.errors << '\n';
    }
}

}  // namespace qthru
