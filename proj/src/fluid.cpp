#include "qthru/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "qthru/errors.hpp"
#include "qthru/rng.hpp"

namespace qthru {

namespace {

constexpr double kNonnegTol = 1e-9;

double lerp(double a, double b, double f) { return a + (b - a) * f; }

}  // namespace

Vec Perturbation::value(double time) const {
    if (time <= t.front()) return w.front();
    if (time >= t.back()) return w.back();
    size_t hi = std::upper_bound(t.begin(), t.end(), time) - t.begin();
    size_t lo = hi - 1;
    double f = (time - t[lo]) / (t[hi] - t[lo]);
    Vec out(w[lo].size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = lerp(w[lo][i], w[hi][i], f);
    return out;
}

void Perturbation::validate(int I, int J) const {
    if (t.size() < 2 || t.size() != w.size()) throw usage_error("perturbation: bad breakpoint data");
    if (t.front() != 0.0 || t.back() < sigma) throw usage_error("perturbation: must cover [0, sigma]");
    if (!(sigma > eps) || !(eps > 0)) throw usage_error("perturbation: need sigma > eps > 0");
    for (size_t k = 1; k < t.size(); ++k)
        if (!(t[k] > t[k - 1])) throw usage_error("perturbation: breakpoints must increase");
    for (const Vec& v : w) {
        if (static_cast<int>(v.size()) != I) throw usage_error("perturbation: W dimension mismatch");
        if (l1_norm(v) > eps + 1e-12) throw usage_error("perturbation: |W| exceeds eps");
    }
    if (static_cast<int>(theta.size()) != J) throw usage_error("perturbation: theta dimension");
    if (l1_norm(theta) > eps + 1e-12) throw usage_error("perturbation: |theta| exceeds eps");
}

Perturbation zero_perturbation(int I, int J, double eps, double sigma) {
    Perturbation p;
    p.eps = eps;
    p.sigma = sigma;
    p.t = {0.0, sigma};
    p.w = {Vec(I, 0.0), Vec(I, 0.0)};
    p.theta.assign(J, 0.0);
    return p;
}

Perturbation sine_perturbation(int I, int J, double eps, double sigma) {
    Perturbation p;
    p.eps = eps;
    p.sigma = sigma;
    p.theta.assign(J, 0.0);
    const int n = 256;
    const double period = sigma / 4.0;
    for (int k = 0; k <= n; ++k) {
        double tk = sigma * k / n;
        Vec v(I, 0.0);
        v[0] = 0.9 * eps * std::sin(2.0 * M_PI * tk / period);
        p.t.push_back(tk);
        p.w.push_back(v);
    }
    return p;
}

Perturbation walk_perturbation(int I, int J, double eps, double sigma, uint64_t seed) {
    Perturbation p;
    p.eps = eps;
    p.sigma = sigma;
    p.theta.assign(J, 0.0);
    CounterRng rng(mix64(seed ^ 0x9216d5d98979fb1bULL));
    const int n = 256;
    Vec cur(I, 0.0);
    for (int k = 0; k <= n; ++k) {
        p.t.push_back(sigma * k / n);
        p.w.push_back(cur);
        for (int i = 0; i < I; ++i) cur[i] += rng.uniform(-1.0, 1.0) * 0.9 * eps / 8.0;
        double nrm = l1_norm(cur);
        if (nrm > 0.9 * eps)
            for (int i = 0; i < I; ++i) cur[i] *= 0.9 * eps / nrm;
    }
    return p;
}

FluidConstants compute_constants(const StaticAllocation& alloc, const SimplePath& witness,
                                 const NetworkSpec& spec, const TreeSolver& tree) {
    if (!(witness.weight < 0))
        throw usage_error("constants need a witness path of negative weight");

    FluidConstants c;
    for (size_t e = 0; e < witness.edges.size(); ++e) {
        double mu = spec.mu(witness.edges[e].first, witness.edges[e].second);
        if (witness.signs[e] > 0)
            c.sigma_plus += mu;
        else
            c.sigma_minus += mu;
    }
    c.alpha = 0.5 * (1.0 + c.sigma_plus / c.sigma_minus);
    if (!(c.alpha > 0.5 && c.alpha < 1.0))
        throw internal_error("alpha outside (1/2, 1); witness weight is not negative");

    double min_basic = std::numeric_limits<double>::infinity();
    for (auto& [i, j] : alloc.basic_edges) min_basic = std::min(min_basic, alloc.psi_star(i, j));
    c.delta1 = 0.5 * min_basic;

    // off-path classes need their service allocation trimmed so their queues
    // cannot go negative during drains; edges of on-path classes keep full
    // mass (their slack comes from the +-delta1 shifts on the path itself)
    std::vector<bool> class_on_path(spec.I, false);
    for (int i : witness.class_seq) class_on_path[i] = true;
    for (auto& [i, j] : alloc.basic_edges) {
        if (!class_on_path[i] && !witness.on_path(i, j)) {
            c.trimmed_edges.emplace_back(i, j);
            c.sigma_zero += spec.mu(i, j);
        }
    }
    if (c.sigma_zero > 0) {
        c.delta2 = c.delta1 * std::min(
            (c.alpha * c.sigma_minus - c.sigma_plus) / (2.0 * c.sigma_zero), 1.0 - c.alpha);
    } else {
        c.delta2 = 0.0;
    }

    c.c_g = tree.gain_bound();
    c.a0 = c.delta1 / (2.0 * c.c_g);

    // drift with the rounding offset at zero, checked against the closed form
    Mat psi0 = build_psi_tilde(alloc, c, witness, Mat(spec.I, spec.J, 0.0), 1.0);
    c.r.assign(spec.I, 0.0);
    for (int i = 0; i < spec.I; ++i) {
        c.r[i] = spec.lambda[i];
        for (int j = 0; j < spec.J; ++j) c.r[i] -= spec.mu(i, j) * psi0(i, j);
    }
    c.e_dot_r = sum(c.r);
    double closed_form = c.delta2 * c.sigma_zero + c.delta1 * c.sigma_plus -
                         c.alpha * c.delta1 * c.sigma_minus;
    if (std::fabs(c.e_dot_r - closed_form) > 1e-9)
        throw internal_error("drain drift total disagrees with its closed form: " +
                             std::to_string(c.e_dot_r) + " vs " + std::to_string(closed_form));
    if (!(c.e_dot_r < 0)) throw internal_error("drain drift total is not negative");
    c.r_norm = l1_norm(c.r);

    c.m1 = 24.0 / std::fabs(c.e_dot_r);
    c.c_h = c.c_g * spec.mu_total();
    c.l_h = std::max(1.0 + 1e-6, 2.0 * c.c_g * spec.mu_total());
    c.m2 = 7.0 + 2.0 * c.r_norm * c.m1;
    double c3 = 1.0 + c.l_h / (c.c_h * c.m2);
    c.m3 = 1.0 / (c3 * c.c_h * c.m2);
    return c;
}

Mat build_psi_tilde(const StaticAllocation& alloc, const FluidConstants& c,
                    const SimplePath& witness, const Mat& beta, double eps) {
    const int I = alloc.psi_star.rows(), J = alloc.psi_star.cols();
    if (beta.rows() != I || beta.cols() != J) throw usage_error("beta dimension mismatch");
    double beta_max = 0;
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) beta_max = std::max(beta_max, std::fabs(beta(i, j)));
    if (beta_max > eps * eps + 1e-15)
        throw usage_error("rounding offset exceeds eps^2");

    std::vector<std::vector<bool>> trimmed(I, std::vector<bool>(J, false));
    for (auto& [i, j] : c.trimmed_edges) trimmed[i][j] = true;

    Mat psi(I, J, 0.0);
    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) {
            int s = witness.sign_of(i, j);
            double base;
            if (s < 0)
                base = alloc.psi_star(i, j) + c.alpha * c.delta1;
            else if (s > 0)
                base = alloc.psi_star(i, j) - c.delta1;
            else if (alloc.is_basic(i, j))
                base = alloc.psi_star(i, j) - (trimmed[i][j] ? c.delta2 : 0.0);
            else
                continue;  // stays zero; beta is only meaningful on used pairs
            psi(i, j) = base + beta(i, j);
        }

    for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j)
            if (psi(i, j) < -kNonnegTol)
                throw regime_error("epsilon not small enough: allocation (" +
                                   std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                   ") would be negative");
    Vec nu = alloc.psi_star.col_sums();  // column sums of psi* equal capacities
    Vec cols = psi.col_sums();
    for (int j = 0; j < J; ++j) {
        double margin = I * beta_max + 1e-12;
        if (cols[j] > nu[j] + margin)
            throw regime_error("epsilon not small enough: pool " + std::to_string(j + 1) +
                               " oversubscribed by the drain allocation");
    }
    return psi;
}

namespace {

struct Integrator {
    const NetworkSpec& spec;
    const StaticAllocation& alloc;
    const FluidConstants& c;
    const Mat& psi_tilde;
    const TreeSolver& tree;
    const Perturbation& pert;
    int i0, j0;
    double step;

    double eps, sigma, sqrt_eps;
    Vec x_star;
    double nu_e, theta_e;
    Vec drain_rate;       // lambda - mu.psi_tilde per class
    Vec drain_row_sums;   // per-class allocation totals
    Vec drain_Z;          // idle capacity per pool during drains
    double drain_total;   // e . psi_tilde

    FluidTrajectory traj;
    double t = 0;
    Vec X;
    double busy_cum = 0, sup_cum = 0;

    Integrator(const NetworkSpec& sp, const StaticAllocation& al, const FluidConstants& cc,
               const Mat& pt, const TreeSolver& tr, const Perturbation& pe, int i0_, int j0_,
               double step_)
        : spec(sp), alloc(al), c(cc), psi_tilde(pt), tree(tr), pert(pe), i0(i0_), j0(j0_),
          step(step_) {
        eps = pert.eps;
        sigma = pert.sigma;
        sqrt_eps = std::sqrt(eps);
        x_star = alloc.x_star;
        nu_e = sum(spec.nu);
        theta_e = sum(pert.theta);
        drain_rate.assign(spec.I, 0.0);
        drain_row_sums = psi_tilde.row_sums();
        for (int i = 0; i < spec.I; ++i) {
            drain_rate[i] = spec.lambda[i];
            for (int j = 0; j < spec.J; ++j) drain_rate[i] -= spec.mu(i, j) * psi_tilde(i, j);
        }
        Vec cols = psi_tilde.col_sums();
        drain_Z.assign(spec.J, 0.0);
        for (int j = 0; j < spec.J; ++j) drain_Z[j] = spec.nu[j] + pert.theta[j] - cols[j];
        drain_total = sum(drain_row_sums);
        X = x_star;
        Vec w0 = pert.value(0.0);
        for (int i = 0; i < spec.I; ++i) X[i] += w0[i];
    }

    void record(FluidPhase phase, int k, const Vec& Y, const Vec& Z, double eY) {
        TrajectorySample s;
        s.t = t;
        s.X = X;
        s.Y = Y;
        s.Z = Z;
        s.e_dot_Y = eY;
        s.phase = phase;
        s.k = k;
        sup_cum = std::max(sup_cum, l1_dist(X, x_star));
        s.busy_cum = busy_cum;
        s.sup_cum = sup_cum;
        traj.samples.push_back(std::move(s));
    }

    void check_drain_feasible(int k) {
        for (int i = 0; i < spec.I; ++i)
            if (X[i] - drain_row_sums[i] < -kNonnegTol)
                throw regime_error("epsilon regime violated: class " + std::to_string(i + 1) +
                                   " queue negative at t=" + std::to_string(t) +
                                   " in drain round " + std::to_string(k));
        for (int j = 0; j < spec.J; ++j)
            if (drain_Z[j] < -kNonnegTol)
                throw regime_error("epsilon regime violated: pool " + std::to_string(j + 1) +
                                   " oversubscribed during drain");
    }

    Vec drain_Y() const {
        Vec y(spec.I);
        for (int i = 0; i < spec.I; ++i) y[i] = X[i] - drain_row_sums[i];
        return y;
    }

    // Advance one drain round [eta_{k-1}, zeta_k). Returns false when the
    // construction ended (tau or sigma) inside the round.
    bool run_drain(int k) {
        const double Xe_anchor = sum(X);
        const double threshold = -7.0 * eps;
        check_drain_feasible(k);
        record(FluidPhase::Drain, k, drain_Y(), drain_Z, sum(X) - drain_total);

        size_t seg = std::upper_bound(pert.t.begin(), pert.t.end(), t) - pert.t.begin() - 1;
        while (true) {
            double seg_end = (seg + 1 < pert.t.size()) ? pert.t[seg + 1] : sigma;
            double t1 = std::min(seg_end, sigma);
            if (t1 <= t + 1e-15) {
                if (t1 >= sigma - 1e-15) return end_at_sigma(FluidPhase::Drain, k);
                ++seg;
                continue;
            }
            // on [t, t1] the path is affine: X(s) = X + (s-t)*v
            Vec w_now = pert.value(t);
            Vec w_end = pert.value(t1);
            Vec v(spec.I);
            for (int i = 0; i < spec.I; ++i)
                v[i] = drain_rate[i] + (w_end[i] - w_now[i]) / (t1 - t);

            double stop = t1;
            enum class Hit { None, Zeta, Tau, Sigma } hit = Hit::None;
            if (t1 >= sigma - 1e-15) hit = Hit::Sigma;

            // zeta: total drop hits the threshold (linear, exact)
            double e_v = sum(v);
            double drop_end = (sum(X) - Xe_anchor) + e_v * (t1 - t);
            if (drop_end <= threshold) {
                double s = t + (threshold - (sum(X) - Xe_anchor)) / e_v;
                if (s < stop) { stop = s; hit = Hit::Zeta; }
            }
            // tau: deviation leaves the sqrt(eps) ball (convex, bisect)
            double tau_time = affine_norm_crossing(v, t, stop, sqrt_eps);
            if (tau_time >= 0 && tau_time <= stop) { stop = tau_time; hit = Hit::Tau; }

            advance_affine(v, stop, FluidPhase::Drain, k);
            if (hit == Hit::Zeta) {
                traj.zeta.push_back(t);
                traj.drain_lengths.push_back(t - (traj.eta.empty() ? 0.0 : traj.eta.back()));
                return true;
            }
            if (hit == Hit::Tau) return end_at_tau(FluidPhase::Drain, k);
            if (hit == Hit::Sigma) return end_at_sigma(FluidPhase::Drain, k);
            ++seg;
        }
    }

    // first s in (t, hi] with |X + (s-t)v - x*|_1 >= level, or -1
    double affine_norm_crossing(const Vec& v, double lo, double hi, double level) const {
        auto norm_at = [&](double s) {
            double n = 0;
            for (int i = 0; i < spec.I; ++i) n += std::fabs(X[i] + (s - lo) * v[i] - x_star[i]);
            return n;
        };
        if (norm_at(hi) < level) return -1.0;
        double a = lo, b = hi;
        for (int it = 0; it < 80 && b - a > 1e-15 + 1e-12 * hi; ++it) {
            double mid = 0.5 * (a + b);
            (norm_at(mid) >= level ? b : a) = mid;
        }
        return b;
    }

    void advance_affine(const Vec& v, double until, FluidPhase phase, int k) {
        // advance in chunks so the sample trail stays dense enough to read
        double chunk = std::max(50.0 * step, 1e-4);
        while (t < until - 1e-15) {
            double next = std::min(until, t + chunk);
            double dt = next - t;
            // queues are affine on the chunk: report the first zero crossing,
            // not the endpoint, when one dips negative
            for (int i = 0; i < spec.I; ++i) {
                double y0 = X[i] - drain_row_sums[i];
                double y1 = y0 + (v[i]) * dt;
                if (y1 < -kNonnegTol) {
                    double cross = t + dt * (y0 / (y0 - y1));
                    throw regime_error("epsilon regime violated: class " + std::to_string(i + 1) +
                                       " queue negative at t=" + std::to_string(cross) +
                                       " in drain round " + std::to_string(k));
                }
            }
            // e.Y is affine here; measure its positive part exactly
            double ey0 = sum(X) - drain_total;
            double ey1 = ey0 + sum(v) * dt;
            busy_cum += positive_measure(ey0, ey1, dt);
            for (int i = 0; i < spec.I; ++i) X[i] += v[i] * dt;
            t = next;
            check_drain_feasible(k);
            record(phase, k, drain_Y(), drain_Z, sum(X) - drain_total);
        }
    }

    static double positive_measure(double y0, double y1, double dt) {
        if (dt <= 0) return 0;
        if (y0 > 0 && y1 > 0) return dt;
        if (y0 <= 0 && y1 <= 0) return 0;
        double frac = y0 / (y0 - y1);  // zero crossing
        return (y0 > 0) ? dt * frac : dt * (1 - frac);
    }

    // Hold round [zeta_k, eta_k). Explicit Euler with the disturbance added
    // exactly; event times localized within a step by interpolation.
    bool run_hold(int k) {
        Vec anchor = X;
        hold_record(k);
        double max_eY = 0;
        double start = t;
        while (true) {
            if (t >= sigma - 1e-15) {
                finish_hold(k, start, max_eY, false);
                return end_at_sigma(FluidPhase::Hold, k);
            }
            double h = std::min(step, sigma - t);
            size_t seg = std::upper_bound(pert.t.begin(), pert.t.end(), t) - pert.t.begin() - 1;
            if (seg + 1 < pert.t.size()) h = std::min(h, pert.t[seg + 1] - t);
            if (h < 1e-15) h = std::min(step, sigma - t);

            Vec F = hold_drift();
            Vec w_now = pert.value(t);
            Vec w_next = pert.value(t + h);

            auto X_at = [&](double s) {  // s in [0, h], affine within the step
                Vec x(spec.I);
                double f = s / h;
                for (int i = 0; i < spec.I; ++i)
                    x[i] = X[i] + s * F[i] + (w_next[i] - w_now[i]) * f;
                return x;
            };

            Vec Xh = X_at(h);
            double s_stop = h;
            enum class Hit { None, Eta, Tau } hit = Hit::None;
            if (l1_dist(Xh, anchor) >= 3.0 * eps) { hit = Hit::Eta; }
            if (l1_dist(Xh, x_star) >= sqrt_eps) {
                // tau wins if it happens earlier within the step
                double s_tau = bisect_step(X_at, x_star, sqrt_eps, h);
                double s_eta = (hit == Hit::Eta) ? bisect_step(X_at, anchor, 3.0 * eps, h) : h + 1;
                if (s_tau <= s_eta) { hit = Hit::Tau; s_stop = s_tau; }
                else { hit = Hit::Eta; s_stop = s_eta; }
            } else if (hit == Hit::Eta) {
                s_stop = bisect_step(X_at, anchor, 3.0 * eps, h);
            }

            double eY = hold_eY();
            busy_cum += (eY > 0 ? s_stop : 0.0);
            max_eY = std::max(max_eY, eY);
            X = X_at(s_stop);
            t += s_stop;
            hold_record(k);

            if (hit == Hit::Eta) {
                traj.eta.push_back(t);
                finish_hold(k, start, max_eY, true);
                return true;
            }
            if (hit == Hit::Tau) {
                finish_hold(k, start, max_eY, false);
                return end_at_tau(FluidPhase::Hold, k);
            }
        }
    }

    void finish_hold(int k, double start, double max_eY, bool completed) {
        (void)k;
        if (completed) {
            traj.hold_lengths.push_back(t - start);
            traj.hold_max_eY.push_back(max_eY);
        }
    }

    // localize |X(s) - ref|_1 >= level within [0, h] to h/100
    template <class XAt>
    double bisect_step(const XAt& X_at, const Vec& ref, double level, double h) const {
        double a = 0, b = h;
        while (b - a > step / 100.0) {
            double mid = 0.5 * (a + b);
            (l1_dist(X_at(mid), ref) >= level ? b : a) = mid;
        }
        return b;
    }

    double hold_eY() const {
        return std::max(0.0, sum(X) - nu_e - theta_e);
    }

    Vec hold_drift() {
        double gap = sum(X) - nu_e - theta_e;
        Vec Y(spec.I, 0.0), Z(spec.J, 0.0);
        Y[i0] = std::max(0.0, gap);
        Z[j0] = std::max(0.0, -gap);
        Vec a(spec.I), b(spec.J);
        for (int i = 0; i < spec.I; ++i) a[i] = X[i] - Y[i];
        for (int j = 0; j < spec.J; ++j) b[j] = spec.nu[j] + pert.theta[j] - Z[j];
        Mat psi = tree.solve(a, b);
        for (int i = 0; i < spec.I; ++i)
            for (int j = 0; j < spec.J; ++j)
                if (psi(i, j) < -kNonnegTol)
                    throw regime_error("epsilon regime violated: balanced allocation negative at (" +
                                       std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                       ") at t=" + std::to_string(t));
        Vec F(spec.I);
        for (int i = 0; i < spec.I; ++i) {
            F[i] = spec.lambda[i];
            for (int j = 0; j < spec.J; ++j) F[i] -= spec.mu(i, j) * psi(i, j);
        }
        return F;
    }

    void hold_record(int k) {
        double gap = sum(X) - nu_e - theta_e;
        Vec Y(spec.I, 0.0), Z(spec.J, 0.0);
        Y[i0] = std::max(0.0, gap);
        Z[j0] = std::max(0.0, -gap);
        record(FluidPhase::Hold, k, Y, Z, std::max(0.0, gap));
    }

    bool end_at_tau(FluidPhase, int) {
        traj.tau = t;
        traj.tau_tilde_fired = true;
        return false;
    }
    bool end_at_sigma(FluidPhase, int) {
        traj.tau = t;
        traj.tau_tilde_fired = false;
        return false;
    }

    FluidTrajectory run() {
        int k = 1;
        while (true) {
            if (!run_drain(k)) break;
            if (!run_hold(k)) break;
            ++k;
        }
        // completed rounds: a round counts once its hold closed
        traj.K = static_cast<int>(traj.eta.size());
        traj.busy_measure = busy_cum;
        traj.sup_dev = sup_cum;
        return std::move(traj);
    }
};

}  // namespace

FluidTrajectory integrate_trajectory(const NetworkSpec& spec, const StaticAllocation& alloc,
                                     const FluidConstants& c, const Mat& psi_tilde,
                                     const TreeSolver& tree, const Perturbation& pert,
                                     int i0, int j0, double step) {
    pert.validate(spec.I, spec.J);
    if (!(step > 0)) throw usage_error("integration step must be positive");
    Integrator integ(spec, alloc, c, psi_tilde, tree, pert, i0, j0, step);
    return integ.run();
}

BoundReport verify_fluid_bounds(const FluidTrajectory& traj, const FluidConstants& c,
                                double eps) {
    BoundReport r;
    r.gamma1 = 2.0 * std::max(c.m1, 1.0) * std::sqrt(eps);
    r.gamma2 = (c.m3 / 4.0) * std::fabs(std::log(eps));

    auto add = [&](const std::string& name, double measured, double bound, bool pass) {
        r.checks.push_back({name, measured, bound, pass});
        r.all_pass = r.all_pass && pass;
    };

    // busy time and deviation inside the guarantee window [0, sigma ^ gamma2];
    // interpolate busy between the bracketing samples and take the later
    // running-sup, which can only overstate the measured values
    double window = r.gamma2;
    double busy_w = 0, sup_w = 0;
    for (size_t s = 0; s < traj.samples.size(); ++s) {
        const auto& cur = traj.samples[s];
        if (cur.t <= window) {
            busy_w = cur.busy_cum;
            sup_w = cur.sup_cum;
            continue;
        }
        if (s > 0) {
            const auto& prev = traj.samples[s - 1];
            if (cur.t > prev.t) {
                double f = (window - prev.t) / (cur.t - prev.t);
                busy_w = prev.busy_cum + f * (cur.busy_cum - prev.busy_cum);
            }
            sup_w = cur.sup_cum;
        }
        break;
    }
    add("busy_time_window", busy_w, r.gamma1, busy_w <= r.gamma1 + 1e-12);
    add("sup_deviation_window", sup_w, r.gamma1, sup_w <= r.gamma1 + 1e-12);

    double worst_drain = 0;
    for (double d : traj.drain_lengths) worst_drain = std::max(worst_drain, d);
    add("max_drain_length", worst_drain, c.m1 * eps, worst_drain <= c.m1 * eps + 1e-12);

    bool holds_ok = true;
    double worst_margin = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < traj.hold_lengths.size(); ++k) {
        double need = c.m3 / static_cast<double>(k + 1);
        worst_margin = std::min(worst_margin, traj.hold_lengths[k] - need);
        holds_ok = holds_ok && traj.hold_lengths[k] >= need - 1e-12;
    }
    add("min_hold_margin", traj.hold_lengths.empty() ? 0.0 : worst_margin, 0.0, holds_ok);

    // queue mass must vanish on completed holds; the final completed hold is
    // exempt only when the run ended inside the following drain round
    bool ended_in_drain = !traj.samples.empty() &&
                          traj.samples.back().phase == FluidPhase::Drain;
    size_t n_check = traj.hold_max_eY.size();
    if (ended_in_drain && n_check > 0) --n_check;
    double max_hold_eY = 0;
    for (size_t k = 0; k < n_check; ++k)
        max_hold_eY = std::max(max_hold_eY, traj.hold_max_eY[k]);
    add("hold_queue_mass", max_hold_eY, 0.0, max_hold_eY == 0.0);

    if (!r.all_pass)
        r.note = "trajectory feasibility held; a failed bound points at the constant "
                 "derivation rather than the dynamics";
    return r;
}

void write_trajectory_csv(const FluidTrajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw usage_error("cannot write trajectory file: " + path);
    out << "# schema: qthru.trajectory.v1\n";
    if (traj.samples.empty()) return;
    const int I = static_cast<int>(traj.samples.front().X.size());
    const int J = static_cast<int>(traj.samples.front().Z.size());
    out << "t";
    for (int i = 0; i < I; ++i) out << ",X_" << (i + 1);
    for (int i = 0; i < I; ++i) out << ",Y_" << (i + 1);
    for (int j = 0; j < J; ++j) out << ",Z_" << (j + 1);
    out << ",eY,phase,k\n";
    char buf[64];
    auto put = [&](double v) {
        snprintf(buf, sizeof buf, "%.12g", v);
        out << buf;
    };
    for (const auto& s : traj.samples) {
        put(s.t);
        for (double v : s.X) { out << ','; put(v); }
        for (double v : s.Y) { out << ','; put(v); }
        for (double v : s.Z) { out << ','; put(v); }
        out << ',';
        put(s.e_dot_Y);
        out << ',' << (s.phase == FluidPhase::Drain ? "drain" : "hold") << ',' << s.k << '\n';
    }
}

std::string bound_report_json(const BoundReport& r) {
    nlohmann::json doc;
    doc["schema"] = "qthru.bounds.v1";
    doc["gamma1"] = r.gamma1;
    doc["gamma2"] = r.gamma2;
    doc["all_pass"] = r.all_pass;
    if (!r.note.empty()) doc["note"] = r.note;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& ch : r.checks)
        checks.push_back({{"name", ch.name},
                          {"measured", ch.measured},
                          {"bound", ch.bound},
                          {"pass", ch.pass}});
    doc["checks"] = checks;
    return doc.dump(2);
}

}  // namespace qthru
