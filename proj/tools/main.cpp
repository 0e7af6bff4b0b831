#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qthru/errors.hpp"
#include "qthru/fluid.hpp"
#include "qthru/network.hpp"
#include "qthru/paths.hpp"
#include "qthru/sim.hpp"
#include "qthru/static_allocation.hpp"
#include "qthru/tree_flow.hpp"

namespace fs = std::filesystem;
using namespace qthru;

namespace {

// exit codes are a stable contract for scripting
constexpr int kExitOptimal = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAssumption = 2;
constexpr int kExitRegime = 3;
constexpr int kExitSuboptimal = 10;

struct CommonArgs {
    int builtin = 0;
    std::string network_file;
    std::string config_file;
    std::string out_dir;
    std::string xi_override_file;
};

std::string out_path(const CommonArgs& a, const std::string& name) {
    std::string dir = a.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("QTHRU_OUT_DIR");
        dir = env ? env : ".";
    }
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

NetworkSpec resolve_network(const CommonArgs& a) {
    if (a.builtin > 0 && !a.network_file.empty())
        throw usage_error("give either --builtin or --network, not both");
    if (a.builtin > 0) return builtin_example(a.builtin);
    if (!a.network_file.empty()) return load_spec_file(a.network_file);
    throw usage_error("no network given; use --builtin <1|2|3> or --network <file>");
}

StaticOptions resolve_static_options(const CommonArgs& a, const NetworkSpec& spec) {
    StaticOptions opts;
    if (!a.xi_override_file.empty()) {
        std::ifstream in(a.xi_override_file);
        if (!in) throw usage_error("cannot open xi override file: " + a.xi_override_file);
        nlohmann::json doc = nlohmann::json::parse(in, nullptr, true, true);
        auto rows = doc.at("xi_star_override").get<std::vector<Vec>>();
        Mat xi(spec.I, spec.J, 0.0);
        if (static_cast<int>(rows.size()) != spec.I)
            throw usage_error("xi_star_override has wrong row count");
        for (int i = 0; i < spec.I; ++i) {
            if (static_cast<int>(rows[i].size()) != spec.J)
                throw usage_error("xi_star_override has wrong column count");
            for (int j = 0; j < spec.J; ++j) xi(i, j) = rows[i][j];
        }
        opts.xi_star_override = xi;
    }
    return opts;
}

// --config merges defaults into flags the user did not set explicitly
void merge_config(CLI::App* cmd, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw usage_error("cannot open config file: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, true, true);
    for (auto& [key, value] : doc.items()) {
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (!opt || opt->count() > 0) continue;
        if (value.is_array()) {
            std::string joined;
            for (auto& v : value) {
                if (!joined.empty()) joined += ",";
                joined += v.is_string() ? v.get<std::string>() : v.dump();
            }
            opt->add_result(joined);
        } else if (value.is_string()) {
            opt->add_result(value.get<std::string>());
        } else {
            opt->add_result(value.dump());
        }
        opt->run_callback();  // parsing already happened; push into the binding
    }
}

void print_allocation(const StaticAllocation& alloc) {
    std::printf("rho* = %.12g\n", alloc.rho_star);
    std::printf("psi* =\n");
    for (int i = 0; i < alloc.psi_star.rows(); ++i) {
        std::printf("  ");
        for (int j = 0; j < alloc.psi_star.cols(); ++j)
            std::printf("%10.6g ", alloc.psi_star(i, j));
        std::printf("\n");
    }
    std::printf("x* = (");
    for (size_t i = 0; i < alloc.x_star.size(); ++i)
        std::printf("%s%.6g", i ? ", " : "", alloc.x_star[i]);
    std::printf(")\n");
    std::printf("basic tree edges:");
    for (auto& [i, j] : alloc.basic_edges) std::printf(" (%d,p%d)", i + 1, j + 1);
    std::printf("\n");
}

int cmd_analyze(const CommonArgs& args, const std::string& json_out) {
    NetworkSpec spec = resolve_network(args);
    StaticAllocation alloc = solve_static(spec, resolve_static_options(args, spec));
    SuboptimalityVerdict verdict = classify(alloc, spec);

    print_allocation(alloc);
    std::printf("simple paths:\n");
    for (const auto& p : verdict.all_paths) {
        std::printf("  closure (%d,p%d) %s weight %.6g\n", p.closure_class() + 1,
                    p.closure_pool() + 1, p.kind == SimplePath::Kind::Closed ? "closed" : "open",
                    p.weight);
    }
    std::printf("excess-rate optimum M_max = %.12g\n", verdict.m_max);
    std::printf("verdict: %s\n", verdict.suboptimal ? "suboptimal" : "optimal");
    if (verdict.witness)
        std::printf("witness: closure (%d,p%d), weight %.6g\n",
                    verdict.witness->closure_class() + 1, verdict.witness->closure_pool() + 1,
                    verdict.witness->weight);

    std::string path = json_out.empty() ? out_path(args, "analysis.json") : json_out;
    std::ofstream out(path);
    out << verdict_to_json(verdict, alloc) << "\n";
    std::printf("report written to %s\n", path.c_str());
    return verdict.suboptimal ? kExitSuboptimal : kExitOptimal;
}

int cmd_fluid(const CommonArgs& args, double eps, double sigma, double step_opt,
              const std::string& pert_kind, uint64_t seed) {
    NetworkSpec spec = resolve_network(args);
    SimModel model = SimModel::build(spec, resolve_static_options(args, spec));

    double step = step_opt > 0 ? step_opt : std::min(1e-3, eps / 10.0);
    Perturbation pert;
    if (pert_kind == "zero")
        pert = zero_perturbation(spec.I, spec.J, eps, sigma);
    else if (pert_kind == "sine")
        pert = sine_perturbation(spec.I, spec.J, eps, sigma);
    else if (pert_kind == "walk")
        pert = walk_perturbation(spec.I, spec.J, eps, sigma, seed);
    else
        throw usage_error("unknown perturbation kind: " + pert_kind);

    Mat beta(spec.I, spec.J, 0.0);
    Mat psi_tilde = build_psi_tilde(model.alloc, model.constants, *model.verdict.witness,
                                    beta, eps);
    FluidTrajectory traj = integrate_trajectory(spec, model.alloc, model.constants, psi_tilde,
                                                model.tree, pert, 0, 0, step);
    BoundReport report = verify_fluid_bounds(traj, model.constants, eps);

    std::string traj_path = out_path(args, "trajectory.csv");
    write_trajectory_csv(traj, traj_path);
    std::string rep_path = out_path(args, "bounds.json");
    std::ofstream out(rep_path);
    out << bound_report_json(report) << "\n";

    std::printf("tau = %.6g (%s), rounds = %d, busy = %.6g, sup deviation = %.6g\n", traj.tau,
                traj.tau_tilde_fired ? "deviation stop" : "horizon", traj.K, traj.busy_measure,
                traj.sup_dev);
    for (const auto& ch : report.checks)
        std::printf("  %-22s measured %.6g  bound %.6g  %s\n", ch.name.c_str(), ch.measured,
                    ch.bound, ch.pass ? "pass" : "FAIL");
    std::printf("trajectory: %s\nbounds: %s\n", traj_path.c_str(), rep_path.c_str());
    return kExitOptimal;
}

SimOptions sim_options(const std::string& arrivals, double eps_scale, bool sigma_free) {
    SimOptions o;
    if (arrivals == "exp")
        o.arrivals = ArrivalKind::Exponential;
    else if (arrivals == "det")
        o.arrivals = ArrivalKind::Deterministic;
    else if (arrivals == "uniform")
        o.arrivals = ArrivalKind::Uniform;
    else
        throw usage_error("unknown arrival kind: " + arrivals);
    o.eps_scale = eps_scale;
    o.sigma_stops = !sigma_free;
    return o;
}

int cmd_simulate(const CommonArgs& args, long long n, double T, uint64_t seed,
                 const std::string& arrivals, double eps_scale, bool sigma_free,
                 bool write_log) {
    NetworkSpec spec = resolve_network(args);
    SimModel model = SimModel::build(spec, resolve_static_options(args, spec));
    ScaledSystem sys = scale_system(spec, model.alloc.x_star, n);

    std::vector<SimEvent> log;
    RunMetrics m = run_simulation(model, sys, T, seed, sim_options(arrivals, eps_scale, sigma_free),
                                  write_log ? &log : nullptr);
    if (write_log) write_run_log_csv(log, out_path(args, "run_log.csv"));

    std::printf("n=%lld T=%.6g seed=%llu\n", n, T, static_cast<unsigned long long>(seed));
    std::printf("events = %llu, rounds = %d\n",
                static_cast<unsigned long long>(m.event_count), m.K);
    std::printf("busy time = %.6g (fraction %.6g)\n", m.busy_time, T > 0 ? m.busy_time / T : 0.0);
    std::printf("sup |X - X0| = %.6g, sqrt(n) sup |W| = %.6g\n", m.sup_x_dev, m.w_sup_scaled);
    if (m.tau_time) std::printf("deviation stop at t = %.6g\n", *m.tau_time);
    if (m.sigma_time) std::printf("noise envelope crossed at t = %.6g\n", *m.sigma_time);
    if (m.error) {
        std::printf("run ended early: %s\n", m.error_message.c_str());
        return kExitRegime;
    }
    return kExitOptimal;
}

int cmd_sweep(const CommonArgs& args, std::vector<long long> n_list, int reps, double T,
              uint64_t seed, double rho, const std::string& arrivals, double eps_scale,
              bool sigma_free, int threads) {
    NetworkSpec spec = resolve_network(args);
    SimModel model = SimModel::build(spec, resolve_static_options(args, spec));

    SweepResult res = sweep(model, n_list, reps, T, seed, rho,
                            sim_options(arrivals, eps_scale, sigma_free), threads);
    write_sweep_csv(res, out_path(args, "sweep.csv"));
    write_plot_csv(res, out_path(args, "sweep_plot.csv"));

    std::printf("%10s %10s %10s %10s %10s %8s %7s %7s\n", "n", "busy_q25", "busy_med",
                "busy_q75", "dev_med", "fired", "done", "errors");
    for (const auto& s : res.summaries)
        std::printf("%10lld %10.4g %10.4g %10.4g %10.4g %8.3g %7d %7d\n", s.n, s.busy_q25,
                    s.busy_med, s.busy_q75, s.dev_med, s.fired_fraction, s.completed, s.errors);
    std::printf("sweep rows: %s\n", out_path(args, "sweep.csv").c_str());
    return kExitOptimal;
}

int cmd_gen(int I, int J, uint64_t seed, const std::string& out_file) {
    GeneratedNetwork g = random_critical_network(I, J, seed);
    std::string text = save_spec(g.spec);
    if (out_file.empty()) {
        std::printf("%s\n", text.c_str());
    } else {
        std::ofstream out(out_file);
        if (!out) throw usage_error("cannot write " + out_file);
        out << text << "\n";
        std::printf("network written to %s\n", out_file.c_str());
    }
    return kExitOptimal;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"throughput (sub)optimality analysis for multiclass many-server networks"};
    app.require_subcommand(1);

    CommonArgs args;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--builtin", args.builtin, "built-in example id (1, 2 or 3)");
        cmd->add_option("--network", args.network_file, "network JSON file");
        cmd->add_option("--config", args.config_file, "JSON file with default flag values");
        cmd->add_option("--out", args.out_dir, "output directory (default $QTHRU_OUT_DIR or .)");
        cmd->add_option("--xi-star", args.xi_override_file,
                        "JSON file with an xi_star_override matrix");
    };

    auto* analyze = app.add_subcommand("analyze", "classify the network");
    add_common(analyze);
    std::string json_out;
    analyze->add_option("--json", json_out, "verdict JSON path");

    auto* fluid = app.add_subcommand("fluid", "integrate the deterministic drain/hold model");
    add_common(fluid);
    double eps = 1e-3, sigma = 2.0, step = 0.0;
    std::string pert = "zero";
    uint64_t fluid_seed = 1;
    fluid->add_option("--eps", eps, "disturbance scale");
    fluid->add_option("--sigma", sigma, "horizon");
    fluid->add_option("--step", step, "integration step (default min(1e-3, eps/10))");
    fluid->add_option("--pert", pert, "disturbance kind: zero | sine | walk");
    fluid->add_option("--seed", fluid_seed, "seed for the walk disturbance");

    auto* simulate = app.add_subcommand("simulate", "one stochastic run");
    add_common(simulate);
    long long n = 100;
    double T = 10.0;
    uint64_t seed = 1;
    std::string arrivals = "exp";
    double eps_scale = 1.0;
    bool sigma_free = false, write_log = false;
    simulate->add_option("--n", n, "system scale");
    simulate->add_option("--T", T, "horizon");
    simulate->add_option("--seed", seed, "run seed");
    simulate->add_option("--arrivals", arrivals, "arrival kind: exp | det | uniform");
    simulate->add_option("--eps-scale", eps_scale, "multiplier on the policy threshold scale");
    simulate->add_flag("--sigma-diagnostic", sigma_free,
                       "record the noise-envelope crossing without stopping service");
    simulate->add_flag("--log", write_log, "write the event log CSV");

    auto* sweep_cmd = app.add_subcommand("sweep", "replicated runs across scales");
    add_common(sweep_cmd);
    std::vector<long long> n_list{100, 400, 1600};
    int reps = 20, threads = 0;
    double rho = 0.6;
    double sT = 10.0;
    uint64_t sweep_seed = 7;
    std::string s_arrivals = "exp";
    double s_eps_scale = 1.0;
    bool s_sigma_free = false;
    sweep_cmd->add_option("--n", n_list, "scales to run")->delimiter(',');
    sweep_cmd->add_option("--reps", reps, "replications per scale");
    sweep_cmd->add_option("--T", sT, "horizon");
    sweep_cmd->add_option("--seed", sweep_seed, "base seed");
    sweep_cmd->add_option("--rho", rho, "deviation scaling exponent");
    sweep_cmd->add_option("--arrivals", s_arrivals, "arrival kind: exp | det | uniform");
    sweep_cmd->add_option("--eps-scale", s_eps_scale, "multiplier on the policy threshold scale");
    sweep_cmd->add_flag("--sigma-diagnostic", s_sigma_free,
                        "record the noise-envelope crossing without stopping service");
    sweep_cmd->add_option("--threads", threads, "worker threads (default: hardware)");

    auto* gen = app.add_subcommand("gen", "generate a random critically loaded network");
    int gI = 3, gJ = 3;
    uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--classes", gI, "customer classes");
    gen->add_option("--pools", gJ, "server pools");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
        CLI::App* active = app.get_subcommands().front();
        merge_config(active, args.config_file);

        if (active == analyze) return cmd_analyze(args, json_out);
        if (active == fluid) return cmd_fluid(args, eps, sigma, step, pert, fluid_seed);
        if (active == simulate)
            return cmd_simulate(args, n, T, seed, arrivals, eps_scale, sigma_free, write_log);
        if (active == sweep_cmd)
            return cmd_sweep(args, n_list, reps, sT, sweep_seed, rho, s_arrivals, s_eps_scale,
                             s_sigma_free, threads);
        if (active == gen) return cmd_gen(gI, gJ, gen_seed, gen_out);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        switch (e.kind()) {
            case ErrorKind::AssumptionFailed: return kExitAssumption;
            case ErrorKind::RegimeViolated: return kExitRegime;
            case ErrorKind::Usage: return kExitUsage;
            case ErrorKind::SpecInvalid: return kExitAssumption;
            default: return kExitUsage;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
}
