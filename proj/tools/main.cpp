#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "atomtrans/config.hpp"
#include "atomtrans/ensemble_oc.hpp"
#include "atomtrans/evolution.hpp"
#include "atomtrans/field_io.hpp"
#include "atomtrans/fields.hpp"
#include "atomtrans/report.hpp"
#include "atomtrans/trajectory_oc.hpp"
#include "atomtrans/validate.hpp"
#include "atomtrans/wigner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace atomtrans;

namespace {

struct Options {
    std::string config_path;
    std::string out_override;
    int jobs = 1;
    bool plots = false;
    int snapshot_stride = 0;  // 0 = pick automatically (~5 snapshots)
    double perturb_frequency = 0.0;  // cycles/us for the sinusoidal sweep; 0 = 2/t_f
};

struct Context {
    ExperimentConfig cfg;
    Scenario sc;
    std::string out;
    UnitSystem units;

    Context(const Options& opt, const char* default_tier)
        : cfg(load_config(opt.config_path)),
          sc((maybe_retier(cfg, default_tier), build_scenario(cfg))),
          out(opt.out_override.empty() ? cfg.output_dir : opt.out_override),
          units(sc.units()) {
        fs::create_directories(out);
    }

    static void maybe_retier(ExperimentConfig& cfg, const char* default_tier) {
        if (default_tier && cfg.tier == "deterministic" &&
            std::string(default_tier) != "deterministic")
            cfg.tier = default_tier;
    }
};

void emit_error(const std::string& kind, const std::string& message) {
    json err{{"error", {{"kind", kind}, {"message", message}}}};
    std::cerr << err.dump() << "\n";
}

template <typename F>
void parallel_for(int jobs, int n, F&& body) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> workers;
    std::mutex mtx;
    int next = 0;
    std::exception_ptr first_error;
    for (int w = 0; w < jobs; ++w)
        workers.emplace_back([&] {
            for (;;) {
                int i;
                {
                    std::lock_guard<std::mutex> lock(mtx);
                    if (first_error || next >= n) return;
                    i = next++;
                }
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mtx);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double t_lim_self(const Scenario& sc) {
    auto lim = max_tweezer_force(sc.v_fixed, sc.traps.a.width).t_lim(sc.x_B - sc.x_A);
    if (!lim) throw std::runtime_error("tweezer depth gives no finite transfer-time bound");
    return *lim;
}

DeterministicProblem make_det_problem(const Scenario& sc, double nu_tf, bool optimize_tf) {
    DeterministicProblem prob;
    prob.traps = sc.traps;
    prob.weights = sc.weights;
    prob.weights.nu_tf = nu_tf;
    prob.x0 = sc.x_A;
    prob.p0 = 0.0;
    prob.x_B = sc.x_B;
    prob.v_fixed = sc.v_fixed;
    prob.n_nodes = sc.n_nodes;
    prob.optimize_tf = optimize_tf;
    return prob;
}

/// Final time for the ensemble tiers: configured value, or the smallest
/// converged optimum of the single-trajectory problem.
struct TfChoice {
    double t_f = 0.0;
    std::optional<DeterministicSolution> solution;
};

TfChoice determine_tf(const Scenario& sc) {
    if (sc.t_f > 0.0) {
        DeterministicProblem prob = make_det_problem(sc, 0.0, false);
        ControlSignal guess = initial_guess(prob, sc.t_f);
        TfChoice choice;
        choice.solution = solve_deterministic(prob, guess);
        choice.t_f = sc.t_f;
        return choice;
    }
    double nu_tf = sc.weights.nu_tf > 0.0 ? sc.weights.nu_tf : 1e-2;
    DeterministicProblem prob = make_det_problem(sc, nu_tf, true);
    double tl = t_lim_self(sc);
    TfChoice choice;
    for (double seed : {1.1, 1.5, 2.0}) {
        DeterministicSolution s = solve_deterministic(prob, initial_guess(prob, seed * tl));
        if (!s.converged) continue;
        if (!choice.solution || s.control.t_f() < choice.t_f) {
            choice.t_f = s.control.t_f();
            choice.solution = std::move(s);
        }
    }
    if (!choice.solution) throw std::runtime_error("no converged single-trajectory optimum found");
    return choice;
}

EnsembleProblem make_ensemble_problem(const Context& ctx, bool quantum) {
    const Scenario& sc = ctx.sc;
    EnsembleProblem ep;
    ep.traps = sc.traps;
    ep.weights = sc.weights;
    ep.noise = sc.noise;
    ep.f0 = thermal_initial_field(sc.traps.a, sc.kT_init, sc.grid);
    ep.target = target_field(sc.x_B, sc.target_w_x, sc.target_w_p, sc.grid);
    ep.x_B = sc.x_B;
    ep.box = sc.box;
    ep.evolution = sc.evolution;
    ep.epsilon = quantum ? sc.epsilon : 0.0;
    ep.optimize_v = true;
    ep.v_min = sc.v_min;
    ep.v_max = sc.v_max;
    ep.tolerance = sc.solver_tolerance;
    ep.max_iterations = sc.solver_max_iterations;
    return ep;
}

ControlSignal ensemble_initial_control(const TfChoice& tf, double v_fixed) {
    ControlSignal c = tf.solution->control;
    for (double& v : c.v) v = v_fixed;
    return c;
}

void write_control_csv(const Context& ctx, RunManifest& manifest, const ControlSignal& c) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(c.nodes());
    for (std::size_t i = 0; i < c.nodes(); ++i)
        rows.push_back({format_number(c.times[i]), format_number(c.u[i]),
                        format_number(ctx.units.energy_to_mK(c.v[i]))});
    write_csv(ctx.out + "/control.csv", "t_us,u_um,v_mK", rows);
    manifest.add_file("control.csv");
}

void write_temperature_csv(const Context& ctx, RunManifest& manifest,
                           const std::vector<std::pair<double, double>>& trace) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(trace.size());
    for (const auto& [t, temp] : trace)
        rows.push_back({format_number(t), format_number(ctx.units.energy_to_mK(temp))});
    write_csv(ctx.out + "/temperature_trace.csv", "t_us,T_mK", rows);
    manifest.add_file("temperature_trace.csv");
}

void write_snapshots(const Context& ctx, const Options& opt, RunManifest& manifest,
                     const EvolutionRecord& record) {
    int n = static_cast<int>(record.checkpoints.size());
    int stride = opt.snapshot_stride > 0 ? opt.snapshot_stride : std::max(1, (n - 1) / 4);
    for (int k = 0; k < n; k += stride) {
        char name[64];
        std::snprintf(name, sizeof name, "snapshot_%04d.phsf", k);
        write_field(fs::path(ctx.out) / name, record.checkpoints[k]);
        manifest.add_file(name);
        if (opt.plots) {
            char img[64];
            std::snprintf(img, sizeof img, "snapshot_%04d.pgm", k);
            write_field_pgm(record.checkpoints[k], ctx.out + "/" + img);
            manifest.add_file(img);
        }
    }
    if ((n - 1) % stride != 0) {
        char name[64];
        std::snprintf(name, sizeof name, "snapshot_%04d.phsf", n - 1);
        write_field(fs::path(ctx.out) / name, record.checkpoints[n - 1]);
        manifest.add_file(name);
    }
}

OptimizationReport base_report(const Context& ctx, double wall_s) {
    OptimizationReport rep;
    rep.config_echo = config_to_json(ctx.cfg);
    rep.wall_time_s = wall_s;
    return rep;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

int cmd_trajectory(const Options& opt) {
    Context ctx(opt, nullptr);
    Timer timer;
    RunManifest manifest(ctx.out);
    manifest.set_config_echo(config_to_json(ctx.cfg));

    double tl = t_lim_self(ctx.sc);
    TfChoice primary = determine_tf(ctx.sc);

    // Final-time weight sweep over three decades, warm-started from the
    // previous optimum to stay on one solution branch.
    std::vector<std::vector<std::string>> sweep_rows;
    ControlSignal warm = primary.solution->control;
    std::vector<double> nu_values;
    for (int d = 0; d <= 9; ++d) nu_values.push_back(1e-3 * std::pow(10.0, d / 3.0));
    for (double nu : nu_values) {
        DeterministicProblem prob = make_det_problem(ctx.sc, nu, true);
        DeterministicSolution s = solve_deterministic(prob, warm);
        if (s.converged) warm = s.control;
        sweep_rows.push_back({format_number(nu), format_number(s.control.t_f()),
                              format_number(s.cost.total), format_number(s.cost.terminal),
                              format_number(s.cost.control), format_number(s.cost.time)});
    }
    write_csv(ctx.out + "/nu_tf_sweep.csv", "nu_tf,t_f_us,J_total,J_terminal,J_control,J_time",
              sweep_rows);
    manifest.add_file("nu_tf_sweep.csv");

    write_control_csv(ctx, manifest, primary.solution->control);

    OptimizationReport rep = base_report(ctx, timer.seconds());
    rep.cost_history = primary.solution->cost_history;
    rep.final_control = primary.solution->control;
    rep.converged = primary.solution->converged;
    rep.write(ctx.out + "/report.json");
    manifest.add_file("report.json");
    manifest.set_extra("t_lim_us", tl);
    manifest.set_extra("t_f_us", primary.t_f);
    manifest.write();

    std::cout << json{{"t_f_us", primary.t_f},
                      {"t_lim_us", tl},
                      {"converged", primary.solution->converged}}
                     .dump()
              << "\n";
    return primary.solution->converged ? 0 : 2;
}

int run_ensemble_like(const Options& opt, bool quantum) {
    Context ctx(opt, quantum ? "quantum" : "classical");
    Timer timer;
    RunManifest manifest(ctx.out);
    manifest.set_config_echo(config_to_json(ctx.cfg));

    TfChoice tf = determine_tf(ctx.sc);
    EnsembleProblem ep = make_ensemble_problem(ctx, quantum);
    ControlSignal init = ensemble_initial_control(tf, ctx.sc.v_fixed);
    EnsembleSolution sol =
        optimize_ensemble(ep, init, quantum ? EnsembleTier::Quantum : EnsembleTier::Classical);

    write_control_csv(ctx, manifest, sol.control);
    write_temperature_csv(ctx, manifest, temperature_trace(sol.forward, ctx.sc.traps, sol.control));
    write_snapshots(ctx, opt, manifest, sol.forward);

    OptimizationReport rep = base_report(ctx, timer.seconds());
    rep.cost_history = sol.cost_history;
    rep.fidelity = sol.fidelity;
    rep.final_control = sol.control;
    rep.temperature_trace = temperature_trace(sol.forward, ctx.sc.traps, sol.control);
    rep.converged = sol.converged;
    rep.write(ctx.out + "/report.json");
    manifest.add_file("report.json");
    manifest.set_extra("fidelity", sol.fidelity);
    if (quantum) {
        const auto& vals = sol.forward.terminal().values;
        double mn = *std::min_element(vals.begin(), vals.end());
        double mx = *std::max_element(vals.begin(), vals.end());
        manifest.set_extra("wigner_min_over_max", mx > 0.0 ? mn / mx : 0.0);
    }
    manifest.write();

    std::cout << json{{"fidelity", sol.fidelity},
                      {"t_f_us", tf.t_f},
                      {"converged", sol.converged}}
                     .dump()
              << "\n";
    return sol.converged ? 0 : 2;
}

int cmd_bath_sweep(const Options& opt) {
    Context ctx(opt, "classical");
    Timer timer;
    RunManifest manifest(ctx.out);
    manifest.set_config_echo(config_to_json(ctx.cfg));

    TfChoice tf = determine_tf(ctx.sc);
    EnsembleProblem ep = make_ensemble_problem(ctx, false);
    EnsembleSolution sol =
        optimize_ensemble(ep, ensemble_initial_control(tf, ctx.sc.v_fixed), EnsembleTier::Classical);

    std::vector<double> temps_mK{0.1, 1.0, 10.0, 20.0};
    std::vector<double> fids(temps_mK.size());
    parallel_for(opt.jobs, static_cast<int>(temps_mK.size()), [&](int i) {
        EnsembleProblem sweep = ep;
        sweep.noise = noise_coefficients(ctx.sc.noise.gamma,
                                         ctx.units.temperature_from_mK(temps_mK[i]),
                                         ctx.units.epsilon());
        PerturbationSpec nothing;
        nothing.amplitude = 0.0;
        fids[i] = perturb_and_evaluate(sweep, sol.control, nothing).fidelity;
    });

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < temps_mK.size(); ++i)
        rows.push_back({format_number(temps_mK[i]), format_number(fids[i])});
    write_csv(ctx.out + "/bath_sweep.csv", "T_th_mK,fidelity", rows);
    manifest.add_file("bath_sweep.csv");

    write_control_csv(ctx, manifest, sol.control);
    OptimizationReport rep = base_report(ctx, timer.seconds());
    rep.cost_history = sol.cost_history;
    rep.fidelity = sol.fidelity;
    rep.final_control = sol.control;
    rep.converged = sol.converged;
    rep.write(ctx.out + "/report.json");
    manifest.add_file("report.json");
    manifest.write();

    json out{{"T_th_mK", temps_mK}, {"fidelity", fids}, {"converged", sol.converged}};
    std::cout << out.dump() << "\n";
    return sol.converged ? 0 : 2;
}

int cmd_temp_trace(const Options& opt) {
    Context ctx(opt, "classical");
    Timer timer;
    RunManifest manifest(ctx.out);
    manifest.set_config_echo(config_to_json(ctx.cfg));

    TfChoice tf = determine_tf(ctx.sc);
    EnsembleProblem ep = make_ensemble_problem(ctx, false);
    EnsembleSolution sol =
        optimize_ensemble(ep, ensemble_initial_control(tf, ctx.sc.v_fixed), EnsembleTier::Classical);
    write_temperature_csv(ctx, manifest, temperature_trace(sol.forward, ctx.sc.traps, sol.control));

    // Longer transfers heat less; report the final temperature across a
    // transfer-time sweep.
    std::vector<double> tf_sweep{9.0, 12.0, 20.0, 35.0, 50.0};
    std::vector<double> final_T(tf_sweep.size());
    parallel_for(opt.jobs, static_cast<int>(tf_sweep.size()), [&](int i) {
        DeterministicProblem dp = make_det_problem(ctx.sc, 0.0, false);
        DeterministicSolution ds = solve_deterministic(dp, initial_guess(dp, tf_sweep[i]));
        ControlSignal init = ds.control;
        for (double& v : init.v) v = ctx.sc.v_fixed;
        EnsembleSolution s = optimize_ensemble(ep, init, EnsembleTier::Classical);
        auto trace = temperature_trace(s.forward, ctx.sc.traps, s.control);
        final_T[i] = trace.back().second;
    });
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < tf_sweep.size(); ++i)
        rows.push_back(
            {format_number(tf_sweep[i]), format_number(ctx.units.energy_to_mK(final_T[i]))});
    write_csv(ctx.out + "/final_temperature_vs_tf.csv", "t_f_us,T_mK", rows);
    manifest.add_file("final_temperature_vs_tf.csv");

    write_control_csv(ctx, manifest, sol.control);
    OptimizationReport rep = base_report(ctx, timer.seconds());
    rep.cost_history = sol.cost_history;
    rep.fidelity = sol.fidelity;
    rep.final_control = sol.control;
    rep.temperature_trace = temperature_trace(sol.forward, ctx.sc.traps, sol.control);
    rep.converged = sol.converged;
    rep.write(ctx.out + "/report.json");
    manifest.add_file("report.json");
    manifest.write();

    std::cout << json{{"final_T_mK",
                       ctx.units.energy_to_mK(rep.temperature_trace.back().second)},
                      {"converged", sol.converged}}
                     .dump()
              << "\n";
    return sol.converged ? 0 : 2;
}

int cmd_perturb(const Options& opt) {
    Context ctx(opt, "classical");
    Timer timer;
    RunManifest manifest(ctx.out);
    manifest.set_config_echo(config_to_json(ctx.cfg));

    TfChoice tf = determine_tf(ctx.sc);
    EnsembleProblem ep = make_ensemble_problem(ctx, false);
    EnsembleSolution sol =
        optimize_ensemble(ep, ensemble_initial_control(tf, ctx.sc.v_fixed), EnsembleTier::Classical);

    double freq = opt.perturb_frequency > 0.0 ? opt.perturb_frequency : 2.0 / tf.t_f;
    struct Case {
        std::string kind;
        PerturbationSpec spec;
    };
    std::vector<Case> cases;
    for (int i = -4; i <= 4; ++i) {
        PerturbationSpec s;
        s.kind = PerturbationSpec::Kind::LinearRamp;
        s.amplitude = 0.25 * i;  // um
        cases.push_back({"linear_ramp", s});
    }
    for (int i = 0; i <= 8; ++i) {
        PerturbationSpec s;
        s.kind = PerturbationSpec::Kind::Sinusoid;
        s.amplitude = 0.125 * i;  // um
        s.frequency = freq;
        cases.push_back({"sinusoid", s});
    }
    for (int i = -4; i <= 4; ++i) {
        PerturbationSpec s;
        s.kind = PerturbationSpec::Kind::DepthOffset;
        s.amplitude = ctx.units.energy_from_mK(1.0 * i);
        cases.push_back({"depth_offset", s});
    }

    std::vector<double> fids(cases.size());
    parallel_for(opt.jobs, static_cast<int>(cases.size()), [&](int i) {
        fids[i] = perturb_and_evaluate(ep, sol.control, cases[i].spec).fidelity;
    });

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        double amp = cases[i].spec.amplitude;
        if (cases[i].spec.kind == PerturbationSpec::Kind::DepthOffset)
            amp = ctx.units.energy_to_mK(amp);
        rows.push_back({cases[i].kind, format_number(amp), format_number(fids[i])});
    }
    write_csv(ctx.out + "/perturb.csv", "kind,amplitude,fidelity", rows);
    manifest.add_file("perturb.csv");

    write_control_csv(ctx, manifest, sol.control);
    OptimizationReport rep = base_report(ctx, timer.seconds());
    rep.cost_history = sol.cost_history;
    rep.fidelity = sol.fidelity;
    rep.final_control = sol.control;
    rep.converged = sol.converged;
    rep.write(ctx.out + "/report.json");
    manifest.add_file("report.json");
    manifest.write();

    std::cout << json{{"base_fidelity", sol.fidelity}, {"converged", sol.converged}}.dump()
              << "\n";
    return sol.converged ? 0 : 2;
}

int cmd_limits(const Options& opt) {
    Context ctx(opt, nullptr);
    RunManifest manifest(ctx.out);
    manifest.set_config_echo(config_to_json(ctx.cfg));

    TweezerForceLimit lim = max_tweezer_force(ctx.sc.v_fixed, ctx.sc.traps.a.width);
    double tl = t_lim_self(ctx.sc);
    EpsilonEstimate eps = estimate_epsilon(ctx.units, ctx.sc.traps.b);

    json out{
        {"p_td_SI", ctx.units.momentum_to_SI(ctx.sc.p_td)},
        {"p_td_internal", ctx.sc.p_td},
        {"f_max_internal", lim.f_max},
        {"t_lim_us", tl},
        {"epsilon_estimate", eps.epsilon},
        {"trap_omega_per_us", eps.omega},
    };
    std::ofstream f(ctx.out + "/limits.json", std::ios::binary);
    f << out.dump(2) << "\n";
    f.close();
    manifest.add_file("limits.json");
    manifest.write();
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_validate(const Options& opt) {
    if (!opt.config_path.empty()) {
        Context ctx(opt, nullptr);  // config sanity only
        (void)ctx;
    }
    auto results = run_invariant_suite();
    bool all = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
        all = all && r.passed;
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal transport of atoms between optical tweezers"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config_path, "Path to a TOML/JSON experiment config");
    app.add_option("--out", opt.out_override, "Output directory (overrides config)");
    app.add_option("--jobs", opt.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_flag("--plots", opt.plots, "Also write PGM heatmaps of snapshots");
    app.add_option("--snapshot-stride", opt.snapshot_stride,
                   "Checkpoint stride between written snapshots");
    app.add_option("--perturb-frequency", opt.perturb_frequency,
                   "Sinusoidal perturbation frequency (cycles/us)");

    auto* trajectory = app.add_subcommand("trajectory", "Single-trajectory optimal control");
    auto* ensemble = app.add_subcommand("ensemble", "Classical ensemble optimal control");
    auto* bath = app.add_subcommand("bath-sweep", "Frozen-control bath-temperature sweep");
    auto* temp = app.add_subcommand("temp-trace", "Ensemble heating diagnostics");
    auto* perturb = app.add_subcommand("perturb", "Perturbation-robustness sweep");
    auto* wigner = app.add_subcommand("wigner", "Quantum (Wigner) ensemble optimal control");
    auto* limits = app.add_subcommand("limits", "Force/time/momentum limit diagnostics");
    auto* validate = app.add_subcommand("validate", "Run the numerical invariant suite");

    CLI11_PARSE(app, argc, argv);

    auto need_config = [&]() {
        if (opt.config_path.empty()) throw ConfigError("--config is required");
    };

    try {
        if (app.got_subcommand(validate)) return cmd_validate(opt);
        need_config();
        if (app.got_subcommand(trajectory)) return cmd_trajectory(opt);
        if (app.got_subcommand(ensemble)) return run_ensemble_like(opt, false);
        if (app.got_subcommand(wigner)) return run_ensemble_like(opt, true);
        if (app.got_subcommand(bath)) return cmd_bath_sweep(opt);
        if (app.got_subcommand(temp)) return cmd_temp_trace(opt);
        if (app.got_subcommand(perturb)) return cmd_perturb(opt);
        if (app.got_subcommand(limits)) return cmd_limits(opt);
    } catch (const ConfigError& e) {
        emit_error("config", e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error("runtime", e.what());
        return 1;
    }
    return 1;
}
