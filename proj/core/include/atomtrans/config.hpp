#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "atomtrans/ensemble_oc.hpp"
#include "atomtrans/model.hpp"
#include "atomtrans/units.hpp"

namespace atomtrans {

/// Raised by config parsing/validation; message lists the offending keys.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Experiment description in experimentalist units (micrometers,
/// microseconds, millikelvin, atomic mass units). Converted to internal
/// units by build_scenario.
struct ExperimentConfig {
    struct SpeciesCfg {
        std::string name = "Sr88";
        double mass_amu = 87.9056121;
    } species;

    struct TrapsCfg {
        double x_A_um = 0.0;
        double x_B_um = 10.0;
        double depth_mK = 1.0;  // static well depth (magnitude)
        double sigma_um = 1.5;
    } traps;

    struct TweezerCfg {
        double v_fixed_mK = -1.5;
        double v_min_mK = -20.0;
        double v_max_mK = 0.0;
    } tweezer;

    struct WeightsCfg {
        double gamma_u = 1e-3;
        double gamma_v = 1e-3;
        double nu_u = 0.1;
        double nu_v = 0.1;
        double nu_x = 100.0;
        double nu_p = 100.0;
        double nu_tf = 0.0;
    } weights;

    struct NoiseCfg {
        double gamma_per_us = 1e-2;
        double T_th_mK = 0.1;
    } noise;

    struct GridCfg {
        int n_x = 256;
        int n_p = 256;
        double x_min_um = -5.0;
        double x_max_um = 15.0;
        double p_window_ptd = 4.0;  // half-window in units of p_td
        int n_steps = 2000;
        int store_stride = 1;
        std::size_t n_nodes = 2001;  // deterministic control grid
        // Allowed fractional mass loss before a run aborts. Heating sweeps
        // legitimately push atoms off the grid, so the default is permissive.
        double mass_drift_limit = 0.5;
    } grid;

    struct TargetCfg {
        double w_x_um = 0.5;
        double w_p_ptd = 0.5;
        double box_x_half_um = 1.0;
    } target;

    struct SolverCfg {
        double tolerance = 1e-4;  // ensemble stop: relative cost decrease
        int max_iterations = 30;  // ensemble iteration cap
    } solver;

    std::string tier = "deterministic";  // deterministic | classical | quantum
    double epsilon = 0.0;                // quantum tier; 0 = estimate from trap
    double t_f_us = 0.0;                 // 0 = determine from trajectory solve
    double T_init_mK = 0.1;
    std::string output_dir = "out";

    void validate() const;
};

/// Parse a config file; JSON and a flat TOML subset (sections, scalar keys)
/// are both accepted. Unknown keys are rejected.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Everything downstream solvers need, in internal units.
struct Scenario {
    Species species;
    TrapPair traps;
    CostWeights weights;
    NoiseParams noise;
    PhaseGrid grid;
    EvolutionSettings evolution;
    double x_A = 0.0, x_B = 0.0;
    double v_fixed = 0.0, v_min = 0.0, v_max = 0.0;
    double kT_init = 0.0;
    double p_td = 0.0;
    AcceptanceBox box;
    double target_w_x = 0.0, target_w_p = 0.0;
    double epsilon = 0.0;
    double t_f = 0.0;  // 0 = auto
    std::size_t n_nodes = 2001;
    double solver_tolerance = 1e-4;
    int solver_max_iterations = 30;
    std::string tier;

    UnitSystem units() const { return make_unit_system(species); }
};

Scenario build_scenario(const ExperimentConfig& cfg);

}  // namespace atomtrans
