#include "atomtrans/wigner.hpp"

#include <cmath>

namespace atomtrans {

EvolutionRecord wigner_forward(const PhaseField& f0, const ControlSignal& control,
                               const TrapPair& traps, const WignerConfig& cfg,
                               const EvolutionSettings& settings) {
    cfg.validate();
    EvolutionSettings s = settings;
    s.epsilon = cfg.epsilon;
    PhaseSpaceOps ops(cfg.grid);
    return evolve_forward(f0, control, traps, cfg.noise, s, ops);
}

EvolutionRecord wigner_adjoint(const PhaseField& h_T, const ControlSignal& control,
                               const TrapPair& traps, const WignerConfig& cfg,
                               const EvolutionSettings& settings) {
    cfg.validate();
    EvolutionSettings s = settings;
    s.epsilon = cfg.epsilon;
    PhaseSpaceOps ops(cfg.grid);
    return evolve_adjoint(h_T, control, traps, cfg.noise, s, ops);
}

EpsilonEstimate estimate_epsilon(const UnitSystem& units, const TrapSpec& trap,
                                 std::optional<double> characteristic_energy) {
    trap.validate();
    double omega_sq = -2.0 * trap.depth / (trap.width * trap.width);  // m = 1 internally
    if (!(omega_sq > 0.0))
        throw std::invalid_argument("estimate_epsilon: trap curvature is not confining");

    EpsilonEstimate est;
    est.omega = std::sqrt(omega_sq);
    est.time_scale = 1.0 / est.omega;
    est.characteristic_energy = characteristic_energy.value_or(std::abs(trap.depth));
    if (!(est.characteristic_energy > 0.0))
        throw std::invalid_argument("estimate_epsilon: characteristic energy must be positive");
    est.epsilon = units.epsilon() / (est.characteristic_energy * est.time_scale);
    return est;
}

}  // namespace atomtrans
