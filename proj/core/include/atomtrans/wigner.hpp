#pragma once

#include <optional>

#include "atomtrans/evolution.hpp"
#include "atomtrans/units.hpp"

namespace atomtrans {

struct WignerConfig {
    double epsilon = 0.0;  // dimensionless hbar; > 0 required
    PhaseGrid grid;
    NoiseParams noise;

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("WignerConfig: epsilon must be > 0");
        grid.validate();
    }
};

/// Quantum phase-space evolution: same Strang composition as the classical
/// solver with the force kick replaced by the exact pseudodifferential
/// potential substep.
EvolutionRecord wigner_forward(const PhaseField& f0, const ControlSignal& control,
                               const TrapPair& traps, const WignerConfig& cfg,
                               const EvolutionSettings& settings);
EvolutionRecord wigner_adjoint(const PhaseField& h_T, const ControlSignal& control,
                               const TrapPair& traps, const WignerConfig& cfg,
                               const EvolutionSettings& settings);

/// Diagnostic estimate of the quantumness parameter epsilon = hbar/(E0 t0),
/// with t0 = 1/omega from the harmonic expansion of the trap and E0 the
/// characteristic energy (the trap depth unless overridden).
struct EpsilonEstimate {
    double epsilon = 0.0;
    double omega = 0.0;                  // internal 1/time
    double characteristic_energy = 0.0;  // internal energy
    double time_scale = 0.0;             // internal time
};

EpsilonEstimate estimate_epsilon(const UnitSystem& units, const TrapSpec& trap,
                                 std::optional<double> characteristic_energy = std::nullopt);

}  // namespace atomtrans
