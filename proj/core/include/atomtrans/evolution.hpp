#pragma once

#include <vector>

#include "atomtrans/model.hpp"
#include "atomtrans/phase_grid.hpp"

namespace atomtrans {

/// Checkpointed history of one phase-space evolution, stored in increasing
/// time order for both forward and adjoint runs.
struct EvolutionRecord {
    std::vector<double> times;
    std::vector<PhaseField> checkpoints;
    std::vector<double> mass_trace;
    int store_stride = 1;
    double mass_drift = 0.0;

    const PhaseField& terminal() const { return checkpoints.back(); }
    const PhaseField& initial() const { return checkpoints.front(); }
};

struct EvolutionSettings {
    int n_steps = 2000;
    int store_stride = 1;          // must divide n_steps
    double mass_drift_limit = 1e-3;
    double epsilon = 0.0;          // > 0 selects the Wigner potential kick

    void validate() const;
};

/// Forward evolution of a distribution (or Wigner) field under the controlled
/// potential with friction/diffusion: Strang composition
/// [diffuse dt/2, kick dt/2, advect dt, kick dt/2, diffuse dt/2]
/// with the controls evaluated at the step midpoint. Throws if the relative
/// mass drift exceeds the configured limit (domain too small).
EvolutionRecord evolve_forward(const PhaseField& f0, const ControlSignal& control,
                               const TrapPair& traps, const NoiseParams& noise,
                               const EvolutionSettings& settings, PhaseSpaceOps& ops);

/// Backward evolution of the adjoint field from its final value h_T at t_f.
/// Each step applies the exact transposes of the forward substeps in reverse
/// order, so <f(t), h(t)> is conserved along matched runs.
EvolutionRecord evolve_adjoint(const PhaseField& h_T, const ControlSignal& control,
                               const TrapPair& traps, const NoiseParams& noise,
                               const EvolutionSettings& settings, PhaseSpaceOps& ops);

/// Convenience wrappers constructing their own operator workspace.
EvolutionRecord lfp_forward(const PhaseField& f0, const ControlSignal& control,
                            const TrapPair& traps, const NoiseParams& noise,
                            const EvolutionSettings& settings);
EvolutionRecord lfp_adjoint(const PhaseField& h_T, const ControlSignal& control,
                            const TrapPair& traps, const NoiseParams& noise,
                            const EvolutionSettings& settings);

}  // namespace atomtrans
