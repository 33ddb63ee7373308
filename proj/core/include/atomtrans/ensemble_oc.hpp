#pragma once

#include <utility>
#include <vector>

#include "atomtrans/evolution.hpp"
#include "atomtrans/trajectory_oc.hpp"

namespace atomtrans {

/// Rectangular phase-space acceptance region centered on the target trap.
struct AcceptanceBox {
    double x_half_width = 1.0;  // internal length
    double p_edge = 0.0;        // internal momentum, > 0

    void validate() const {
        if (!(x_half_width > 0.0) || !(p_edge > 0.0))
            throw std::invalid_argument("AcceptanceBox: extents must be positive");
    }
};

/// Mass fraction of the field inside the box centered at (target_center, 0),
/// with boundary cells weighted by their overlap fraction.
double fidelity(const PhaseField& field, const AcceptanceBox& box, double target_center);

/// Right-hand sides of the control stationarity equations, sampled on the
/// checkpoint time grid.
struct GradientSeries {
    std::vector<double> times;
    std::vector<double> rhs_u;
    std::vector<double> rhs_v;
};

GradientSeries control_gradient_classical(const EvolutionRecord& forward,
                                          const EvolutionRecord& adjoint,
                                          const ControlSignal& control, const TrapPair& traps,
                                          PhaseSpaceOps& ops);

/// Quantum version: the mixed-derivative multiplier is replaced by the
/// pseudodifferential operator built from the generator dU/du (resp. dU/dv).
GradientSeries control_gradient_quantum(const EvolutionRecord& forward,
                                        const EvolutionRecord& adjoint,
                                        const ControlSignal& control, const TrapPair& traps,
                                        PhaseSpaceOps& ops, double epsilon);

/// Running control cost k(u, v) (no terminal or time terms).
double control_cost(const ControlSignal& control, const CostWeights& weights);

enum class EnsembleTier { Classical, Quantum };

struct EnsembleProblem {
    TrapPair traps;
    CostWeights weights;
    NoiseParams noise;
    PhaseField f0;      // initial distribution / Wigner field
    PhaseField target;  // terminal target profile (adjoint final value)
    double x_B = 0.0;
    AcceptanceBox box;
    EvolutionSettings evolution;
    double epsilon = 0.0;  // quantum tier only

    bool optimize_v = true;
    double v_min = 0.0, v_max = 0.0;  // clamp bounds when optimizing v

    double relaxation = 0.5;
    double tolerance = 1e-4;  // relative |dJ|
    int max_iterations = 30;
    int max_backtracks = 5;

    void validate() const;
};

struct EnsembleSolution {
    ControlSignal control;
    double fidelity = 0.0;
    double objective = 0.0;           // J = Phi' + k
    double terminal_objective = 0.0;  // Phi' = -<target, f(t_f)>
    std::vector<double> cost_history;
    EvolutionRecord forward;
    bool converged = false;
    int iterations = 0;
};

/// Forward-backward sweep on the phase-space optimality system: forward
/// solve, adjoint solve from the target profile, gradient assembly, Neumann
/// BVP control update, relaxed step with backtracking on J.
EnsembleSolution optimize_ensemble(const EnsembleProblem& prob, const ControlSignal& initial,
                                   EnsembleTier tier);

/// Temperature at each checkpoint: <p^2/2m + U - U_min>/k_B with the full
/// controlled potential at the checkpoint time.
std::vector<std::pair<double, double>> temperature_trace(const EvolutionRecord& record,
                                                         const TrapPair& traps,
                                                         const ControlSignal& control);

struct PerturbationSpec {
    enum class Kind { LinearRamp, Sinusoid, DepthOffset };
    Kind kind = Kind::LinearRamp;
    double amplitude = 0.0;  // length for u-perturbations, energy for depth
    double frequency = 0.0;  // cycles per unit time, sinusoid only
};

ControlSignal apply_perturbation(const ControlSignal& base, const PerturbationSpec& spec);

struct PerturbationResult {
    double fidelity = 0.0;
    ControlSignal control;
};

/// Re-run the forward solve with a perturbed control (no re-optimization).
PerturbationResult perturb_and_evaluate(const EnsembleProblem& prob, const ControlSignal& base,
                                        const PerturbationSpec& spec);

}  // namespace atomtrans
