#pragma once

#include <vector>

#include "atomtrans/model.hpp"

namespace atomtrans {

/// Single-particle phase-space trajectory on the control's time grid.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> x;
    std::vector<double> p;
};

/// Adjoint (costate) trajectory; terminal values encode the terminal cost.
struct AdjointTrajectory {
    std::vector<double> times;
    std::vector<double> x_h;
    std::vector<double> p_h;
};

struct CostBreakdown {
    double terminal = 0.0;  // Phi
    double control = 0.0;   // k(u, v)
    double time = 0.0;      // nu_tf * t_f^2 / 2
    double total = 0.0;
};

struct DeterministicSolution {
    ControlSignal control;
    Trajectory trajectory;
    AdjointTrajectory adjoint;
    CostBreakdown cost;
    std::vector<double> cost_history;
    int iterations = 0;
    bool converged = false;
};

/// RK4 integration of xdot = p/m, pdot = -dU/dx on the control's time grid,
/// with the controls interpolated linearly between samples.
Trajectory integrate_forward(const ControlSignal& control, const TrapPair& traps,
                             double x0, double p0);

/// Backward RK4 of the costate equations along a stored trajectory, with
/// terminal values x_h(t_f) = -nu_x p(t_f), p_h(t_f) = nu_x (x_B - x(t_f)).
AdjointTrajectory integrate_adjoint(const ControlSignal& control, const Trajectory& traj,
                                    const CostWeights& weights, const TrapPair& traps,
                                    double x_B);

/// Solve nu * y'' - gamma * y = rhs on the uniform grid with homogeneous
/// Neumann conditions (second-order centered scheme, tridiagonal).
std::vector<double> neumann_bvp_solve(double nu, double gamma, const std::vector<double>& rhs,
                                      double dt);

struct ControlUpdate {
    std::vector<double> rhs_u;  // negated gradient density -x_h d2U/dxdu
    std::vector<double> rhs_v;
    std::vector<double> u;      // stationarity BVP solutions
    std::vector<double> v;
};

/// Negated gradient densities -x_h d2U/dxdu and -x_h d2U/dxdv, plus the
/// solutions of the stationarity BVPs nu y'' - gamma y = x_h d2U/dxd(u,v).
/// When update_v is false the v-equation is skipped and v passes through.
ControlUpdate control_update(const AdjointTrajectory& adjoint, const Trajectory& traj,
                             const ControlSignal& control, const CostWeights& weights,
                             const TrapPair& traps, bool update_v);

/// Trapezoidal evaluation of the cost functional.
CostBreakdown evaluate_cost(const ControlSignal& control, const Trajectory& traj,
                            const CostWeights& weights, double x_B);

/// Residual of the final-time stationarity condition; zero at an optimum.
double final_time_residual(const ControlSignal& control, const Trajectory& traj,
                           const CostWeights& weights, const TrapPair& traps, double x_B);

struct DeterministicProblem {
    TrapPair traps;
    CostWeights weights;
    double x0 = 0.0;   // initial position (trap A)
    double p0 = 0.0;
    double x_B = 0.0;  // target position
    double v_fixed = 0.0;
    std::size_t n_nodes = 2001;
    bool optimize_tf = true;

    // Solver knobs.
    double relaxation = 0.5;
    double tf_relaxation = 0.5;
    double tolerance = 1e-4;   // max |du| per sweep, internal length units
    int max_iterations = 400;
};

/// Smoothstep ramp from x0 to x_B with zero slope at both ends; the default
/// initial guess.
ControlSignal initial_guess(const DeterministicProblem& prob, double t_f);

/// Alternating forward/backward sweep with under-relaxation, a cost-decrease
/// safeguard, and an optional damped Newton update of t_f.
DeterministicSolution solve_deterministic(const DeterministicProblem& prob,
                                          const ControlSignal& guess);

}  // namespace atomtrans
