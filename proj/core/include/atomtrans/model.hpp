#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "atomtrans/units.hpp"

namespace atomtrans {

/// One Gaussian trap: U(x) = depth * exp(-((x-center)/width)^2).
/// Attractive wells carry negative depth.
struct TrapSpec {
    double center = 0.0;   // internal length
    double depth = 0.0;    // internal energy, < 0 for a well
    double width = 1.0;    // internal length

    void validate() const {
        if (!(width > 0.0)) throw std::invalid_argument("TrapSpec: width must be positive");
    }
};

/// The two static traps framing the transport.
struct TrapPair {
    TrapSpec a;  // initial trap, at x_A
    TrapSpec b;  // target trap, at x_B
};

/// Sampled control waveforms u(t) (tweezer center) and v(t) (tweezer depth)
/// on a uniform time grid spanning [0, t_f].
struct ControlSignal {
    std::vector<double> times;
    std::vector<double> u;
    std::vector<double> v;

    double t_f() const { return times.empty() ? 0.0 : times.back(); }
    std::size_t nodes() const { return times.size(); }

    void validate() const;

    /// Linear interpolation, clamped to the end values outside [0, t_f].
    double u_at(double t) const;
    double v_at(double t) const;
};

/// Uniform grid constructor for control signals.
ControlSignal make_control(double t_f, std::size_t n_nodes, double u0, double v0);

/// Resample a control onto a new uniform grid over [0, new_tf], stretching
/// the waveform in time (used when the final time is re-optimized).
ControlSignal remesh_control(const ControlSignal& c, double new_tf, std::size_t n_nodes);

/// Weights of the cost functional.
struct CostWeights {
    double gamma_u = 1e-3;  // |u|^2
    double gamma_v = 0.0;   // |v|^2
    double nu_u = 0.1;      // |du/dt|^2
    double nu_v = 0.0;      // |dv/dt|^2
    double nu_x = 100.0;    // terminal position error
    double nu_p = 100.0;    // terminal momentum error
    double nu_tf = 0.0;     // final-time cost

    void validate() const {
        for (double w : {gamma_u, gamma_v, nu_u, nu_v, nu_x, nu_p, nu_tf})
            if (w < 0.0) throw std::invalid_argument("CostWeights: weights must be nonnegative");
    }
};

/// Friction/diffusion coefficients of the Fokker-Planck terms.
struct NoiseParams {
    double gamma = 0.0;             // friction rate, 1/time
    double bath_temperature = 0.0;  // k_B * T_th in internal energy units
    double d_p = 0.0;               // momentum diffusion
    double d_x = 0.0;               // spatial diffusion
};

/// D_p = gamma * m * k_B * T_th (m = 1 internally). D_x follows from the
/// equality branch of the uncertainty bound D_p * D_x >= (gamma * hbar / 2)^2,
/// with hbar expressed in internal units (the `epsilon` argument). The
/// dimensionless form D_p D_x >= gamma^2 / 4 quoted in the literature refers
/// to units where hbar = 1.
NoiseParams noise_coefficients(double gamma, double bath_kT, double epsilon);

double gaussian_potential(double x, double center, double depth, double width);

/// Total potential U = U_tweezer(u, v) + U_A + U_B and its derivatives,
/// all evaluated analytically.
struct PotentialDerivs {
    double U = 0.0;
    double Ux = 0.0;    // dU/dx
    double Uxx = 0.0;   // d2U/dx2
    double Uxu = 0.0;   // d2U/dxdu  (tweezer term only; statics are u-independent)
    double Uxv = 0.0;   // d2U/dxdv  (tweezer term only)
};

PotentialDerivs total_potential_derivs(double x, double u, double v, const TrapPair& traps);

/// Potential of the static traps alone.
double static_potential(double x, const TrapPair& traps);
double static_force(double x, const TrapPair& traps);  // -dU/dx of the statics

/// Maximum force a Gaussian tweezer of depth v and width sigma can exert,
/// the corresponding acceleration (m = 1 internally), and the idealized
/// bang-bang transfer time over a distance d.
struct TweezerForceLimit {
    double f_max = 0.0;      // max |dU_C/dx| = sqrt(2) |v| / sigma * exp(-1/2)
    double a_max = 0.0;
    double argmax_offset = 0.0;  // |x - u| where the max is attained
    std::optional<double> t_lim(double distance) const {
        if (!(a_max > 0.0)) return std::nullopt;
        return 2.0 * std::sqrt(0.5 * distance / a_max);
    }
};

TweezerForceLimit max_tweezer_force(double v, double width);

/// Feed-forward ("carry") control guess for transport from trap A to x_B.
/// The atom is assumed to ride a quintic reference trajectory with zero
/// velocity and acceleration at both ends; at each node the tweezer is
/// offset from the reference so its force balances the required acceleration
/// plus the static-trap force, with the offset capped at width / sqrt(2)
/// where the tweezer force peaks. The depth ramps between v_edge (at the
/// ends) and v_peak over the first and last ramp_fraction of the horizon
/// with smoothstep edges. A strong seed for the ensemble optimizers when the
/// horizon is near the force-limited minimum.
ControlSignal feedforward_guess(const TrapPair& traps, double x_B, double t_f,
                                double v_peak, double v_edge, double ramp_fraction,
                                std::size_t n_nodes);

}  // namespace atomtrans
