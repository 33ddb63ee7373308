#pragma once

#include <cstdint>
#include <memory>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace atomtrans {

/// Uniform rectangular grid on the (x, p) phase plane.
struct PhaseGrid {
    double x_min = 0.0, x_max = 1.0;
    double p_min = -1.0, p_max = 1.0;
    int n_x = 0, n_p = 0;

    double dx() const { return (x_max - x_min) / (n_x - 1); }
    double dp() const { return (p_max - p_min) / (n_p - 1); }
    double x(int i) const { return x_min + i * dx(); }
    double p(int k) const { return p_min + k * dp(); }
    std::size_t size() const { return static_cast<std::size_t>(n_x) * n_p; }

    void validate() const {
        if (n_x < 8 || n_p < 8) throw std::invalid_argument("PhaseGrid: need at least 8 points per axis");
        if (!(x_max > x_min) || !(p_max > p_min))
            throw std::invalid_argument("PhaseGrid: empty domain");
    }

    bool operator==(const PhaseGrid&) const = default;
};

enum class FieldKind : std::uint8_t { Distribution = 0, Adjoint = 1, Wigner = 2 };

/// A scalar field on a PhaseGrid, stored row-major with x as the slow index:
/// values[i * n_p + k] = f(x_i, p_k).
struct PhaseField {
    PhaseGrid grid;
    double time = 0.0;
    FieldKind kind = FieldKind::Distribution;
    std::vector<double> values;

    PhaseField() = default;
    PhaseField(const PhaseGrid& g, FieldKind k = FieldKind::Distribution)
        : grid(g), kind(k), values(g.size(), 0.0) {
        g.validate();
    }

    double& at(int i, int k) { return values[static_cast<std::size_t>(i) * grid.n_p + k]; }
    double at(int i, int k) const { return values[static_cast<std::size_t>(i) * grid.n_p + k]; }
};

/// Populate a field by sampling f(x, p).
PhaseField sample_field(const PhaseGrid& grid, FieldKind kind,
                        const std::function<double(double, double)>& f);

struct Moments {
    double mass = 0.0;
    double mean_x = 0.0;
    double mean_p = 0.0;
    double kinetic_energy = 0.0;     // <p^2 / 2m>
    double potential_energy = 0.0;   // <U>, relative to nothing
    double temperature = 0.0;        // k_B T in internal energy units
};

/// Trapezoidal moments. If a potential profile is given (sampled on the
/// x-axis), the temperature is <p^2/2m + U - U_min>/k_B with U_min the
/// potential minimum within 3 trap widths of the ensemble mean; otherwise
/// temperature is twice the kinetic energy (1-D equipartition).
Moments moments(const PhaseField& field,
                std::span<const double> potential_on_x = {},
                double trap_width = 0.0);

/// Trapezoidal inner product of two fields on the same grid.
double overlap(const PhaseField& a, const PhaseField& b);

enum class StepDirection { Forward, Adjoint };

/// Reusable spectral/tridiagonal machinery for one grid. Operators applied
/// through the same workspace are exact transposes of each other in the
/// Forward/Adjoint directions, which is what makes the discrete optimization
/// gradients consistent.
class PhaseSpaceOps {
  public:
    explicit PhaseSpaceOps(const PhaseGrid& grid, double pad_factor = 1.25);

    const PhaseGrid& grid() const { return grid_; }

    /// Free streaming: each momentum row translates in x by p dt / m.
    void advect_x(PhaseField& f, double dt, StepDirection dir = StepDirection::Forward);

    /// Classical force kick: each position column translates in p by
    /// -dU/dx(x) dt. `force` holds dU/dx sampled on the x-axis.
    void kick_p_classical(PhaseField& f, std::span<const double> dUdx, double dt,
                          StepDirection dir = StepDirection::Forward);

    /// Quantum potential kick: exact substep of the Wigner pseudodifferential
    /// term, with the potential evaluated analytically at the shifted points
    /// x +- eps*eta/2.
    void kick_p_wigner(PhaseField& f, const std::function<double(double)>& U, double epsilon,
                       double dt, StepDirection dir = StepDirection::Forward);

    /// Friction and diffusion over dt: Crank-Nicolson in both axes with a
    /// conservative centered drift term and Dirichlet-zero boundaries. The
    /// Adjoint direction applies the exact matrix transpose.
    void friction_diffusion(PhaseField& f, double gamma, double d_p, double d_x, double dt,
                            StepDirection dir = StepDirection::Forward);

    /// Spectral d/dp of the field, column by column (padded).
    PhaseField derivative_p(const PhaseField& f);

    /// Instantaneous action of the Wigner potential operator built from an
    /// arbitrary generator g(x): (1/eps) Theta_g[f]. Reduces to
    /// g'(x) * df/dp in the classical limit.
    PhaseField apply_theta(const PhaseField& f, const std::function<double(double)>& g,
                           double epsilon);

  private:
    PhaseGrid grid_;
    class Impl;
    std::shared_ptr<Impl> impl_;
};

}  // namespace atomtrans
