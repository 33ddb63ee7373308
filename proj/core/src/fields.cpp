#include "atomtrans/fields.hpp"

#include <cmath>

namespace atomtrans {

PhaseField thermal_initial_field(const TrapSpec& trap, double kT, const PhaseGrid& grid) {
    trap.validate();
    if (!(kT > 0.0)) throw std::invalid_argument("thermal_initial_field: temperature must be > 0");
    // Harmonic curvature at the trap minimum (m = 1 internally).
    double omega_sq = -2.0 * trap.depth / (trap.width * trap.width);
    if (!(omega_sq > 0.0))
        throw std::invalid_argument("thermal_initial_field: trap is not confining");
    double var_x = kT / omega_sq;
    double var_p = kT;
    PhaseField f = sample_field(grid, FieldKind::Distribution, [&](double x, double p) {
        double rx = x - trap.center;
        return std::exp(-0.5 * rx * rx / var_x - 0.5 * p * p / var_p);
    });
    double mass = moments(f).mass;
    for (double& v : f.values) v /= mass;
    return f;
}

PhaseField target_field(double x_B, double w_x, double w_p, const PhaseGrid& grid) {
    if (!(w_x > 0.0) || !(w_p > 0.0))
        throw std::invalid_argument("target_field: widths must be positive");
    return sample_field(grid, FieldKind::Distribution, [&](double x, double p) {
        double rx = (x - x_B) / w_x;
        double rp = p / w_p;
        return std::exp(-rx * rx - rp * rp);
    });
}

}  // namespace atomtrans
