#pragma once

#include "atomtrans/model.hpp"
#include "atomtrans/phase_grid.hpp"

namespace atomtrans {

/// Thermal equilibrium distribution of a trapped ensemble at temperature
/// k_B T (internal energy units): Gaussian in (x, p) centered at the trap
/// minimum, with the position spread taken from the harmonic expansion of
/// the trap and sigma_p^2 = m k_B T. Normalized to unit mass on the grid.
PhaseField thermal_initial_field(const TrapSpec& trap, double kT, const PhaseGrid& grid);

/// Target weight function for the ensemble cost: unnormalized Gaussian with
/// peak value 1 at (x_B, 0) and 1/e half-widths (w_x, w_p).
PhaseField target_field(double x_B, double w_x, double w_p, const PhaseGrid& grid);

}  // namespace atomtrans
