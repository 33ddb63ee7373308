#pragma once

#include <filesystem>

#include "atomtrans/phase_grid.hpp"

namespace atomtrans {

/// Binary snapshot format, little-endian:
///   magic "PHSF", version u32, n_x u32, n_p u32,
///   x_min f64, x_max f64, p_min f64, p_max f64, time f64, kind u8,
///   then n_x * n_p f64 values in row-major (x-major) order.
/// Round trips are bit exact.
void write_field(const std::filesystem::path& path, const PhaseField& field);
PhaseField read_field(const std::filesystem::path& path);

}  // namespace atomtrans
