#pragma once

#include <stdexcept>
#include <string>

namespace atomtrans {

/// Fundamental constants in SI units.
struct PhysicalConstants {
    double boltzmann = 1.380649e-23;    // J/K
    double hbar = 1.054571817e-34;      // J*s
    double atomic_mass = 0.0;           // kg, set per species

    void validate() const {
        if (!(boltzmann > 0.0) || !(hbar > 0.0) || !(atomic_mass > 0.0))
            throw std::invalid_argument("PhysicalConstants: all constants must be strictly positive");
    }
};

inline constexpr double kAmuKg = 1.66053906660e-27;

/// A few species used throughout; any mass can be configured.
struct Species {
    std::string name;
    double mass_amu = 0.0;
};

inline Species strontium88() { return {"Sr88", 87.9056121}; }
inline Species lithium6() { return {"Li6", 6.0151228874}; }

/// Internal unit system: length in micrometers, time in microseconds,
/// mass equal to the atom mass. Velocities then come out in m/s and the
/// energy unit is m*(1 m/s)^2. The dimensionless hbar in these units is
/// what plays the role of the semiclassical parameter.
class UnitSystem {
  public:
    UnitSystem(const PhysicalConstants& constants,
               double length_m = 1e-6, double time_s = 1e-6)
        : constants_(constants), length_(length_m), time_(time_s) {
        constants_.validate();
        if (!(length_ > 0.0) || !(time_ > 0.0))
            throw std::invalid_argument("UnitSystem: units must be positive");
    }

    const PhysicalConstants& constants() const { return constants_; }

    double length_unit_m() const { return length_; }
    double time_unit_s() const { return time_; }
    double mass_unit_kg() const { return constants_.atomic_mass; }
    double energy_unit_J() const { return mass_unit_kg() * length_ * length_ / (time_ * time_); }
    double momentum_unit_SI() const { return mass_unit_kg() * length_ / time_; }

    /// Dimensionless hbar in internal units.
    double epsilon() const { return constants_.hbar / (energy_unit_J() * time_); }

    // SI <-> internal conversions.
    double length_to_internal(double meters) const { return meters / length_; }
    double length_to_SI(double internal) const { return internal * length_; }
    double time_to_internal(double seconds) const { return seconds / time_; }
    double time_to_SI(double internal) const { return internal * time_; }
    double energy_to_internal(double joules) const { return joules / energy_unit_J(); }
    double energy_to_SI(double internal) const { return internal * energy_unit_J(); }
    double momentum_to_internal(double si) const { return si / momentum_unit_SI(); }
    double momentum_to_SI(double internal) const { return internal * momentum_unit_SI(); }

    // Experimentalist units used by configs.
    double energy_from_mK(double millikelvin) const {
        return energy_to_internal(constants_.boltzmann * millikelvin * 1e-3);
    }
    double energy_to_mK(double internal) const {
        return energy_to_SI(internal) / constants_.boltzmann * 1e3;
    }
    double temperature_from_mK(double millikelvin) const { return energy_from_mK(millikelvin); }

  private:
    PhysicalConstants constants_;
    double length_;
    double time_;
};

inline UnitSystem make_unit_system(const Species& species) {
    PhysicalConstants c;
    c.atomic_mass = species.mass_amu * kAmuKg;
    return UnitSystem(c);
}

}  // namespace atomtrans
