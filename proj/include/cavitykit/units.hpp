// Unit conventions: angular frequencies in rad/s, lengths in micrometers.
// Config files and CSV outputs use cyclic MHz and micrometers; conversion
// happens at the I/O boundary only.
#pragma once

#include <cmath>
#include <numbers>

namespace cavitykit::units {

inline constexpr double pi = std::numbers::pi;

// SI constants
inline constexpr double hbar = 1.054571817e-34;            // J s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double rb87_mass = 86.909180527 * atomic_mass_unit;
inline constexpr double bohr_radius = 5.29177210903e-11;   // m

inline constexpr double um_to_m = 1e-6;

inline constexpr double mhz_to_angular(double mhz) { return 2.0 * pi * 1e6 * mhz; }
inline constexpr double angular_to_mhz(double w) { return w / (2.0 * pi * 1e6); }
inline constexpr double hz_to_angular(double hz) { return 2.0 * pi * hz; }
inline constexpr double angular_to_hz(double w) { return w / (2.0 * pi); }

}  // namespace cavitykit::units
