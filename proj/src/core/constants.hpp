#pragma once

#include <numbers>

namespace rovi::constants {

// All gap-law and rate arithmetic is carried out in wavenumber units; time
// conversion happens in one place (two_pi_c below).
inline constexpr double k_boltzmann_cm1_per_k = 0.695034800;
inline constexpr double speed_of_light_cm_per_s = 2.99792458e10;

// rate[1/s] = two_pi_c * theta[cm^-1]: a Lorentzian of HWHM gamma (cm^-1) is
// the Fourier pair of an exponential decaying at two_pi_c * gamma.
inline constexpr double two_pi_c = 2.0 * std::numbers::pi * speed_of_light_cm_per_s;

// Absorption-coefficient constants, see lineshape::spectrum.
inline constexpr double loschmidt_cm3_atm = 2.686780111e19;   // n_L
inline constexpr double reference_temperature_k = 273.15;     // T_0
inline constexpr double absorption_prefactor_d2_cm2 = 4.16237e-19;

inline constexpr const char* version = "0.1.0";

inline double thermal_energy_cm1(double temperature_k) {
  return k_boltzmann_cm1_per_k * temperature_k;
}

}  // namespace rovi::constants
