#pragma once

#include <numbers>

namespace tcsim {

// Unit conventions used throughout:
//   - public API: plain (non-angular) frequencies, GHz / MHz / kHz as stated
//   - Hamiltonians and phases internally: angular frequency in rad/ns
//   - time: ns for pulses/dynamics, us for coherence times
// With time in ns, 1 GHz = 1 cycle/ns, so rad/ns = 2*pi * GHz.

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double pi = std::numbers::pi;

inline constexpr double ghz_to_radns(double f_ghz) { return two_pi * f_ghz; }
inline constexpr double radns_to_ghz(double w) { return w / two_pi; }

inline constexpr double mhz_to_ghz(double f_mhz) { return f_mhz * 1e-3; }
inline constexpr double ghz_to_mhz(double f_ghz) { return f_ghz * 1e3; }
inline constexpr double ghz_to_khz(double f_ghz) { return f_ghz * 1e6; }
inline constexpr double us_to_ns(double t_us) { return t_us * 1e3; }

// e^2 / (2 * 1 fF) / h expressed in GHz. Used to convert capacitance (fF)
// into charging energy: E_C[GHz] = kECFF / C[fF].
//   e = 1.602176634e-19 C, h = 6.62607015e-34 J s
//   e^2/(2 * 1e-15 F) / h = 19.37023 GHz fF
inline constexpr double charging_energy_ghz_ff = 19.37022932465912;

} // namespace tcsim
