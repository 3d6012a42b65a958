#pragma once

namespace uwb {

/// Speed of light in vacuum, exact SI value (m/s).
inline constexpr double kSpeedOfLight = 299'792'458.0;

inline constexpr double kPi = 3.14159265358979323846;

/// Boltzmann constant (J/K), exact SI value.
inline constexpr double kBoltzmann = 1.380649e-23;

/// Reference noise temperature for the thermal noise floor (K).
inline constexpr double kNoiseTemperature = 290.0;

}  // namespace uwb
