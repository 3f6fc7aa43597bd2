#pragma once

#include <cmath>
#include <numbers>

#include "obsim/dynamics.hpp"

namespace obsim {

struct Scenario {
  PhysicalSystem system;
  State init;
};

/// Sun-Earth-Moon reference scenario, nondimensional with G = 1.
///
/// The Sun is fixed at the origin with unit mass. The Earth (mass 1e-3) is
/// attracted only by the Sun and starts on the unit circle with the circular
/// speed. The Moon is attracted only by the Earth and is hosted by it, starting
/// on a circle of radius 0.05 around the Earth. Masses and distances are
/// implementation choices; the coupling structure is the point.
namespace sem {

inline constexpr double kSunMass = 1.0;
inline constexpr double kEarthMass = 1e-3;
inline constexpr double kMoonMass = kEarthMass / 81.3;
inline constexpr double kEarthRadius = 1.0;
inline constexpr double kMoonRadius = 0.05;

/// 2*pi for the unit circular Earth orbit.
inline constexpr double kEarthPeriod = 2.0 * std::numbers::pi;
/// 2*pi / sqrt(m_E / r_M^3) = 2*pi / sqrt(8).
inline const double kMoonPeriod = 2.0 * std::numbers::pi / std::sqrt(kEarthMass / (kMoonRadius * kMoonRadius * kMoonRadius));
/// Canonical integration step, 1000 steps per Earth period.
inline constexpr double kStep = kEarthPeriod / 1000.0;

Scenario make();

}  // namespace sem

}  // namespace obsim
