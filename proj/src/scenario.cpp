#include "obsim/scenario.hpp"

#include <cmath>

namespace obsim::sem {

Scenario make() {
  std::vector<BodySpec> bodies;
  bodies.push_back({"Sun", kSunMass, true, {}, std::nullopt, Vector3d::Zero()});
  bodies.push_back({"Earth", kEarthMass, false, {"Sun"}, std::nullopt, Vector3d::Zero()});
  bodies.push_back({"Moon", kMoonMass, false, {"Earth"}, std::string("Earth"), Vector3d::Zero()});
  PhysicalSystem system(std::move(bodies), 1.0, {}, "sun-earth-moon");

  const double earth_speed = std::sqrt(kSunMass / kEarthRadius);
  const double moon_speed = std::sqrt(kEarthMass / kMoonRadius);
  State init;
  init.t = 0.0;
  init.q.resize(6);
  init.qdot.resize(6);
  init.q << kEarthRadius, 0.0, 0.0, kEarthRadius + kMoonRadius, 0.0, 0.0;
  init.qdot << 0.0, earth_speed, 0.0, 0.0, earth_speed + moon_speed, 0.0;
  return {std::move(system), std::move(init)};
}

}  // namespace obsim::sem
