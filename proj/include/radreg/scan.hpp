#pragma once

#include <vector>

#include "radreg/geometry.hpp"

namespace radreg {

// One radar scan: polar detections at a common timestamp.
struct RadarScan {
  double t = 0.0;  // [s]
  std::vector<PolarTarget> targets;
};

// Radial velocity a static target at bearing t.phi shows under sensor body
// velocity theta (velocity kind):
// V = -(vx - omega y_s) cos(phi + alpha_s) - (vy + omega x_s) sin(phi + alpha_s).
double expected_doppler(const PolarTarget& t, const MotionParams& theta,
                        const SensorOffset& off);

// First-order Doppler variance from bearing noise: (dV/dphi)^2 sigma_phi^2.
double doppler_variance(const PolarTarget& t, const MotionParams& theta,
                        const SensorOffset& off);

}  // namespace radreg
