#include "radreg/scan.hpp"

#include <cmath>
#include <stdexcept>

namespace radreg {

double expected_doppler(const PolarTarget& t, const MotionParams& theta,
                        const SensorOffset& off) {
  if (theta.kind != MotionParams::Kind::velocity)
    throw std::invalid_argument("expected_doppler: velocity-kind MotionParams required");
  const double vx = theta.params[0], vy = theta.params[1], omega = theta.params[2];
  const double psi = t.phi + off.alpha;
  return -(vx - omega * off.y) * std::cos(psi) - (vy + omega * off.x) * std::sin(psi);
}

double doppler_variance(const PolarTarget& t, const MotionParams& theta,
                        const SensorOffset& off) {
  if (theta.kind != MotionParams::Kind::velocity)
    throw std::invalid_argument("doppler_variance: velocity-kind MotionParams required");
  const double vx = theta.params[0], vy = theta.params[1], omega = theta.params[2];
  const double psi = t.phi + off.alpha;
  const double dv_dphi =
      (vx - omega * off.y) * std::sin(psi) - (vy + omega * off.x) * std::cos(psi);
  return dv_dphi * dv_dphi * t.sigma_phi * t.sigma_phi;
}

}  // namespace radreg
