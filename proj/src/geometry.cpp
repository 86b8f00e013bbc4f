#include "radreg/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace radreg {

void PolarTarget::validate() const {
  if (!(r >= 0.0)) throw std::invalid_argument("PolarTarget: r must be >= 0");
  if (!(sigma_r > 0.0)) throw std::invalid_argument("PolarTarget: sigma_r must be > 0");
  if (!(sigma_phi > 0.0)) throw std::invalid_argument("PolarTarget: sigma_phi must be > 0");
  if (v.has_value() && !(sigma_v.has_value() && *sigma_v > 0.0))
    throw std::invalid_argument("PolarTarget: sigma_v must be > 0 when v present");
  if (!std::isfinite(r) || !std::isfinite(phi))
    throw std::invalid_argument("PolarTarget: non-finite fields");
}

CartesianTarget make_cartesian_target(const Eigen::Vector2d& mu,
                                      const Eigen::Matrix2d& cov) {
  if (std::fabs(cov(0, 1) - cov(1, 0)) > 1e-9 * (1.0 + cov.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("CartesianTarget: covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  if (es.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("CartesianTarget: covariance not PSD");
  return {mu, 0.5 * (cov + cov.transpose())};
}

MotionParams MotionParams::velocity(double vx, double vy, double omega, double tau) {
  if (!(tau > 0.0))
    throw std::invalid_argument("MotionParams: tau must be > 0 for velocity kind");
  return {Kind::velocity, {vx, vy, omega}, tau};
}

CartesianTarget transform(const CartesianTarget& p, const MotionParams& theta) {
  const Eigen::Matrix2d r = theta.rotation();
  CartesianTarget out;
  out.mu = r * p.mu + Eigen::Vector2d(theta.tx(), theta.ty());
  out.cov = r * p.cov * r.transpose();
  return out;
}

Eigen::Matrix<double, 2, 3> transform_jacobian(const CartesianTarget& p,
                                               const MotionParams& theta) {
  const double c = std::cos(theta.phi_z()), s = std::sin(theta.phi_z());
  Eigen::Matrix<double, 2, 3> j;
  j << 1.0, 0.0, -s * p.mu.x() - c * p.mu.y(),
       0.0, 1.0,  c * p.mu.x() - s * p.mu.y();
  return j;
}

MotionParams inverse(const MotionParams& theta) {
  const double phi = theta.phi_z();
  const double c = std::cos(phi), s = std::sin(phi);
  const double tx = theta.tx(), ty = theta.ty();
  // R(-phi) * -t
  return MotionParams::pose(-(c * tx + s * ty), -(-s * tx + c * ty), -phi);
}

MotionParams compose(const MotionParams& a, const MotionParams& b) {
  const Eigen::Matrix2d ra = a.rotation();
  const Eigen::Vector2d t =
      ra * Eigen::Vector2d(b.tx(), b.ty()) + Eigen::Vector2d(a.tx(), a.ty());
  return MotionParams::pose(t.x(), t.y(), a.phi_z() + b.phi_z());
}

CartesianTarget polar_to_cartesian(const PolarTarget& t, const SensorOffset& off) {
  t.validate();
  const double psi = t.phi + off.alpha;
  const double c = std::cos(psi), s = std::sin(psi);
  CartesianTarget out;
  out.mu = {t.r * c + off.x, t.r * s + off.y};
  Eigen::Matrix2d j;
  j << c, -t.r * s,
       s,  t.r * c;
  const Eigen::Vector2d d(t.sigma_r * t.sigma_r, t.sigma_phi * t.sigma_phi);
  out.cov = j * d.asDiagonal() * j.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

}  // namespace radreg
