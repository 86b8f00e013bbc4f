#pragma once

#include <Eigen/Dense>
#include <optional>

namespace radreg {

// Raw polar radar detection. v / sigma_v absent for pure registration data.
struct PolarTarget {
  double r = 0.0;          // range [m]
  double phi = 0.0;        // bearing [rad]
  double sigma_r = 0.0;    // range std-dev [m]
  double sigma_phi = 0.0;  // bearing std-dev [rad]
  std::optional<double> v;        // Doppler radial velocity [m/s]
  std::optional<double> sigma_v;  // Doppler std-dev [m/s]

  void validate() const;  // throws std::invalid_argument on violation
};

// Cartesian target: position mean with propagated 2x2 covariance.
struct CartesianTarget {
  Eigen::Vector2d mu = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
};

// Construction-time check: cov symmetric, eigenvalues >= -1e-12.
CartesianTarget make_cartesian_target(const Eigen::Vector2d& mu,
                                      const Eigen::Matrix2d& cov);

// Sensor mounting pose in the vehicle frame.
struct SensorOffset {
  double x = 0.0;      // [m]
  double y = 0.0;      // [m]
  double alpha = 0.0;  // [rad]
};

// Rigid 2D motion, either as a pose (tx, ty, phi_z) or as a velocity
// (vx, vy, omega) over a scan interval tau. One type with a tag so cost and
// optimizer code stays parameter-space agnostic.
struct MotionParams {
  enum class Kind { pose, velocity };

  Kind kind = Kind::pose;
  Eigen::Vector3d params = Eigen::Vector3d::Zero();  // (tx,ty,phi) | (vx,vy,omega)
  double tau = 0.0;  // scan interval [s], velocity kind only

  static MotionParams pose(double tx, double ty, double phi_z) {
    return {Kind::pose, {tx, ty, phi_z}, 0.0};
  }
  static MotionParams velocity(double vx, double vy, double omega, double tau);

  // Pose view (velocity kind integrates over tau).
  double tx() const { return kind == Kind::pose ? params[0] : params[0] * tau; }
  double ty() const { return kind == Kind::pose ? params[1] : params[1] * tau; }
  double phi_z() const { return kind == Kind::pose ? params[2] : params[2] * tau; }

  // Same kind/tau, new raw parameters (the optimizer's update path).
  MotionParams with_params(const Eigen::Vector3d& p) const {
    MotionParams out = *this;
    out.params = p;
    return out;
  }

  Eigen::Matrix2d rotation() const {
    const double c = std::cos(phi_z()), s = std::sin(phi_z());
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return r;
  }
};

// mu' = R(phi_z) mu + t; cov' = R cov R^T.
CartesianTarget transform(const CartesianTarget& p, const MotionParams& theta);

// Columns d mu'/d tx, d mu'/d ty, d mu'/d phi_z of the pose view.
Eigen::Matrix<double, 2, 3> transform_jacobian(const CartesianTarget& p,
                                               const MotionParams& theta);

// Pose such that transform(transform(p, theta), inverse(theta)) == p.
MotionParams inverse(const MotionParams& theta);

// a then b in the frame of a: compose(a, b) maps x to a(b(x)).
MotionParams compose(const MotionParams& a, const MotionParams& b);

// mu = [r cos(phi+alpha)+x, r sin(phi+alpha)+y]; cov by first-order
// propagation of diag(sigma_r^2, sigma_phi^2).
CartesianTarget polar_to_cartesian(const PolarTarget& t, const SensorOffset& off);

}  // namespace radreg
