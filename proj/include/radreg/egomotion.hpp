#pragma once

#include <optional>
#include <vector>

#include "radreg/cost.hpp"
#include "radreg/covest.hpp"
#include "radreg/scan.hpp"

namespace radreg {

struct EgoConfig {
  SensorOffset sensor;
  double outlier_alpha = 0.2;
  Eigen::Matrix2d outlier_sigma = Eigen::Matrix2d::Identity() * 100.0;  // 10 m std
  bool use_doppler = false;
  bool annealing = false;
  double anneal_factor = 10.0;
  int anneal_rounds = 1;  // scaled passes before the final plain minimization
  OptimizerConfig optimizer;
  double sigma_v_default = 0.1;  // [m/s] when a scan lacks sv
  int max_targets = 48;

  void validate() const;
};

struct EgoState {
  MotionParams theta_hat = MotionParams::velocity(0.0, 0.0, 0.0, 1.0);
  Eigen::Matrix3d sigma = Eigen::Matrix3d::Identity();
  bool converged = false;
  bool used_doppler = false;
  double t = 0.0;  // end-of-interval timestamp
};

// log N(0 | v_meas - V(theta), sigma_v^2 + doppler_variance). Throws when the
// target carries no Doppler measurement.
double doppler_log_component(const PolarTarget& t, const MotionParams& theta,
                             const SensorOffset& off, double sigma_v_default);

// Spatial robust likelihood over the scan pair, Doppler factor multiplying
// the inlier branch only. theta is velocity-kind; its tau must equal
// curr.t - prev.t.
double joint_objective(const RadarScan& prev, const RadarScan& curr,
                       const MotionParams& theta, const EgoConfig& cfg);

// Round 1..anneal_rounds minimize with target sigmas scaled by
// factor^(round weight), chaining optima; returns the init for the plain
// final pass. factor = 1 reproduces the init unchanged up to re-minimization.
MotionParams anneal_schedule(const RadarScan& prev, const RadarScan& curr,
                             const MotionParams& init, const EgoConfig& cfg);

// One scan-pair estimate: constant-velocity init from the last converged
// state (zero otherwise), optional annealing, joint minimization, Fisher
// covariance at the optimum.
EgoState estimate_step(const RadarScan& prev, const RadarScan& curr,
                       const std::optional<EgoState>& init, const EgoConfig& cfg);

// Sequential pipeline over a scan sequence (n scans -> n-1 states).
std::vector<EgoState> run_replay(const std::vector<RadarScan>& scans,
                                 const EgoConfig& cfg);

struct Pose2 {
  double t = 0.0;
  double x = 0.0, y = 0.0, heading = 0.0;
};

// Dead-reckoning integration; returns |states| + 1 poses starting at the
// origin. timestamps are the per-state end times.
std::vector<Pose2> integrate_trajectory(const std::vector<EgoState>& states,
                                        const std::vector<double>& timestamps);

}  // namespace radreg
