#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "radreg/metrics.hpp"
#include "radreg/rng.hpp"
#include "radreg/scan.hpp"

namespace radreg {

enum class ScenarioKind { oned_basic, overlapped2d, outlier2d, clustered2d, combined2d };
enum class ClusterSpread { tight, loose };

// Deterministic synthetic scenario description. sigma_r doubles as the plain
// positional sigma for the 1D kind (no polar model in 1D).
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::overlapped2d;
  MotionParams theta_g = MotionParams::pose(5.0, 0.0, 15.0 * M_PI / 180.0);
  int n_inliers = 8;
  int n_outliers_prev = 0;
  int n_outliers_curr = 0;
  int n_cluster_points = 0;
  ClusterSpread spread = ClusterSpread::tight;
  double sigma_r = 0.2;     // [m]
  double sigma_phi = 0.03;  // [rad]
  double dt = 0.2;          // [s] scan interval
  std::uint64_t seed = 1;

  void validate() const;

  // Kind presets with reference defaults.
  static ScenarioSpec oned_basic(std::uint64_t seed);
  static ScenarioSpec overlapped2d(std::uint64_t seed);
  static ScenarioSpec outlier2d(std::uint64_t seed, int n_prev = 2, int n_curr = 2);
  static ScenarioSpec clustered2d(std::uint64_t seed, ClusterSpread spread,
                                  int n_points = 8);
  static ScenarioSpec combined2d(std::uint64_t seed);
};

// Number of free motion parameters estimated on this kind (1 = tx only).
int param_dim(ScenarioKind kind);

struct ScenarioInstance {
  ScenarioSpec spec;
  PointSet f;  // previous set (noisy measurements)
  PointSet m;  // current set (noisy measurements)
  MotionParams theta_g;
  std::vector<std::pair<int, int>> correspondence;  // (f index, m index)
  std::vector<int> outliers_prev;                   // indices into f
  std::vector<int> outliers_curr;                   // indices into m
  std::vector<Eigen::Vector2d> f_true, m_true;      // pre-noise bookkeeping
  std::vector<PolarTarget> f_polar, m_polar;        // 2D kinds only
};

// Build an instance: ground-truth layout, inverse-transformed current set
// (transform(m_true, theta_g) == f_true exactly), polar noise applied per
// target, covariances propagated through polar_to_cartesian. Deterministic
// in spec.seed.
ScenarioInstance generate(const ScenarioSpec& spec);

// Append uniform-box outliers (20% chance near-inlier placement) to either
// set; indices recorded, correspondence untouched.
ScenarioInstance add_outliers(const ScenarioInstance& inst, int n_prev, int n_curr,
                              std::uint64_t seed);

// Append cluster points around random inlier anchors to both sets
// consistently (they are correspondences). tight: offsets <= 0.5 sigma,
// loose: offsets in [2 sigma, 4 sigma]; sigma = spec.sigma_r.
ScenarioInstance add_clusters(const ScenarioInstance& inst, int n_points,
                              ClusterSpread spread, std::uint64_t seed);

// Two-scan serialization (t = 0 and t = dt) through the radar ingestion
// format; 2D kinds only (1D has no polar representation).
std::vector<RadarScan> instance_to_scans(const ScenarioInstance& inst);

// --- multi-step replay (ego-motion test data) --------------------------------

struct ReplaySpec {
  int n_steps = 50;
  double vx = 2.0, vy = 0.0, omega = 0.0;  // constant body velocity
  double dt = 0.2;
  int n_landmarks = 46;
  double corridor_half_width = 12.0;
  double r_min = 1.0, r_max = 15.0;
  double sigma_r = 0.2, sigma_phi = 0.03, sigma_v = 0.1;
  bool with_doppler = true;
  int max_targets = 48;
  SensorOffset sensor;
  std::uint64_t seed = 1;
};

struct Replay {
  std::vector<RadarScan> scans;        // n_steps + 1 scans
  MotionParams true_velocity;          // constant (vx, vy, omega), tau = dt
  std::vector<MotionParams> true_poses;  // global sensor pose per scan
};

// Static landmark field observed from a constant-velocity sensor; Doppler
// measurements synthesized from the sensor motion model. Throws if any scan
// would see fewer than 4 landmarks.
Replay generate_replay(const ReplaySpec& spec);

}  // namespace radreg
