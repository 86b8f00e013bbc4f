#include "radreg/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radreg {

void ScenarioSpec::validate() const {
  if (!(sigma_r > 0.0) || !(sigma_phi > 0.0))
    throw std::invalid_argument("ScenarioSpec: sigmas must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("ScenarioSpec: dt must be > 0");
  if (kind != ScenarioKind::oned_basic && n_inliers < 3)
    throw std::invalid_argument("ScenarioSpec: need >= 3 inliers for 2D pose observability");
  if (n_outliers_prev < 0 || n_outliers_curr < 0 || n_cluster_points < 0)
    throw std::invalid_argument("ScenarioSpec: negative counts");
}

ScenarioSpec ScenarioSpec::oned_basic(std::uint64_t seed) {
  ScenarioSpec s;
  s.kind = ScenarioKind::oned_basic;
  s.theta_g = MotionParams::pose(2.0, 0.0, 0.0);
  s.n_inliers = 3;
  s.sigma_r = 0.15;
  s.seed = seed;
  return s;
}

ScenarioSpec ScenarioSpec::overlapped2d(std::uint64_t seed) {
  ScenarioSpec s;
  s.seed = seed;
  return s;
}

ScenarioSpec ScenarioSpec::outlier2d(std::uint64_t seed, int n_prev, int n_curr) {
  ScenarioSpec s = overlapped2d(seed);
  s.kind = ScenarioKind::outlier2d;
  s.n_outliers_prev = n_prev;
  s.n_outliers_curr = n_curr;
  return s;
}

ScenarioSpec ScenarioSpec::clustered2d(std::uint64_t seed, ClusterSpread spread,
                                       int n_points) {
  ScenarioSpec s = overlapped2d(seed);
  s.kind = ScenarioKind::clustered2d;
  s.spread = spread;
  s.n_cluster_points = n_points;
  return s;
}

ScenarioSpec ScenarioSpec::combined2d(std::uint64_t seed) {
  ScenarioSpec s = overlapped2d(seed);
  s.kind = ScenarioKind::combined2d;
  s.n_cluster_points = 8;
  s.n_outliers_prev = 2;
  s.n_outliers_curr = 2;
  return s;
}

int param_dim(ScenarioKind kind) {
  return kind == ScenarioKind::oned_basic ? 1 : 3;
}

namespace {

// Measurement noise + covariance metadata for one ground-truth point,
// appended to the given set. 1D: additive x noise, variance sigma_r^2.
// 2D: polar noise about the origin, covariance propagated back.
void append_noisy(ScenarioInstance* inst, SetLabel which, const Eigen::Vector2d& truth,
                  Rng* rng) {
  PointSet& set = which == SetLabel::previous ? inst->f : inst->m;
  const double sr = inst->spec.sigma_r, sp = inst->spec.sigma_phi;
  if (set.dim == 1) {
    const double x = truth.x() + sr * rng->normal();
    CartesianTarget t;
    t.mu = {x, 0.0};
    t.cov = Eigen::Matrix2d::Zero();
    t.cov(0, 0) = sr * sr;
    set.targets.push_back(t);
    return;
  }
  PolarTarget p;
  p.r = std::max(0.0, truth.norm() + sr * rng->normal());
  p.phi = std::atan2(truth.y(), truth.x()) + sp * rng->normal();
  p.sigma_r = sr;
  p.sigma_phi = sp;
  set.targets.push_back(polar_to_cartesian(p, SensorOffset{}));
  (which == SetLabel::previous ? inst->f_polar : inst->m_polar).push_back(p);
}

ScenarioInstance generate_oned(const ScenarioSpec& spec) {
  // Replica layout: F = {A=10, B=2, C=12.2}, theta_g = +2, M = F - 2, so
  // target B's match shifts are exactly {2, 10, 12.2}.
  ScenarioInstance inst;
  inst.spec = spec;
  inst.theta_g = spec.theta_g;
  inst.f.dim = inst.m.dim = 1;
  inst.f.label = SetLabel::previous;
  inst.m.label = SetLabel::current;

  const MotionParams inv = inverse(spec.theta_g);
  for (double x : {10.0, 2.0, 12.2}) {
    inst.f_true.emplace_back(x, 0.0);
    inst.m_true.emplace_back(x + inv.tx(), 0.0);
    inst.correspondence.emplace_back(static_cast<int>(inst.f_true.size()) - 1,
                                     static_cast<int>(inst.m_true.size()) - 1);
  }
  Rng rng(derive_seed(spec.seed, 1));
  for (const auto& p : inst.f_true) append_noisy(&inst, SetLabel::previous, p, &rng);
  for (const auto& p : inst.m_true) append_noisy(&inst, SetLabel::current, p, &rng);
  return inst;
}

}  // namespace

ScenarioInstance generate(const ScenarioSpec& spec) {
  spec.validate();
  if (spec.kind == ScenarioKind::oned_basic) {
    ScenarioInstance inst = generate_oned(spec);
    if (spec.n_cluster_points > 0)
      inst = add_clusters(inst, spec.n_cluster_points, spec.spread,
                          derive_seed(spec.seed, 2));
    if (spec.n_outliers_prev > 0 || spec.n_outliers_curr > 0)
      inst = add_outliers(inst, spec.n_outliers_prev, spec.n_outliers_curr,
                          derive_seed(spec.seed, 3));
    return inst;
  }

  ScenarioInstance inst;
  inst.spec = spec;
  inst.theta_g = spec.theta_g;
  inst.f.dim = inst.m.dim = 2;
  inst.f.label = SetLabel::previous;
  inst.m.label = SetLabel::current;

  // Seed layout: ring of radius 10 m, even bearing spacing, +-1 m jitter.
  Rng layout(derive_seed(spec.seed, 0));
  const MotionParams inv = inverse(spec.theta_g);
  for (int i = 0; i < spec.n_inliers; ++i) {
    const double ang = 2.0 * M_PI * i / spec.n_inliers;
    Eigen::Vector2d p(10.0 * std::cos(ang) + layout.uniform(-1.0, 1.0),
                      10.0 * std::sin(ang) + layout.uniform(-1.0, 1.0));
    inst.f_true.push_back(p);
    const CartesianTarget moved = transform({p, Eigen::Matrix2d::Identity()}, inv);
    inst.m_true.push_back(moved.mu);
    inst.correspondence.emplace_back(i, i);
  }
  Rng noise(derive_seed(spec.seed, 1));
  for (const auto& p : inst.f_true) append_noisy(&inst, SetLabel::previous, p, &noise);
  for (const auto& p : inst.m_true) append_noisy(&inst, SetLabel::current, p, &noise);

  const bool clustered = spec.kind == ScenarioKind::clustered2d ||
                         spec.kind == ScenarioKind::combined2d;
  const bool outliers = spec.kind == ScenarioKind::outlier2d ||
                        spec.kind == ScenarioKind::combined2d;
  if (clustered && spec.n_cluster_points > 0)
    inst = add_clusters(inst, spec.n_cluster_points, spec.spread,
                        derive_seed(spec.seed, 2));
  if (outliers && (spec.n_outliers_prev > 0 || spec.n_outliers_curr > 0))
    inst = add_outliers(inst, spec.n_outliers_prev, spec.n_outliers_curr,
                        derive_seed(spec.seed, 3));
  return inst;
}

ScenarioInstance add_outliers(const ScenarioInstance& inst, int n_prev, int n_curr,
                              std::uint64_t seed) {
  if (n_prev < 0 || n_curr < 0) throw std::invalid_argument("add_outliers: n < 0");
  ScenarioInstance out = inst;
  if (n_prev == 0 && n_curr == 0) return out;
  Rng rng(seed);
  const double sigma = inst.spec.sigma_r;

  auto place = [&](const std::vector<Eigen::Vector2d>& truth) -> Eigen::Vector2d {
    Eigen::Vector2d lo = truth.front(), hi = truth.front();
    for (const auto& p : truth) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Eigen::Vector2d c = 0.5 * (lo + hi);
    const Eigen::Vector2d half = 0.75 * (hi - lo).cwiseMax(1.0);  // x1.5 inflation
    if (rng.uniform01() < 0.2) {
      // Near-inlier placement within 3 sigma of a random ground-truth point.
      const auto idx = static_cast<size_t>(rng.uniform01() * truth.size());
      const double ang = rng.uniform(0.0, 2.0 * M_PI);
      const double mag = rng.uniform(0.0, 3.0 * sigma);
      Eigen::Vector2d off(mag * std::cos(ang), mag * std::sin(ang));
      if (out.f.dim == 1) off.y() = 0.0;
      return truth[std::min(idx, truth.size() - 1)] + off;
    }
    Eigen::Vector2d p(c.x() + rng.uniform(-half.x(), half.x()),
                      c.y() + rng.uniform(-half.y(), half.y()));
    if (out.f.dim == 1) p.y() = 0.0;
    return p;
  };

  for (int i = 0; i < n_prev; ++i) {
    const Eigen::Vector2d p = place(out.f_true);
    out.f_true.push_back(p);
    append_noisy(&out, SetLabel::previous, p, &rng);
    out.outliers_prev.push_back(static_cast<int>(out.f.targets.size()) - 1);
  }
  for (int i = 0; i < n_curr; ++i) {
    const Eigen::Vector2d p = place(out.m_true);
    out.m_true.push_back(p);
    append_noisy(&out, SetLabel::current, p, &rng);
    out.outliers_curr.push_back(static_cast<int>(out.m.targets.size()) - 1);
  }
  return out;
}

ScenarioInstance add_clusters(const ScenarioInstance& inst, int n_points,
                              ClusterSpread spread, std::uint64_t seed) {
  if (n_points < 0) throw std::invalid_argument("add_clusters: n < 0");
  ScenarioInstance out = inst;
  if (n_points == 0) return out;
  Rng rng(seed);
  const double sigma = inst.spec.sigma_r;
  const size_t n_anchors = inst.correspondence.size();
  const MotionParams inv = inverse(inst.theta_g);

  for (int i = 0; i < n_points; ++i) {
    const auto a = std::min(static_cast<size_t>(rng.uniform01() * n_anchors),
                            n_anchors - 1);
    const Eigen::Vector2d anchor =
        out.f_true[static_cast<size_t>(inst.correspondence[a].first)];
    const double ang = rng.uniform(0.0, 2.0 * M_PI);
    const double mag = spread == ClusterSpread::tight
                           ? rng.uniform(0.0, 0.5 * sigma)
                           : rng.uniform(2.0 * sigma, 4.0 * sigma);
    Eigen::Vector2d off(mag * std::cos(ang), mag * std::sin(ang));
    if (out.f.dim == 1) off = {mag * (rng.uniform01() < 0.5 ? -1.0 : 1.0), 0.0};

    const Eigen::Vector2d fp = anchor + off;
    const Eigen::Vector2d mp = transform({fp, Eigen::Matrix2d::Identity()}, inv).mu;
    out.f_true.push_back(fp);
    out.m_true.push_back(mp);
    append_noisy(&out, SetLabel::previous, fp, &rng);
    append_noisy(&out, SetLabel::current, mp, &rng);
    out.correspondence.emplace_back(static_cast<int>(out.f.targets.size()) - 1,
                                    static_cast<int>(out.m.targets.size()) - 1);
  }
  return out;
}

std::vector<RadarScan> instance_to_scans(const ScenarioInstance& inst) {
  if (inst.f.dim != 2)
    throw std::invalid_argument("instance_to_scans: 2D instances only");
  RadarScan prev, curr;
  prev.t = 0.0;
  prev.targets = inst.f_polar;
  curr.t = inst.spec.dt;
  curr.targets = inst.m_polar;
  return {prev, curr};
}

Replay generate_replay(const ReplaySpec& spec) {
  if (spec.n_steps < 1) throw std::invalid_argument("generate_replay: n_steps < 1");
  if (!(spec.dt > 0.0)) throw std::invalid_argument("generate_replay: dt must be > 0");

  Replay rep;
  rep.true_velocity = MotionParams::velocity(spec.vx, spec.vy, spec.omega, spec.dt);

  Rng rng(derive_seed(spec.seed, 0));
  const double travel = std::hypot(spec.vx, spec.vy) * spec.dt * spec.n_steps;
  const double x0 = -spec.r_max, x1 = travel + spec.r_max;
  std::vector<Eigen::Vector2d> landmarks;
  landmarks.reserve(static_cast<size_t>(spec.n_landmarks));
  for (int i = 0; i < spec.n_landmarks; ++i)
    landmarks.emplace_back(rng.uniform(x0, x1),
                           rng.uniform(-spec.corridor_half_width, spec.corridor_half_width));

  const MotionParams step_delta =
      MotionParams::pose(spec.vx * spec.dt, spec.vy * spec.dt, spec.omega * spec.dt);
  MotionParams pose = MotionParams::pose(0.0, 0.0, 0.0);

  Rng noise(derive_seed(spec.seed, 1));
  for (int k = 0; k <= spec.n_steps; ++k) {
    rep.true_poses.push_back(pose);
    RadarScan scan;
    scan.t = k * spec.dt;

    // Targets in the sensor frame, nearest-first, capped at max_targets.
    const MotionParams world_from_sensor = pose;
    const MotionParams sensor_from_world = inverse(world_from_sensor);
    std::vector<std::pair<double, Eigen::Vector2d>> visible;
    for (const auto& lm : landmarks) {
      const Eigen::Vector2d rel =
          transform({lm, Eigen::Matrix2d::Identity()}, sensor_from_world).mu;
      const double r = rel.norm();
      if (r >= spec.r_min && r <= spec.r_max) visible.emplace_back(r, rel);
    }
    std::sort(visible.begin(), visible.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (static_cast<int>(visible.size()) > spec.max_targets)
      visible.resize(static_cast<size_t>(spec.max_targets));
    if (visible.size() < 4)
      throw std::runtime_error("generate_replay: scan sees fewer than 4 landmarks");

    for (const auto& [r_true, rel] : visible) {
      PolarTarget t;
      t.r = std::max(0.0, r_true + spec.sigma_r * noise.normal());
      t.phi = std::atan2(rel.y(), rel.x()) + spec.sigma_phi * noise.normal();
      t.sigma_r = spec.sigma_r;
      t.sigma_phi = spec.sigma_phi;
      if (spec.with_doppler) {
        PolarTarget truth = t;
        truth.r = r_true;
        truth.phi = std::atan2(rel.y(), rel.x());
        t.v = expected_doppler(truth, rep.true_velocity, spec.sensor) +
              spec.sigma_v * noise.normal();
        t.sigma_v = spec.sigma_v;
      }
      scan.targets.push_back(t);
    }
    rep.scans.push_back(std::move(scan));
    pose = compose(pose, step_delta);
  }
  return rep;
}

}  // namespace radreg
