#include "radreg/egomotion.hpp"

#include <cmath>
#include <stdexcept>

namespace radreg {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

PointSet scan_to_set(const RadarScan& scan, const SensorOffset& off, SetLabel label) {
  PointSet set;
  set.dim = 2;
  set.label = label;
  set.targets.reserve(scan.targets.size());
  for (const auto& t : scan.targets) set.targets.push_back(polar_to_cartesian(t, off));
  return set;
}

CostModel ego_cost_model(const EgoConfig& cfg) {
  CostModel model;
  model.metric = Metric::d2d;
  model.fusion = Fusion::likelihood;
  model.outlier.kind = OutlierKind::corrupted_gaussian;
  model.outlier.alpha = cfg.outlier_alpha;
  model.outlier.sigma = cfg.outlier_sigma;
  return model;
}

}  // namespace

void EgoConfig::validate() const {
  if (!(outlier_alpha >= 0.0 && outlier_alpha < 1.0))
    throw std::invalid_argument("EgoConfig: outlier_alpha must be in [0, 1)");
  if (!(anneal_factor > 0.0))
    throw std::invalid_argument("EgoConfig: anneal_factor must be > 0");
  if (anneal_rounds < 1) throw std::invalid_argument("EgoConfig: anneal_rounds < 1");
  if (max_targets < 1) throw std::invalid_argument("EgoConfig: max_targets < 1");
  if (!(sigma_v_default > 0.0))
    throw std::invalid_argument("EgoConfig: sigma_v_default must be > 0");
}

double doppler_log_component(const PolarTarget& t, const MotionParams& theta,
                             const SensorOffset& off, double sigma_v_default) {
  if (!t.v.has_value())
    throw std::invalid_argument("doppler_log_component: target carries no Doppler");
  const double sv = t.sigma_v.value_or(sigma_v_default);
  const double gamma = sv * sv + doppler_variance(t, theta, off);
  const double resid = *t.v - expected_doppler(t, theta, off);
  return -0.5 * (kLog2Pi + std::log(gamma)) - 0.5 * resid * resid / gamma;
}

double joint_objective(const RadarScan& prev, const RadarScan& curr,
                       const MotionParams& theta, const EgoConfig& cfg) {
  cfg.validate();
  if (prev.targets.empty() || curr.targets.empty())
    throw std::invalid_argument("joint_objective: empty scan");
  if (theta.kind != MotionParams::Kind::velocity)
    throw std::invalid_argument("joint_objective: velocity-kind theta required");

  const PointSet f = scan_to_set(prev, cfg.sensor, SetLabel::previous);
  const CostModel model = ego_cost_model(cfg);

  double acc = 0.0;
  for (const auto& pt : curr.targets) {
    const CartesianTarget moved = transform(polar_to_cartesian(pt, cfg.sensor), theta);
    const double doppler_off =
        cfg.use_doppler && pt.v.has_value()
            ? doppler_log_component(pt, theta, cfg.sensor, cfg.sigma_v_default)
            : 0.0;
    acc += target_mixture_score(moved, f, model, doppler_off);
  }
  return -acc;
}

MotionParams anneal_schedule(const RadarScan& prev, const RadarScan& curr,
                             const MotionParams& init, const EgoConfig& cfg) {
  cfg.validate();
  MotionParams theta = init;
  for (int round = cfg.anneal_rounds; round >= 1; --round) {
    const double scale = std::pow(cfg.anneal_factor, round);
    RadarScan p = prev, c = curr;
    for (auto& t : p.targets) {
      t.sigma_r *= scale;
      t.sigma_phi *= scale;
    }
    for (auto& t : c.targets) {
      t.sigma_r *= scale;
      t.sigma_phi *= scale;
    }
    auto f = [&](const MotionParams& th) { return joint_objective(p, c, th, cfg); };
    theta = minimize(f, theta, cfg.optimizer).theta_hat;
  }
  return theta;
}

EgoState estimate_step(const RadarScan& prev, const RadarScan& curr,
                       const std::optional<EgoState>& init, const EgoConfig& cfg) {
  cfg.validate();
  const double tau = curr.t - prev.t;
  if (!(tau > 0.0)) throw std::invalid_argument("estimate_step: non-positive tau");

  // Constant-velocity init from the last converged state only.
  Eigen::Vector3d v0 = Eigen::Vector3d::Zero();
  if (init.has_value() && init->converged) v0 = init->theta_hat.params;
  MotionParams theta0 = MotionParams::velocity(v0[0], v0[1], v0[2], tau);
  if (cfg.annealing) theta0 = anneal_schedule(prev, curr, theta0, cfg);

  auto f = [&](const MotionParams& th) { return joint_objective(prev, curr, th, cfg); };
  const MotionOptimResult opt = minimize(f, theta0, cfg.optimizer);

  EgoState out;
  out.t = curr.t;
  bool doppler_seen = false;
  for (const auto& t : curr.targets) doppler_seen |= t.v.has_value();
  out.used_doppler = cfg.use_doppler && doppler_seen;
  out.converged = opt.converged && !opt.diverged;
  out.theta_hat = opt.diverged ? theta0 : opt.theta_hat;

  auto fv = [&](const Eigen::VectorXd& x) {
    return f(out.theta_hat.with_params(Eigen::Vector3d(x[0], x[1], x[2])));
  };
  try {
    out.sigma = fisher_covariance(fv, out.theta_hat.params).sigma;
  } catch (const std::exception&) {
    out.converged = false;
    out.sigma = Eigen::Matrix3d::Identity() * 1e6;
  }
  return out;
}

std::vector<EgoState> run_replay(const std::vector<RadarScan>& scans,
                                 const EgoConfig& cfg) {
  if (scans.size() < 2)
    throw std::invalid_argument("run_replay: need at least two scans");
  std::vector<EgoState> states;
  states.reserve(scans.size() - 1);
  std::optional<EgoState> last;
  for (size_t k = 1; k < scans.size(); ++k) {
    last = estimate_step(scans[k - 1], scans[k], last, cfg);
    states.push_back(*last);
  }
  return states;
}

std::vector<Pose2> integrate_trajectory(const std::vector<EgoState>& states,
                                        const std::vector<double>& timestamps) {
  if (states.size() != timestamps.size())
    throw std::invalid_argument("integrate_trajectory: length mismatch");
  std::vector<Pose2> poses;
  poses.reserve(states.size() + 1);
  Pose2 p;
  p.t = states.empty() ? 0.0 : timestamps.front() - states.front().theta_hat.tau;
  poses.push_back(p);
  for (size_t k = 0; k < states.size(); ++k) {
    const MotionParams& th = states[k].theta_hat;
    const double dx = th.tx(), dy = th.ty(), dphi = th.phi_z();
    const double c = std::cos(p.heading), s = std::sin(p.heading);
    p.x += c * dx - s * dy;
    p.y += s * dx + c * dy;
    p.heading += dphi;
    p.t = timestamps[k];
    poses.push_back(p);
  }
  return poses;
}

}  // namespace radreg
