#include "radreg/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "radreg/cost.hpp"
#include "radreg/covest.hpp"
#include "radreg/credibility.hpp"
#include "radreg/egomotion.hpp"
#include "radreg/io.hpp"
#include "radreg/optim.hpp"
#include "radreg/scenario.hpp"

namespace radreg::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// --- shared flag groups --------------------------------------------------------

struct ModelFlags {
  std::string metric = "d2d";
  std::string fusion = "likelihood";
  std::string outlier = "none";
  double alpha = 0.2;
  double uniform_density = 1e-3;
  double outlier_sigma = 100.0;  // per-axis variance of the wide Gaussian
};

void add_model_flags(CLI::App* sub, ModelFlags& m) {
  sub->add_option("--metric", m.metric, "per-target metric")
      ->check(CLI::IsMember({"p2d", "d2d"}));
  sub->add_option("--fusion", m.fusion, "score fusion")
      ->check(CLI::IsMember({"summing", "likelihood"}));
  sub->add_option("--outlier", m.outlier, "outlier model")
      ->check(CLI::IsMember({"none", "uniform", "corrupted"}));
  sub->add_option("--alpha", m.alpha, "outlier ratio");
  sub->add_option("--uniform-density", m.uniform_density,
                  "uniform outlier density");
  sub->add_option("--outlier-sigma", m.outlier_sigma,
                  "outlier Gaussian per-axis variance");
}

CostModel build_model(const ModelFlags& m) {
  CostModel model;
  model.metric = m.metric == "p2d" ? Metric::p2d : Metric::d2d;
  model.fusion = m.fusion == "summing" ? Fusion::summing : Fusion::likelihood;
  if (m.outlier == "none") {
    model.outlier.kind = OutlierKind::none;
  } else if (m.outlier == "uniform") {
    model.outlier.kind = OutlierKind::uniform;
    model.outlier.alpha = m.alpha;
    model.outlier.uniform_density = m.uniform_density;
  } else {
    model.outlier.kind = OutlierKind::corrupted_gaussian;
    model.outlier.alpha = m.alpha;
    model.outlier.sigma = Eigen::Matrix2d::Identity() * m.outlier_sigma;
  }
  try {
    model.validate();
  } catch (const std::exception& ex) {
    throw UsageError(ex.what());
  }
  return model;
}

json model_to_json(const ModelFlags& m) {
  json j;
  j["metric"] = m.metric;
  j["fusion"] = m.fusion;
  j["outlier"] = m.outlier;
  j["alpha"] = m.alpha;
  j["uniform_density"] = m.uniform_density;
  j["outlier_sigma"] = m.outlier_sigma;
  return j;
}

ModelFlags model_from_json(const json& j) {
  ModelFlags m;
  m.metric = j.at("metric").get<std::string>();
  m.fusion = j.at("fusion").get<std::string>();
  m.outlier = j.at("outlier").get<std::string>();
  m.alpha = j.at("alpha").get<double>();
  m.uniform_density = j.at("uniform_density").get<double>();
  m.outlier_sigma = j.at("outlier_sigma").get<double>();
  return m;
}

struct OptFlags {
  std::string method = "lm";
  double step_alpha = 0.2;
  double lm_lambda0 = 1e-3;
  int max_iter = 100;
  double grad_tol = 1e-8;
  double step_tol = 1e-10;
  double fd_step = 1e-6;
};

void add_opt_flags(CLI::App* sub, OptFlags& o) {
  sub->add_option("--method", o.method, "optimizer")
      ->check(CLI::IsMember({"gd", "newton", "gn", "lm"}));
  sub->add_option("--step-alpha", o.step_alpha, "gd step size");
  sub->add_option("--lm-lambda0", o.lm_lambda0, "initial lm damping");
  sub->add_option("--max-iter", o.max_iter, "iteration cap");
  sub->add_option("--grad-tol", o.grad_tol, "gradient norm tolerance");
  sub->add_option("--step-tol", o.step_tol, "step norm tolerance");
  sub->add_option("--fd-step", o.fd_step, "finite-difference base step");
}

OptimizerConfig build_opt(const OptFlags& o) {
  OptimizerConfig cfg;
  if (o.method == "gd") cfg.method = OptimMethod::gd;
  else if (o.method == "newton") cfg.method = OptimMethod::newton;
  else if (o.method == "gn") cfg.method = OptimMethod::gauss_newton;
  else cfg.method = OptimMethod::lm;
  cfg.step_alpha = o.step_alpha;
  cfg.lm_lambda0 = o.lm_lambda0;
  cfg.max_iter = o.max_iter;
  cfg.grad_tol = o.grad_tol;
  cfg.step_tol = o.step_tol;
  cfg.fd_step = o.fd_step;
  try {
    cfg.validate();
  } catch (const std::exception& ex) {
    throw UsageError(ex.what());
  }
  return cfg;
}

json opt_to_json(const OptFlags& o) {
  json j;
  j["method"] = o.method;
  j["step_alpha"] = o.step_alpha;
  j["lm_lambda0"] = o.lm_lambda0;
  j["max_iter"] = o.max_iter;
  j["grad_tol"] = o.grad_tol;
  j["step_tol"] = o.step_tol;
  j["fd_step"] = o.fd_step;
  return j;
}

OptFlags opt_from_json(const json& j) {
  OptFlags o;
  o.method = j.at("method").get<std::string>();
  o.step_alpha = j.at("step_alpha").get<double>();
  o.lm_lambda0 = j.at("lm_lambda0").get<double>();
  o.max_iter = j.at("max_iter").get<int>();
  o.grad_tol = j.at("grad_tol").get<double>();
  o.step_tol = j.at("step_tol").get<double>();
  o.fd_step = j.at("fd_step").get<double>();
  return o;
}

// --- scenario field group --------------------------------------------------------

struct ScenarioFields {
  std::string kind = "overlapped2d";
  double theta_tx = 5.0, theta_ty = 0.0, theta_phi = 15.0 * M_PI / 180.0;
  int n_inliers = 8;
  int n_outliers_prev = 0, n_outliers_curr = 0;
  int n_cluster_points = 0;
  std::string spread = "tight";
  double sigma_r = 0.2, sigma_phi = 0.03, dt = 0.2;
};

void add_scenario_flags(CLI::App* sub, ScenarioFields& s, bool allow_replay) {
  std::vector<std::string> kinds = {"oned_basic", "overlapped2d", "outlier2d",
                                    "clustered2d", "combined2d"};
  if (allow_replay) kinds.push_back("replay2d");
  sub->add_option("--kind", s.kind, "scenario kind")->check(CLI::IsMember(kinds));
  sub->add_option("--theta-tx", s.theta_tx, "true translation x [m]");
  sub->add_option("--theta-ty", s.theta_ty, "true translation y [m]");
  sub->add_option("--theta-phi", s.theta_phi, "true rotation");
  sub->add_option("--n-inliers", s.n_inliers, "inlier target count");
  sub->add_option("--n-outliers-prev", s.n_outliers_prev,
                  "outliers added to the previous set");
  sub->add_option("--n-outliers-curr", s.n_outliers_curr,
                  "outliers added to the current set");
  sub->add_option("--n-cluster-points", s.n_cluster_points,
                  "cluster points added to both sets");
  sub->add_option("--spread", s.spread, "cluster spread")
      ->check(CLI::IsMember({"tight", "loose"}));
  sub->add_option("--sigma-r", s.sigma_r, "range noise sigma [m]");
  sub->add_option("--sigma-phi", s.sigma_phi, "bearing noise sigma [rad]");
  sub->add_option("--dt", s.dt, "scan interval [s]");
}

ScenarioSpec base_spec_for(const std::string& kind, std::uint64_t seed) {
  if (kind == "oned_basic") return ScenarioSpec::oned_basic(seed);
  if (kind == "overlapped2d") return ScenarioSpec::overlapped2d(seed);
  if (kind == "outlier2d") return ScenarioSpec::outlier2d(seed);
  if (kind == "clustered2d")
    return ScenarioSpec::clustered2d(seed, ClusterSpread::tight);
  if (kind == "combined2d") return ScenarioSpec::combined2d(seed);
  throw UsageError("unknown scenario kind: " + kind);
}

// Fill every field the user did not pass from the kind preset; convert the
// rotation when it was passed in degrees.
void resolve_scenario_fields(const CLI::App* sub, ScenarioFields& s, bool degrees,
                             std::uint64_t seed) {
  if (s.kind == "replay2d") return;  // preset-free; struct defaults apply
  const ScenarioSpec base = base_spec_for(s.kind, seed);
  if (!sub->count("--theta-tx")) s.theta_tx = base.theta_g.params[0];
  if (!sub->count("--theta-ty")) s.theta_ty = base.theta_g.params[1];
  if (!sub->count("--theta-phi")) s.theta_phi = base.theta_g.params[2];
  else if (degrees) s.theta_phi *= M_PI / 180.0;
  if (!sub->count("--n-inliers")) s.n_inliers = base.n_inliers;
  if (!sub->count("--n-outliers-prev")) s.n_outliers_prev = base.n_outliers_prev;
  if (!sub->count("--n-outliers-curr")) s.n_outliers_curr = base.n_outliers_curr;
  if (!sub->count("--n-cluster-points"))
    s.n_cluster_points = base.n_cluster_points;
  if (!sub->count("--spread"))
    s.spread = base.spread == ClusterSpread::tight ? "tight" : "loose";
  if (!sub->count("--sigma-r")) s.sigma_r = base.sigma_r;
  if (!sub->count("--sigma-phi")) s.sigma_phi = base.sigma_phi;
  if (!sub->count("--dt")) s.dt = base.dt;
}

ScenarioSpec to_spec(const ScenarioFields& s, std::uint64_t seed) {
  ScenarioSpec spec = base_spec_for(s.kind, seed);
  spec.theta_g = MotionParams::pose(s.theta_tx, s.theta_ty, s.theta_phi);
  spec.n_inliers = s.n_inliers;
  spec.n_outliers_prev = s.n_outliers_prev;
  spec.n_outliers_curr = s.n_outliers_curr;
  spec.n_cluster_points = s.n_cluster_points;
  spec.spread = s.spread == "loose" ? ClusterSpread::loose : ClusterSpread::tight;
  spec.sigma_r = s.sigma_r;
  spec.sigma_phi = s.sigma_phi;
  spec.dt = s.dt;
  spec.seed = seed;
  return spec;
}

json scenario_fields_to_json(const ScenarioFields& s) {
  json j;
  j["kind"] = s.kind;
  j["theta_tx"] = s.theta_tx;
  j["theta_ty"] = s.theta_ty;
  j["theta_phi"] = s.theta_phi;
  j["n_inliers"] = s.n_inliers;
  j["n_outliers_prev"] = s.n_outliers_prev;
  j["n_outliers_curr"] = s.n_outliers_curr;
  j["n_cluster_points"] = s.n_cluster_points;
  j["spread"] = s.spread;
  j["sigma_r"] = s.sigma_r;
  j["sigma_phi"] = s.sigma_phi;
  j["dt"] = s.dt;
  return j;
}

ScenarioFields scenario_fields_from_json(const json& j) {
  ScenarioFields s;
  s.kind = j.at("kind").get<std::string>();
  s.theta_tx = j.at("theta_tx").get<double>();
  s.theta_ty = j.at("theta_ty").get<double>();
  s.theta_phi = j.at("theta_phi").get<double>();
  s.n_inliers = j.at("n_inliers").get<int>();
  s.n_outliers_prev = j.at("n_outliers_prev").get<int>();
  s.n_outliers_curr = j.at("n_outliers_curr").get<int>();
  s.n_cluster_points = j.at("n_cluster_points").get<int>();
  s.spread = j.at("spread").get<std::string>();
  s.sigma_r = j.at("sigma_r").get<double>();
  s.sigma_phi = j.at("sigma_phi").get<double>();
  s.dt = j.at("dt").get<double>();
  return s;
}

// --- scenario command --------------------------------------------------------------

struct ScenarioCmd {
  ScenarioFields fields;
  std::uint64_t seed = 1;
  std::string out = "out";
  // replay2d extras
  int n_steps = 50;
  double vx = 2.0, vy = 0.0, omega = 0.0;
  int n_landmarks = 46;
  double corridor_half_width = 12.0;
  double r_min = 1.0, r_max = 15.0;
  double sigma_v = 0.1;
  bool with_doppler = true;
  int max_targets = 48;
  double sensor_x = 0.0, sensor_y = 0.0, sensor_alpha = 0.0;
};

json to_json(const ScenarioCmd& c) {
  json j = scenario_fields_to_json(c.fields);
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["n_steps"] = c.n_steps;
  j["vx"] = c.vx;
  j["vy"] = c.vy;
  j["omega"] = c.omega;
  j["n_landmarks"] = c.n_landmarks;
  j["corridor_half_width"] = c.corridor_half_width;
  j["r_min"] = c.r_min;
  j["r_max"] = c.r_max;
  j["sigma_v"] = c.sigma_v;
  j["with_doppler"] = c.with_doppler;
  j["max_targets"] = c.max_targets;
  j["sensor_x"] = c.sensor_x;
  j["sensor_y"] = c.sensor_y;
  j["sensor_alpha"] = c.sensor_alpha;
  return j;
}

ScenarioCmd scenario_from_json(const json& j) {
  ScenarioCmd c;
  c.fields = scenario_fields_from_json(j);
  c.seed = j.at("seed").get<std::uint64_t>();
  c.out = j.at("out").get<std::string>();
  c.n_steps = j.at("n_steps").get<int>();
  c.vx = j.at("vx").get<double>();
  c.vy = j.at("vy").get<double>();
  c.omega = j.at("omega").get<double>();
  c.n_landmarks = j.at("n_landmarks").get<int>();
  c.corridor_half_width = j.at("corridor_half_width").get<double>();
  c.r_min = j.at("r_min").get<double>();
  c.r_max = j.at("r_max").get<double>();
  c.sigma_v = j.at("sigma_v").get<double>();
  c.with_doppler = j.at("with_doppler").get<bool>();
  c.max_targets = j.at("max_targets").get<int>();
  c.sensor_x = j.at("sensor_x").get<double>();
  c.sensor_y = j.at("sensor_y").get<double>();
  c.sensor_alpha = j.at("sensor_alpha").get<double>();
  return c;
}

int exec_scenario(const ScenarioCmd& cmd) {
  fs::create_directories(cmd.out);
  RunManifest man;
  man.command = "scenario";
  man.seed = cmd.seed;
  man.config = to_json(cmd);

  if (cmd.fields.kind == "replay2d") {
    ReplaySpec rs;
    rs.n_steps = cmd.n_steps;
    rs.vx = cmd.vx;
    rs.vy = cmd.vy;
    rs.omega = cmd.omega;
    rs.dt = cmd.fields.dt;
    rs.n_landmarks = cmd.n_landmarks;
    rs.corridor_half_width = cmd.corridor_half_width;
    rs.r_min = cmd.r_min;
    rs.r_max = cmd.r_max;
    rs.sigma_r = cmd.fields.sigma_r;
    rs.sigma_phi = cmd.fields.sigma_phi;
    rs.sigma_v = cmd.sigma_v;
    rs.with_doppler = cmd.with_doppler;
    rs.max_targets = cmd.max_targets;
    rs.sensor = SensorOffset{cmd.sensor_x, cmd.sensor_y, cmd.sensor_alpha};
    rs.seed = cmd.seed;
    const Replay rep = generate_replay(rs);
    const std::string scans_path = join(cmd.out, "scans.jsonl");
    const std::string gt_path = join(cmd.out, "gt.csv");
    write_scans(scans_path, rep.scans);
    std::vector<GroundTruthRow> rows;
    for (size_t k = 1; k < rep.scans.size(); ++k)
      rows.push_back({rep.scans[k].t, cmd.vx, cmd.vy, cmd.omega});
    write_ground_truth(gt_path, rows);
    man.outputs = {scans_path, gt_path};
    write_manifest(join(cmd.out, "manifest.json"), man);
    return 0;
  }

  const ScenarioSpec spec = to_spec(cmd.fields, cmd.seed);
  const ScenarioInstance inst = generate(spec);
  const std::string inst_path = join(cmd.out, "instance.json");
  const std::string f_path = join(cmd.out, "f.json");
  const std::string m_path = join(cmd.out, "m.json");
  write_instance(inst_path, inst);
  write_point_set(f_path, inst.f);
  write_point_set(m_path, inst.m);
  man.outputs = {inst_path, f_path, m_path};
  if (spec.kind != ScenarioKind::oned_basic) {
    const std::string scans_path = join(cmd.out, "scans.jsonl");
    const std::string gt_path = join(cmd.out, "gt.csv");
    write_scans(scans_path, instance_to_scans(inst));
    write_ground_truth(gt_path,
                       {{spec.dt, inst.theta_g.params[0] / spec.dt,
                         inst.theta_g.params[1] / spec.dt,
                         inst.theta_g.params[2] / spec.dt}});
    man.outputs.push_back(scans_path);
    man.outputs.push_back(gt_path);
  }
  write_manifest(join(cmd.out, "manifest.json"), man);
  return 0;
}

// --- register command ----------------------------------------------------------------

struct RegisterCmd {
  std::string f, m;
  ModelFlags model;
  OptFlags opt;
  double init_tx = 0.0, init_ty = 0.0, init_phi = 0.0;
  std::string cov = "fisher";
  std::string out = "out";
};

json to_json(const RegisterCmd& c) {
  json j;
  j["f"] = c.f;
  j["m"] = c.m;
  j["model"] = model_to_json(c.model);
  j["optimizer"] = opt_to_json(c.opt);
  j["init_tx"] = c.init_tx;
  j["init_ty"] = c.init_ty;
  j["init_phi"] = c.init_phi;
  j["cov"] = c.cov;
  j["out"] = c.out;
  return j;
}

RegisterCmd register_from_json(const json& j) {
  RegisterCmd c;
  c.f = j.at("f").get<std::string>();
  c.m = j.at("m").get<std::string>();
  c.model = model_from_json(j.at("model"));
  c.opt = opt_from_json(j.at("optimizer"));
  c.init_tx = j.at("init_tx").get<double>();
  c.init_ty = j.at("init_ty").get<double>();
  c.init_phi = j.at("init_phi").get<double>();
  c.cov = j.at("cov").get<std::string>();
  c.out = j.at("out").get<std::string>();
  return c;
}

int exec_register(const RegisterCmd& cmd) {
  const PointSet f = read_point_set(cmd.f);
  const PointSet m = read_point_set(cmd.m);
  if (f.dim != m.dim) throw UsageError("point-set dimensions differ");
  const CostModel model = build_model(cmd.model);
  const OptimizerConfig ocfg = build_opt(cmd.opt);
  const int d = f.dim == 1 ? 1 : 3;

  auto fv = [&](const Eigen::VectorXd& x) {
    const MotionParams th = d == 1 ? MotionParams::pose(x[0], 0.0, 0.0)
                                   : MotionParams::pose(x[0], x[1], x[2]);
    return objective(m, f, th, model);
  };
  Eigen::VectorXd x0(d);
  if (d == 1) x0 << cmd.init_tx;
  else x0 << cmd.init_tx, cmd.init_ty, cmd.init_phi;

  if (model.fusion == Fusion::likelihood &&
      model.outlier.kind == OutlierKind::none &&
      std::fabs(fv(x0)) >= 0.5 * std::fabs(kScoreSentinel)) {
    std::fprintf(stderr,
                 "warning: objective is underflow-saturated at the initial "
                 "guess; consider --outlier corrupted or --outlier uniform\n");
  }

  const OptimResult r = minimize_vec(fv, x0, ocfg);

  json cov_json = nullptr;
  std::string cov_error;
  if (cmd.cov != "none" && !r.diverged) {
    try {
      PoseCovariance pc;
      if (cmd.cov == "fisher") {
        pc = fisher_covariance(fv, r.theta);
      } else {
        // z = stacked current-set means; per-target blocks from the file.
        const int bd = f.dim;
        Eigen::VectorXd z0(bd * static_cast<int>(m.targets.size()));
        InputNoise noise;
        for (size_t i = 0; i < m.targets.size(); ++i) {
          if (bd == 1) {
            z0[static_cast<int>(i)] = m.targets[i].mu[0];
            noise.blocks.push_back(
                Eigen::MatrixXd::Constant(1, 1, m.targets[i].cov(0, 0)));
          } else {
            z0.segment<2>(2 * static_cast<int>(i)) = m.targets[i].mu;
            noise.blocks.push_back(m.targets[i].cov);
          }
        }
        auto fz = [&](const Eigen::VectorXd& z, const Eigen::VectorXd& x) {
          PointSet moved = m;
          for (size_t i = 0; i < moved.targets.size(); ++i) {
            if (bd == 1) moved.targets[i].mu[0] = z[static_cast<int>(i)];
            else moved.targets[i].mu = z.segment<2>(2 * static_cast<int>(i));
          }
          const MotionParams th = d == 1
                                      ? MotionParams::pose(x[0], 0.0, 0.0)
                                      : MotionParams::pose(x[0], x[1], x[2]);
          return objective(moved, f, th, model);
        };
        const Eigen::MatrixXd h = numeric_hessian(fv, r.theta, 1e-4);
        const Eigen::MatrixXd g = mixed_hessian(fz, z0, r.theta);
        pc = propagation_covariance(h, g, noise);
      }
      cov_json = json{{"method", cmd.cov}, {"sigma", mat_to_json(pc.sigma)}};
    } catch (const std::exception& ex) {
      cov_error = ex.what();
    }
  }

  fs::create_directories(cmd.out);
  json result;
  result["dim"] = f.dim;
  result["theta_hat"] = {{"tx", r.theta[0]},
                         {"ty", d == 1 ? 0.0 : r.theta[1]},
                         {"phi", d == 1 ? 0.0 : r.theta[2]}};
  result["value"] = r.value;
  result["iterations"] = r.iterations;
  result["converged"] = r.converged;
  result["diverged"] = r.diverged;
  result["message"] = r.message;
  result["covariance"] = cov_json;
  if (!cov_error.empty()) result["covariance_error"] = cov_error;
  const std::string result_path = join(cmd.out, "result.json");
  const std::string trace_path = join(cmd.out, "trace.csv");
  write_text(result_path, result.dump(2) + "\n");
  write_text(trace_path, trace_to_csv(r.trace));

  RunManifest man;
  man.command = "register";
  man.config = to_json(cmd);
  man.inputs = {cmd.f, cmd.m};
  man.outputs = {result_path, trace_path};
  write_manifest(join(cmd.out, "manifest.json"), man);
  return 0;
}

// --- surface command -------------------------------------------------------------------

struct SurfaceCmd {
  std::string f, m;
  ModelFlags model;
  double tx_min = -5.0, tx_max = 20.0;
  int tx_count = 501;
  double ty_min = 0.0, ty_max = 0.0;
  int ty_count = 0;
  double phi_min = 0.0, phi_max = 0.0;
  int phi_count = 0;
  int n_threads = 0;
  std::string out = "out";
};

json to_json(const SurfaceCmd& c) {
  json j;
  j["f"] = c.f;
  j["m"] = c.m;
  j["model"] = model_to_json(c.model);
  j["tx_min"] = c.tx_min;
  j["tx_max"] = c.tx_max;
  j["tx_count"] = c.tx_count;
  j["ty_min"] = c.ty_min;
  j["ty_max"] = c.ty_max;
  j["ty_count"] = c.ty_count;
  j["phi_min"] = c.phi_min;
  j["phi_max"] = c.phi_max;
  j["phi_count"] = c.phi_count;
  j["n_threads"] = c.n_threads;
  j["out"] = c.out;
  return j;
}

SurfaceCmd surface_from_json(const json& j) {
  SurfaceCmd c;
  c.f = j.at("f").get<std::string>();
  c.m = j.at("m").get<std::string>();
  c.model = model_from_json(j.at("model"));
  c.tx_min = j.at("tx_min").get<double>();
  c.tx_max = j.at("tx_max").get<double>();
  c.tx_count = j.at("tx_count").get<int>();
  c.ty_min = j.at("ty_min").get<double>();
  c.ty_max = j.at("ty_max").get<double>();
  c.ty_count = j.at("ty_count").get<int>();
  c.phi_min = j.at("phi_min").get<double>();
  c.phi_max = j.at("phi_max").get<double>();
  c.phi_count = j.at("phi_count").get<int>();
  c.n_threads = j.at("n_threads").get<int>();
  c.out = j.at("out").get<std::string>();
  return c;
}

int exec_surface(const SurfaceCmd& cmd) {
  if (cmd.n_threads < 0) throw UsageError("n-threads must be >= 0");
  const PointSet f = read_point_set(cmd.f);
  const PointSet m = read_point_set(cmd.m);
  if (f.dim != m.dim) throw UsageError("point-set dimensions differ");
  const CostModel model = build_model(cmd.model);

  GridSpec spec;
  spec.axes.push_back({cmd.tx_min, cmd.tx_max, cmd.tx_count});
  const bool has_ty = cmd.ty_count > 0, has_phi = cmd.phi_count > 0;
  if (has_ty != has_phi)
    throw UsageError("ty and phi axes must be given together");
  if (has_ty) {
    spec.axes.push_back({cmd.ty_min, cmd.ty_max, cmd.ty_count});
    spec.axes.push_back({cmd.phi_min, cmd.phi_max, cmd.phi_count});
  }

  const CostSurface s = cost_surface(m, f, model, spec, cmd.n_threads);
  fs::create_directories(cmd.out);
  const std::string surf_path = join(cmd.out, "surface.csv");
  write_text(surf_path, surface_to_csv(s));

  RunManifest man;
  man.command = "surface";
  man.config = to_json(cmd);
  man.inputs = {cmd.f, cmd.m};
  man.outputs = {surf_path};
  write_manifest(join(cmd.out, "manifest.json"), man);
  return 0;
}

// --- evaluate command ---------------------------------------------------------------------

struct EvaluateCmd {
  ScenarioFields fields;
  ModelFlags model;
  OptFlags opt;
  std::string cov = "fisher";
  std::string init = "gt";
  int n_trials = 200;
  std::uint64_t base_seed = 1;
  int n_threads = 0;
  std::string out = "out";
};

json to_json(const EvaluateCmd& c) {
  json j;
  j["scenario"] = scenario_fields_to_json(c.fields);
  j["model"] = model_to_json(c.model);
  j["optimizer"] = opt_to_json(c.opt);
  j["cov"] = c.cov;
  j["init"] = c.init;
  j["n_trials"] = c.n_trials;
  j["base_seed"] = c.base_seed;
  j["n_threads"] = c.n_threads;
  j["out"] = c.out;
  return j;
}

EvaluateCmd evaluate_from_json(const json& j) {
  EvaluateCmd c;
  c.fields = scenario_fields_from_json(j.at("scenario"));
  c.model = model_from_json(j.at("model"));
  c.opt = opt_from_json(j.at("optimizer"));
  c.cov = j.at("cov").get<std::string>();
  c.init = j.at("init").get<std::string>();
  c.n_trials = j.at("n_trials").get<int>();
  c.base_seed = j.at("base_seed").get<std::uint64_t>();
  c.n_threads = j.at("n_threads").get<int>();
  c.out = j.at("out").get<std::string>();
  return c;
}

int exec_evaluate(const EvaluateCmd& cmd) {
  if (cmd.n_trials < 1) throw UsageError("n-trials must be >= 1");
  if (cmd.n_threads < 0) throw UsageError("n-threads must be >= 0");
  CampaignConfig cfg;
  cfg.scenario = to_spec(cmd.fields, cmd.base_seed);
  cfg.model = build_model(cmd.model);
  cfg.optimizer = build_opt(cmd.opt);
  cfg.cov_method = CovMethod::fisher;
  cfg.init = cmd.init == "zero" ? InitPolicy::zero : InitPolicy::ground_truth;
  cfg.n_trials = cmd.n_trials;
  cfg.base_seed = cmd.base_seed;
  cfg.n_threads = cmd.n_threads;

  const CredibilityReport report = run_campaign(cfg);
  fs::create_directories(cmd.out);
  const std::string report_path = join(cmd.out, "report.json");
  const std::string trials_path = join(cmd.out, "trials.csv");
  write_report(report_path, report);
  write_trials(trials_path, report);

  RunManifest man;
  man.command = "evaluate";
  man.seed = cmd.base_seed;
  man.config = to_json(cmd);
  man.outputs = {report_path, trials_path};
  write_manifest(join(cmd.out, "manifest.json"), man);
  return 0;
}

// --- ego command -----------------------------------------------------------------------------

struct EgoCmd {
  std::string scans;
  std::string gt;
  double sensor_x = 0.0, sensor_y = 0.0, sensor_alpha = 0.0;
  double outlier_alpha = 0.2;
  double outlier_sigma = 100.0;
  bool use_doppler = false;
  bool annealing = false;
  double anneal_factor = 10.0;
  int anneal_rounds = 1;
  double sigma_v = 0.1;
  int max_targets = 48;
  OptFlags opt;
  std::string out = "out";
};

json to_json(const EgoCmd& c) {
  json j;
  j["scans"] = c.scans;
  j["gt"] = c.gt;
  j["sensor_x"] = c.sensor_x;
  j["sensor_y"] = c.sensor_y;
  j["sensor_alpha"] = c.sensor_alpha;
  j["outlier_alpha"] = c.outlier_alpha;
  j["outlier_sigma"] = c.outlier_sigma;
  j["use_doppler"] = c.use_doppler;
  j["annealing"] = c.annealing;
  j["anneal_factor"] = c.anneal_factor;
  j["anneal_rounds"] = c.anneal_rounds;
  j["sigma_v"] = c.sigma_v;
  j["max_targets"] = c.max_targets;
  j["optimizer"] = opt_to_json(c.opt);
  j["out"] = c.out;
  return j;
}

EgoCmd ego_from_json(const json& j) {
  EgoCmd c;
  c.scans = j.at("scans").get<std::string>();
  c.gt = j.at("gt").get<std::string>();
  c.sensor_x = j.at("sensor_x").get<double>();
  c.sensor_y = j.at("sensor_y").get<double>();
  c.sensor_alpha = j.at("sensor_alpha").get<double>();
  c.outlier_alpha = j.at("outlier_alpha").get<double>();
  c.outlier_sigma = j.at("outlier_sigma").get<double>();
  c.use_doppler = j.at("use_doppler").get<bool>();
  c.annealing = j.at("annealing").get<bool>();
  c.anneal_factor = j.at("anneal_factor").get<double>();
  c.anneal_rounds = j.at("anneal_rounds").get<int>();
  c.sigma_v = j.at("sigma_v").get<double>();
  c.max_targets = j.at("max_targets").get<int>();
  c.opt = opt_from_json(j.at("optimizer"));
  c.out = j.at("out").get<std::string>();
  return c;
}

int exec_ego(const EgoCmd& cmd) {
  const ScanReadResult rr = read_scans(cmd.scans, cmd.max_targets);
  if (rr.dropped_zero_range > 0)
    std::fprintf(stderr, "warning: dropped %d zero-range targets\n",
                 rr.dropped_zero_range);
  if (rr.truncated > 0)
    std::fprintf(stderr, "warning: truncated %d targets beyond the cap\n",
                 rr.truncated);

  EgoConfig cfg;
  cfg.sensor = SensorOffset{cmd.sensor_x, cmd.sensor_y, cmd.sensor_alpha};
  cfg.outlier_alpha = cmd.outlier_alpha;
  cfg.outlier_sigma = Eigen::Matrix2d::Identity() * cmd.outlier_sigma;
  cfg.use_doppler = cmd.use_doppler;
  cfg.annealing = cmd.annealing;
  cfg.anneal_factor = cmd.anneal_factor;
  cfg.anneal_rounds = cmd.anneal_rounds;
  cfg.sigma_v_default = cmd.sigma_v;
  cfg.max_targets = cmd.max_targets;
  cfg.optimizer = build_opt(cmd.opt);

  const std::vector<EgoState> states = run_replay(rr.scans, cfg);
  std::vector<double> timestamps;
  for (size_t k = 1; k < rr.scans.size(); ++k) timestamps.push_back(rr.scans[k].t);
  const std::vector<Pose2> poses = integrate_trajectory(states, timestamps);

  fs::create_directories(cmd.out);
  const std::string states_path = join(cmd.out, "states.jsonl");
  const std::string traj_path = join(cmd.out, "trajectory.csv");
  write_states(states_path, states);
  write_trajectory(traj_path, poses);

  RunManifest man;
  man.command = "ego";
  man.config = to_json(cmd);
  man.inputs = {cmd.scans};
  man.outputs = {states_path, traj_path};

  if (!cmd.gt.empty()) {
    const std::vector<GroundTruthRow> gt = read_ground_truth(cmd.gt);
    const size_t n = std::min(gt.size(), states.size());
    if (n == 0) throw UsageError("ground-truth file is empty");
    // Score converged steps only: a failed step carries a sentinel covariance
    // that would swamp the aggregates.
    std::vector<size_t> used;
    for (size_t k = 0; k < n; ++k)
      if (states[k].converged) used.push_back(k);
    auto stats = [&](auto err_of) {
      double mean = 0.0;
      for (size_t k : used) mean += err_of(k);
      mean /= static_cast<double>(used.size());
      double var = 0.0, rmse = 0.0;
      for (size_t k : used) {
        const double e = err_of(k);
        var += (e - mean) * (e - mean);
        rmse += e * e;
      }
      var /= static_cast<double>(used.size());
      rmse = std::sqrt(rmse / static_cast<double>(used.size()));
      return json{{"mean_error", mean}, {"error_variance", var}, {"rmse", rmse}};
    };
    json scores;
    scores["n_steps"] = n;
    scores["n_converged"] = used.size();
    if (!used.empty()) {
      scores["vx"] =
          stats([&](size_t k) { return states[k].theta_hat.params[0] - gt[k].vx; });
      scores["vy"] =
          stats([&](size_t k) { return states[k].theta_hat.params[1] - gt[k].vy; });
      scores["omega"] = stats(
          [&](size_t k) { return states[k].theta_hat.params[2] - gt[k].omega; });
      double mean_sigma_vx = 0.0;
      for (size_t k : used) mean_sigma_vx += std::sqrt(states[k].sigma(0, 0));
      scores["mean_sigma_vx"] = mean_sigma_vx / static_cast<double>(used.size());
    }
    const std::string scores_path = join(cmd.out, "scores.json");
    write_text(scores_path, scores.dump(2) + "\n");
    man.inputs.push_back(cmd.gt);
    man.outputs.push_back(scores_path);
  }

  write_manifest(join(cmd.out, "manifest.json"), man);
  return 0;
}

// --- replay dispatch ---------------------------------------------------------------------------

int exec_manifest(const std::string& path) {
  const RunManifest man = read_manifest(path);
  try {
    if (man.command == "scenario") return exec_scenario(scenario_from_json(man.config));
    if (man.command == "register") return exec_register(register_from_json(man.config));
    if (man.command == "surface") return exec_surface(surface_from_json(man.config));
    if (man.command == "evaluate") return exec_evaluate(evaluate_from_json(man.config));
    if (man.command == "ego") return exec_ego(ego_from_json(man.config));
  } catch (const json::exception& ex) {
    throw IoError("manifest config malformed: " + std::string(ex.what()));
  }
  throw UsageError("unknown command in manifest: " + man.command);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"point-set registration and radar ego-motion toolkit"};
  app.require_subcommand(1);

  ScenarioCmd sc;
  bool sc_degrees = false;
  auto* sub_scenario =
      app.add_subcommand("scenario", "generate a deterministic synthetic scenario");
  add_scenario_flags(sub_scenario, sc.fields, true);
  sub_scenario->add_option("--seed", sc.seed, "scenario seed");
  sub_scenario->add_option("--out", sc.out, "output directory");
  sub_scenario->add_flag("--degrees", sc_degrees, "rotations given in degrees");
  sub_scenario->add_option("--n-steps", sc.n_steps, "replay2d: step count");
  sub_scenario->add_option("--vx", sc.vx, "replay2d: body velocity x [m/s]");
  sub_scenario->add_option("--vy", sc.vy, "replay2d: body velocity y [m/s]");
  sub_scenario->add_option("--omega", sc.omega, "replay2d: yaw rate [rad/s]");
  sub_scenario->add_option("--n-landmarks", sc.n_landmarks, "replay2d: landmark count");
  sub_scenario->add_option("--corridor-half-width", sc.corridor_half_width,
                           "replay2d: corridor half width [m]");
  sub_scenario->add_option("--r-min", sc.r_min, "replay2d: min range [m]");
  sub_scenario->add_option("--r-max", sc.r_max, "replay2d: max range [m]");
  sub_scenario->add_option("--sigma-v", sc.sigma_v, "replay2d: Doppler noise [m/s]");
  sub_scenario->add_flag("--doppler,!--no-doppler", sc.with_doppler,
                         "replay2d: Doppler measurements on/off");
  sub_scenario->add_option("--max-targets", sc.max_targets, "replay2d: per-scan cap");
  sub_scenario->add_option("--sensor-x", sc.sensor_x, "sensor mount x [m]");
  sub_scenario->add_option("--sensor-y", sc.sensor_y, "sensor mount y [m]");
  sub_scenario->add_option("--sensor-alpha", sc.sensor_alpha, "sensor mount yaw [rad]");

  RegisterCmd rc;
  bool rc_degrees = false;
  auto* sub_register =
      app.add_subcommand("register", "estimate the transform aligning two point sets");
  sub_register->add_option("--f", rc.f, "previous (reference) point set")->required();
  sub_register->add_option("--m", rc.m, "current (moving) point set")->required();
  add_model_flags(sub_register, rc.model);
  add_opt_flags(sub_register, rc.opt);
  sub_register->add_option("--init-tx", rc.init_tx, "initial tx [m]");
  sub_register->add_option("--init-ty", rc.init_ty, "initial ty [m]");
  sub_register->add_option("--init-phi", rc.init_phi, "initial rotation");
  sub_register->add_flag("--degrees", rc_degrees, "rotations given in degrees");
  sub_register->add_option("--cov", rc.cov, "covariance method")
      ->check(CLI::IsMember({"fisher", "propagation", "none"}));
  sub_register->add_option("--out", rc.out, "output directory");

  SurfaceCmd fc;
  bool fc_degrees = false;
  auto* sub_surface =
      app.add_subcommand("surface", "dense objective evaluation over a pose grid");
  sub_surface->add_option("--f", fc.f, "previous (reference) point set")->required();
  sub_surface->add_option("--m", fc.m, "current (moving) point set")->required();
  add_model_flags(sub_surface, fc.model);
  sub_surface->add_option("--tx-min", fc.tx_min, "tx axis start");
  sub_surface->add_option("--tx-max", fc.tx_max, "tx axis end");
  sub_surface->add_option("--tx-count", fc.tx_count, "tx axis point count");
  double tx_step = 0.0, ty_step = 0.0, phi_step = 0.0;
  sub_surface->add_option("--tx-step", tx_step, "tx axis step (alternative to count)")
      ->excludes("--tx-count");
  sub_surface->add_option("--ty-min", fc.ty_min, "ty axis start");
  sub_surface->add_option("--ty-max", fc.ty_max, "ty axis end");
  sub_surface->add_option("--ty-count", fc.ty_count, "ty axis point count");
  sub_surface->add_option("--ty-step", ty_step, "ty axis step")->excludes("--ty-count");
  sub_surface->add_option("--phi-min", fc.phi_min, "rotation axis start");
  sub_surface->add_option("--phi-max", fc.phi_max, "rotation axis end");
  sub_surface->add_option("--phi-count", fc.phi_count, "rotation axis point count");
  sub_surface->add_option("--phi-step", phi_step, "rotation axis step")
      ->excludes("--phi-count");
  sub_surface->add_flag("--degrees", fc_degrees, "rotations given in degrees");
  sub_surface->add_option("--n-threads", fc.n_threads,
                          "grid parallelism (1 = serial reference)");
  sub_surface->add_option("--out", fc.out, "output directory");

  EvaluateCmd ec;
  bool ec_degrees = false;
  auto* sub_evaluate =
      app.add_subcommand("evaluate", "Monte-Carlo credibility campaign");
  add_scenario_flags(sub_evaluate, ec.fields, false);
  add_model_flags(sub_evaluate, ec.model);
  add_opt_flags(sub_evaluate, ec.opt);
  sub_evaluate->add_flag("--degrees", ec_degrees, "rotations given in degrees");
  sub_evaluate->add_option("--cov", ec.cov, "covariance method")
      ->check(CLI::IsMember({"fisher"}));
  sub_evaluate->add_option("--init", ec.init, "initial guess policy")
      ->check(CLI::IsMember({"gt", "zero"}));
  sub_evaluate->add_option("--n-trials", ec.n_trials, "trial count");
  sub_evaluate->add_option("--base-seed", ec.base_seed, "campaign base seed");
  sub_evaluate->add_option("--n-threads", ec.n_threads,
                           "trial parallelism (1 = serial reference)");
  sub_evaluate->add_option("--out", ec.out, "output directory");

  EgoCmd gc;
  auto* sub_ego = app.add_subcommand("ego", "ego-motion estimation over a scan file");
  sub_ego->add_option("--scans", gc.scans, "scan file (JSON lines)")->required();
  sub_ego->add_option("--gt", gc.gt, "ground-truth CSV for scoring");
  sub_ego->add_option("--sensor-x", gc.sensor_x, "sensor mount x [m]");
  sub_ego->add_option("--sensor-y", gc.sensor_y, "sensor mount y [m]");
  sub_ego->add_option("--sensor-alpha", gc.sensor_alpha, "sensor mount yaw [rad]");
  sub_ego->add_option("--alpha", gc.outlier_alpha, "outlier ratio");
  sub_ego->add_option("--outlier-sigma", gc.outlier_sigma,
                      "outlier Gaussian per-axis variance");
  sub_ego->add_flag("--doppler", gc.use_doppler, "use Doppler measurements");
  sub_ego->add_flag("--anneal", gc.annealing, "covariance annealing init");
  sub_ego->add_option("--anneal-factor", gc.anneal_factor, "annealing sigma factor");
  sub_ego->add_option("--anneal-rounds", gc.anneal_rounds, "annealing passes");
  sub_ego->add_option("--sigma-v", gc.sigma_v, "default Doppler sigma [m/s]");
  sub_ego->add_option("--max-targets", gc.max_targets, "per-scan target cap");
  add_opt_flags(sub_ego, gc.opt);
  sub_ego->add_option("--out", gc.out, "output directory");

  std::string manifest_path;
  auto* sub_replay =
      app.add_subcommand("replay", "re-execute a run manifest bit-identically");
  sub_replay->add_option("manifest", manifest_path, "manifest JSON path")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("radreg");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sub_scenario->parsed()) {
      resolve_scenario_fields(sub_scenario, sc.fields, sc_degrees, sc.seed);
      if (sc_degrees && sub_scenario->count("--sensor-alpha"))
        sc.sensor_alpha *= M_PI / 180.0;
      return exec_scenario(sc);
    }
    if (sub_register->parsed()) {
      if (rc_degrees) rc.init_phi *= M_PI / 180.0;
      return exec_register(rc);
    }
    if (sub_surface->parsed()) {
      auto apply_step = [](double mn, double mx, double step, int& count) {
        if (step <= 0.0) throw UsageError("axis step must be > 0");
        if (mx < mn) throw UsageError("axis max below min");
        count = static_cast<int>(std::lround((mx - mn) / step)) + 1;
      };
      if (sub_surface->count("--tx-step"))
        apply_step(fc.tx_min, fc.tx_max, tx_step, fc.tx_count);
      if (sub_surface->count("--ty-step"))
        apply_step(fc.ty_min, fc.ty_max, ty_step, fc.ty_count);
      if (fc_degrees) {
        fc.phi_min *= M_PI / 180.0;
        fc.phi_max *= M_PI / 180.0;
        phi_step *= M_PI / 180.0;
      }
      if (sub_surface->count("--phi-step"))
        apply_step(fc.phi_min, fc.phi_max, phi_step, fc.phi_count);
      return exec_surface(fc);
    }
    if (sub_evaluate->parsed()) {
      resolve_scenario_fields(sub_evaluate, ec.fields, ec_degrees, ec.base_seed);
      if (ec.fields.kind == "replay2d")
        throw UsageError("evaluate does not take the replay2d kind");
      return exec_evaluate(ec);
    }
    if (sub_ego->parsed()) return exec_ego(gc);
    if (sub_replay->parsed()) return exec_manifest(manifest_path);
    throw UsageError("no command given");
  } catch (const UsageError& ex) {
    std::fprintf(stderr, "usage error: %s\n", ex.what());
    return 1;
  } catch (const IoError& ex) {
    std::fprintf(stderr, "io error: %s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 3;
  }
}

}  // namespace radreg::cli
