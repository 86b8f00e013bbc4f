#include "radreg/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace radreg {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

json parse_json(const std::string& text, const std::string& where) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IoError("malformed JSON in " + where);
  return j;
}

double num_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number())
    throw IoError("missing numeric field '" + std::string(key) + "' in " + where);
  return j[key].get<double>();
}

json target_to_json(const PolarTarget& t) {
  json j;
  j["r"] = t.r;
  j["phi"] = t.phi;
  j["sr"] = t.sigma_r;
  j["sphi"] = t.sigma_phi;
  if (t.v.has_value()) j["v"] = *t.v;
  if (t.sigma_v.has_value()) j["sv"] = *t.sigma_v;
  return j;
}

const char* label_name(SetLabel label) {
  return label == SetLabel::previous ? "previous" : "current";
}

const char* kind_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::oned_basic: return "oned_basic";
    case ScenarioKind::overlapped2d: return "overlapped2d";
    case ScenarioKind::outlier2d: return "outlier2d";
    case ScenarioKind::clustered2d: return "clustered2d";
    case ScenarioKind::combined2d: return "combined2d";
  }
  return "unknown";
}

json motion_to_json(const MotionParams& m) {
  json j;
  j["kind"] = m.kind == MotionParams::Kind::pose ? "pose" : "velocity";
  j["params"] = {m.params[0], m.params[1], m.params[2]};
  j["tau"] = m.tau;
  return j;
}

}  // namespace

std::string csv_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd mat_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw IoError("expected a nested array matrix");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols)
      throw IoError("ragged matrix rows");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_scans(const std::string& path, const std::vector<RadarScan>& scans) {
  auto out = open_out(path);
  for (const auto& scan : scans) {
    json j;
    j["t"] = scan.t;
    json targets = json::array();
    for (const auto& t : scan.targets) targets.push_back(target_to_json(t));
    j["targets"] = targets;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

ScanReadResult read_scans(const std::string& path, int max_targets) {
  if (max_targets < 1) throw IoError("read_scans: max_targets < 1");
  auto in = open_in(path);
  ScanReadResult result;
  std::string line;
  int line_no = 0;
  double last_t = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const json j = parse_json(line, where);
    RadarScan scan;
    scan.t = num_field(j, "t", where);
    if (!result.scans.empty() && !(scan.t > last_t))
      throw IoError("timestamps not strictly increasing at " + where);
    last_t = scan.t;
    if (!j.contains("targets") || !j["targets"].is_array())
      throw IoError("missing 'targets' array in " + where);
    for (const auto& tj : j["targets"]) {
      PolarTarget t;
      t.r = num_field(tj, "r", where);
      t.phi = num_field(tj, "phi", where);
      t.sigma_r = num_field(tj, "sr", where);
      t.sigma_phi = num_field(tj, "sphi", where);
      if (tj.contains("v")) t.v = tj["v"].get<double>();
      if (tj.contains("sv")) t.sigma_v = tj["sv"].get<double>();
      if (!(t.r > 0.0)) {
        ++result.dropped_zero_range;
        continue;
      }
      if (static_cast<int>(scan.targets.size()) >= max_targets) {
        ++result.truncated;
        continue;
      }
      try {
        t.validate();
      } catch (const std::exception& ex) {
        throw IoError(std::string(ex.what()) + " at " + where);
      }
      scan.targets.push_back(t);
    }
    result.scans.push_back(std::move(scan));
  }
  return result;
}

void write_point_set(const std::string& path, const PointSet& set) {
  json j;
  j["dim"] = set.dim;
  j["label"] = label_name(set.label);
  json targets = json::array();
  for (const auto& t : set.targets) {
    json tj;
    if (set.dim == 1) {
      tj["mu"] = {t.mu[0]};
      tj["cov"] = {{t.cov(0, 0)}};
    } else {
      tj["mu"] = {t.mu[0], t.mu[1]};
      tj["cov"] = {{t.cov(0, 0), t.cov(0, 1)}, {t.cov(1, 0), t.cov(1, 1)}};
    }
    targets.push_back(tj);
  }
  j["targets"] = targets;
  write_text(path, j.dump(2) + "\n");
}

PointSet read_point_set(const std::string& path) {
  const json j = parse_json(read_text(path), path);
  PointSet set;
  if (!j.contains("dim") || !j["dim"].is_number_integer())
    throw IoError("missing 'dim' in " + path);
  set.dim = j["dim"].get<int>();
  if (set.dim != 1 && set.dim != 2) throw IoError("dim must be 1 or 2 in " + path);
  const std::string label = j.value("label", "previous");
  if (label != "previous" && label != "current")
    throw IoError("label must be previous|current in " + path);
  set.label = label == "previous" ? SetLabel::previous : SetLabel::current;
  if (!j.contains("targets") || !j["targets"].is_array())
    throw IoError("missing 'targets' in " + path);
  for (const auto& tj : j["targets"]) {
    if (!tj.contains("mu") || !tj.contains("cov"))
      throw IoError("target missing mu/cov in " + path);
    CartesianTarget t;
    t.mu = Eigen::Vector2d::Zero();
    t.cov = Eigen::Matrix2d::Zero();
    const auto& mu = tj["mu"];
    const auto& cov = tj["cov"];
    if (set.dim == 1) {
      if (mu.size() != 1 || cov.size() != 1 || cov[0].size() != 1)
        throw IoError("1D target shape mismatch in " + path);
      t.mu[0] = mu[0].get<double>();
      t.cov(0, 0) = cov[0][0].get<double>();
    } else {
      if (mu.size() != 2 || cov.size() != 2)
        throw IoError("2D target shape mismatch in " + path);
      t.mu = Eigen::Vector2d(mu[0].get<double>(), mu[1].get<double>());
      const Eigen::MatrixXd c = mat_from_json(cov);
      if (c.rows() != 2 || c.cols() != 2)
        throw IoError("2D covariance shape mismatch in " + path);
      t.cov = c;
    }
    set.targets.push_back(t);
  }
  try {
    set.validate();
  } catch (const std::exception& ex) {
    throw IoError(std::string(ex.what()) + " in " + path);
  }
  return set;
}

void write_instance(const std::string& path, const ScenarioInstance& inst) {
  json j;
  j["kind"] = kind_name(inst.spec.kind);
  j["seed"] = inst.spec.seed;
  j["theta_g"] = motion_to_json(inst.theta_g);
  auto set_json = [](const PointSet& set) {
    json s;
    s["dim"] = set.dim;
    s["label"] = label_name(set.label);
    json targets = json::array();
    for (const auto& t : set.targets) {
      json tj;
      if (set.dim == 1) {
        tj["mu"] = {t.mu[0]};
        tj["cov"] = {{t.cov(0, 0)}};
      } else {
        tj["mu"] = {t.mu[0], t.mu[1]};
        tj["cov"] = {{t.cov(0, 0), t.cov(0, 1)}, {t.cov(1, 0), t.cov(1, 1)}};
      }
      targets.push_back(tj);
    }
    s["targets"] = targets;
    return s;
  };
  j["f"] = set_json(inst.f);
  j["m"] = set_json(inst.m);
  json corr = json::array();
  for (const auto& [fi, mi] : inst.correspondence) corr.push_back({fi, mi});
  j["correspondence"] = corr;
  j["outliers_prev"] = inst.outliers_prev;
  j["outliers_curr"] = inst.outliers_curr;
  auto pts_json = [](const std::vector<Eigen::Vector2d>& pts) {
    json a = json::array();
    for (const auto& p : pts) a.push_back({p[0], p[1]});
    return a;
  };
  j["f_true"] = pts_json(inst.f_true);
  j["m_true"] = pts_json(inst.m_true);
  write_text(path, j.dump(2) + "\n");
}

void write_ground_truth(const std::string& path,
                        const std::vector<GroundTruthRow>& rows) {
  std::string out = "t,vx,vy,omega\n";
  for (const auto& r : rows) {
    out += csv_num(r.t) + "," + csv_num(r.vx) + "," + csv_num(r.vy) + "," +
           csv_num(r.omega) + "\n";
  }
  write_text(path, out);
}

std::vector<GroundTruthRow> read_ground_truth(const std::string& path) {
  auto in = open_in(path);
  std::vector<GroundTruthRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (line_no == 1 && line.rfind("t,", 0) == 0) continue;  // header
    GroundTruthRow r;
    char trailing = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf %c", &r.t, &r.vx, &r.vy,
                    &r.omega, &trailing) < 4)
      throw IoError("malformed ground-truth row at " + path + ":" +
                    std::to_string(line_no));
    rows.push_back(r);
  }
  return rows;
}

void write_states(const std::string& path, const std::vector<EgoState>& states) {
  auto out = open_out(path);
  for (const auto& s : states) {
    json j;
    j["t"] = s.t;
    j["vx"] = s.theta_hat.params[0];
    j["vy"] = s.theta_hat.params[1];
    j["omega"] = s.theta_hat.params[2];
    j["tau"] = s.theta_hat.tau;
    j["converged"] = s.converged;
    j["used_doppler"] = s.used_doppler;
    json sigma = json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) sigma.push_back(s.sigma(r, c));
    j["sigma"] = sigma;  // row-major 3x3
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_trajectory(const std::string& path, const std::vector<Pose2>& poses) {
  std::string out = "t,x,y,heading\n";
  for (const auto& p : poses) {
    out += csv_num(p.t) + "," + csv_num(p.x) + "," + csv_num(p.y) + "," +
           csv_num(p.heading) + "\n";
  }
  write_text(path, out);
}

void write_report(const std::string& path, const CredibilityReport& report) {
  json j;
  j["n_runs"] = report.n_runs;
  j["n_theta"] = report.n_theta;
  j["excluded_count"] = report.excluded_count;
  json nees;
  nees["mean"] = report.nees.mean;
  nees["l1"] = report.nees.l1;
  nees["l2"] = report.nees.l2;
  nees["pass"] = report.nees.pass;
  nees["values"] = report.nees.values;
  j["nees"] = nees;
  json nci;
  nci["gamma"] = report.nci.gamma;
  nci["nu"] = report.nci.nu;
  nci["excluded_zero_error"] = report.nci.excluded_zero_error;
  nci["rho"] = report.nci.rho;
  nci["actual_cov"] = mat_to_json(report.nci.actual_cov);
  j["nci"] = nci;
  j["reference_label"] = report.reference_label;
  j["reference_nees"] = report.reference_nees;
  write_text(path, j.dump(2) + "\n");
}

void write_trials(const std::string& path, const CredibilityReport& report) {
  const int d = report.n_theta;
  std::string out = "index,seed";
  for (int k = 0; k < d; ++k) out += ",theta_hat_" + std::to_string(k);
  for (int k = 0; k < d; ++k) out += ",error_" + std::to_string(k);
  out += ",nees,rho,converged,excluded\n";
  for (const auto& t : report.trials) {
    out += std::to_string(t.index) + "," + std::to_string(t.seed);
    for (int k = 0; k < d; ++k) out += "," + csv_num(t.record.theta_hat[k]);
    const Eigen::VectorXd err = t.record.error();
    for (int k = 0; k < d; ++k) out += "," + csv_num(err[k]);
    out += "," + csv_num(t.nees_value) + "," + csv_num(t.rho) + "," +
           std::to_string(t.converged ? 1 : 0) + "," +
           std::to_string(t.excluded ? 1 : 0) + "\n";
  }
  write_text(path, out);
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  json j;
  j["command"] = manifest.command;
  j["version"] = manifest.version;
  j["seed"] = manifest.seed;
  j["config"] = manifest.config;
  j["inputs"] = manifest.inputs;
  j["outputs"] = manifest.outputs;
  write_text(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::string& path) {
  const json j = parse_json(read_text(path), path);
  RunManifest m;
  if (!j.contains("command") || !j["command"].is_string())
    throw IoError("manifest missing 'command' in " + path);
  m.command = j["command"].get<std::string>();
  m.version = j.value("version", std::string(kToolVersion));
  m.seed = j.value("seed", std::uint64_t{0});
  if (!j.contains("config")) throw IoError("manifest missing 'config' in " + path);
  m.config = j["config"];
  if (j.contains("inputs")) m.inputs = j["inputs"].get<std::vector<std::string>>();
  if (j.contains("outputs")) m.outputs = j["outputs"].get<std::vector<std::string>>();
  return m;
}

}  // namespace radreg
