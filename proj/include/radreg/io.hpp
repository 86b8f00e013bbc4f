#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "radreg/credibility.hpp"
#include "radreg/egomotion.hpp"
#include "radreg/metrics.hpp"
#include "radreg/scan.hpp"
#include "radreg/scenario.hpp"

namespace radreg {

inline constexpr const char* kToolVersion = "radreg 0.1.0";

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- radar scans (JSON lines) -------------------------------------------------
// One scan per line: {"t": s, "targets": [{"r", "phi", "sr", "sphi", "v", "sv"}]}
// with "v"/"sv" optional.

struct ScanReadResult {
  std::vector<RadarScan> scans;
  int dropped_zero_range = 0;  // targets with r <= 0, dropped with a warning
  int truncated = 0;           // targets beyond max_targets, dropped
};

void write_scans(const std::string& path, const std::vector<RadarScan>& scans);
ScanReadResult read_scans(const std::string& path, int max_targets = 48);

// --- point sets / scenario instances -------------------------------------------

void write_point_set(const std::string& path, const PointSet& set);
PointSet read_point_set(const std::string& path);

void write_instance(const std::string& path, const ScenarioInstance& inst);

// --- ground truth (CSV: t, vx, vy, omega) --------------------------------------

struct GroundTruthRow {
  double t = 0.0, vx = 0.0, vy = 0.0, omega = 0.0;
};

void write_ground_truth(const std::string& path,
                        const std::vector<GroundTruthRow>& rows);
std::vector<GroundTruthRow> read_ground_truth(const std::string& path);

// --- ego-motion outputs ---------------------------------------------------------

void write_states(const std::string& path, const std::vector<EgoState>& states);
void write_trajectory(const std::string& path, const std::vector<Pose2>& poses);

// --- credibility outputs --------------------------------------------------------

void write_report(const std::string& path, const CredibilityReport& report);
void write_trials(const std::string& path, const CredibilityReport& report);

// --- run manifests ---------------------------------------------------------------
// Serialized next to every command's outputs; re-running one reproduces the
// outputs bit-identically. No timestamps or host state.

struct RunManifest {
  std::string command;
  std::string version = kToolVersion;
  std::uint64_t seed = 0;
  nlohmann::json config;  // fully resolved, defaults materialized
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

// --- small shared helpers --------------------------------------------------------

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

std::string csv_num(double v);  // %.17g round-trip formatting

nlohmann::json vec_to_json(const Eigen::VectorXd& v);
nlohmann::json mat_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd mat_from_json(const nlohmann::json& j);

}  // namespace radreg
