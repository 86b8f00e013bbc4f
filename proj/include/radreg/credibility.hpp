#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "radreg/cost.hpp"
#include "radreg/covest.hpp"
#include "radreg/optim.hpp"
#include "radreg/scenario.hpp"

namespace radreg {

// One Monte-Carlo registration trial: estimate, claimed covariance, truth.
struct TrialRecord {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd sigma_hat;
  Eigen::VectorXd theta_g;
  std::uint64_t seed = 0;

  Eigen::VectorXd error() const { return theta_hat - theta_g; }
};

// Normalized estimation error squared of a single trial.
double nees(const TrialRecord& trial);

// Chi-square acceptance interval for the summed NEES statistic N*eps_bar.
std::pair<double, double> chi2_bounds(int n_runs, int n_theta, double p_low = 0.05,
                                      double p_high = 0.95);

struct NeesTestResult {
  std::vector<double> values;
  double mean = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  bool pass = false;
};

NeesTestResult nees_test(const std::vector<TrialRecord>& trials, double p_low = 0.05,
                         double p_high = 0.95);

struct NciResult {
  Eigen::MatrixXd actual_cov;        // sample covariance of the errors, 1/N normalized
  std::vector<double> rho;           // per-trial credibility ratio; NaN when error == 0
  double gamma = 0.0;                // noncredibility index
  double nu = 0.0;                   // inclination indicator
  int excluded_zero_error = 0;
};

NciResult nci(const std::vector<TrialRecord>& trials);

// Draws trials whose estimates are exactly consistent with the claimed
// covariance: theta_hat ~ N(theta_g, sigma). Reference generator for gating.
std::vector<TrialRecord> synthesize_credible_trials(const Eigen::VectorXd& theta_g,
                                                    const Eigen::MatrixXd& sigma,
                                                    int n_trials, std::uint64_t seed);

enum class InitPolicy { ground_truth, zero };

struct CampaignConfig {
  ScenarioSpec scenario;
  CostModel model;
  OptimizerConfig optimizer;
  CovMethod cov_method = CovMethod::fisher;
  InitPolicy init = InitPolicy::ground_truth;
  int n_trials = 200;
  std::uint64_t base_seed = 1;
  int n_threads = 0;  // 0 = library default, 1 = serial reference

  void validate() const;
};

struct CampaignTrial {
  int index = 0;
  std::uint64_t seed = 0;
  TrialRecord record;
  double nees_value = 0.0;
  double rho = 0.0;
  double translation_error = 0.0;
  bool converged = false;
  bool excluded = false;
  std::string note;
};

struct CredibilityReport {
  std::vector<CampaignTrial> trials;    // all trials, by index
  NeesTestResult nees;                  // over included trials
  NciResult nci;                        // over included trials
  int n_runs = 0;                       // included trial count
  int n_theta = 0;
  int excluded_count = 0;
  std::vector<double> reference_nees;   // self-consistent sampling reference
  std::string reference_label = "self_consistent_reference";
};

CredibilityReport run_campaign(const CampaignConfig& cfg);

}  // namespace radreg
