#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "radreg/geometry.hpp"

namespace radreg {

using Objective = std::function<double(const Eigen::VectorXd&)>;
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

enum class OptimMethod { gd, newton, gauss_newton, lm };

struct OptimizerConfig {
  OptimMethod method = OptimMethod::lm;
  double step_alpha = 0.2;   // gd step size
  double lm_lambda0 = 1e-3;  // initial damping
  int max_iter = 100;
  double grad_tol = 1e-8;
  double step_tol = 1e-10;
  double fd_step = 1e-6;  // scaled by max(1, |theta_j|) per dimension

  void validate() const;
};

struct TracePoint {
  Eigen::VectorXd theta;
  double value = 0.0;
  double grad_norm = 0.0;
};

struct OptimResult {
  Eigen::VectorXd theta;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  std::string message;
  std::vector<TracePoint> trace;
};

// MotionParams-typed result for the registration/ego pipeline.
struct MotionOptimResult {
  MotionParams theta_hat;
  double objective_value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  std::string message;
  std::vector<TracePoint> trace;
};

// Central differences, per-dimension step fd_step * max(1, |theta_j|).
// Throws naming the dimension on a non-finite evaluation.
Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& theta,
                                 double fd_step);

// Central second differences, symmetrized.
Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& theta,
                                double fd_step);

// Scalar-objective minimization (gd / newton / gauss_newton / lm per config).
// In scalar mode gauss_newton uses the PD-projected numeric Hessian.
OptimResult minimize_vec(const Objective& f, const Eigen::VectorXd& init,
                         const OptimizerConfig& cfg);

// Same, over the raw parameters of a MotionParams (kind and tau preserved).
MotionOptimResult minimize(const std::function<double(const MotionParams&)>& f,
                           const MotionParams& init, const OptimizerConfig& cfg);

// Residual mode: minimizes 0.5 |r(theta)|^2 with J^T J in place of the
// Hessian (gauss_newton / lm; gd uses -alpha J^T r). jac empty -> numeric.
OptimResult minimize_residuals(const ResidualFn& r,
                               const std::optional<JacobianFn>& jac,
                               const Eigen::VectorXd& init,
                               const OptimizerConfig& cfg);

// Trace as CSV (iter, theta..., f, grad_norm).
std::string trace_to_csv(const std::vector<TracePoint>& trace);

}  // namespace radreg
