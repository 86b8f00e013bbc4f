#pragma once

#include <functional>
#include <vector>

#include "radreg/optim.hpp"

namespace radreg {

enum class CovMethod { fisher, error_propagation };

struct PoseCovariance {
  Eigen::MatrixXd sigma;
  CovMethod method = CovMethod::fisher;
};

// Stacked per-measurement covariance blocks of z (block-diagonal Sigma_z).
struct InputNoise {
  std::vector<Eigen::MatrixXd> blocks;

  Eigen::MatrixXd dense() const;  // assembled block diagonal
  Eigen::Index size() const;
};

struct FisherConfig {
  double grad_check_tol = 1e-6;  // |grad| at theta_hat must be below this
  double grad_fd_step = 1e-6;
  double hess_fd_step = 1e-4;
};

// Inverse numeric Hessian of the negative log-likelihood at the optimum.
// Throws if the gradient check fails (not at optimum) or the Hessian is
// rank-deficient (message names the null direction). Result eigenvalues
// clipped at 1e-12.
PoseCovariance fisher_covariance(const Objective& f, const Eigen::VectorXd& theta_hat,
                                 const FisherConfig& cfg = {});

// Censi-style propagation: H^-1 G Sigma_z G^T H^-1, symmetrized, eigenvalues
// clipped at 0. h = d2f/dtheta2 (n_theta x n_theta), g = d2f/dz dtheta
// (n_theta x n_z).
PoseCovariance propagation_covariance(const Eigen::MatrixXd& h,
                                      const Eigen::MatrixXd& g,
                                      const InputNoise& input);

// Mixed second derivative d2f/dz dtheta by nested central differences
// (rows theta, cols z).
Eigen::MatrixXd mixed_hessian(
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& z0, const Eigen::VectorXd& theta0, double step = 1e-5);

// Implicit-function tangent dy/dx = -Phi_x / Phi_y at a point on the curve
// Phi(x, y) = 0 (checked to 1e-9). Throws on a vertical tangent.
double implicit_tangent(const std::function<double(double, double)>& phi,
                        double x0, double y0);

}  // namespace radreg
