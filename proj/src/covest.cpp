#include "radreg/covest.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace radreg {

Eigen::MatrixXd InputNoise::dense() const {
  Eigen::Index n = 0;
  for (const auto& b : blocks) {
    if (b.rows() != b.cols()) throw std::invalid_argument("InputNoise: non-square block");
    n += b.rows();
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("InputNoise: block not PD");
    out.block(at, at, b.rows(), b.cols()) = b;
    at += b.rows();
  }
  return out;
}

Eigen::Index InputNoise::size() const {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  return n;
}

PoseCovariance fisher_covariance(const Objective& f, const Eigen::VectorXd& theta_hat,
                                 const FisherConfig& cfg) {
  const Eigen::VectorXd grad = numeric_gradient(f, theta_hat, cfg.grad_fd_step);
  if (grad.norm() >= cfg.grad_check_tol) {
    char msg[128];
    std::snprintf(msg, sizeof msg,
                  "fisher_covariance: not at an optimum (|grad| = %.3e >= %.1e)",
                  grad.norm(), cfg.grad_check_tol);
    throw std::runtime_error(msg);
  }

  const Eigen::MatrixXd h = numeric_hessian(f, theta_hat, cfg.hess_fd_step);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double max_ev = ev.cwiseAbs().maxCoeff();
  const double rank_tol = 1e-12 * std::max(1.0, max_ev);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] <= rank_tol) {
      std::string msg = "fisher_covariance: Hessian rank-deficient, null direction (";
      char num[32];
      for (Eigen::Index j = 0; j < es.eigenvectors().rows(); ++j) {
        std::snprintf(num, sizeof num, "%s%.4f", j ? ", " : "", es.eigenvectors()(j, i));
        msg += num;
      }
      msg += ")";
      throw std::runtime_error(msg);
    }
  }

  Eigen::VectorXd inv_clipped = ev.cwiseInverse().cwiseMax(1e-12);
  Eigen::MatrixXd sigma =
      es.eigenvectors() * inv_clipped.asDiagonal() * es.eigenvectors().transpose();
  sigma = (0.5 * (sigma + sigma.transpose())).eval();
  return {sigma, CovMethod::fisher};
}

PoseCovariance propagation_covariance(const Eigen::MatrixXd& h,
                                      const Eigen::MatrixXd& g,
                                      const InputNoise& input) {
  if (h.rows() != h.cols() || h.rows() != g.rows())
    throw std::invalid_argument("propagation_covariance: dimension mismatch");
  const Eigen::MatrixXd sigma_z = input.dense();
  if (sigma_z.rows() != g.cols())
    throw std::invalid_argument("propagation_covariance: Sigma_z vs G mismatch");

  Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
  if (!lu.isInvertible())
    throw std::runtime_error("propagation_covariance: singular Hessian");
  const Eigen::MatrixXd hinv = lu.inverse();

  Eigen::MatrixXd sigma = hinv * g * sigma_z * g.transpose() * hinv.transpose();
  sigma = (0.5 * (sigma + sigma.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  sigma = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return {0.5 * (sigma + sigma.transpose()), CovMethod::error_propagation};
}

Eigen::MatrixXd mixed_hessian(
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& z0, const Eigen::VectorXd& theta0, double step) {
  Eigen::MatrixXd g(theta0.size(), z0.size());
  Eigen::VectorXd z = z0, th = theta0;
  for (Eigen::Index a = 0; a < theta0.size(); ++a) {
    const double ht = step * std::max(1.0, std::fabs(theta0[a]));
    for (Eigen::Index b = 0; b < z0.size(); ++b) {
      const double hz = step * std::max(1.0, std::fabs(z0[b]));
      double v = 0.0;
      for (int st = -1; st <= 1; st += 2) {
        for (int sz = -1; sz <= 1; sz += 2) {
          th[a] = theta0[a] + st * ht;
          z[b] = z0[b] + sz * hz;
          v += st * sz * f(z, th);
        }
      }
      th[a] = theta0[a];
      z[b] = z0[b];
      g(a, b) = v / (4.0 * ht * hz);
    }
  }
  return g;
}

double implicit_tangent(const std::function<double(double, double)>& phi,
                        double x0, double y0) {
  if (std::fabs(phi(x0, y0)) > 1e-9)
    throw std::invalid_argument("implicit_tangent: point does not satisfy Phi = 0");
  const double hx = 1e-6 * std::max(1.0, std::fabs(x0));
  const double hy = 1e-6 * std::max(1.0, std::fabs(y0));
  const double phi_x = (phi(x0 + hx, y0) - phi(x0 - hx, y0)) / (2.0 * hx);
  const double phi_y = (phi(x0, y0 + hy) - phi(x0, y0 - hy)) / (2.0 * hy);
  if (std::fabs(phi_y) < 1e-12)
    throw std::runtime_error("implicit_tangent: vertical tangent (Phi_y ~ 0)");
  return -phi_x / phi_y;
}

}  // namespace radreg
