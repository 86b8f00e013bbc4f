#pragma once

#include <Eigen/Dense>
#include <vector>

namespace radreg {

// log(sum(exp(v))) without overflow/underflow; empty -> -inf.
double log_sum_exp(const std::vector<double>& v);

// Gaussian density in d = 1 or 2 dimensions. Storage is fixed 2D; for d = 1
// only the leading entry/block is meaningful. Construction validates SPD
// (Cholesky) and caches the inverse and log-normalizer, so pdf evaluation in
// the registration hot path allocates nothing.
class Gaussian {
 public:
  Gaussian(double mu, double var);                                    // 1D
  Gaussian(const Eigen::Vector2d& mu, const Eigen::Matrix2d& cov);    // 2D
  static Gaussian with_dim(int dim, const Eigen::Vector2d& mu,
                           const Eigen::Matrix2d& cov);

  int dim() const { return dim_; }
  const Eigen::Vector2d& mean() const { return mu_; }
  const Eigen::Matrix2d& cov() const { return cov_; }

  double log_pdf(const Eigen::Vector2d& x) const;
  double pdf(const Eigen::Vector2d& x) const { return std::exp(log_pdf(x)); }
  double log_pdf(double x) const { return log_pdf(Eigen::Vector2d(x, 0.0)); }
  double pdf(double x) const { return std::exp(log_pdf(x)); }

  // Squared Mahalanobis distance of x to the mean.
  double mahalanobis2(const Eigen::Vector2d& x) const;

 private:
  Gaussian(int dim, const Eigen::Vector2d& mu, const Eigen::Matrix2d& cov);

  int dim_;
  Eigen::Vector2d mu_;
  Eigen::Matrix2d cov_;
  Eigen::Matrix2d cov_inv_;
  double log_norm_;  // -0.5 (log det + d log 2pi)
};

struct GaussianMixture {
  std::vector<Gaussian> components;
  Eigen::VectorXd weights;

  void validate() const;  // sizes match, weights >= 0, sum 1 within 1e-9
};

double gmm_log_pdf(const GaussianMixture& m, const Eigen::Vector2d& x);
double gmm_pdf(const GaussianMixture& m, const Eigen::Vector2d& x);

// Raw sample moments (biased 1/N covariance); no PD validation.
// samples: d x N, one column per sample.
void fit_moments(const Eigen::MatrixXd& samples, Eigen::Vector2d* mu,
                 Eigen::Matrix2d* cov);

// MLE fit; throws on < 2 samples or singular sample covariance.
Gaussian mle_fit(const Eigen::MatrixXd& samples);

struct EmResult {
  GaussianMixture mixture;
  std::vector<double> log_likelihood;  // one entry per iteration
  int iterations = 0;
  bool floored = false;  // a component hit the covariance floor
};

// EM for a k-component mixture from a caller-provided init. Covariance floor
// 1e-8 I regularizes collapsing components (flagged in the result).
EmResult em_fit(const Eigen::MatrixXd& samples, const GaussianMixture& init,
                int max_iter = 200, double tol = 1e-8);

// Deterministic initializer: means spread over per-axis sample quantiles,
// shared sample covariance, uniform weights.
GaussianMixture quantile_init(const Eigen::MatrixXd& samples, int k);

}  // namespace radreg
