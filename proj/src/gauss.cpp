#include "radreg/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace radreg {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kEmCovFloor = 1e-8;
}  // namespace

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;  // all -inf (or a stray inf propagates)
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

Gaussian::Gaussian(int dim, const Eigen::Vector2d& mu, const Eigen::Matrix2d& cov)
    : dim_(dim), mu_(mu), cov_(cov) {
  double log_det;
  if (dim_ == 1) {
    const double var = cov_(0, 0);
    if (!(var > 0.0) || !std::isfinite(var))
      throw std::invalid_argument("Gaussian: 1D variance must be positive");
    cov_(0, 1) = cov_(1, 0) = 0.0;
    cov_(1, 1) = 1.0;  // unused block kept benign
    cov_inv_.setZero();
    cov_inv_(0, 0) = 1.0 / var;
    log_det = std::log(var);
  } else if (dim_ == 2) {
    if (std::fabs(cov_(0, 1) - cov_(1, 0)) >
        1e-9 * (1.0 + cov_.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("Gaussian: covariance not symmetric");
    cov_ = (0.5 * (cov_ + cov_.transpose())).eval();
    const double det = cov_(0, 0) * cov_(1, 1) - cov_(0, 1) * cov_(1, 0);
    // Sylvester criterion == Cholesky success for 2x2.
    if (!(cov_(0, 0) > 0.0) || !(det > 0.0) || !std::isfinite(det))
      throw std::invalid_argument("Gaussian: covariance not positive definite");
    cov_inv_ << cov_(1, 1), -cov_(0, 1), -cov_(1, 0), cov_(0, 0);
    cov_inv_ /= det;
    log_det = std::log(det);
  } else {
    throw std::invalid_argument("Gaussian: dim must be 1 or 2");
  }
  log_norm_ = -0.5 * (log_det + dim_ * kLog2Pi);
}

Gaussian::Gaussian(double mu, double var)
    : Gaussian(1, Eigen::Vector2d(mu, 0.0),
               (Eigen::Matrix2d() << var, 0.0, 0.0, 1.0).finished()) {}

Gaussian::Gaussian(const Eigen::Vector2d& mu, const Eigen::Matrix2d& cov)
    : Gaussian(2, mu, cov) {}

Gaussian Gaussian::with_dim(int dim, const Eigen::Vector2d& mu,
                            const Eigen::Matrix2d& cov) {
  return Gaussian(dim, mu, cov);
}

double Gaussian::mahalanobis2(const Eigen::Vector2d& x) const {
  if (dim_ == 1) {
    const double d = x[0] - mu_[0];
    return d * d * cov_inv_(0, 0);
  }
  const Eigen::Vector2d d = x - mu_;
  return d.dot(cov_inv_ * d);
}

double Gaussian::log_pdf(const Eigen::Vector2d& x) const {
  return log_norm_ - 0.5 * mahalanobis2(x);
}

void GaussianMixture::validate() const {
  if (components.empty() || weights.size() != static_cast<Eigen::Index>(components.size()))
    throw std::invalid_argument("GaussianMixture: components/weights size mismatch");
  if ((weights.array() < 0.0).any())
    throw std::invalid_argument("GaussianMixture: negative weight");
  if (std::fabs(weights.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("GaussianMixture: weights must sum to 1");
  for (const auto& c : components)
    if (c.dim() != components.front().dim())
      throw std::invalid_argument("GaussianMixture: mixed dimensions");
}

double gmm_log_pdf(const GaussianMixture& m, const Eigen::Vector2d& x) {
  std::vector<double> terms;
  terms.reserve(m.components.size());
  for (size_t i = 0; i < m.components.size(); ++i) {
    const double w = m.weights[static_cast<Eigen::Index>(i)];
    if (w <= 0.0) continue;
    terms.push_back(std::log(w) + m.components[i].log_pdf(x));
  }
  return log_sum_exp(terms);
}

double gmm_pdf(const GaussianMixture& m, const Eigen::Vector2d& x) {
  return std::exp(gmm_log_pdf(m, x));
}

void fit_moments(const Eigen::MatrixXd& samples, Eigen::Vector2d* mu,
                 Eigen::Matrix2d* cov) {
  const int d = static_cast<int>(samples.rows());
  const Eigen::Index n = samples.cols();
  if (d < 1 || d > 2) throw std::invalid_argument("fit_moments: dim must be 1 or 2");
  if (n < 1) throw std::invalid_argument("fit_moments: no samples");
  const Eigen::VectorXd mean = samples.rowwise().mean();
  const Eigen::MatrixXd centered = samples.colwise() - mean;
  const Eigen::MatrixXd scatter =
      centered * centered.transpose() / static_cast<double>(n);
  mu->setZero();
  cov->setIdentity();
  mu->head(d) = mean;
  cov->topLeftCorner(d, d) = scatter;
}

Gaussian mle_fit(const Eigen::MatrixXd& samples) {
  if (samples.cols() < 2) throw std::invalid_argument("mle_fit: need >= 2 samples");
  Eigen::Vector2d mu;
  Eigen::Matrix2d cov;
  fit_moments(samples, &mu, &cov);
  try {
    return Gaussian::with_dim(static_cast<int>(samples.rows()), mu, cov);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("mle_fit: singular sample covariance");
  }
}

EmResult em_fit(const Eigen::MatrixXd& samples, const GaussianMixture& init,
                int max_iter, double tol) {
  init.validate();
  const int d = static_cast<int>(samples.rows());
  const Eigen::Index n = samples.cols();
  const size_t k = init.components.size();
  if (init.components.front().dim() != d)
    throw std::invalid_argument("em_fit: init dimension mismatch");
  if (n < 2) throw std::invalid_argument("em_fit: need >= 2 samples");

  EmResult res;
  res.mixture = init;

  Eigen::MatrixXd resp(static_cast<Eigen::Index>(k), n);
  for (int iter = 0; iter < max_iter; ++iter) {
    // E-step: responsibilities and total log-likelihood.
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Vector2d x = Eigen::Vector2d::Zero();
      x.head(d) = samples.col(i);
      std::vector<double> lt(k);
      for (size_t j = 0; j < k; ++j)
        lt[j] = std::log(res.mixture.weights[static_cast<Eigen::Index>(j)]) +
                res.mixture.components[j].log_pdf(x);
      const double lse = log_sum_exp(lt);
      ll += lse;
      for (size_t j = 0; j < k; ++j)
        resp(static_cast<Eigen::Index>(j), i) = std::exp(lt[j] - lse);
    }
    res.log_likelihood.push_back(ll);
    res.iterations = iter + 1;
    if (iter > 0 &&
        ll - res.log_likelihood[res.log_likelihood.size() - 2] < tol)
      break;

    // M-step.
    std::vector<Gaussian> comps;
    comps.reserve(k);
    Eigen::VectorXd w(static_cast<Eigen::Index>(k));
    for (size_t j = 0; j < k; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double zk = resp.row(jj).sum();
      w[jj] = zk / static_cast<double>(n);
      Eigen::VectorXd mu_d = samples * resp.row(jj).transpose() / zk;
      Eigen::MatrixXd centered = samples.colwise() - mu_d;
      Eigen::MatrixXd cov_d =
          centered * resp.row(jj).asDiagonal() * centered.transpose() / zk;
      Eigen::Vector2d mu = Eigen::Vector2d::Zero();
      Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
      mu.head(d) = mu_d;
      cov.topLeftCorner(d, d) = cov_d;
      // Covariance floor against collapsing components.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.topLeftCorner(d, d));
      if (es.eigenvalues().minCoeff() < kEmCovFloor) {
        cov.topLeftCorner(d, d) += kEmCovFloor * Eigen::MatrixXd::Identity(d, d);
        res.floored = true;
      }
      comps.push_back(Gaussian::with_dim(d, mu, cov));
    }
    res.mixture.components = std::move(comps);
    res.mixture.weights = w / w.sum();
  }
  return res;
}

GaussianMixture quantile_init(const Eigen::MatrixXd& samples, int k) {
  if (k < 1) throw std::invalid_argument("quantile_init: k must be >= 1");
  const int d = static_cast<int>(samples.rows());
  const Eigen::Index n = samples.cols();
  if (n < 2 * k) throw std::invalid_argument("quantile_init: too few samples");

  Eigen::Vector2d mu0;
  Eigen::Matrix2d cov0;
  fit_moments(samples, &mu0, &cov0);
  // Shared covariance must be PD even for degenerate inputs.
  cov0.topLeftCorner(d, d) += 1e-8 * Eigen::MatrixXd::Identity(d, d);

  GaussianMixture m;
  m.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  for (int j = 0; j < k; ++j) {
    const double q = (j + 0.5) / k;
    Eigen::Vector2d mu = mu0;
    for (int a = 0; a < d; ++a) {
      std::vector<double> axis(samples.row(a).begin(), samples.row(a).end());
      std::sort(axis.begin(), axis.end());
      mu[a] = axis[static_cast<size_t>(q * (static_cast<double>(n) - 1.0))];
    }
    m.components.push_back(Gaussian::with_dim(d, mu, cov0));
  }
  return m;
}

}  // namespace radreg
