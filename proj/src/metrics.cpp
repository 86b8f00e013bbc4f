#include "radreg/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace radreg {

void PointSet::validate() const {
  if (targets.empty()) throw std::invalid_argument("PointSet: empty");
  if (dim != 1 && dim != 2) throw std::invalid_argument("PointSet: dim must be 1 or 2");
}

Eigen::VectorXd uniform_weights(const PointSet& set) {
  const auto n = static_cast<Eigen::Index>(set.targets.size());
  return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

Gaussian target_gaussian(const CartesianTarget& t, int dim) {
  return Gaussian::with_dim(dim, t.mu, t.cov);
}

GaussianMixture set_mixture(const PointSet& set, const Eigen::VectorXd& weights) {
  set.validate();
  GaussianMixture m;
  m.weights = weights;
  m.components.reserve(set.targets.size());
  for (const auto& t : set.targets) m.components.push_back(target_gaussian(t, set.dim));
  m.validate();
  return m;
}

double l2_log_distance(const Gaussian& a, const Gaussian& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("l2_log_distance: dimension mismatch");
  const Gaussian diff =
      Gaussian::with_dim(a.dim(), a.mean() - b.mean(), a.cov() + b.cov());
  return diff.log_pdf(Eigen::Vector2d::Zero());
}

double l2_distance(const Gaussian& a, const Gaussian& b) {
  return std::exp(l2_log_distance(a, b));
}

double p2d_score(const Eigen::Vector2d& point, const GaussianMixture& ref) {
  return gmm_pdf(ref, point);
}

double d2d_target_score(const CartesianTarget& moved, const PointSet& ref_set,
                        const Eigen::VectorXd& weights) {
  ref_set.validate();
  if (weights.size() != static_cast<Eigen::Index>(ref_set.targets.size()))
    throw std::invalid_argument("d2d_target_score: weights size mismatch");
  const Gaussian mk = target_gaussian(moved, ref_set.dim);
  double s = 0.0;
  for (size_t i = 0; i < ref_set.targets.size(); ++i)
    s += weights[static_cast<Eigen::Index>(i)] *
         std::exp(l2_log_distance(mk, target_gaussian(ref_set.targets[i], ref_set.dim)));
  return s;
}

NdtGrid build_ndt(const std::vector<Eigen::Vector2d>& points, double cell_size,
                  int min_points_per_cell) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("build_ndt: cell_size must be > 0");
  NdtGrid grid;
  grid.cell_size = cell_size;
  grid.min_points_per_cell = min_points_per_cell;

  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<Eigen::Vector2d>> bins;
  for (const auto& p : points) {
    const auto ix = static_cast<std::int64_t>(std::floor(p.x() / cell_size));
    const auto iy = static_cast<std::int64_t>(std::floor(p.y() / cell_size));
    bins[{ix, iy}].push_back(p);
  }
  for (const auto& [idx, pts] : bins) {
    if (static_cast<int>(pts.size()) < min_points_per_cell) continue;
    Eigen::MatrixXd samples(2, static_cast<Eigen::Index>(pts.size()));
    for (size_t i = 0; i < pts.size(); ++i) samples.col(static_cast<Eigen::Index>(i)) = pts[i];
    Eigen::Vector2d mu;
    Eigen::Matrix2d cov;
    fit_moments(samples, &mu, &cov);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    if (es.eigenvalues().minCoeff() < 1e-9) cov += 1e-9 * Eigen::Matrix2d::Identity();
    grid.cells.emplace(idx, Gaussian(mu, cov));
  }
  return grid;
}

IcpResult icp_register(const std::vector<Eigen::Vector2d>& f,
                       const std::vector<Eigen::Vector2d>& m,
                       const MotionParams& init, int max_iter, double tol) {
  if (f.empty() || m.empty()) throw std::invalid_argument("icp_register: empty set");

  IcpResult res;
  res.pose = MotionParams::pose(init.tx(), init.ty(), init.phi_z());
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    const Eigen::Matrix2d r = res.pose.rotation();
    const Eigen::Vector2d t(res.pose.tx(), res.pose.ty());

    // Match each moved point to its nearest previous-set point.
    std::vector<Eigen::Vector2d> matched(m.size());
    for (size_t k = 0; k < m.size(); ++k) {
      const Eigen::Vector2d mk = r * m[k] + t;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& fi : f) {
        const double d2 = (mk - fi).squaredNorm();
        if (d2 < best) {
          best = d2;
          matched[k] = fi;
        }
      }
    }

    // Closed-form rigid alignment of m onto the matches (2D Procrustes).
    Eigen::Vector2d cm = Eigen::Vector2d::Zero(), cf = Eigen::Vector2d::Zero();
    for (size_t k = 0; k < m.size(); ++k) {
      cm += m[k];
      cf += matched[k];
    }
    cm /= static_cast<double>(m.size());
    cf /= static_cast<double>(m.size());
    double sxx = 0.0, syy = 0.0, sxy = 0.0, syx = 0.0;
    for (size_t k = 0; k < m.size(); ++k) {
      const Eigen::Vector2d a = m[k] - cm, b = matched[k] - cf;
      sxx += a.x() * b.x();
      syy += a.y() * b.y();
      sxy += a.x() * b.y();
      syx += a.y() * b.x();
    }
    const double phi = std::atan2(sxy - syx, sxx + syy);
    const Eigen::Matrix2d rn =
        MotionParams::pose(0, 0, phi).rotation();
    const Eigen::Vector2d tn = cf - rn * cm;
    const MotionParams next = MotionParams::pose(tn.x(), tn.y(), phi);

    const double delta = (next.params - res.pose.params).norm();
    res.pose = next;
    if (delta < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace radreg
