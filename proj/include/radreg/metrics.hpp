#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "radreg/gauss.hpp"
#include "radreg/geometry.hpp"

namespace radreg {

enum class SetLabel { previous, current };

// A registration point set. dim = 1 restricts targets to the x axis; their
// covariance is the top-left 1x1 block.
struct PointSet {
  std::vector<CartesianTarget> targets;
  int dim = 2;
  SetLabel label = SetLabel::previous;

  void validate() const;
};

// Equal per-target weights w_i = 1/|set|.
Eigen::VectorXd uniform_weights(const PointSet& set);

// View one target as a Gaussian of the set's dimension.
Gaussian target_gaussian(const CartesianTarget& t, int dim);

// Previous set as a GMM with the given weights.
GaussianMixture set_mixture(const PointSet& set, const Eigen::VectorXd& weights);

// Closed-form L2 inner product of two Gaussians:
// integral N1 N2 = N(0 | mu1-mu2, cov1+cov2). log variant is the hot path.
double l2_log_distance(const Gaussian& a, const Gaussian& b);
double l2_distance(const Gaussian& a, const Gaussian& b);

// Mahalanobis point-to-distribution score: transformed point under the
// previous-set mixture.
double p2d_score(const Eigen::Vector2d& point, const GaussianMixture& ref);

// Sum_i w_i N(0 | moved.mu - mu_i, moved.cov + cov_i).
double d2d_target_score(const CartesianTarget& moved, const PointSet& ref_set,
                        const Eigen::VectorXd& weights);

// --- NDT -------------------------------------------------------------------

struct NdtGrid {
  double cell_size = 1.0;
  int min_points_per_cell = 3;
  std::map<std::pair<std::int64_t, std::int64_t>, Gaussian> cells;
};

// Per-cell MLE fit; cells with fewer than min_points_per_cell points omitted;
// near-singular scatter regularized by a 1e-9 I floor.
NdtGrid build_ndt(const std::vector<Eigen::Vector2d>& points, double cell_size,
                  int min_points_per_cell);

// --- ICP baseline ------------------------------------------------------------

struct IcpResult {
  MotionParams pose;
  bool converged = false;
  int iterations = 0;
};

// Nearest-neighbor matching + closed-form 2D rigid alignment, iterated until
// the pose update falls below tol. Brute-force correspondences (sets <= 48).
IcpResult icp_register(const std::vector<Eigen::Vector2d>& f,
                       const std::vector<Eigen::Vector2d>& m,
                       const MotionParams& init, int max_iter = 50,
                       double tol = 1e-10);

}  // namespace radreg
