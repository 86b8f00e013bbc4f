#pragma once

#include <functional>
#include <string>
#include <vector>

#include "radreg/metrics.hpp"

namespace radreg {

// Per-target scores below this would underflow a linear-domain double
// (log DBL_MIN); they saturate to kScoreSentinel instead of -inf, which
// reproduces the "cost surface becomes zero" failure mode observably.
inline constexpr double kLogUnderflow = -708.396418532264;
inline constexpr double kScoreSentinel = -1e12;

enum class Metric { p2d, d2d };
enum class Fusion { summing, likelihood };
enum class OutlierKind { none, uniform, corrupted_gaussian };

struct OutlierModel {
  OutlierKind kind = OutlierKind::none;
  double alpha = 0.0;  // outlier ratio in [0, 1)
  double uniform_density = 0.0;                              // uniform kind
  Eigen::Matrix2d sigma = Eigen::Matrix2d::Identity() * 100.0;  // corrupted kind

  void validate() const;
};

struct CostModel {
  Metric metric = Metric::d2d;
  Fusion fusion = Fusion::likelihood;
  OutlierModel outlier;
  Eigen::VectorXd weights;  // empty -> uniform 1/|F|

  void validate() const;
};

// log[ sum_i w_i ((1-alpha) inlier_i + alpha outlier_i) ] via log-sum-exp.
// inlier_log_offset is added to the inlier branch in the log domain (the
// ego-motion Doppler factor multiplies only that branch); 0 for plain cost.
// Saturates to kScoreSentinel on linear-domain underflow.
double target_mixture_score(const CartesianTarget& moved, const PointSet& f,
                            const CostModel& model,
                            double inlier_log_offset = 0.0);

// Registration objective (to minimize). Every target of m is transformed by
// theta, then fused: summing -> -sum exp(score), likelihood -> -sum score.
double objective(const PointSet& m, const PointSet& f, const MotionParams& theta,
                 const CostModel& model);

// --- dense grid evaluation ---------------------------------------------------

struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  int count = 1;  // number of grid points, inclusive of both ends

  double value(int i) const {
    return count == 1 ? min : min + (max - min) * i / (count - 1);
  }
};

struct GridSpec {
  std::vector<GridAxis> axes;
  std::int64_t cell_budget = 10'000'000;

  std::int64_t total() const;
  std::vector<double> coords(std::int64_t flat) const;  // row-major decode
};

struct CostSurface {
  GridSpec spec;
  std::vector<double> values;  // row-major over axes
  std::int64_t argopt = 0;     // flat index of the minimum

  std::vector<double> argopt_coords() const { return spec.coords(argopt); }
};

// Dense evaluation of an arbitrary objective over the grid. n_threads = 1 is
// the serial reference path; any other value (0 = hardware default) runs the
// OpenMP kernel. Output is bit-identical regardless of thread count: cells
// are independent and written by flat index.
CostSurface evaluate_grid(const std::function<double(const std::vector<double>&)>& f,
                          const GridSpec& spec, int n_threads = 0);

// Registration surface over theta. 1 axis sweeps tx only; 3 axes sweep the
// full pose (tx, ty, phi_z).
CostSurface cost_surface(const PointSet& m, const PointSet& f,
                         const CostModel& model, const GridSpec& spec,
                         int n_threads = 0);

// CSV serialization: one row per cell, coordinate columns then value and a
// saturated marker column.
std::string surface_to_csv(const CostSurface& s);

}  // namespace radreg
