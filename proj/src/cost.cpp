#include "radreg/cost.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace radreg {

void OutlierModel::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::invalid_argument("OutlierModel: alpha must be in [0, 1)");
  if (kind == OutlierKind::uniform && !(uniform_density > 0.0))
    throw std::invalid_argument("OutlierModel: uniform density must be positive");
  if (kind == OutlierKind::corrupted_gaussian) {
    const double det = sigma(0, 0) * sigma(1, 1) - sigma(0, 1) * sigma(1, 0);
    if (!(sigma(0, 0) > 0.0) || !(det > 0.0))
      throw std::invalid_argument("OutlierModel: sigma_outlier must be PD");
  }
}

void CostModel::validate() const {
  outlier.validate();
  if (weights.size() > 0 && std::fabs(weights.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("CostModel: weights must sum to 1");
}

namespace {

Eigen::VectorXd effective_weights(const CostModel& model, const PointSet& f) {
  return model.weights.size() > 0 ? model.weights : uniform_weights(f);
}

}  // namespace

double target_mixture_score(const CartesianTarget& moved, const PointSet& f,
                            const CostModel& model, double inlier_log_offset) {
  f.validate();
  model.validate();
  const Eigen::VectorXd w = effective_weights(model, f);
  if (w.size() != static_cast<Eigen::Index>(f.targets.size()))
    throw std::invalid_argument("target_mixture_score: weights size mismatch");

  const double alpha =
      model.outlier.kind == OutlierKind::none ? 0.0 : model.outlier.alpha;
  const double log_in_w = alpha < 1.0 ? std::log1p(-alpha) : -std::numeric_limits<double>::infinity();
  const double log_out_w = alpha > 0.0 ? std::log(alpha) : -std::numeric_limits<double>::infinity();

  const Gaussian mk = target_gaussian(moved, f.dim);

  std::vector<double> per_ref;
  per_ref.reserve(f.targets.size());
  for (size_t i = 0; i < f.targets.size(); ++i) {
    const double wi = w[static_cast<Eigen::Index>(i)];
    if (wi <= 0.0) continue;
    const auto& ref = f.targets[i];

    double log_inlier;
    if (model.metric == Metric::d2d) {
      log_inlier = l2_log_distance(mk, target_gaussian(ref, f.dim));
    } else {
      log_inlier = target_gaussian(ref, f.dim).log_pdf(moved.mu);
    }

    std::vector<double> branches;
    branches.reserve(2);
    branches.push_back(log_in_w + log_inlier + inlier_log_offset);
    if (alpha > 0.0) {
      double log_outlier;
      switch (model.outlier.kind) {
        case OutlierKind::uniform:
          log_outlier = model.outlier.uniform_density > 0.0
                            ? std::log(model.outlier.uniform_density)
                            : -std::numeric_limits<double>::infinity();
          break;
        case OutlierKind::corrupted_gaussian:
          log_outlier =
              Gaussian::with_dim(f.dim, ref.mu, model.outlier.sigma).log_pdf(moved.mu);
          break;
        default:
          log_outlier = -std::numeric_limits<double>::infinity();
      }
      branches.push_back(log_out_w + log_outlier);
    }
    per_ref.push_back(std::log(wi) + log_sum_exp(branches));
  }

  const double s = log_sum_exp(per_ref);
  return s < kLogUnderflow ? kScoreSentinel : s;
}

double objective(const PointSet& m, const PointSet& f, const MotionParams& theta,
                 const CostModel& model) {
  m.validate();
  f.validate();
  double acc = 0.0;
  for (const auto& target : m.targets) {
    const double s = target_mixture_score(transform(target, theta), f, model);
    acc += model.fusion == Fusion::summing ? std::exp(s) : s;
  }
  return -acc;
}

std::int64_t GridSpec::total() const {
  std::int64_t n = 1;
  for (const auto& a : axes) {
    if (a.count < 1) throw std::invalid_argument("GridSpec: axis count must be >= 1");
    n *= a.count;
  }
  return n;
}

std::vector<double> GridSpec::coords(std::int64_t flat) const {
  std::vector<double> c(axes.size());
  for (auto i = static_cast<std::int64_t>(axes.size()) - 1; i >= 0; --i) {
    const auto& ax = axes[static_cast<size_t>(i)];
    c[static_cast<size_t>(i)] = ax.value(static_cast<int>(flat % ax.count));
    flat /= ax.count;
  }
  return c;
}

CostSurface evaluate_grid(const std::function<double(const std::vector<double>&)>& f,
                          const GridSpec& spec, int n_threads) {
  if (spec.axes.empty()) throw std::invalid_argument("evaluate_grid: no axes");
  const std::int64_t n = spec.total();
  if (n > spec.cell_budget)
    throw std::invalid_argument("evaluate_grid: grid exceeds cell budget");

  CostSurface s;
  s.spec = spec;
  s.values.resize(static_cast<size_t>(n));

  if (n_threads == 1) {
    for (std::int64_t i = 0; i < n; ++i)
      s.values[static_cast<size_t>(i)] = f(spec.coords(i));
  } else {
#ifdef _OPENMP
    if (n_threads > 1) omp_set_num_threads(n_threads);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
      s.values[static_cast<size_t>(i)] = f(spec.coords(i));
#else
    for (std::int64_t i = 0; i < n; ++i)
      s.values[static_cast<size_t>(i)] = f(spec.coords(i));
#endif
  }

  s.argopt = 0;
  for (std::int64_t i = 1; i < n; ++i)
    if (s.values[static_cast<size_t>(i)] < s.values[static_cast<size_t>(s.argopt)])
      s.argopt = i;
  return s;
}

CostSurface cost_surface(const PointSet& m, const PointSet& f,
                         const CostModel& model, const GridSpec& spec,
                         int n_threads) {
  if (spec.axes.size() != 1 && spec.axes.size() != 3)
    throw std::invalid_argument("cost_surface: grid must have 1 (tx) or 3 (pose) axes");
  auto eval = [&](const std::vector<double>& c) {
    const MotionParams theta = c.size() == 1
                                   ? MotionParams::pose(c[0], 0.0, 0.0)
                                   : MotionParams::pose(c[0], c[1], c[2]);
    return objective(m, f, theta, model);
  };
  return evaluate_grid(eval, spec, n_threads);
}

std::string surface_to_csv(const CostSurface& s) {
  std::string out;
  const size_t na = s.spec.axes.size();
  for (size_t a = 0; a < na; ++a) {
    char h[16];
    std::snprintf(h, sizeof h, "axis%zu,", a);
    out += h;
  }
  out += "value,saturated\n";
  char buf[64];
  for (std::int64_t i = 0; i < s.spec.total(); ++i) {
    const auto c = s.spec.coords(i);
    for (double x : c) {
      std::snprintf(buf, sizeof buf, "%.17g,", x);
      out += buf;
    }
    const double v = s.values[static_cast<size_t>(i)];
    const bool sat = std::fabs(v) >= 0.5 * std::fabs(kScoreSentinel);
    std::snprintf(buf, sizeof buf, "%.17g,%d\n", v, sat ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace radreg
