#include <doctest.h>

#include <cmath>

#include "radreg/metrics.hpp"
#include "radreg/rng.hpp"

using namespace radreg;

namespace {

// Simpson quadrature of the product of two 1D normal densities.
double l2_quadrature_1d(double mu1, double var1, double mu2, double var2) {
  const double s = std::sqrt(std::max(var1, var2));
  const double lo = std::min(mu1, mu2) - 10.0 * s;
  const double hi = std::max(mu1, mu2) + 10.0 * s;
  const int n = 4000;
  const double h = (hi - lo) / n;
  auto f = [&](double x) {
    const double a = std::exp(-0.5 * (x - mu1) * (x - mu1) / var1) /
                     std::sqrt(2.0 * M_PI * var1);
    const double b = std::exp(-0.5 * (x - mu2) * (x - mu2) / var2) /
                     std::sqrt(2.0 * M_PI * var2);
    return a * b;
  };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

PointSet two_target_1d_set(double a, double b, double var, SetLabel label) {
  PointSet set;
  set.dim = 1;
  set.label = label;
  CartesianTarget t;
  t.cov = Eigen::Matrix2d::Zero();
  t.cov(0, 0) = var;
  t.mu = {a, 0.0};
  set.targets.push_back(t);
  t.mu = {b, 0.0};
  set.targets.push_back(t);
  return set;
}

}  // namespace

TEST_CASE("closed-form L2 matches 1D quadrature") {
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    const double mu1 = rng.uniform(-3.0, 3.0), mu2 = rng.uniform(-3.0, 3.0);
    const double v1 = rng.uniform(0.1, 2.0), v2 = rng.uniform(0.1, 2.0);
    const Gaussian a(mu1, v1), b(mu2, v2);
    CHECK(l2_distance(a, b) ==
          doctest::Approx(l2_quadrature_1d(mu1, v1, mu2, v2)).epsilon(1e-9));
  }
}

TEST_CASE("L2 closed form is symmetric and peaks at equality") {
  const Gaussian a(Eigen::Vector2d(1, 2), Eigen::Matrix2d::Identity());
  const Gaussian b(Eigen::Vector2d(3, -1), Eigen::Matrix2d::Identity() * 2.0);
  CHECK(l2_distance(a, b) == doctest::Approx(l2_distance(b, a)).epsilon(1e-14));
  CHECK(l2_distance(a, a) > l2_distance(a, b));
  CHECK(l2_log_distance(a, b) == doctest::Approx(std::log(l2_distance(a, b))));
}

TEST_CASE("L2 rejects dimension mismatch") {
  const Gaussian a(0.0, 1.0);
  const Gaussian b(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  CHECK_THROWS(l2_log_distance(a, b));
}

TEST_CASE("p2d score is the mixture density of the point") {
  PointSet set;
  set.dim = 2;
  CartesianTarget t;
  t.mu = {0.0, 0.0};
  t.cov = Eigen::Matrix2d::Identity();
  set.targets.push_back(t);
  t.mu = {4.0, 0.0};
  set.targets.push_back(t);
  const Eigen::VectorXd w = uniform_weights(set);
  const GaussianMixture mix = set_mixture(set, w);
  const Eigen::Vector2d x(1.0, -0.5);
  CHECK(p2d_score(x, mix) == doctest::Approx(gmm_pdf(mix, x)).epsilon(1e-14));
}

TEST_CASE("d2d target score matches per-pair quadrature") {
  const PointSet ref = two_target_1d_set(0.0, 4.0, 0.3, SetLabel::previous);
  CartesianTarget moved;
  moved.cov = Eigen::Matrix2d::Zero();
  moved.cov(0, 0) = 0.5;
  moved.mu = {1.0, 0.0};
  const Eigen::VectorXd w = uniform_weights(ref);
  const double direct = d2d_target_score(moved, ref, w);
  const double oracle = 0.5 * l2_quadrature_1d(1.0, 0.5, 0.0, 0.3) +
                        0.5 * l2_quadrature_1d(1.0, 0.5, 4.0, 0.3);
  CHECK(direct == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("uniform weights sum to one") {
  const PointSet set = two_target_1d_set(0.0, 1.0, 0.1, SetLabel::previous);
  const Eigen::VectorXd w = uniform_weights(set);
  CHECK(w.size() == 2);
  CHECK(w.sum() == doctest::Approx(1.0));
}

TEST_CASE("ndt grid fits per-cell gaussians") {
  std::vector<Eigen::Vector2d> pts;
  Rng rng(9);
  // Cell (0,0): cluster near (0.5, 0.5); cell (3,0): two points only.
  for (int i = 0; i < 20; ++i)
    pts.push_back(Eigen::Vector2d(0.5 + 0.1 * rng.normal(), 0.5 + 0.1 * rng.normal()));
  pts.push_back(Eigen::Vector2d(3.2, 0.5));
  pts.push_back(Eigen::Vector2d(3.7, 0.5));
  const NdtGrid grid = build_ndt(pts, 1.0, 3);
  CHECK(grid.cells.count({0, 0}) == 1);
  CHECK(grid.cells.count({3, 0}) == 0);  // below min_points_per_cell
  const Gaussian& g = grid.cells.at({0, 0});
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (int i = 0; i < 20; ++i) mean += pts[static_cast<size_t>(i)];
  mean /= 20.0;
  CHECK(g.mean()[0] == doctest::Approx(mean[0]).epsilon(1e-12));
  CHECK(g.mean()[1] == doctest::Approx(mean[1]).epsilon(1e-12));
}

TEST_CASE("icp recovers a noiseless rigid transform") {
  Rng rng(17);
  std::vector<Eigen::Vector2d> f;
  for (int i = 0; i < 12; ++i)
    f.push_back(Eigen::Vector2d(rng.uniform(-5, 5), rng.uniform(-5, 5)));
  const MotionParams truth = MotionParams::pose(0.4, -0.3, 0.15);
  const MotionParams inv = inverse(truth);
  std::vector<Eigen::Vector2d> m;
  for (const auto& p : f) {
    CartesianTarget t;
    t.mu = p;
    m.push_back(transform(t, inv).mu);
  }
  const IcpResult res = icp_register(f, m, MotionParams::pose(0, 0, 0));
  CHECK(res.converged);
  CHECK(res.pose.params[0] == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(res.pose.params[1] == doctest::Approx(-0.3).epsilon(1e-6));
  CHECK(res.pose.params[2] == doctest::Approx(0.15).epsilon(1e-6));
}

TEST_CASE("point set validation") {
  PointSet set;
  CHECK_THROWS(set.validate());  // empty
  set.targets.push_back(CartesianTarget{});
  set.dim = 3;
  CHECK_THROWS(set.validate());
  set.dim = 2;
  CHECK_NOTHROW(set.validate());
}
