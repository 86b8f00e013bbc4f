#include <doctest.h>

#include <cmath>

#include "radreg/cost.hpp"

using namespace radreg;

namespace {

PointSet set_1d(std::initializer_list<double> xs, double var,
                SetLabel label = SetLabel::previous) {
  PointSet set;
  set.dim = 1;
  set.label = label;
  for (double x : xs) {
    CartesianTarget t;
    t.mu = {x, 0.0};
    t.cov = Eigen::Matrix2d::Zero();
    t.cov(0, 0) = var;
    set.targets.push_back(t);
  }
  return set;
}

// Linear-domain oracle in long double for benign magnitudes.
long double mixture_score_oracle(const CartesianTarget& moved, const PointSet& f,
                                 const CostModel& model) {
  const Eigen::VectorXd w = model.weights.size() ? model.weights : uniform_weights(f);
  const double alpha =
      model.outlier.kind == OutlierKind::none ? 0.0 : model.outlier.alpha;
  long double acc = 0.0L;
  for (size_t i = 0; i < f.targets.size(); ++i) {
    const Gaussian inlier = target_gaussian(f.targets[i], f.dim);
    const long double in_d = model.metric == Metric::d2d
                                 ? static_cast<long double>(
                                       l2_distance(target_gaussian(moved, f.dim), inlier))
                                 : static_cast<long double>(inlier.pdf(moved.mu));
    long double out_d = 0.0L;
    if (model.outlier.kind == OutlierKind::uniform) {
      out_d = model.outlier.uniform_density;
    } else if (model.outlier.kind == OutlierKind::corrupted_gaussian) {
      out_d = Gaussian::with_dim(f.dim, f.targets[i].mu, model.outlier.sigma)
                  .pdf(moved.mu);
    }
    acc += static_cast<long double>(w[static_cast<Eigen::Index>(i)]) *
           ((1.0L - alpha) * in_d + alpha * out_d);
  }
  return logl(acc);
}

}  // namespace

TEST_CASE("mixture score matches the linear-domain oracle") {
  const PointSet f = set_1d({0.0, 4.0, 7.0}, 0.3);
  CartesianTarget moved;
  moved.mu = {1.2, 0.0};
  moved.cov = Eigen::Matrix2d::Zero();
  moved.cov(0, 0) = 0.4;

  CostModel model;  // d2d likelihood, no outlier model
  CHECK(target_mixture_score(moved, f, model) ==
        doctest::Approx(static_cast<double>(mixture_score_oracle(moved, f, model)))
            .epsilon(1e-12));

  model.outlier.kind = OutlierKind::uniform;
  model.outlier.alpha = 0.2;
  model.outlier.uniform_density = 1e-3;
  CHECK(target_mixture_score(moved, f, model) ==
        doctest::Approx(static_cast<double>(mixture_score_oracle(moved, f, model)))
            .epsilon(1e-12));

  model.outlier.kind = OutlierKind::corrupted_gaussian;
  model.outlier.sigma = Eigen::Matrix2d::Identity() * 100.0;
  CHECK(target_mixture_score(moved, f, model) ==
        doctest::Approx(static_cast<double>(mixture_score_oracle(moved, f, model)))
            .epsilon(1e-12));

  model.metric = Metric::p2d;
  CHECK(target_mixture_score(moved, f, model) ==
        doctest::Approx(static_cast<double>(mixture_score_oracle(moved, f, model)))
            .epsilon(1e-12));
}

TEST_CASE("inlier log offset shifts the pure-inlier score exactly") {
  const PointSet f = set_1d({0.0, 4.0}, 0.3);
  CartesianTarget moved;
  moved.mu = {0.5, 0.0};
  moved.cov = Eigen::Matrix2d::Zero();
  moved.cov(0, 0) = 0.3;
  CostModel model;  // no outlier branch -> offset is a pure shift
  const double base = target_mixture_score(moved, f, model);
  const double shifted = target_mixture_score(moved, f, model, -0.7);
  CHECK(shifted == doctest::Approx(base - 0.7).epsilon(1e-12));
}

TEST_CASE("far targets saturate to the sentinel, never -inf") {
  const PointSet f = set_1d({0.0}, 0.0225);
  CartesianTarget moved;
  moved.mu = {20.0, 0.0};  // mahalanobis^2 ~ 8900 >> 708
  moved.cov = Eigen::Matrix2d::Zero();
  moved.cov(0, 0) = 0.0225;
  CostModel model;
  const double s = target_mixture_score(moved, f, model);
  CHECK(s == kScoreSentinel);
  CHECK(std::isfinite(s));

  // The corrupted-Gaussian branch keeps the same pair finite.
  model.outlier.kind = OutlierKind::corrupted_gaussian;
  model.outlier.alpha = 0.2;
  model.outlier.sigma = Eigen::Matrix2d::Identity() * 100.0;
  CHECK(target_mixture_score(moved, f, model) > kScoreSentinel);
  CHECK(std::isfinite(target_mixture_score(moved, f, model)));
}

TEST_CASE("saturated inlier with uniform outlier equals the outlier floor") {
  const PointSet f = set_1d({0.0, 2.0}, 0.01);
  CartesianTarget moved;
  moved.mu = {100.0, 0.0};
  moved.cov = Eigen::Matrix2d::Zero();
  moved.cov(0, 0) = 0.01;
  CostModel model;
  model.outlier.kind = OutlierKind::uniform;
  model.outlier.alpha = 0.2;
  model.outlier.uniform_density = 1e-3;
  // Inlier branch underflows; what remains is log(sum_i w_i alpha d).
  CHECK(target_mixture_score(moved, f, model) ==
        doctest::Approx(std::log(0.2 * 1e-3)).epsilon(1e-9));
}

TEST_CASE("objective fusion modes") {
  const PointSet f = set_1d({0.0, 4.0}, 0.3);
  const PointSet m = set_1d({-2.0, 2.0}, 0.3, SetLabel::current);
  CostModel model;

  // Likelihood = -sum of scores; summing = -sum of exp(scores).
  const MotionParams theta = MotionParams::pose(2.0, 0.0, 0.0);
  double sum_scores = 0.0, sum_exp = 0.0;
  for (const auto& t : m.targets) {
    const double s = target_mixture_score(transform(t, theta), f, model);
    sum_scores += s;
    sum_exp += std::exp(s);
  }
  model.fusion = Fusion::likelihood;
  CHECK(objective(m, f, theta, model) == doctest::Approx(-sum_scores).epsilon(1e-14));
  model.fusion = Fusion::summing;
  CHECK(objective(m, f, theta, model) == doctest::Approx(-sum_exp).epsilon(1e-14));
}

TEST_CASE("objective is minimal at perfect alignment") {
  const PointSet f = set_1d({0.0, 4.0, 9.0}, 0.2);
  const PointSet m = set_1d({-2.0, 2.0, 7.0}, 0.2, SetLabel::current);
  CostModel model;
  const double at_truth = objective(m, f, MotionParams::pose(2, 0, 0), model);
  for (double tx : {-1.0, 0.0, 1.0, 3.0, 5.0}) {
    CHECK(at_truth < objective(m, f, MotionParams::pose(tx, 0, 0), model));
  }
}

TEST_CASE("outlier model validation") {
  OutlierModel o;
  o.kind = OutlierKind::uniform;
  o.alpha = 0.2;
  o.uniform_density = 0.0;
  CHECK_THROWS(o.validate());
  o.uniform_density = 1e-3;
  CHECK_NOTHROW(o.validate());
  o.alpha = 1.0;
  CHECK_THROWS(o.validate());
  o.alpha = -0.1;
  CHECK_THROWS(o.validate());
  o = OutlierModel{};
  o.kind = OutlierKind::corrupted_gaussian;
  o.alpha = 0.2;
  o.sigma << 1.0, 2.0, 2.0, 1.0;  // indefinite
  CHECK_THROWS(o.validate());
}

TEST_CASE("cost model weight validation") {
  const PointSet f = set_1d({0.0, 4.0}, 0.3);
  const PointSet m = set_1d({0.0}, 0.3, SetLabel::current);
  CostModel model;
  model.weights = Eigen::VectorXd::Constant(3, 1.0 / 3.0);  // wrong size
  CHECK_THROWS(objective(m, f, MotionParams::pose(0, 0, 0), model));
  model.weights = Eigen::Vector2d(0.8, 0.2);
  CHECK_NOTHROW(objective(m, f, MotionParams::pose(0, 0, 0), model));
  model.weights = Eigen::Vector2d(0.6, 0.2);  // does not sum to 1
  CHECK_THROWS(objective(m, f, MotionParams::pose(0, 0, 0), model));
}

TEST_CASE("grid spec decode and budget") {
  GridSpec spec;
  spec.axes = {{0.0, 1.0, 3}, {10.0, 30.0, 2}};
  CHECK(spec.total() == 6);
  // Row-major: last axis fastest.
  const auto c = spec.coords(3);  // (i0=1, i1=1)
  CHECK(c[0] == doctest::Approx(0.5));
  CHECK(c[1] == doctest::Approx(30.0));
  const auto c0 = spec.coords(0);
  CHECK(c0[0] == doctest::Approx(0.0));
  CHECK(c0[1] == doctest::Approx(10.0));

  GridSpec big;
  big.axes = {{0, 1, 100000}, {0, 1, 100000}};
  CHECK_THROWS(evaluate_grid([](const std::vector<double>&) { return 0.0; }, big));
}

TEST_CASE("grid axis value endpoints") {
  const GridAxis ax{-5.0, 20.0, 501};
  CHECK(ax.value(0) == doctest::Approx(-5.0));
  CHECK(ax.value(500) == doctest::Approx(20.0));
  CHECK(ax.value(140) == doctest::Approx(2.0).epsilon(1e-12));
  const GridAxis single{3.0, 9.0, 1};
  CHECK(single.value(0) == 3.0);
}

TEST_CASE("evaluate_grid locates the minimum") {
  GridSpec spec;
  spec.axes = {{-2.0, 2.0, 41}, {-1.0, 3.0, 41}};
  const CostSurface s = evaluate_grid(
      [](const std::vector<double>& c) {
        const double dx = c[0] - 0.5, dy = c[1] - 1.0;
        return dx * dx + dy * dy;
      },
      spec, 1);
  const auto c = s.argopt_coords();
  CHECK(c[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cost surface 1-axis sweep finds the alignment") {
  const PointSet f = set_1d({0.0, 4.0, 9.0}, 0.2);
  const PointSet m = set_1d({-2.0, 2.0, 7.0}, 0.2, SetLabel::current);
  CostModel model;
  GridSpec spec;
  spec.axes = {{-5.0, 5.0, 201}};
  const CostSurface s = cost_surface(m, f, model, spec, 1);
  CHECK(s.argopt_coords()[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("surface csv marks saturated cells") {
  const PointSet f = set_1d({0.0}, 0.0001);
  const PointSet m = set_1d({0.0}, 0.0001, SetLabel::current);
  CostModel model;
  GridSpec spec;
  spec.axes = {{0.0, 50.0, 2}};  // tx=50 saturates
  const CostSurface s = cost_surface(m, f, model, spec, 1);
  const std::string csv = surface_to_csv(s);
  CHECK(csv.find("axis0,value,saturated") == 0);
  CHECK(csv.find(",1\n") != std::string::npos);
  CHECK(csv.find(",0\n") != std::string::npos);
}
