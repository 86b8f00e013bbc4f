#include <doctest.h>

#include <cmath>

#include "radreg/optim.hpp"

using namespace radreg;

TEST_CASE("numeric gradient matches the analytic gradient") {
  auto f = [](const Eigen::VectorXd& x) {
    return std::sin(x[0]) + x[0] * x[0] * x[0] * x[1];
  };
  const Eigen::Vector2d x0(0.7, -0.3);
  const Eigen::VectorXd g = numeric_gradient(f, x0, 1e-6);
  CHECK(g[0] == doctest::Approx(std::cos(0.7) + 3 * 0.7 * 0.7 * -0.3).epsilon(1e-8));
  CHECK(g[1] == doctest::Approx(0.7 * 0.7 * 0.7).epsilon(1e-8));
}

TEST_CASE("numeric hessian matches the analytic hessian") {
  auto f = [](const Eigen::VectorXd& x) {
    return x[0] * x[0] * x[1] + x[1] * x[1] * x[1];
  };
  const Eigen::Vector2d x0(1.2, 0.8);
  const Eigen::MatrixXd h = numeric_hessian(f, x0, 1e-5);
  CHECK(h(0, 0) == doctest::Approx(2 * 0.8).epsilon(1e-5));
  CHECK(h(0, 1) == doctest::Approx(2 * 1.2).epsilon(1e-5));
  CHECK(h(1, 0) == h(0, 1));
  CHECK(h(1, 1) == doctest::Approx(6 * 0.8).epsilon(1e-5));
}

TEST_CASE("finite differences stay accurate at large parameter scale") {
  // Per-dimension steps scale with |theta|, so a quadratic centered at 1e8
  // differentiates exactly instead of losing everything to cancellation.
  auto f = [](const Eigen::VectorXd& x) {
    return (x[0] - 1e8) * (x[0] - 1e8);
  };
  Eigen::VectorXd x0(1);
  x0 << 2e8;
  const Eigen::VectorXd g = numeric_gradient(f, x0, 1e-6);
  CHECK(g[0] == doctest::Approx(2e8).epsilon(1e-9));
}

TEST_CASE("non-finite evaluations are reported, not propagated") {
  auto f = [](const Eigen::VectorXd& x) { return std::log(x[0]); };
  Eigen::VectorXd x0(1);
  x0 << 1e-12;  // x - h goes negative -> NaN
  CHECK_THROWS_AS(numeric_gradient(f, x0, 1e-6), std::runtime_error);
}

TEST_CASE("optimizer config validation") {
  OptimizerConfig cfg;
  cfg.max_iter = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.grad_tol = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.method = OptimMethod::gd;
  cfg.step_alpha = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.method = OptimMethod::lm;
  cfg.lm_lambda0 = 0.0;
  CHECK_THROWS(cfg.validate());
  CHECK_NOTHROW(OptimizerConfig{}.validate());
}

namespace {

// f(x) = 0.5 (x-a)' A (x-a) with PD A; minimum a, value 0.
struct Quadratic {
  Eigen::Matrix2d a_mat;
  Eigen::Vector2d center;
  double operator()(const Eigen::VectorXd& x) const {
    const Eigen::Vector2d d = x - center;
    return 0.5 * d.dot(a_mat * d);
  }
};

Quadratic make_quadratic() {
  Quadratic q;
  q.a_mat << 3.0, 0.4, 0.4, 1.5;
  q.center << 1.0, -2.0;
  return q;
}

}  // namespace

TEST_CASE("all four methods minimize a PD quadratic") {
  const Quadratic q = make_quadratic();
  const Eigen::Vector2d init(5.0, 5.0);
  for (OptimMethod m : {OptimMethod::gd, OptimMethod::newton,
                        OptimMethod::gauss_newton, OptimMethod::lm}) {
    OptimizerConfig cfg;
    cfg.method = m;
    cfg.max_iter = 2000;
    cfg.step_alpha = 0.1;
    const OptimResult r = minimize_vec(q, init, cfg);
    CAPTURE(static_cast<int>(m));
    CHECK(r.converged);
    CHECK_FALSE(r.diverged);
    CHECK(r.theta[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.theta[1] == doctest::Approx(-2.0).epsilon(1e-5));
    CHECK(r.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  }
}

TEST_CASE("newton converges on a quadratic in very few iterations") {
  const Quadratic q = make_quadratic();
  OptimizerConfig cfg;
  cfg.method = OptimMethod::newton;
  const OptimResult r = minimize_vec(q, Eigen::Vector2d(40.0, -30.0), cfg);
  CHECK(r.converged);
  CHECK(r.iterations <= 3);  // exact step + tolerance check
}

TEST_CASE("lm minimizes rosenbrock residuals with the analytic jacobian") {
  ResidualFn res = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(2);
    r << 10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0];
    return r;
  };
  JacobianFn jac = [](const Eigen::VectorXd& x) {
    Eigen::MatrixXd j(2, 2);
    j << -20.0 * x[0], 10.0, -1.0, 0.0;
    return j;
  };
  OptimizerConfig cfg;
  cfg.method = OptimMethod::lm;
  cfg.max_iter = 200;
  const OptimResult r = minimize_residuals(res, jac, Eigen::Vector2d(-1.2, 1.0), cfg);
  CHECK(r.converged);
  CHECK(r.theta[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.theta[1] == doctest::Approx(1.0).epsilon(1e-6));

  // Numeric Jacobian fallback lands on the same optimum.
  const OptimResult rn = minimize_residuals(res, std::nullopt,
                                            Eigen::Vector2d(-1.2, 1.0), cfg);
  CHECK(rn.converged);
  CHECK(rn.theta[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(rn.theta[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("gauss-newton residual mode minimizes rosenbrock") {
  ResidualFn res = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(2);
    r << 10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0];
    return r;
  };
  OptimizerConfig cfg;
  cfg.method = OptimMethod::gauss_newton;
  cfg.max_iter = 500;
  const OptimResult r = minimize_residuals(res, std::nullopt,
                                           Eigen::Vector2d(-1.2, 1.0), cfg);
  CHECK(r.converged);
  CHECK(r.theta[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("unbounded descent is flagged as divergence") {
  auto f = [](const Eigen::VectorXd& x) { return -x.squaredNorm(); };
  OptimizerConfig cfg;
  cfg.method = OptimMethod::gd;
  cfg.step_alpha = 0.2;
  cfg.max_iter = 2000;
  const OptimResult r = minimize_vec(f, Eigen::Vector2d(1.0, 1.0), cfg);
  CHECK(r.diverged);
  CHECK_FALSE(r.converged);
}

TEST_CASE("iteration cap is honored and reported") {
  auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  OptimizerConfig cfg;
  cfg.method = OptimMethod::gd;
  cfg.step_alpha = 1e-3;  // deliberately slow
  cfg.max_iter = 5;
  const OptimResult r = minimize_vec(f, Eigen::Vector2d(3.0, -4.0), cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 5);
  CHECK(r.message == "max iterations reached");
}

TEST_CASE("trace starts at the init point and ends at the optimum") {
  const Quadratic q = make_quadratic();
  OptimizerConfig cfg;
  cfg.method = OptimMethod::lm;
  const OptimResult r = minimize_vec(q, Eigen::Vector2d(5.0, 5.0), cfg);
  REQUIRE(r.trace.size() >= 2);
  CHECK(r.trace.front().theta[0] == 5.0);
  CHECK(r.trace.front().theta[1] == 5.0);
  CHECK(r.trace.front().value == doctest::Approx(q(Eigen::Vector2d(5.0, 5.0))));
  CHECK(r.trace.back().theta[0] == doctest::Approx(r.theta[0]));
  // Values along accepted steps decrease monotonically.
  for (size_t i = 1; i < r.trace.size(); ++i)
    CHECK(r.trace[i].value <= r.trace[i - 1].value);

  const std::string csv = trace_to_csv(r.trace);
  CHECK(csv.rfind("iter,theta0,theta1,f,grad_norm\n", 0) == 0);
  CHECK(csv.find("\n0,") != std::string::npos);
}

TEST_CASE("motion wrapper preserves kind and tau") {
  const Eigen::Vector3d target(1.0, 2.0, 0.3);
  auto f = [&](const MotionParams& m) {
    return (m.params - target).squaredNorm();
  };
  const MotionParams init = MotionParams::velocity(0.0, 0.0, 0.0, 0.5);
  OptimizerConfig cfg;
  const MotionOptimResult r = minimize(f, init, cfg);
  CHECK(r.converged);
  CHECK(r.theta_hat.kind == MotionParams::Kind::velocity);
  CHECK(r.theta_hat.tau == 0.5);
  CHECK(r.theta_hat.params[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.theta_hat.params[1] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r.theta_hat.params[2] == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("objective must be finite at the initial point") {
  auto f = [](const Eigen::VectorXd& x) { return std::log(x[0]); };
  Eigen::VectorXd x0(1);
  x0 << -1.0;  // log of a negative -> NaN at init
  OptimizerConfig cfg;
  CHECK_THROWS_AS(minimize_vec(f, x0, cfg), std::invalid_argument);
}
