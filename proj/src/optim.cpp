#include "radreg/optim.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace radreg {

namespace {
constexpr double kDivergenceValue = 1e15;
constexpr double kLambdaMax = 1e14;
constexpr int kMaxHalvings = 60;

double fd_scale(double x) { return std::max(1.0, std::fabs(x)); }

void check_finite(double v, const char* what, Eigen::Index dim) {
  if (!std::isfinite(v)) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "%s: non-finite evaluation perturbing dimension %ld",
                  what, static_cast<long>(dim));
    throw std::runtime_error(msg);
  }
}

// Solve (H + mu I) d = -g, raising mu from 0 until the factorization is PD.
Eigen::VectorXd levenberg_solve(const Eigen::MatrixXd& h, const Eigen::VectorXd& g) {
  const double scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
  double mu = 0.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::MatrixXd hm = h;
    if (mu > 0.0) hm.diagonal().array() += mu;
    Eigen::LLT<Eigen::MatrixXd> llt(hm);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd d = llt.solve(-g);
      if (d.allFinite()) return d;
    }
    mu = mu == 0.0 ? 1e-6 * scale : mu * 10.0;
  }
  throw std::runtime_error("levenberg_solve: could not make Hessian PD");
}

// Eigenvalue clipping: the scalar-mode Gauss-Newton projection.
Eigen::VectorXd pd_projected_solve(const Eigen::MatrixXd& h, const Eigen::VectorXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const double floor = std::max(1e-12, 1e-9 * es.eigenvalues().cwiseAbs().maxCoeff());
  Eigen::VectorXd inv = es.eigenvalues().cwiseMax(floor).cwiseInverse();
  return -(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * g);
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!(grad_tol > 0.0) || !(step_tol > 0.0) || !(fd_step > 0.0))
    throw std::invalid_argument("OptimizerConfig: tolerances must be > 0");
  if (max_iter < 1) throw std::invalid_argument("OptimizerConfig: max_iter must be >= 1");
  if (method == OptimMethod::gd && !(step_alpha > 0.0))
    throw std::invalid_argument("OptimizerConfig: step_alpha must be > 0 for gd");
  if (method == OptimMethod::lm && !(lm_lambda0 > 0.0))
    throw std::invalid_argument("OptimizerConfig: lm_lambda0 must be > 0 for lm");
}

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& theta,
                                 double fd_step) {
  Eigen::VectorXd g(theta.size());
  Eigen::VectorXd x = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double h = fd_step * fd_scale(theta[j]);
    x[j] = theta[j] + h;
    const double fp = f(x);
    check_finite(fp, "numeric_gradient", j);
    x[j] = theta[j] - h;
    const double fm = f(x);
    check_finite(fm, "numeric_gradient", j);
    x[j] = theta[j];
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& theta,
                                double fd_step) {
  const Eigen::Index n = theta.size();
  Eigen::MatrixXd hess(n, n);
  const double f0 = f(theta);
  check_finite(f0, "numeric_hessian", -1);
  Eigen::VectorXd x = theta;

  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = fd_step * fd_scale(theta[i]);
    x[i] = theta[i] + hi;
    const double fp = f(x);
    check_finite(fp, "numeric_hessian", i);
    x[i] = theta[i] - hi;
    const double fm = f(x);
    check_finite(fm, "numeric_hessian", i);
    x[i] = theta[i];
    hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = fd_step * fd_scale(theta[i]);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double hj = fd_step * fd_scale(theta[j]);
      double v = 0.0;
      for (int si = -1; si <= 1; si += 2) {
        for (int sj = -1; sj <= 1; sj += 2) {
          x[i] = theta[i] + si * hi;
          x[j] = theta[j] + sj * hj;
          const double fv = f(x);
          check_finite(fv, "numeric_hessian", j);
          v += si * sj * fv;
        }
      }
      x[i] = theta[i];
      x[j] = theta[j];
      hess(i, j) = hess(j, i) = v / (4.0 * hi * hj);
    }
  }
  return 0.5 * (hess + hess.transpose());
}

namespace {

// Shared iteration driver: step_fn(x, fx, g) returns the proposed step or an
// empty vector when the method stalls. accept_requires_decrease adds the
// gd-style backtracking contract.
OptimResult iterate(const Objective& f, const Eigen::VectorXd& init,
                    const OptimizerConfig& cfg,
                    const std::function<Eigen::VectorXd(
                        const Eigen::VectorXd&, double, const Eigen::VectorXd&)>& grad_fn,
                    const std::function<Eigen::VectorXd(
                        const Eigen::VectorXd&, double, const Eigen::VectorXd&)>& step_fn,
                    bool backtrack) {
  OptimResult res;
  res.theta = init;
  res.value = f(init);
  if (!std::isfinite(res.value))
    throw std::invalid_argument("minimize: objective not finite at init");

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    const Eigen::VectorXd g = grad_fn(res.theta, res.value, Eigen::VectorXd());
    const double gnorm = g.norm();
    res.trace.push_back({res.theta, res.value, gnorm});
    if (gnorm < cfg.grad_tol) {
      res.converged = true;
      res.message = "gradient below tolerance";
      return res;
    }

    Eigen::VectorXd step = step_fn(res.theta, res.value, g);
    if (step.size() == 0) {
      res.message = "no acceptable step (stalled)";
      return res;
    }

    double fn = f(res.theta + step);
    if (backtrack) {
      int halvings = 0;
      while (fn > res.value && halvings < kMaxHalvings) {
        step *= 0.5;
        fn = f(res.theta + step);
        ++halvings;
      }
      if (fn > res.value) {
        res.message = "backtracking exhausted";
        return res;
      }
    }
    if (!std::isfinite(fn) || std::fabs(fn) > kDivergenceValue) {
      res.diverged = true;
      res.message = "objective diverged";
      return res;
    }

    const double step_norm = step.norm();
    res.theta += step;
    res.value = fn;
    res.iterations = iter + 1;
    if (step_norm < cfg.step_tol) {
      res.converged = true;
      res.message = "step below tolerance";
      res.trace.push_back({res.theta, res.value,
                           grad_fn(res.theta, res.value, Eigen::VectorXd()).norm()});
      return res;
    }
  }
  res.message = "max iterations reached";
  res.trace.push_back({res.theta, res.value,
                       grad_fn(res.theta, res.value, Eigen::VectorXd()).norm()});
  return res;
}

}  // namespace

OptimResult minimize_vec(const Objective& f, const Eigen::VectorXd& init,
                         const OptimizerConfig& cfg) {
  cfg.validate();

  auto grad = [&](const Eigen::VectorXd& x, double, const Eigen::VectorXd&) {
    return numeric_gradient(f, x, cfg.fd_step);
  };

  switch (cfg.method) {
    case OptimMethod::gd: {
      auto step = [&](const Eigen::VectorXd&, double, const Eigen::VectorXd& g) {
        return Eigen::VectorXd(-cfg.step_alpha * g);
      };
      return iterate(f, init, cfg, grad, step, /*backtrack=*/true);
    }
    case OptimMethod::newton: {
      auto step = [&](const Eigen::VectorXd& x, double, const Eigen::VectorXd& g) {
        return levenberg_solve(numeric_hessian(f, x, cfg.fd_step), g);
      };
      return iterate(f, init, cfg, grad, step, /*backtrack=*/false);
    }
    case OptimMethod::gauss_newton: {
      auto step = [&](const Eigen::VectorXd& x, double, const Eigen::VectorXd& g) {
        return pd_projected_solve(numeric_hessian(f, x, cfg.fd_step), g);
      };
      return iterate(f, init, cfg, grad, step, /*backtrack=*/false);
    }
    case OptimMethod::lm:
      break;
  }

  // Levenberg-Marquardt with the standard factor-10 damping schedule;
  // only accepted (strictly decreasing) steps enter the trace.
  OptimResult res;
  res.theta = init;
  res.value = f(init);
  if (!std::isfinite(res.value))
    throw std::invalid_argument("minimize: objective not finite at init");
  double lambda = cfg.lm_lambda0;

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    const Eigen::VectorXd g = numeric_gradient(f, res.theta, cfg.fd_step);
    const double gnorm = g.norm();
    res.trace.push_back({res.theta, res.value, gnorm});
    if (gnorm < cfg.grad_tol) {
      res.converged = true;
      res.message = "gradient below tolerance";
      return res;
    }

    const Eigen::MatrixXd h = numeric_hessian(f, res.theta, cfg.fd_step);
    bool accepted = false;
    Eigen::VectorXd step;
    while (lambda <= kLambdaMax) {
      Eigen::MatrixXd hm = h;
      hm.diagonal().array() += lambda;
      Eigen::LLT<Eigen::MatrixXd> llt(hm);
      if (llt.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      step = llt.solve(-g);
      const double fn = f(res.theta + step);
      if (std::isfinite(fn) && fn < res.value) {
        res.theta += step;
        res.value = fn;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        break;
      }
      if (step.norm() < cfg.step_tol) {
        // Rejected step already below step_tol: the iterate is numerically
        // stationary, no achievable decrease remains.
        res.converged = true;
        res.message = "step below tolerance";
        return res;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      res.message = "damping exhausted (stalled)";
      return res;
    }
    res.iterations = iter + 1;
    if (std::fabs(res.value) > kDivergenceValue) {
      res.diverged = true;
      res.message = "objective diverged";
      return res;
    }
    if (step.norm() < cfg.step_tol) {
      res.converged = true;
      res.message = "step below tolerance";
      res.trace.push_back(
          {res.theta, res.value, numeric_gradient(f, res.theta, cfg.fd_step).norm()});
      return res;
    }
  }
  res.message = "max iterations reached";
  res.trace.push_back(
      {res.theta, res.value, numeric_gradient(f, res.theta, cfg.fd_step).norm()});
  return res;
}

MotionOptimResult minimize(const std::function<double(const MotionParams&)>& f,
                           const MotionParams& init, const OptimizerConfig& cfg) {
  auto wrapped = [&](const Eigen::VectorXd& x) {
    return f(init.with_params(Eigen::Vector3d(x[0], x[1], x[2])));
  };
  const OptimResult r = minimize_vec(wrapped, init.params, cfg);
  MotionOptimResult out;
  out.theta_hat = init.with_params(Eigen::Vector3d(r.theta[0], r.theta[1], r.theta[2]));
  out.objective_value = r.value;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.diverged = r.diverged;
  out.message = r.message;
  out.trace = r.trace;
  return out;
}

OptimResult minimize_residuals(const ResidualFn& r,
                               const std::optional<JacobianFn>& jac,
                               const Eigen::VectorXd& init,
                               const OptimizerConfig& cfg) {
  cfg.validate();

  auto value = [&](const Eigen::VectorXd& x) { return 0.5 * r(x).squaredNorm(); };
  auto jacobian = [&](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    if (jac) return (*jac)(x);
    const Eigen::VectorXd r0 = r(x);
    Eigen::MatrixXd j(r0.size(), x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index c = 0; c < x.size(); ++c) {
      const double h = cfg.fd_step * fd_scale(x[c]);
      xp[c] = x[c] + h;
      const Eigen::VectorXd rp = r(xp);
      xp[c] = x[c] - h;
      const Eigen::VectorXd rm = r(xp);
      xp[c] = x[c];
      j.col(c) = (rp - rm) / (2.0 * h);
    }
    return j;
  };

  if (cfg.method == OptimMethod::newton) {
    // Full-Hessian Newton on the scalar form.
    return minimize_vec(value, init, cfg);
  }

  auto grad = [&](const Eigen::VectorXd& x, double, const Eigen::VectorXd&) {
    return Eigen::VectorXd(jacobian(x).transpose() * r(x));
  };

  if (cfg.method == OptimMethod::gd) {
    auto step = [&](const Eigen::VectorXd&, double, const Eigen::VectorXd& g) {
      return Eigen::VectorXd(-cfg.step_alpha * g);
    };
    return iterate(value, init, cfg, grad, step, /*backtrack=*/true);
  }
  if (cfg.method == OptimMethod::gauss_newton) {
    auto step = [&](const Eigen::VectorXd& x, double, const Eigen::VectorXd& g) {
      const Eigen::MatrixXd j = jacobian(x);
      return levenberg_solve(j.transpose() * j, g);
    };
    return iterate(value, init, cfg, grad, step, /*backtrack=*/false);
  }

  // LM on J^T J.
  OptimResult res;
  res.theta = init;
  res.value = value(init);
  if (!std::isfinite(res.value))
    throw std::invalid_argument("minimize_residuals: objective not finite at init");
  double lambda = cfg.lm_lambda0;

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    const Eigen::MatrixXd j = jacobian(res.theta);
    const Eigen::VectorXd g = j.transpose() * r(res.theta);
    const double gnorm = g.norm();
    res.trace.push_back({res.theta, res.value, gnorm});
    if (gnorm < cfg.grad_tol) {
      res.converged = true;
      res.message = "gradient below tolerance";
      return res;
    }
    const Eigen::MatrixXd jtj = j.transpose() * j;
    bool accepted = false;
    Eigen::VectorXd step;
    while (lambda <= kLambdaMax) {
      Eigen::MatrixXd hm = jtj;
      hm.diagonal().array() += lambda;
      Eigen::LLT<Eigen::MatrixXd> llt(hm);
      if (llt.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      step = llt.solve(-g);
      const double fn = value(res.theta + step);
      if (std::isfinite(fn) && fn < res.value) {
        res.theta += step;
        res.value = fn;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        break;
      }
      if (step.norm() < cfg.step_tol) {
        // Rejected step already below step_tol: the iterate is numerically
        // stationary, no achievable decrease remains.
        res.converged = true;
        res.message = "step below tolerance";
        return res;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      res.message = "damping exhausted (stalled)";
      return res;
    }
    res.iterations = iter + 1;
    if (step.norm() < cfg.step_tol) {
      res.converged = true;
      res.message = "step below tolerance";
      res.trace.push_back({res.theta, res.value, res.trace.back().grad_norm});
      return res;
    }
  }
  res.message = "max iterations reached";
  return res;
}

std::string trace_to_csv(const std::vector<TracePoint>& trace) {
  std::string out = "iter";
  if (!trace.empty())
    for (Eigen::Index j = 0; j < trace.front().theta.size(); ++j) {
      char h[24];
      std::snprintf(h, sizeof h, ",theta%ld", static_cast<long>(j));
      out += h;
    }
  out += ",f,grad_norm\n";
  char buf[64];
  for (size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu", i);
    out += buf;
    for (Eigen::Index j = 0; j < trace[i].theta.size(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", trace[i].theta[j]);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", trace[i].value, trace[i].grad_norm);
    out += buf;
  }
  return out;
}

}  // namespace radreg
