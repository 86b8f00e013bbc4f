#include "radreg/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace radreg {
namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 1e-15;
constexpr double kTiny = 1e-300;

// Lower series: P(a,x) = x^a e^-x / Gamma(a) * sum_n x^n / (a(a+1)...(a+n)).
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper continued fraction (modified Lentz): Q(a,x).
double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("regularized_gamma_p: a must be > 0");
  if (x < 0.0) throw std::invalid_argument("regularized_gamma_p: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi_square_cdf(double dof, double x) {
  if (!(dof > 0.0)) throw std::invalid_argument("chi_square_cdf: dof must be > 0");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi_square_quantile(double dof, double p) {
  if (!(dof > 0.0)) throw std::invalid_argument("chi_square_quantile: dof must be > 0");
  if (!(p >= 0.0 && p < 1.0))
    throw std::invalid_argument("chi_square_quantile: p must be in [0, 1)");
  if (p == 0.0) return 0.0;

  double lo = 0.0;
  double hi = dof + 20.0 * std::sqrt(2.0 * dof) + 100.0;
  while (chi_square_cdf(dof, hi) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-10; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi_square_cdf(dof, mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace radreg
