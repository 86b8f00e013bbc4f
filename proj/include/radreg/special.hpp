#pragma once

namespace radreg {

// Regularized lower incomplete gamma P(a, x). Series expansion for
// x < a + 1, continued fraction for the complement otherwise.
double regularized_gamma_p(double a, double x);

// Chi-square CDF with (possibly non-integer) dof > 0.
double chi_square_cdf(double dof, double x);

// Chi-square quantile by bisection on the CDF (absolute tolerance 1e-10).
double chi_square_quantile(double dof, double p);

}  // namespace radreg
