#pragma once

namespace t3vae::special {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kLogTwoPi = 1.837877066409345483560659472811235279;

// log Gamma(x) for x > 0 (Lanczos, g = 607/128).
double log_gamma(double x);

// log Gamma(a + b) - log Gamma(a) without cancellation at large a.
double log_gamma_ratio(double a, double b);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// CDF of the standard univariate Student-t with nu degrees of freedom.
// nu = +inf gives the standard normal CDF.
double student_t_cdf(double t, double nu);

}  // namespace t3vae::special
