#pragma once

#include <cmath>

namespace fracdyn {

// Gamma function, Lanczos approximation (g = 7, 9 terms, ~15 digits) with
// reflection for arguments below 1/2.  Poles at 0, -1, -2, ... return +/-inf.
double gamma_fn(double x);

// 1/Gamma(x); finite everywhere, exactly 0 at the poles of Gamma.
double rgamma(double x);

// sin(pi x) and cos(pi x) with argument reduction done on x itself, so large
// half-integer arguments stay exact.
double sinpi(double x);
double cospi(double x);

// log|Gamma(x)| for x > 0.
double lgamma_pos(double x);

// x^p - y^p for x, y >= 0, avoiding cancellation when x is close to y.
double pow_diff(double x, double y, double p);

}  // namespace fracdyn
