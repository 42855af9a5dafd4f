#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>

namespace fracdyn::quad {

struct QuadResult {
    std::complex<double> value{0.0, 0.0};
    double error = 0.0;     // absolute error estimate
    std::size_t evals = 0;
    bool converged = false;

    double real() const { return value.real(); }
};

// Adaptive Gauss-Kronrod 15(7) on [a, b].  Stops when the summed error
// estimate drops below abs_tol + rel_tol * |integral|.
QuadResult integrate(const std::function<std::complex<double>(double)>& f,
                     double a, double b,
                     double abs_tol, double rel_tol,
                     int max_depth = 30);

QuadResult integrate_real(const std::function<double(double)>& f,
                          double a, double b,
                          double abs_tol, double rel_tol,
                          int max_depth = 30);

}  // namespace fracdyn::quad
