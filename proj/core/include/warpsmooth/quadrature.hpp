#pragma once

#include <functional>

namespace warpsmooth::quad {

// Adaptive Gauss-Kronrod integral of f over [a, b] (GSL QAG, 31-point rule).
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12, double rel_tol = 1e-12);

// Integral of f over [a, +inf) (GSL QAGIU).
double integrate_to_inf(const std::function<double(double)>& f, double a,
                        double abs_tol = 1e-12, double rel_tol = 1e-12);

}  // namespace warpsmooth::quad
