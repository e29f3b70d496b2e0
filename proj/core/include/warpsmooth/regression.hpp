#pragma once

#include <span>
#include <vector>

namespace warpsmooth {

// Ordinary least squares y = slope*x + intercept with the diagnostics the
// sweep fits report.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  double slope_stderr = 0.0;
  // ~95% half-width on the slope (Student t with n-2 dof).
  double conf_halfwidth = 0.0;
  std::vector<double> residuals;
  int n = 0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// Fit of log(y) against log(x); slope is the power-law exponent.
LinearFit fit_loglog(std::span<const double> x, std::span<const double> y);

}  // namespace warpsmooth
