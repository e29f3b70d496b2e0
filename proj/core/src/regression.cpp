#include "warpsmooth/regression.hpp"

#include <cmath>
#include <stdexcept>

namespace warpsmooth {

namespace {

// Two-sided 97.5% Student t quantiles for 1..30 dof; 1.96 beyond.
double t_quantile(int dof) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447,
                                 2.365,  2.306, 2.262, 2.228, 2.201, 2.179,
                                 2.160,  2.145, 2.131, 2.120, 2.110, 2.101,
                                 2.093,  2.086, 2.080, 2.074, 2.069, 2.064,
                                 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (dof < 1) return 0.0;
  if (dof <= 30) return table[dof - 1];
  return 1.96;
}

}  // namespace

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  const int n = static_cast<int>(x.size());
  if (n != static_cast<int>(y.size()) || n < 2)
    throw std::invalid_argument("fit_line: need >= 2 matching samples");
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");

  LinearFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.residuals.resize(n);
  double ss_res = 0, ss_tot = 0;
  for (int i = 0; i < n; ++i) {
    fit.residuals[i] = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += fit.residuals[i] * fit.residuals[i];
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  // Exactly constant data is a perfect fit, not a degenerate one.
  fit.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
  if (n > 2) {
    fit.slope_stderr = std::sqrt(ss_res / (n - 2) / sxx);
    fit.conf_halfwidth = t_quantile(n - 2) * fit.slope_stderr;
  }
  return fit;
}

LinearFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0)
      throw std::invalid_argument("fit_loglog: samples must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

}  // namespace warpsmooth
