#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "warpsmooth/geometry.hpp"
#include "warpsmooth/regression.hpp"
#include "warpsmooth/resolvent.hpp"

namespace warpsmooth::microlocal {

// Lambda(r)  = int_0^r <t>^(-1-eps0) dt   (odd, bounded)
// Lambda2(r) = int_-inf^r <t>^(-1-eps0) dt = Lambda(r) + Lambda(inf)
struct LambdaPair {
  double lambda = 0.0;
  double lambda2 = 0.0;
};

LambdaPair lambda_functions(double r, double eps0);
double lambda_infinity(double eps0);

struct CommutantParams {
  double h = 0.015625;
  double h_tilde = 0.125;  // second small parameter, >> h
  double eps0 = 1.0;       // Lambda decay; 1 makes Lambda = arctan
  double delta1 = 0.2;     // cutoff half width
  double x_center = 1.0;   // trapped radius
  int m1 = 1;
  int chi_order = 8;

  double alpha() const { return 2.0 / double(2 * m1 + 3); }
  double beta() const { return 1.0 - alpha(); }
  // throws ScaleViolation when h_tilde <= h
  void validate() const;
};

// Phase-space sampling lattice: x on the padded chi window, xi the discrete
// Fourier lattice of that window at semiclassical scale h.
struct PhaseGrid {
  double x_lo = 0.0;
  double dx = 0.0;
  int n = 0;
  double h = 0.0;

  double x(int i) const { return x_lo + i * dx; }
  // FFT frequency ordering: j, then j - n past the midpoint.
  double xi(int j) const {
    const int f = (j <= n / 2) ? j : j - n;
    return 2.0 * M_PI * h * f / (n * dx);
  }
  double xi_max() const { return M_PI * h / dx; }

  static PhaseGrid window(double center, double half_width, double dx, double h);
};

// Second-microlocal commutant a = Lambda(Xi) Lambda2(X-1) chi(x-1) chi(xi)
// with X-1 = (x-1)/(h/h_tilde)^alpha, Xi = xi/(h/h_tilde)^beta.
class CommutantSymbol {
 public:
  CommutantSymbol(const CommutantParams& params, const PhaseGrid& grid);

  double value(double x, double xi) const;
  double dxi(double x, double xi) const;  // analytic chain rule

  const CommutantParams& params() const { return params_; }
  const PhaseGrid& grid() const { return grid_; }
  const Eigen::MatrixXd& samples() const { return samples_; }
  const Eigen::MatrixXd& dxi_samples() const { return dxi_samples_; }
  double sup_bound() const;  // Lambda(inf) * Lambda2(inf)

 private:
  double chi(double s) const;
  double chi_derivative(double s) const;

  CommutantParams params_;
  PhaseGrid grid_;
  double lambda_inf_ = 0.0;
  Eigen::MatrixXd samples_, dxi_samples_;
};

CommutantSymbol build_commutant(const CommutantParams& params, const PhaseGrid& grid);

// Discrete Weyl quantization on the window lattice:
//   M[i][j] = dx/(2 pi h) * sum_xi a((x_i+x_j)/2, xi) e^{i (x_i - x_j) xi / h} dxi
// Hermitian for real symbols; identity for a == 1.  Throws NyquistViolation
// when the xi lattice does not reach 4 delta1.
Eigen::MatrixXcd weyl_quantize(const std::function<double(double, double)>& symbol,
                               const PhaseGrid& grid, double nyquist_requirement = 0.0);

struct GardingSample {
  double h = 0.0;
  double min_eigenvalue = 0.0;
  double defect_constant = 0.0;  // max(0, -min eig)/h
};

struct SignCheckReport {
  double max_product = 0.0;  // max over the checked region of V2' * dxi a
  bool ok = false;
  double worst_x = 0.0, worst_xi = 0.0;
  std::vector<GardingSample> garding;  // quantized check per h
};

struct SignCheckOptions {
  std::vector<double> garding_h_list{0.0625, 0.03125, 0.015625, 0.0078125};
  double band_halfwidth = -1.0;  // xi band for the compression; default delta1
  double points_per_h = 10.0;    // dx = h / this on the quantization window
};

// Pointwise favorable-sign check V2'(x) dxi a <= tol on {|xi| <= delta1} and
// the quantized Garding surrogate for the nonnegative symbol -V2' dxi a.
// Throws SignViolation with the offending point.
SignCheckReport commutant_sign_check(const geometry::ManifoldModel& model,
                                     const CommutantParams& params,
                                     const SignCheckOptions& opts = {});

// One nonnegative symbol quantized on the window: smallest eigenvalue of the
// Hermitian matrix; Garding defect constant = max(0, -min eig)/h.
GardingSample garding_defect(const std::function<double(double, double)>& symbol,
                             const PhaseGrid& grid);

struct ScalingSample {
  double h = 0.0;
  double q = 0.0;        // <i[(hD)^2 + V1, a^w] v, v> / ||v||^2
  double q_alt = 0.0;    // same value through the split algebraic route
  double omega_form = 0.0;  // <(-H_{V2} a)^w v, v> / ||v||^2 (favorable sign)
  double state_norm = 1.0;
};

struct CommutatorScalingReport {
  std::vector<ScalingSample> samples;
  LinearFit fit;  // log q against log h
  double fitted_slope = 0.0;
  double theory_slope = 0.0;  // (4 m1 + 2)/(2 m1 + 3)
  bool all_positive = false;
  double max_algebra_mismatch = 0.0;
};

struct ScalingOptions {
  enum class HTildePolicy { sqrt_h, fixed };
  HTildePolicy h_tilde_policy = HTildePolicy::fixed;
  double h_tilde_fixed = 0.5;
  double eps0 = 1.0;
  double delta1 = 0.2;
  double points_per_h = 10.0;
  resolvent::ScanConfig state_config;  // microlocalized states per h
  std::optional<std::vector<Eigen::VectorXcd>> states;  // override
};

// Positive-commutator scaling: Q(v,h) > 0 and log Q ~ (4m+2)/(2m+3) log h for
// states microlocalized at the critical point.
CommutatorScalingReport commutator_scaling_test(const geometry::ManifoldModel& model,
                                                std::span<const double> h_list, int n,
                                                const ScalingOptions& opts);

}  // namespace warpsmooth::microlocal
