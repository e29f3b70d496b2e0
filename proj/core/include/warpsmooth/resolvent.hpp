#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "warpsmooth/geometry.hpp"
#include "warpsmooth/regression.hpp"
#include "warpsmooth/task_pool.hpp"

namespace warpsmooth::resolvent {

// Spatial bump chi (== 1 on [x*-d1, x*+d1], support in the 2 d1 window) and
// even frequency bump psi (== 1 for |r| <= eps, vanishing past 2 eps).
struct CutoffSpec {
  double center = 1.0;
  double delta1 = 0.2;
  double eps = 0.02;
  int chi_order = 8;   // smoothness class of the bumps
  int psi_order = 12;  // higher order keeps Fourier wrap-around small

  void validate() const;  // 0 < eps < delta1 / 4
  double chi(double s) const;
  double psi(double r) const;
};

struct ResolventOptions {
  int stencil_order = 2;
  int v_sign = -1;           // sign of the h^2 V term in P_h (config switch)
  bool absorbing_layer = true;
  geometry::SpongeSpec cap{1.0, 0.75, 3};
  double padding_factor = 2.0;  // psi window width over chi support width
  double power_tol = 1e-8;
  int power_max_iter = 6000;
};

// P_h = (h D_x)^2 + V1 + h^2 n^2 V2 + v_sign h^2 V (- i cap), on the grid.
geometry::ModeOperator semiclassical_operator(const geometry::ManifoldModel& model,
                                              double h, int n,
                                              const geometry::RadialGrid& grid,
                                              const ResolventOptions& opts);

// || chi psi(hD) (P_h - z - i eta)^-1 psi(hD) chi || by power iteration on
// R R*, banded solves, and an FFT sandwich for psi on a padded window.
// Pre: eta > 0, dx <= h/10 (GridTooCoarse otherwise).
double cutoff_resolvent_norm(const geometry::ManifoldModel& model, double h, int n,
                             double z, double eta, const CutoffSpec& cutoffs,
                             const geometry::RadialGrid& grid,
                             const ResolventOptions& opts = {});

struct ScanRecord {
  double h = 0.0;
  double z = 0.0;
  int n = 0;
  double eta = 0.0;
  double norm = 0.0;
};

struct ScanConfig {
  std::vector<double> h_list;       // >= 5 dyadic values
  int z_samples = 7;
  double z_halfwidth = 0.04;
  std::optional<double> z_center;   // default: rescaled trapped energy
  std::vector<int> n_probe{0};      // -1 encodes floor(1/h)
  double eta_coeff = 1.0;           // eta = coeff * h^2
  double x_max = 4.0;
  double points_per_wavelength = 10.0;  // dx = h / this
  CutoffSpec cutoffs;
  ResolventOptions ops;
  const TaskPool* pool = nullptr;
};

struct ResolventScan {
  std::vector<ScanRecord> records;
  std::vector<double> h_list;
  std::vector<double> sup_norm;     // per h, n = n_probe[0] series
  LinearFit fit;                    // log sup-norm vs log(1/h)
  double fitted_slope = 0.0;
  double theory_slope = 0.0;        // (4m+2)/(2m+3)
  std::vector<double> ff_product;   // h^{2r} * sup-norm, r = 2/(2m+3)
};

// Grid used by the scans at a given h: dx = h / points_per_wavelength.
geometry::RadialGrid scan_grid_for(double h, const ScanConfig& config);

// Sup over the z window per h, then the log-log slope against 1/h.
// Throws PoorFit when R^2 < 0.9.
ResolventScan resolvent_scan_fit(const geometry::ManifoldModel& model,
                                 const ScanConfig& config);

struct QuasimodeResult {
  double z_best = 0.0;
  double residual = 0.0;  // 1 / (sandwiched resolvent norm at z_best)
  double norm = 0.0;
  Eigen::VectorXcd state;  // microlocalized extremizer, unit l2(dx) norm
};

// Minimizes the cutoff residual over the z window; the state is the top
// singular pair of the sandwiched resolvent.
QuasimodeResult quasimode_residual(const geometry::ManifoldModel& model, double h,
                                   int n, double z_lo, double z_hi,
                                   const ScanConfig& config);

// Dense assembly of the sandwiched resolvent (oracle for small grids).
Eigen::MatrixXcd dense_sandwich(const geometry::ManifoldModel& model, double h, int n,
                                double z, double eta, const CutoffSpec& cutoffs,
                                const geometry::RadialGrid& grid,
                                const ResolventOptions& opts = {});

}  // namespace warpsmooth::resolvent
