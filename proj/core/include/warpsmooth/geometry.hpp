#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "warpsmooth/banded.hpp"
#include "warpsmooth/state.hpp"
#include "warpsmooth/warping.hpp"

namespace warpsmooth::geometry {

// Uniform interior grid for the radial coordinate with Dirichlet ends:
// x_i = (i+1) dx for i = 0..n_points-1, dx = x_max / (n_points + 1).
struct RadialGrid {
  double x_max = 8.0;
  int n_points = 1024;

  double dx() const { return x_max / (n_points + 1); }
  double node(int i) const { return (i + 1) * dx(); }
  Eigen::VectorXd nodes() const;
};

// Conjugation potential of the unitary map removing the first-order radial
// term:
//   V = 1/4 A1'^2/A1^2 - 1/2 A1''/A1 + 1/4 A2'^2/A2^2 - 1/2 A2''/A2
//       - 1/2 A1' A2' / (A1 A2)
double conjugation_potential(const warping::WarpingProfile& p1,
                             const warping::WarpingProfile& p2, double x);

// Two warping profiles plus the sampled potentials on a grid.
// V1 = A1^-2 and V2 = A2^-2 are the per-mode angular potentials.
struct ManifoldModel {
  warping::WarpingProfile profile_1, profile_2;
  RadialGrid grid;
  Eigen::VectorXd v, v1, v2;  // samples at grid nodes

  int m_max() const;
  // k^2 V1(x*) for the theta trapping; the quasimode energy scale.
  double trapped_potential_1() const { return 1.0 / profile_1.trapped_level(); }
  double theory_smoothing_exponent() const;  // (2m+1)/(2m+3), 1/2 when flat
  double theory_resolvent_slope() const;     // (4m+2)/(2m+3)
  bool is_flat() const;
};

ManifoldModel build_model(const warping::WarpingProfile& p1,
                          const warping::WarpingProfile& p2, const RadialGrid& grid);

// Complex absorbing layer on the outer part of the grid, emulating the
// infinite end: sigma(x) = sigma0 * ((x - xs)/(x_max - xs))^power on
// [xs, x_max], xs = start_fraction * x_max.
struct SpongeSpec {
  double sigma0 = 50.0;
  double start_fraction = 0.8;
  int power = 3;
};

Eigen::VectorXd sponge_profile(const RadialGrid& grid, const SpongeSpec& sponge);

// Banded matrix of -d^2/dx^2 (times scale) with Dirichlet truncation.
SymmetricBanded laplacian_band(const RadialGrid& grid, int stencil_order,
                               double scale = 1.0);

// Discretized 1D operator P acting on one angular mode:
//   P = kinetic_scale * (-d^2/dx^2) + diag(w) - i diag(sponge).
struct ModeOperator {
  int k = 0, n = 0;
  RadialGrid grid;
  int stencil_order = 2;
  double kinetic_scale = 1.0;
  Eigen::VectorXd w;                     // k^2 V1 + n^2 V2 - V at the nodes
  std::optional<Eigen::VectorXd> sponge; // sigma(x_i) >= 0
  SymmetricBanded matrix;                // the self-adjoint part

  bool self_adjoint() const { return !sponge.has_value(); }
  int bandwidth() const { return stencil_order / 2; }
  // y = P x including the absorbing part.
  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const;
  void apply_real(const double* x, double* y) const { matrix.apply(x, y); }
};

// Physical mode operator P_{k,n} = -d^2/dx^2 + k^2 V1 + n^2 V2 - V.
// Throws GridTooCoarse when dx^2 * max |w| > 1 on x >= min flat inner radius.
ModeOperator assemble_mode_operator(const ManifoldModel& model, int k, int n,
                                    const RadialGrid& grid, int stencil_order = 2,
                                    const std::optional<SpongeSpec>& sponge = {});

// Generic assembly used by the semiclassical reductions.
ModeOperator assemble_custom_operator(const RadialGrid& grid, double kinetic_scale,
                                      Eigen::VectorXd w, int stencil_order,
                                      const std::optional<SpongeSpec>& sponge);

struct SobolevOptions {
  int stencil_order = 2;
  int dense_threshold = 1200;  // above this, Lanczos quadrature is used
  int lanczos_iters = 160;
};

// ||u||^2_{H^s} = sum_modes < (I + P_{k,n})^s u, u >, spectral calculus of the
// self-adjoint assembly.  Throws NegativeOperator if I + P has an eigenvalue
// <= 0.
double sobolev_norm(std::span<const evolve::ModeState> states, double s,
                    const ManifoldModel& model, const RadialGrid& grid,
                    const SobolevOptions& opts = {});

// Both weighted time-slice functionals of the estimates under test.
struct WeightedH1 {
  double metric_h1 = 0.0;   // ||<x>^-3/2 dx u||^2 + sum (k^2V1+n^2V2)|..|^2 + ||..||^2
  double lemma_dx = 0.0;    // ||<x>^-3/2 dx u||^2
  double lemma_theta = 0.0; // ||(x-x1*)^m1 <x>^-1/2-m1 A1^-1 dtheta u||^2
  double lemma_omega = 0.0; // ||(x-x2*)^m2 <x>^-1/2-m2 A2^-1 domega u||^2
};

WeightedH1 weighted_local_h1(std::span<const evolve::ModeState> states,
                             const ManifoldModel& model, const RadialGrid& grid);

// Per-mode quadratic observables with precomputed weights; evolve accumulates
// their time integrals. value = dx * sum(w_u |u|^2 + w_du |Du|^2).
struct QuadraticObservable {
  std::string name;
  Eigen::VectorXd weight_u;   // empty means absent
  Eigen::VectorXd weight_du;
  double evaluate(const Eigen::VectorXcd& u, double dx) const;
};

QuadraticObservable metric_h1_observable(const ManifoldModel& model, int k, int n);
QuadraticObservable lemma_dx_observable(const ManifoldModel& model);
QuadraticObservable lemma_theta_observable(const ManifoldModel& model, int k);
QuadraticObservable lemma_omega_observable(const ManifoldModel& model, int n);

// Model snapshot: JSON metadata plus a binary array file (8-byte count header,
// little-endian float64, rows V, V1, V2).
void write_model_snapshot(const ManifoldModel& model, const std::string& json_path,
                          const std::string& bin_path);
ManifoldModel read_model_snapshot(const std::string& json_path,
                                  const std::string& bin_path);

}  // namespace warpsmooth::geometry
