#include "warpsmooth/microlocal.hpp"

#include <unsupported/Eigen/FFT>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "warpsmooth/errors.hpp"
#include "warpsmooth/quadrature.hpp"
#include "warpsmooth/smoothstep.hpp"

namespace warpsmooth::microlocal {

using geometry::ManifoldModel;
using geometry::RadialGrid;

namespace {

double lambda_integrand(double t, double eps0) {
  return std::pow(1.0 + t * t, -0.5 * (1.0 + eps0));
}

}  // namespace

double lambda_infinity(double eps0) {
  if (!(eps0 > 0.0)) throw std::invalid_argument("lambda_infinity: eps0 > 0");
  if (eps0 == 1.0) return M_PI / 2.0;
  return quad::integrate_to_inf([eps0](double t) { return lambda_integrand(t, eps0); },
                                0.0, 1e-12);
}

LambdaPair lambda_functions(double r, double eps0) {
  if (!(eps0 > 0.0)) throw std::invalid_argument("lambda_functions: eps0 > 0");
  double lam;
  if (eps0 == 1.0) {
    lam = std::atan(r);
  } else {
    const double a = std::abs(r);
    lam = quad::integrate([eps0](double t) { return lambda_integrand(t, eps0); }, 0.0,
                          a, 1e-12);
    if (r < 0.0) lam = -lam;
  }
  return LambdaPair{lam, lam + lambda_infinity(eps0)};
}

void CommutantParams::validate() const {
  if (h_tilde <= h)
    throw ScaleViolation("CommutantParams: h_tilde = " + std::to_string(h_tilde) +
                         " must exceed h = " + std::to_string(h));
  if (!(h > 0.0 && delta1 > 0.0 && eps0 > 0.0 && m1 >= 1))
    throw std::invalid_argument("CommutantParams: positive parameters required");
}

PhaseGrid PhaseGrid::window(double center, double half_width, double dx, double h) {
  PhaseGrid g;
  g.dx = dx;
  g.h = h;
  g.n = 2 * int(std::ceil(half_width / dx));
  g.x_lo = center - 0.5 * g.n * dx;
  return g;
}

namespace {

// Fast Lambda for symbol sampling: closed form at eps0 = 1, otherwise a
// cumulative Hermite table with the asymptotic tail beyond its range.
class LambdaEvaluator {
 public:
  explicit LambdaEvaluator(double eps0) : eps0_(eps0) {
    inf_ = lambda_infinity(eps0);
    if (eps0 == 1.0) return;
    const int n = 4000;
    values_.resize(n + 1);
    values_[0] = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double a = range_ * (i - 1) / n, b = range_ * i / n;
      // 15-point Gauss on each panel through the derivative (smooth integrand)
      values_[i] = values_[i - 1] +
                   quad::integrate([this](double t) { return lambda_integrand(t, eps0_); },
                                   a, b, 1e-13);
    }
  }

  double inf() const { return inf_; }

  double lambda(double r) const {
    if (eps0_ == 1.0) return std::atan(r);
    const double a = std::abs(r);
    double v;
    if (a >= range_) {
      // Lambda(inf) - tail, tail = a^-eps0/eps0 - (1+eps0)/(2(eps0+2)) a^-(eps0+2)
      v = inf_ - std::pow(a, -eps0_) / eps0_ +
          (1.0 + eps0_) / (2.0 * (eps0_ + 2.0)) * std::pow(a, -(eps0_ + 2.0));
    } else {
      const double step = range_ / (values_.size() - 1);
      const int i = std::min<int>(static_cast<int>(a / step), values_.size() - 2);
      const double t = (a - i * step) / step;
      const double f0 = values_[i], f1 = values_[i + 1];
      const double d0 = lambda_integrand(i * step, eps0_) * step;
      const double d1 = lambda_integrand((i + 1) * step, eps0_) * step;
      const double t2 = t * t, t3 = t2 * t;
      v = (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * d0 +
          (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * d1;
    }
    return r < 0.0 ? -v : v;
  }

  double lambda_prime(double r) const { return lambda_integrand(r, eps0_); }

 private:
  double eps0_;
  double inf_ = 0.0;
  double range_ = 40.0;
  std::vector<double> values_;
};

}  // namespace

CommutantSymbol::CommutantSymbol(const CommutantParams& params, const PhaseGrid& grid)
    : params_(params), grid_(grid) {
  params_.validate();
  lambda_inf_ = lambda_infinity(params_.eps0);
  samples_.resize(grid.n, grid.n);
  dxi_samples_.resize(grid.n, grid.n);
  for (int i = 0; i < grid.n; ++i) {
    const double x = grid.x(i);
    for (int j = 0; j < grid.n; ++j) {
      const double xi = grid.xi(j);
      samples_(i, j) = value(x, xi);
      dxi_samples_(i, j) = dxi(x, xi);
    }
  }
}

double CommutantSymbol::chi(double s) const {
  const double d1 = params_.delta1;
  const double a = std::abs(s);
  if (a <= d1) return 1.0;
  if (a >= 2.0 * d1) return 0.0;
  return 1.0 - Smoothstep(params_.chi_order).value((a - d1) / d1);
}

double CommutantSymbol::chi_derivative(double s) const {
  const double d1 = params_.delta1;
  const double a = std::abs(s);
  if (a <= d1 || a >= 2.0 * d1) return 0.0;
  const double dv = -Smoothstep(params_.chi_order).derivative((a - d1) / d1, 1) / d1;
  return s >= 0.0 ? dv : -dv;
}

namespace {

const LambdaEvaluator& lambda_evaluator(double eps0) {
  // per-thread cache; symbols are sampled densely with a fixed eps0
  static thread_local std::unique_ptr<LambdaEvaluator> holder;
  static thread_local double holder_eps0 = -1.0;
  if (!holder || holder_eps0 != eps0) {
    holder = std::make_unique<LambdaEvaluator>(eps0);
    holder_eps0 = eps0;
  }
  return *holder;
}

}  // namespace

double CommutantSymbol::value(double x, double xi) const {
  const LambdaEvaluator& lam = lambda_evaluator(params_.eps0);
  const double ratio = params_.h / params_.h_tilde;
  const double big_x = (x - params_.x_center) / std::pow(ratio, params_.alpha());
  const double big_xi = xi / std::pow(ratio, params_.beta());
  return lam.lambda(big_xi) * (lambda_inf_ + lam.lambda(big_x)) *
         chi(x - params_.x_center) * chi(xi);
}

double CommutantSymbol::dxi(double x, double xi) const {
  const LambdaEvaluator& lam = lambda_evaluator(params_.eps0);
  const double ratio = params_.h / params_.h_tilde;
  const double scale_xi = std::pow(ratio, params_.beta());
  const double big_x = (x - params_.x_center) / std::pow(ratio, params_.alpha());
  const double big_xi = xi / scale_xi;
  const double lam2 = lambda_inf_ + lam.lambda(big_x);
  const double cx = chi(x - params_.x_center);
  return lam.lambda_prime(big_xi) / scale_xi * lam2 * cx * chi(xi) +
         lam.lambda(big_xi) * lam2 * cx * chi_derivative(xi);
}

double CommutantSymbol::sup_bound() const { return lambda_inf_ * 2.0 * lambda_inf_; }

CommutantSymbol build_commutant(const CommutantParams& params, const PhaseGrid& grid) {
  return CommutantSymbol(params, grid);
}

Eigen::MatrixXcd weyl_quantize(const std::function<double(double, double)>& symbol,
                               const PhaseGrid& grid, double nyquist_requirement) {
  if (nyquist_requirement > 0.0 && grid.xi_max() < nyquist_requirement)
    throw NyquistViolation("weyl_quantize: xi lattice reaches " +
                           std::to_string(grid.xi_max()) + " < required " +
                           std::to_string(nyquist_requirement));
  const int n = grid.n;
  // kernel rows per midpoint: K_s[l] = (1/n) sum_j a(s, xi_j) e^{2 pi i l j / n}
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec(n), kernel(n);
  std::vector<Eigen::VectorXcd> rows(2 * n - 1);
  for (int s = 0; s < 2 * n - 1; ++s) {
    const double x_mid = grid.x_lo + 0.5 * s * grid.dx;
    for (int j = 0; j < n; ++j) spec[j] = symbol(x_mid, grid.xi(j));
    fft.inv(kernel, spec);  // (1/n) sum_j spec_j e^{+2 pi i l j / n}
    rows[s] = Eigen::Map<Eigen::VectorXcd>(kernel.data(), n);
  }
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int l = ((i - j) % n + n) % n;
      m(i, j) = rows[i + j][l];
    }
  return m;
}

GardingSample garding_defect(const std::function<double(double, double)>& symbol,
                             const PhaseGrid& grid) {
  Eigen::MatrixXcd m = weyl_quantize(symbol, grid);
  Eigen::MatrixXcd herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  GardingSample out;
  out.h = grid.h;
  out.min_eigenvalue = es.eigenvalues()[0];
  out.defect_constant = std::max(0.0, -out.min_eigenvalue) / grid.h;
  return out;
}

namespace {

// Band-limited compression basis: DFT columns of the window lattice with
// |xi_l| <= band.  Columns are exactly l2-orthonormal.
Eigen::MatrixXcd band_basis(const PhaseGrid& grid, double band) {
  std::vector<int> modes;
  for (int l = 0; l < grid.n; ++l)
    if (std::abs(grid.xi(l)) <= band) modes.push_back(l);
  Eigen::MatrixXcd b(grid.n, modes.size());
  const double norm = 1.0 / std::sqrt(double(grid.n));
  for (size_t c = 0; c < modes.size(); ++c)
    for (int i = 0; i < grid.n; ++i) {
      const double phase = 2.0 * M_PI * double(modes[c]) * i / grid.n;
      b(i, c) = std::polar(norm, phase);
    }
  return b;
}

}  // namespace

SignCheckReport commutant_sign_check(const ManifoldModel& model,
                                     const CommutantParams& params,
                                     const SignCheckOptions& opts) {
  CommutantParams p = params;
  p.validate();
  const double dx = p.h / opts.points_per_h;
  const PhaseGrid grid = PhaseGrid::window(p.x_center, 2.0 * p.delta1 * 2.0, dx, p.h);
  const CommutantSymbol symbol(p, grid);

  SignCheckReport report;
  report.max_product = -std::numeric_limits<double>::infinity();
  // On {|xi| <= delta1} the xi cutoff is flat, so d_xi a >= 0 there and the
  // product with V2' <= 0 is pointwise nonpositive.
  for (int i = 0; i < grid.n; ++i) {
    const double x = grid.x(i);
    if (x <= 0.0) continue;
    if (std::abs(x - p.x_center) > 2.0 * p.delta1) continue;
    const double v2p = model.profile_2.eval_reciprocal_b(x, 1);
    for (int j = 0; j < grid.n; ++j) {
      const double xi = grid.xi(j);
      if (std::abs(xi) > p.delta1) continue;
      const double product = v2p * symbol.dxi_samples()(i, j);
      if (product > report.max_product) {
        report.max_product = product;
        report.worst_x = x;
        report.worst_xi = xi;
      }
    }
  }
  report.ok = report.max_product <= 1e-12;
  if (!report.ok)
    throw SignViolation("commutant_sign_check: V2' d_xi a = " +
                        std::to_string(report.max_product) + " > 1e-12 at (x, xi) = (" +
                        std::to_string(report.worst_x) + ", " +
                        std::to_string(report.worst_xi) + ")");

  // Quantized surrogate: the nonnegative symbol -V2' d_xi a compressed to the
  // flat-cutoff band; smallest eigenvalue >= -C h with stable C.
  const double band = opts.band_halfwidth > 0.0 ? opts.band_halfwidth : p.delta1;
  for (double h : opts.garding_h_list) {
    CommutantParams ph = p;
    ph.h = h;
    ph.h_tilde = std::max(std::sqrt(h), 8.0 * h);
    const double dxh = h / opts.points_per_h;
    const PhaseGrid gh = PhaseGrid::window(ph.x_center, 2.0 * ph.delta1 * 2.0, dxh, h);
    const CommutantSymbol sh(ph, gh);
    auto b_sym = [&](double x, double xi) {
      const double v2p = x > 0.0 ? model.profile_2.eval_reciprocal_b(x, 1) : 0.0;
      return -v2p * sh.dxi(x, xi);
    };
    Eigen::MatrixXcd bw = weyl_quantize(b_sym, gh);
    Eigen::MatrixXcd basis = band_basis(gh, band);
    Eigen::MatrixXcd compressed = basis.adjoint() * (bw * basis);
    Eigen::MatrixXcd herm = 0.5 * (compressed + compressed.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    GardingSample gs;
    gs.h = h;
    gs.min_eigenvalue = es.eigenvalues().size() ? es.eigenvalues()[0] : 0.0;
    gs.defect_constant = std::max(0.0, -gs.min_eigenvalue) / h;
    report.garding.push_back(gs);
  }
  return report;
}

namespace {

// (hD)^2 + V1 on the window nodes, Dirichlet-truncated, dense.
Eigen::MatrixXd window_kinetic(const ManifoldModel& model, const PhaseGrid& grid) {
  const int n = grid.n;
  const double h2 = grid.h * grid.h;
  const double inv = h2 / (grid.dx * grid.dx);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    p(i, i) = 2.0 * inv + model.profile_1.eval_reciprocal_b(grid.x(i), 0);
    if (i + 1 < n) p(i, i + 1) = p(i + 1, i) = -inv;
  }
  return p;
}

}  // namespace

CommutatorScalingReport commutator_scaling_test(const ManifoldModel& model,
                                                std::span<const double> h_list, int n,
                                                const ScalingOptions& opts) {
  if (h_list.size() < 3)
    throw std::invalid_argument("commutator_scaling_test: need >= 3 h values");
  CommutatorScalingReport report;
  report.theory_slope =
      model.profile_1.has_inflection()
          ? double(4 * model.profile_1.inflection_order() + 2) /
                double(2 * model.profile_1.inflection_order() + 3)
          : 0.0;

  const double xc = model.profile_1.has_inflection() ? model.profile_1.x_star() : 1.0;
  bool all_positive = true;
  double max_mismatch = 0.0;

  for (size_t idx = 0; idx < h_list.size(); ++idx) {
    const double h = h_list[idx];
    // microlocalized state on the scan grid
    resolvent::ScanConfig scfg = opts.state_config;
    scfg.cutoffs.center = xc;
    scfg.cutoffs.delta1 = opts.delta1;
    Eigen::VectorXcd full_state;
    const geometry::RadialGrid scan_grid = resolvent::scan_grid_for(h, scfg);
    if (opts.states && idx < opts.states->size()) {
      full_state = (*opts.states)[idx];
      if (full_state.size() != scan_grid.n_points)
        throw std::invalid_argument(
            "commutator_scaling_test: state length must match the scan grid");
    } else {
      const double zc = model.profile_1.has_inflection()
                            ? model.trapped_potential_1()
                            : model.profile_1.eval_reciprocal_b(xc, 0);
      resolvent::QuasimodeResult qm = resolvent::quasimode_residual(
          model, h, n, zc - scfg.z_halfwidth, zc + scfg.z_halfwidth, scfg);
      full_state = qm.state;
    }

    // window lattice carved out of the scan grid so states restrict exactly
    const double half_width = 2.0 * opts.delta1 * 2.0;
    const double dx = scan_grid.dx();
    const int i_center = int(std::round(xc / dx)) - 1;
    const int half_nodes = int(std::floor(half_width / dx));
    const int i0 = std::max(0, i_center - half_nodes);
    const int i1 = std::min(scan_grid.n_points - 1, i_center + half_nodes);
    PhaseGrid grid;
    grid.x_lo = scan_grid.node(i0);
    grid.dx = dx;
    grid.n = i1 - i0 + 1;
    grid.h = h;

    CommutantParams params;
    params.h = h;
    params.h_tilde = opts.h_tilde_policy == ScalingOptions::HTildePolicy::fixed
                         ? opts.h_tilde_fixed
                         : std::sqrt(h);
    params.eps0 = opts.eps0;
    params.delta1 = opts.delta1;
    params.x_center = xc;
    params.m1 = model.profile_1.has_inflection() ? model.profile_1.inflection_order() : 1;
    const CommutantSymbol symbol(params, grid);

    Eigen::MatrixXcd aw =
        weyl_quantize([&](double x, double xi) { return symbol.value(x, xi); }, grid);
    Eigen::MatrixXd pmat = window_kinetic(model, grid);

    Eigen::VectorXcd v(grid.n);
    for (int i = 0; i < grid.n; ++i) v[i] = full_state[i0 + i];
    const double vn = v.norm();
    if (vn == 0.0) throw NotConverged("commutator_scaling_test: state vanishes on window");
    v /= vn;

    const Eigen::VectorXcd av = aw * v;
    const Eigen::VectorXcd pv = pmat * v;
    const Eigen::VectorXcd pav = pmat * av;
    const Eigen::VectorXcd apv = aw * pv;
    const std::complex<double> iunit(0.0, 1.0);

    ScalingSample sample;
    sample.h = h;
    // route 1: commutator applied to the state, then one inner product
    sample.q = std::real(v.dot(iunit * (pav - apv)));
    // route 2: the two split inner products
    sample.q_alt = std::real(iunit * (v.dot(pav) - v.dot(apv)));
    max_mismatch = std::max(max_mismatch, std::abs(sample.q - sample.q_alt));

    auto omega_sym = [&](double x, double xi) {
      const double v2p = x > 0.0 ? model.profile_2.eval_reciprocal_b(x, 1) : 0.0;
      return -v2p * symbol.dxi(x, xi);
    };
    Eigen::MatrixXcd bw = weyl_quantize(omega_sym, grid);
    sample.omega_form = std::real(v.dot(bw * v));
    if (sample.q <= 0.0) all_positive = false;
    report.samples.push_back(sample);
  }

  std::vector<double> hs, qs;
  for (const auto& s : report.samples)
    if (s.q > 0.0) {
      hs.push_back(s.h);
      qs.push_back(s.q);
    }
  if (hs.size() >= 3) {
    report.fit = fit_loglog(hs, qs);
    report.fitted_slope = report.fit.slope;
  }
  report.all_positive = all_positive;
  report.max_algebra_mismatch = max_mismatch;
  return report;
}

}  // namespace warpsmooth::microlocal
