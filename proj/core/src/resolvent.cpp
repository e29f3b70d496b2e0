#include "warpsmooth/resolvent.hpp"

#include <unsupported/Eigen/FFT>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "warpsmooth/errors.hpp"
#include "warpsmooth/smoothstep.hpp"

namespace warpsmooth::resolvent {

using geometry::ManifoldModel;
using geometry::ModeOperator;
using geometry::RadialGrid;

void CutoffSpec::validate() const {
  if (!(eps > 0.0 && eps < delta1 / 4.0))
    throw std::invalid_argument("CutoffSpec: need 0 < eps < delta1/4");
  if (!(center > 2.0 * delta1))
    throw std::invalid_argument("CutoffSpec: chi support must avoid x = 0");
}

double CutoffSpec::chi(double s) const {
  const double a = std::abs(s);
  if (a <= delta1) return 1.0;
  if (a >= 2.0 * delta1) return 0.0;
  return 1.0 - Smoothstep(chi_order).value((a - delta1) / delta1);
}

double CutoffSpec::psi(double r) const {
  const double a = std::abs(r);
  if (a <= eps) return 1.0;
  if (a >= 2.0 * eps) return 0.0;
  return 1.0 - Smoothstep(psi_order).value((a - eps) / eps);
}

ModeOperator semiclassical_operator(const ManifoldModel& model, double h, int n,
                                    const RadialGrid& grid,
                                    const ResolventOptions& opts) {
  if (!(h > 0.0 && h < 1.0))
    throw std::invalid_argument("semiclassical_operator: h in (0,1)");
  if (grid.n_points != model.grid.n_points || grid.x_max != model.grid.x_max)
    throw std::invalid_argument("semiclassical_operator: grid differs from model grid");
  Eigen::VectorXd w(grid.n_points);
  const double h2 = h * h;
  for (int i = 0; i < grid.n_points; ++i)
    w[i] = model.v1[i] + h2 * double(n) * n * model.v2[i] +
           opts.v_sign * h2 * model.v[i];
  std::optional<geometry::SpongeSpec> cap;
  if (opts.absorbing_layer) cap = opts.cap;
  ModeOperator op =
      geometry::assemble_custom_operator(grid, h2, std::move(w), opts.stencil_order, cap);
  op.n = n;
  return op;
}

namespace {

// psi(h D_x) on a zero-padded window around the chi support, applied through
// the discrete Fourier lattice of the window.
class PsiSandwich {
 public:
  PsiSandwich(const RadialGrid& grid, const CutoffSpec& cutoffs, double h,
              double padding_factor) {
    const double dx = grid.dx();
    const double chi_half = 2.0 * cutoffs.delta1;
    const double pad_half = padding_factor * chi_half;
    int i0 = std::max(0, int(std::floor((cutoffs.center - pad_half) / dx)) - 1);
    int i1 = std::min(grid.n_points - 1,
                      int(std::ceil((cutoffs.center + pad_half) / dx)) - 1);
    offset_ = i0;
    nw_ = i1 - i0 + 1;
    psi_factors_.resize(nw_);
    const double dxi = 2.0 * M_PI * h / (nw_ * dx);
    for (int j = 0; j < nw_; ++j) {
      const int f = (j <= nw_ / 2) ? j : j - nw_;  // FFT frequency order
      psi_factors_[j] = cutoffs.psi(dxi * f);
    }
    buf_.resize(nw_);
    spec_.resize(nw_);
  }

  void apply(Eigen::VectorXcd& v) {
    for (int j = 0; j < nw_; ++j) buf_[j] = v[offset_ + j];
    fft_.fwd(spec_, buf_);
    for (int j = 0; j < nw_; ++j) spec_[j] *= psi_factors_[j];
    fft_.inv(buf_, spec_);
    v.setZero();
    for (int j = 0; j < nw_; ++j) v[offset_ + j] = buf_[j];
  }

  int window_nodes() const { return nw_; }

 private:
  int offset_ = 0, nw_ = 0;
  std::vector<double> psi_factors_;
  std::vector<std::complex<double>> buf_, spec_;
  Eigen::FFT<double> fft_;
};

struct SandwichApplier {
  SandwichApplier(const ManifoldModel& model, double h, int n, double z, double eta,
                  const CutoffSpec& cutoffs, const RadialGrid& grid,
                  const ResolventOptions& opts)
      : psi(grid, cutoffs, h, opts.padding_factor),
        lu(grid.n_points, opts.stencil_order / 2, opts.stencil_order / 2) {
    cutoffs.validate();
    if (!(eta > 0.0)) throw std::invalid_argument("cutoff_resolvent_norm: eta > 0");
    if (grid.dx() > h / 10.0)
      throw GridTooCoarse("cutoff_resolvent_norm: dx = " + std::to_string(grid.dx()) +
                          " exceeds h/10 = " + std::to_string(h / 10.0));
    op = semiclassical_operator(model, h, n, grid, opts);
    const int nn = grid.n_points;
    const int bw = op.bandwidth();
    chi_diag.resize(nn);
    for (int i = 0; i < nn; ++i) chi_diag[i] = cutoffs.chi(grid.node(i) - cutoffs.center);
    for (int i = 0; i < nn; ++i) {
      for (int d = -bw; d <= bw; ++d) {
        const int j = i + d;
        if (j < 0 || j >= nn) continue;
        std::complex<double> v = op.matrix.get(i, j);
        if (i == j) {
          if (op.sponge) v += std::complex<double>(0.0, -(*op.sponge)[i]);
          v -= std::complex<double>(z, eta);
        }
        lu.at(i, j) = v;
      }
    }
    lu.factorize();
  }

  // R v = chi psi (P - z - i eta)^-1 psi chi v
  void apply(Eigen::VectorXcd& v) {
    v.array() *= chi_diag.array();
    psi.apply(v);
    lu.solve(v.data());
    psi.apply(v);
    v.array() *= chi_diag.array();
  }

  // R* v (psi, chi self-adjoint; resolvent adjoint via the 'C' solve)
  void apply_adjoint(Eigen::VectorXcd& v) {
    v.array() *= chi_diag.array();
    psi.apply(v);
    lu.solve_adjoint(v.data());
    psi.apply(v);
    v.array() *= chi_diag.array();
  }

  ModeOperator op;
  PsiSandwich psi;
  BandedLU lu;
  Eigen::VectorXd chi_diag;
};

struct PowerResult {
  double sigma = 0.0;
  Eigen::VectorXcd left;   // top left singular vector (microlocalized output)
  Eigen::VectorXcd right;  // top right singular vector
};

PowerResult power_iterate(SandwichApplier& sandwich, const RadialGrid& grid,
                          const CutoffSpec& cutoffs, double tol, int max_iter) {
  const int n = grid.n_points;
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) {
    const double x = grid.node(i);
    const double d = x - cutoffs.center;
    v[i] = std::exp(-d * d / (2.0 * cutoffs.delta1 * cutoffs.delta1)) *
           (1.0 + 0.3 * std::cos(3.0 * x));
  }
  v /= v.norm();

  double sigma = 0.0, prev = -1.0;
  Eigen::VectorXcd rv;
  for (int it = 0; it < max_iter; ++it) {
    rv = v;
    sandwich.apply(rv);
    sigma = rv.norm();
    if (sigma == 0.0)
      return PowerResult{0.0, Eigen::VectorXcd::Zero(n), Eigen::VectorXcd::Zero(n)};
    Eigen::VectorXcd w = rv;
    sandwich.apply_adjoint(w);
    const double wn = w.norm();
    if (wn == 0.0) break;
    v = w / wn;
    if (prev >= 0.0 && std::abs(sigma - prev) <= tol * sigma) {
      PowerResult out;
      out.sigma = sigma;
      out.right = v;
      out.left = rv / sigma;
      return out;
    }
    prev = sigma;
  }
  throw NotConverged("cutoff_resolvent_norm: power iteration did not settle within " +
                     std::to_string(max_iter) + " iterations");
}

}  // namespace

double cutoff_resolvent_norm(const ManifoldModel& model, double h, int n, double z,
                             double eta, const CutoffSpec& cutoffs,
                             const RadialGrid& grid, const ResolventOptions& opts) {
  SandwichApplier sandwich(model, h, n, z, eta, cutoffs, grid, opts);
  return power_iterate(sandwich, grid, cutoffs, opts.power_tol, opts.power_max_iter)
      .sigma;
}

Eigen::MatrixXcd dense_sandwich(const ManifoldModel& model, double h, int n, double z,
                                double eta, const CutoffSpec& cutoffs,
                                const RadialGrid& grid, const ResolventOptions& opts) {
  SandwichApplier sandwich(model, h, n, z, eta, cutoffs, grid, opts);
  const int nn = grid.n_points;
  Eigen::MatrixXcd m(nn, nn);
  Eigen::VectorXcd e(nn);
  for (int j = 0; j < nn; ++j) {
    e.setZero();
    e[j] = 1.0;
    sandwich.apply(e);
    m.col(j) = e;
  }
  return m;
}

geometry::RadialGrid scan_grid_for(double h, const ScanConfig& config) {
  const double dx_target = h / config.points_per_wavelength;
  const int n_points = std::max(64, int(std::ceil(config.x_max / dx_target)) - 1);
  return RadialGrid{config.x_max, n_points};
}

namespace {

double scan_z_center(const ManifoldModel& model, const ScanConfig& config, double h,
                     int n) {
  if (config.z_center) return *config.z_center;
  // rescaled trapped energy, including the separated omega term
  double c = model.profile_1.has_inflection()
                 ? model.trapped_potential_1()
                 : model.profile_1.eval_reciprocal_b(config.cutoffs.center, 0);
  if (n != 0)
    c += h * h * double(n) * n *
         model.profile_2.eval_reciprocal_b(
             model.profile_1.has_inflection() ? model.profile_1.x_star()
                                              : config.cutoffs.center,
             0);
  return c;
}

int resolve_n_probe(int code, double h) {
  return code >= 0 ? code : int(std::floor(1.0 / h));
}

}  // namespace

ResolventScan resolvent_scan_fit(const ManifoldModel& model, const ScanConfig& config) {
  if (config.h_list.size() < 5)
    throw std::invalid_argument("resolvent_scan_fit: need >= 5 dyadic h values");
  if (config.z_samples < 1 || config.n_probe.empty())
    throw std::invalid_argument("resolvent_scan_fit: empty sweep");

  struct Task {
    double h;
    double z;
    int n;
  };
  std::vector<Task> tasks;
  for (double h : config.h_list)
    for (int code : config.n_probe) {
      const int n = resolve_n_probe(code, h);
      const double zc = scan_z_center(model, config, h, n);
      for (int i = 0; i < config.z_samples; ++i) {
        const double t = config.z_samples == 1
                             ? 0.0
                             : -1.0 + 2.0 * double(i) / (config.z_samples - 1);
        tasks.push_back({h, zc + t * config.z_halfwidth, n});
      }
    }

  TaskPool inline_pool(1);
  const TaskPool& pool = config.pool ? *config.pool : inline_pool;
  std::vector<ScanRecord> records =
      pool.map_indexed<ScanRecord>(static_cast<int>(tasks.size()), [&](int i) {
        const Task& t = tasks[i];
        const RadialGrid grid = scan_grid_for(t.h, config);
        // rebuild the model samples on the scan grid
        const ManifoldModel scan_model =
            geometry::build_model(model.profile_1, model.profile_2, grid);
        ScanRecord rec;
        rec.h = t.h;
        rec.z = t.z;
        rec.n = t.n;
        rec.eta = config.eta_coeff * t.h * t.h;
        rec.norm = cutoff_resolvent_norm(scan_model, t.h, t.n, t.z, rec.eta,
                                         config.cutoffs, grid, config.ops);
        return rec;
      });

  ResolventScan out;
  out.records = records;
  out.h_list = config.h_list;
  out.theory_slope = model.theory_resolvent_slope();

  std::vector<double> inv_h;
  for (double h : config.h_list) {
    double sup = 0.0;
    for (const ScanRecord& r : records)
      if (r.h == h && r.n == resolve_n_probe(config.n_probe[0], h))
        sup = std::max(sup, r.norm);
    out.sup_norm.push_back(sup);
    inv_h.push_back(1.0 / h);
  }
  out.fit = fit_loglog(inv_h, out.sup_norm);
  out.fitted_slope = out.fit.slope;

  const int m = model.m_max();
  const double r_exp = (m > 0) ? 2.0 / double(2 * m + 3) : 0.5;
  for (size_t i = 0; i < config.h_list.size(); ++i)
    out.ff_product.push_back(std::pow(config.h_list[i], 2.0 * r_exp) * out.sup_norm[i]);

  if (out.fit.r2 < 0.9)
    throw PoorFit("resolvent_scan_fit: R^2 = " + std::to_string(out.fit.r2) + " < 0.9");
  return out;
}

QuasimodeResult quasimode_residual(const ManifoldModel& model, double h, int n,
                                   double z_lo, double z_hi, const ScanConfig& config) {
  const RadialGrid grid = scan_grid_for(h, config);
  const ManifoldModel scan_model =
      geometry::build_model(model.profile_1, model.profile_2, grid);
  const double eta = config.eta_coeff * h * h;

  QuasimodeResult best;
  const int samples = std::max(2, config.z_samples);
  for (int i = 0; i < samples; ++i) {
    const double z = z_lo + (z_hi - z_lo) * double(i) / (samples - 1);
    SandwichApplier sandwich(scan_model, h, n, z, eta, config.cutoffs, grid, config.ops);
    PowerResult pr = power_iterate(sandwich, grid, config.cutoffs, config.ops.power_tol,
                                   config.ops.power_max_iter);
    if (pr.sigma > best.norm) {
      best.norm = pr.sigma;
      best.z_best = z;
      best.state = pr.left;
    }
  }
  if (best.norm <= 0.0)
    throw NotConverged("quasimode_residual: sandwiched norm vanished on the window");
  best.residual = 1.0 / best.norm;
  best.state /= std::sqrt(best.state.squaredNorm() * grid.dx());
  return best;
}

}  // namespace warpsmooth::resolvent
