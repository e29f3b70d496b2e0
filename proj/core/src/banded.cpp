#include "warpsmooth/banded.hpp"

#include <lapacke.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "warpsmooth/errors.hpp"

namespace warpsmooth {

double& SymmetricBanded::at(int row, int col) {
  if (row < col) std::swap(row, col);
  if (row - col > kd_ || col < 0 || row >= n_)
    throw std::out_of_range("SymmetricBanded::at outside band");
  return ab_[size_t(col) * (kd_ + 1) + (row - col)];
}

double SymmetricBanded::get(int row, int col) const {
  if (row < col) std::swap(row, col);
  if (col < 0 || row >= n_ || row - col > kd_) return 0.0;
  return ab_[size_t(col) * (kd_ + 1) + (row - col)];
}

template <typename Scalar>
static void band_apply(int n, int kd, const std::vector<double>& ab, const Scalar* x,
                       Scalar* y) {
  for (int i = 0; i < n; ++i) y[i] = ab[size_t(i) * (kd + 1)] * x[i];
  for (int d = 1; d <= kd; ++d) {
    for (int col = 0; col + d < n; ++col) {
      const double v = ab[size_t(col) * (kd + 1) + d];
      y[col + d] += v * x[col];
      y[col] += v * x[col + d];
    }
  }
}

void SymmetricBanded::apply(const double* x, double* y) const {
  band_apply(n_, kd_, ab_, x, y);
}
void SymmetricBanded::apply(const std::complex<double>* x, std::complex<double>* y) const {
  band_apply(n_, kd_, ab_, x, y);
}

Eigen::MatrixXd SymmetricBanded::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (int col = 0; col < n_; ++col)
    for (int d = 0; d <= kd_ && col + d < n_; ++d) {
      const double v = ab_[size_t(col) * (kd_ + 1) + d];
      m(col + d, col) = v;
      m(col, col + d) = v;
    }
  return m;
}

EigenDecomposition eigendecompose(const SymmetricBanded& a) {
  const int n = a.n(), kd = a.bandwidth();
  std::vector<double> ab = a.storage();  // dsbevd overwrites
  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  int info = LAPACKE_dsbevd(LAPACK_COL_MAJOR, 'V', 'L', n, kd, ab.data(), kd + 1,
                            out.values.data(), out.vectors.data(), n);
  if (info != 0)
    throw SolveFailure("dsbevd failed, info=" + std::to_string(info));
  return out;
}

Eigen::VectorXd eigenvalues_only(const SymmetricBanded& a) {
  const int n = a.n(), kd = a.bandwidth();
  std::vector<double> ab = a.storage();
  Eigen::VectorXd vals(n);
  int info = LAPACKE_dsbevd(LAPACK_COL_MAJOR, 'N', 'L', n, kd, ab.data(), kd + 1,
                            vals.data(), nullptr, n);
  if (info != 0)
    throw SolveFailure("dsbevd(N) failed, info=" + std::to_string(info));
  return vals;
}

BandedLU::BandedLU(int n, int kl, int ku)
    : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
      ab_(size_t(ldab_) * n, {0.0, 0.0}), ipiv_(n, 0) {}

std::complex<double>& BandedLU::at(int row, int col) {
  if (row < 0 || col < 0 || row >= n_ || col >= n_ || row - col > kl_ || col - row > ku_)
    throw std::out_of_range("BandedLU::at outside band");
  // zgbtrf layout: A(i,j) at ab[j*ldab + kl + ku + i - j]
  return ab_[size_t(col) * ldab_ + (kl_ + ku_ + row - col)];
}

void BandedLU::factorize() {
  int info = LAPACKE_zgbtrf(LAPACK_COL_MAJOR, n_, n_, kl_, ku_,
                            reinterpret_cast<lapack_complex_double*>(ab_.data()),
                            ldab_, ipiv_.data());
  if (info != 0)
    throw SolveFailure("zgbtrf: singular factor at pivot " + std::to_string(info));
  factorized_ = true;
}

void BandedLU::run_solve(char trans, std::complex<double>* rhs) const {
  if (!factorized_) throw SolveFailure("BandedLU: solve before factorize");
  int info = LAPACKE_zgbtrs(
      LAPACK_COL_MAJOR, trans, n_, kl_, ku_, 1,
      reinterpret_cast<const lapack_complex_double*>(ab_.data()), ldab_,
      ipiv_.data(), reinterpret_cast<lapack_complex_double*>(rhs), n_);
  if (info != 0) throw SolveFailure("zgbtrs failed, info=" + std::to_string(info));
}

void BandedLU::solve(std::complex<double>* rhs) const { run_solve('N', rhs); }
void BandedLU::solve_adjoint(std::complex<double>* rhs) const { run_solve('C', rhs); }

namespace {

// Shared Lanczos core: q0 is the normalized start vector in R^(2n) layout
// handled by the callers (complex vectors are processed as interleaved pairs
// through a real-linear apply; A real keeps real/imag parts uncoupled, so we
// run the recursion on the complex vector directly instead).
template <typename Vec, typename ApplyFn>
std::vector<double> lanczos_core(const ApplyFn& apply_complexified, int n,
                                 const Vec& u,
                                 const std::vector<std::function<double(double)>>& fs,
                                 int iters, double* min_ritz) {
  using Scalar = typename Vec::Scalar;
  const double unorm2 = u.squaredNorm();
  std::vector<double> out(fs.size(), 0.0);
  if (unorm2 == 0.0) {
    if (min_ritz) *min_ritz = 0.0;
    return out;
  }
  const int m = std::min(iters, n);
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> basis;
  basis.reserve(m);
  Eigen::VectorXd alpha(m), beta(m);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> q = u / std::sqrt(unorm2), w(n);

  int steps = 0;
  for (int j = 0; j < m; ++j) {
    basis.push_back(q);
    apply_complexified(q, w);
    Scalar a = basis[j].dot(w);  // conjugate-linear in first arg for complex
    alpha[j] = std::real(a);
    w -= alpha[j] * basis[j];
    if (j > 0) w -= Scalar(beta[j - 1]) * basis[j - 1];
    // full reorthogonalization, twice
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) w -= basis[i].dot(w) * basis[i];
    const double b = std::sqrt(std::real(Scalar(w.squaredNorm())));
    beta[j] = b;
    ++steps;
    if (b < 1e-14) break;  // invariant subspace found: quadrature exact
    q = w / b;
  }

  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(steps, steps);
  for (int j = 0; j < steps; ++j) {
    t(j, j) = alpha[j];
    if (j + 1 < steps) t(j, j + 1) = t(j + 1, j) = beta[j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  const Eigen::VectorXd& theta = es.eigenvalues();
  if (min_ritz) *min_ritz = theta.size() ? theta[0] : 0.0;
  for (size_t fi = 0; fi < fs.size(); ++fi) {
    double acc = 0.0;
    for (int j = 0; j < steps; ++j) {
      const double w0 = es.eigenvectors()(0, j);
      acc += w0 * w0 * fs[fi](theta[j]);
    }
    out[fi] = acc * unorm2;
  }
  return out;
}

}  // namespace

std::vector<double> lanczos_quadratic_forms(
    const std::function<void(const double*, double*)>& apply_a, int n,
    const Eigen::VectorXd& u, const std::vector<std::function<double(double)>>& fs,
    int iters, double* min_ritz) {
  auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    apply_a(x.data(), y.data());
  };
  return lanczos_core(apply, n, u, fs, iters, min_ritz);
}

std::vector<double> lanczos_quadratic_forms(
    const std::function<void(const double*, double*)>& apply_a, int n,
    const Eigen::VectorXcd& u, const std::vector<std::function<double(double)>>& fs,
    int iters, double* min_ritz) {
  // A real symmetric acts on real and imaginary parts independently.
  Eigen::VectorXd re(n), im(n), tre(n), tim(n);
  auto apply = [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
    for (int i = 0; i < n; ++i) {
      re[i] = x[i].real();
      im[i] = x[i].imag();
    }
    apply_a(re.data(), tre.data());
    apply_a(im.data(), tim.data());
    for (int i = 0; i < n; ++i) y[i] = {tre[i], tim[i]};
  };
  return lanczos_core(apply, n, u, fs, iters, min_ritz);
}

}  // namespace warpsmooth
