#pragma once

#include <Eigen/Core>
#include <complex>
#include <vector>

namespace warpsmooth {

// Real symmetric banded matrix in LAPACK lower band storage:
// entry (row, col) with row >= col, row - col <= kd lives at
// ab[col * (kd+1) + (row - col)].
class SymmetricBanded {
 public:
  SymmetricBanded() = default;
  SymmetricBanded(int n, int kd) : n_(n), kd_(kd), ab_(size_t(n) * (kd + 1), 0.0) {}

  int n() const { return n_; }
  int bandwidth() const { return kd_; }

  double& at(int row, int col);
  double get(int row, int col) const;

  // y = A x
  void apply(const double* x, double* y) const;
  void apply(const std::complex<double>* x, std::complex<double>* y) const;

  Eigen::MatrixXd dense() const;

  const std::vector<double>& storage() const { return ab_; }

 private:
  int n_ = 0, kd_ = 0;
  std::vector<double> ab_;
};

struct EigenDecomposition {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, l2-orthonormal
};

// Full eigendecomposition of a symmetric banded matrix (LAPACK dsbevd).
EigenDecomposition eigendecompose(const SymmetricBanded& a);
Eigen::VectorXd eigenvalues_only(const SymmetricBanded& a);

// LU factorization of a general complex banded matrix (zgbtrf / zgbtrs).
class BandedLU {
 public:
  BandedLU(int n, int kl, int ku);

  std::complex<double>& at(int row, int col);  // |row-col| within band
  void factorize();                            // throws SolveFailure if singular
  bool factorized() const { return factorized_; }

  void solve(std::complex<double>* rhs) const;          // A x = b, in place
  void solve_adjoint(std::complex<double>* rhs) const;  // A^H x = b, in place

  int n() const { return n_; }

 private:
  void run_solve(char trans, std::complex<double>* rhs) const;

  int n_ = 0, kl_ = 0, ku_ = 0, ldab_ = 0;
  bool factorized_ = false;
  std::vector<std::complex<double>> ab_;
  std::vector<int> ipiv_;
};

// Gauss quadrature value of <f(A) u, u> for symmetric A via the Lanczos
// process with full reorthogonalization.  Evaluates every f in fs on the
// shared Krylov data.  min_ritz reports the smallest Ritz value seen.
std::vector<double> lanczos_quadratic_forms(
    const std::function<void(const double*, double*)>& apply_a, int n,
    const Eigen::VectorXd& u, const std::vector<std::function<double(double)>>& fs,
    int iters, double* min_ritz = nullptr);

// Complex-vector variant (A real symmetric, u complex).
std::vector<double> lanczos_quadratic_forms(
    const std::function<void(const double*, double*)>& apply_a, int n,
    const Eigen::VectorXcd& u, const std::vector<std::function<double(double)>>& fs,
    int iters, double* min_ritz = nullptr);

}  // namespace warpsmooth
