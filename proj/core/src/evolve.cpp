#include "warpsmooth/evolve.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>

#include "warpsmooth/errors.hpp"

namespace warpsmooth::evolve {

using geometry::ModeOperator;
using geometry::RadialGrid;

void InitialDataSpec::validate(const RadialGrid& grid) const {
  if (kind == Kind::gaussian_coherent && !(width > 2.0 * grid.dx()))
    throw std::invalid_argument("InitialDataSpec: width must exceed 2 dx");
  if (!(center > 0.0 && center < grid.x_max))
    throw std::invalid_argument("InitialDataSpec: center must lie inside the grid");
  if (kind == Kind::band_limited_random && band_limit < 1)
    throw std::invalid_argument("InitialDataSpec: band_limit >= 1");
}

namespace {

void normalize_l2(Eigen::VectorXcd& u, double dx) {
  const double nrm = std::sqrt(u.squaredNorm() * dx);
  if (nrm == 0.0) throw std::invalid_argument("initial data has zero norm");
  u /= nrm;
}

// Shift-invert Arnoldi around the trapped energy.  Works for the self-adjoint
// assembly and for the absorbing (complex) one; in the latter case the
// eigenpair near the trapped energy is the resonance state.
struct RitzPair {
  std::complex<double> lambda;
  Eigen::VectorXcd vector;
  double residual;
};

std::vector<RitzPair> shift_invert_ritz(const ModeOperator& op,
                                        std::complex<double> shift, int krylov_dim) {
  const int n = op.grid.n_points;
  const int bw = op.bandwidth();
  BandedLU lu(n, bw, bw);
  for (int i = 0; i < n; ++i) {
    for (int d = -bw; d <= bw; ++d) {
      const int j = i + d;
      if (j < 0 || j >= n) continue;
      std::complex<double> v = op.matrix.get(i, j);
      if (i == j) {
        if (op.sponge) v += std::complex<double>(0.0, -(*op.sponge)[i]);
        v -= shift;
      }
      lu.at(i, j) = v;
    }
  }
  lu.factorize();

  const int m = std::min(krylov_dim, n);
  std::vector<Eigen::VectorXcd> basis;
  basis.reserve(m + 1);
  Eigen::MatrixXcd hess = Eigen::MatrixXcd::Zero(m + 1, m);

  // deterministic start: bump at the grid center
  Eigen::VectorXcd q(n);
  for (int i = 0; i < n; ++i) {
    const double x = op.grid.node(i);
    const double xc = 0.5 * op.grid.x_max;
    q[i] = std::exp(-(x - xc) * (x - xc)) * (1.0 + 0.3 * std::sin(3.0 * x));
  }
  q /= q.norm();
  basis.push_back(q);

  int steps = 0;
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXcd w = basis[j];
    lu.solve(w.data());
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        const std::complex<double> h = basis[i].dot(w);
        if (pass == 0)
          hess(i, j) = h;
        else
          hess(i, j) += h;
        w -= h * basis[i];
      }
    const double beta = w.norm();
    hess(j + 1, j) = beta;
    ++steps;
    if (beta < 1e-13) break;
    basis.push_back(w / beta);
  }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(hess.topLeftCorner(steps, steps));
  std::vector<RitzPair> out;
  const double hlast = std::abs(hess(steps, steps - 1).real()) +
                       std::abs(hess(steps, steps - 1).imag());
  for (int j = 0; j < steps; ++j) {
    const std::complex<double> mu = es.eigenvalues()[j];
    if (std::abs(mu) < 1e-14) continue;
    RitzPair pair;
    pair.lambda = shift + 1.0 / mu;
    pair.residual = hlast * std::abs(es.eigenvectors()(steps - 1, j)) / std::abs(mu);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(op.grid.n_points);
    for (int i = 0; i < steps; ++i) v += es.eigenvectors()(i, j) * basis[i];
    pair.vector = v / v.norm();
    out.push_back(std::move(pair));
  }
  return out;
}

ModeState make_quasimode(const InitialDataSpec& spec,
                         const geometry::ManifoldModel& model, const RadialGrid& grid,
                         const ModeOperator& op) {
  const double xs = model.profile_1.has_inflection() ? model.profile_1.x_star()
                                                     : spec.center;
  const double v1_star = model.profile_1.has_inflection()
                             ? model.trapped_potential_1()
                             : model.profile_1.eval_reciprocal_b(xs, 0);
  double target = double(spec.k) * spec.k * v1_star;
  if (spec.n != 0 && model.profile_2.has_inflection())
    target += double(spec.n) * spec.n / model.profile_2.trapped_level();
  const double window = spec.energy_window_rel * std::max(target, 1.0);

  for (int krylov : {32, 64, 96}) {
    std::vector<RitzPair> pairs = shift_invert_ritz(op, {target, 0.0}, krylov);
    std::vector<const RitzPair*> converged;
    for (const RitzPair& p : pairs)
      if (p.residual < 1e-9) converged.push_back(&p);
    if (converged.empty()) continue;

    const RitzPair* chosen = nullptr;
    if (spec.selection == InitialDataSpec::QuasimodeSelection::max_trapped_mass) {
      double best_mass = -1.0;
      for (const RitzPair* p : converged) {
        if (std::abs(p->lambda.real() - target) > window) continue;
        double mass = 0.0;
        for (int i = 0; i < grid.n_points; ++i)
          if (std::abs(grid.node(i) - xs) <= 0.5) mass += std::norm(p->vector[i]);
        if (mass > best_mass) {
          best_mass = mass;
          chosen = p;
        }
      }
    }
    if (!chosen) {  // nearest eigenvalue to the trapped energy
      double best = std::numeric_limits<double>::infinity();
      for (const RitzPair* p : converged) {
        const double dist = std::abs(p->lambda - std::complex<double>(target, 0.0));
        if (dist < best) {
          best = dist;
          chosen = p;
        }
      }
    }
    if (chosen) {
      ModeState state;
      state.k = spec.k;
      state.n = spec.n;
      state.amplitudes = chosen->vector;
      normalize_l2(state.amplitudes, grid.dx());
      return state;
    }
  }
  throw NoEigenpair("make_initial_data: no converged eigenpair near energy " +
                    std::to_string(target) + " for k=" + std::to_string(spec.k));
}

}  // namespace

ModeState make_initial_data(const InitialDataSpec& spec,
                            const geometry::ManifoldModel& model,
                            const RadialGrid& grid, const ModeOperator& op) {
  spec.validate(grid);
  ModeState state;
  state.k = spec.k;
  state.n = spec.n;
  state.time = 0.0;

  switch (spec.kind) {
    case InitialDataSpec::Kind::gaussian_coherent: {
      state.amplitudes.resize(grid.n_points);
      for (int i = 0; i < grid.n_points; ++i) {
        const double x = grid.node(i);
        state.amplitudes[i] =
            std::exp(-(x - spec.center) * (x - spec.center) / (2.0 * spec.width * spec.width));
      }
      normalize_l2(state.amplitudes, grid.dx());
      return state;
    }
    case InitialDataSpec::Kind::band_limited_random: {
      std::mt19937_64 rng(spec.seed);
      std::uniform_real_distribution<double> unif(-1.0, 1.0);
      state.amplitudes = Eigen::VectorXcd::Zero(grid.n_points);
      const int modes = std::min(spec.band_limit, grid.n_points);
      for (int j = 1; j <= modes; ++j) {
        const std::complex<double> c(unif(rng), unif(rng));
        for (int i = 0; i < grid.n_points; ++i) {
          const double phase = M_PI * j * (i + 1) / double(grid.n_points + 1);
          state.amplitudes[i] += c * std::sin(phase);
        }
      }
      normalize_l2(state.amplitudes, grid.dx());
      return state;
    }
    case InitialDataSpec::Kind::quasimode:
      return make_quasimode(spec, model, grid, op);
  }
  throw std::invalid_argument("make_initial_data: unknown kind");
}

ModeState make_initial_data(const InitialDataSpec& spec,
                            const geometry::ManifoldModel& model,
                            const RadialGrid& grid) {
  if (spec.kind == InitialDataSpec::Kind::quasimode) {
    const ModeOperator op =
        geometry::assemble_mode_operator(model, spec.k, spec.n, grid, 2, {});
    return make_initial_data(spec, model, grid, op);
  }
  // the operator is unused for the closed-form kinds
  geometry::ModeOperator dummy;
  dummy.grid = grid;
  return make_initial_data(spec, model, grid, dummy);
}

CrankNicolsonStepper::CrankNicolsonStepper(const ModeOperator& op, double dt)
    : op_(&op), dt_(dt), lu_(op.grid.n_points, op.bandwidth(), op.bandwidth()) {
  if (!(dt > 0.0)) throw std::invalid_argument("CrankNicolsonStepper: dt > 0");
  const int n = op.grid.n_points;
  const int bw = op.bandwidth();
  const std::complex<double> ih(0.0, 0.5 * dt);
  for (int i = 0; i < n; ++i) {
    for (int d = -bw; d <= bw; ++d) {
      const int j = i + d;
      if (j < 0 || j >= n) continue;
      std::complex<double> v = ih * op.matrix.get(i, j);
      if (i == j) {
        v += 1.0;
        if (op.sponge) v += 0.5 * dt * (*op.sponge)[i];  // i*dt/2 * (-i sigma)
      }
      lu_.at(i, j) = v;
    }
  }
  lu_.factorize();
}

void CrankNicolsonStepper::step(ModeState& state) const {
  const int n = op_->grid.n_points;
  Eigen::VectorXcd pu(n);
  op_->apply(state.amplitudes, pu);
  const std::complex<double> mih(0.0, -0.5 * dt_);
  Eigen::VectorXcd rhs = state.amplitudes + mih * pu;
  lu_.solve(rhs.data());
  state.amplitudes = std::move(rhs);
  state.time += dt_;
}

ModeState step_crank_nicolson(const ModeOperator& op, const ModeState& state, double dt) {
  CrankNicolsonStepper stepper(op, dt);
  ModeState next = state;
  stepper.step(next);
  return next;
}

TrajectorySummary evolve_mode(const ModeOperator& op, const ModeState& u0, double T,
                              double dt,
                              const std::vector<geometry::QuadraticObservable>& observables,
                              const EvolveOptions& opts) {
  if (T < 0.0) throw std::invalid_argument("evolve_mode: T >= 0");
  TrajectorySummary out;
  out.final_state = u0;
  out.integrals.assign(observables.size(), 0.0);
  for (const auto& obs : observables) out.observable_names.push_back(obs.name);
  if (T == 0.0) return out;
  if (!(dt > 0.0e0) || dt > T) throw std::invalid_argument("evolve_mode: 0 < dt <= T");

  const double dx = op.grid.dx();
  CrankNicolsonStepper stepper(op, dt);
  const long long steps = static_cast<long long>(std::ceil(T / dt - 1e-12));

  std::vector<double> prev(observables.size()), cur(observables.size());
  for (size_t i = 0; i < observables.size(); ++i)
    prev[i] = observables[i].evaluate(u0.amplitudes, dx);
  const double norm0 = std::sqrt(u0.amplitudes.squaredNorm() * dx);

  auto record = [&](double t, const ModeState& st, const std::vector<double>& vals) {
    if (!opts.record_every) return;
    TrajectoryRow row;
    row.t = t;
    row.norm = std::sqrt(st.amplitudes.squaredNorm() * dx);
    row.observables = vals;
    out.rows.push_back(std::move(row));
  };
  record(0.0, out.final_state, prev);

  for (long long s = 1; s <= steps; ++s) {
    // final partial step keeps the endpoint exactly at T
    const double step_dt = std::min(dt, T - (s - 1) * dt);
    if (step_dt < dt * (1.0 - 1e-12)) {
      CrankNicolsonStepper last(op, step_dt);
      last.step(out.final_state);
    } else {
      stepper.step(out.final_state);
    }
    ++out.n_steps;

    for (size_t i = 0; i < observables.size(); ++i)
      cur[i] = observables[i].evaluate(out.final_state.amplitudes, dx);
    for (size_t i = 0; i < observables.size(); ++i)
      out.integrals[i] += 0.5 * step_dt * (prev[i] + cur[i]);
    prev = cur;

    const double norm = std::sqrt(out.final_state.amplitudes.squaredNorm() * dx);
    if (norm > 0.0) {
      const double boundary =
          std::abs(out.final_state.amplitudes[op.grid.n_points - 1]) / norm;
      out.max_boundary_ratio = std::max(out.max_boundary_ratio, boundary);
    }
    if (opts.record_every && (s % opts.record_every == 0))
      record(out.final_state.time, out.final_state, cur);

    if (opts.early_stop && norm < opts.early_stop_mass_rel * norm0) {
      out.early_stopped = true;
      out.stopped_at = out.final_state.time;
      break;
    }
  }
  if (!op.sponge && out.max_boundary_ratio > 1e-6) out.boundary_contamination = true;
  return out;
}

}  // namespace warpsmooth::evolve
