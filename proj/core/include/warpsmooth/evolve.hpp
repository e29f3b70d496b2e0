#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "warpsmooth/banded.hpp"
#include "warpsmooth/geometry.hpp"
#include "warpsmooth/state.hpp"

namespace warpsmooth::evolve {

struct InitialDataSpec {
  enum class Kind { gaussian_coherent, quasimode, band_limited_random };
  enum class QuasimodeSelection { max_trapped_mass, nearest_eigenvalue };

  Kind kind = Kind::gaussian_coherent;
  double center = 1.0;
  double width = 0.1;
  int k = 0;
  int n = 0;
  std::uint64_t seed = 0;
  int band_limit = 32;  // highest sine mode for the random kind

  // Quasimode controls: eigenpair search window around the trapped energy
  // k^2 V1(x*) (+ n^2 V2(x*)), relative half width, and the tie-break rule.
  double energy_window_rel = 0.05;
  QuasimodeSelection selection = QuasimodeSelection::max_trapped_mass;

  void validate(const geometry::RadialGrid& grid) const;
};

// Normalized initial state (||u||_{L2(dx)} = 1).  The quasimode kind returns
// an eigenvector of the given operator with eigenvalue nearest the trapped
// energy (shift-invert Arnoldi); with an absorbing operator this is the
// resonance state concentrated at the critical point.
ModeState make_initial_data(const InitialDataSpec& spec,
                            const geometry::ManifoldModel& model,
                            const geometry::RadialGrid& grid,
                            const geometry::ModeOperator& op);

// Convenience overload assembling the self-adjoint P_{k,n} internally.
ModeState make_initial_data(const InitialDataSpec& spec,
                            const geometry::ManifoldModel& model,
                            const geometry::RadialGrid& grid);

// Cayley / Crank-Nicolson step: (I + i dt/2 P) u+ = (I - i dt/2 P) u.
// Exactly unitary for self-adjoint P; contractive with an absorbing layer.
class CrankNicolsonStepper {
 public:
  CrankNicolsonStepper(const geometry::ModeOperator& op, double dt);

  void step(ModeState& state) const;
  double dt() const { return dt_; }

 private:
  const geometry::ModeOperator* op_;
  double dt_;
  BandedLU lu_;
};

ModeState step_crank_nicolson(const geometry::ModeOperator& op, const ModeState& state,
                              double dt);

struct EvolveOptions {
  // Stop integrating once the surviving mass and all observable slice values
  // fall below these relative floors; the remaining tail contributes nothing
  // at working precision.  Only sensible with an absorbing layer.
  bool early_stop = false;
  double early_stop_mass_rel = 1e-14;
  int record_every = 0;  // 0: no trajectory rows
};

struct TrajectoryRow {
  double t;
  double norm;
  std::vector<double> observables;
};

struct TrajectorySummary {
  ModeState final_state;
  std::vector<double> integrals;  // trapezoid accumulation per observable
  std::vector<std::string> observable_names;
  double max_boundary_ratio = 0.0;  // max |u(x_outer)| / ||u||
  bool boundary_contamination = false;  // warning, not a failure
  bool early_stopped = false;
  double stopped_at = 0.0;
  long long n_steps = 0;
  std::vector<TrajectoryRow> rows;
};

// Steps u0 to time T accumulating each observable by the trapezoid rule.
TrajectorySummary evolve_mode(const geometry::ModeOperator& op, const ModeState& u0,
                              double T, double dt,
                              const std::vector<geometry::QuadraticObservable>& observables,
                              const EvolveOptions& opts = {});

}  // namespace warpsmooth::evolve
