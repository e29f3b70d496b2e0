#pragma once

#include <Eigen/Core>

namespace warpsmooth::evolve {

// One separated angular mode u_{k,n}(t, x) on the interior radial nodes.
struct ModeState {
  int k = 0;
  int n = 0;
  Eigen::VectorXcd amplitudes;
  double time = 0.0;
};

}  // namespace warpsmooth::evolve
