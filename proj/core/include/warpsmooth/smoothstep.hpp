#pragma once

#include <vector>

namespace warpsmooth {

// Polynomial transition S with S(t)=0 for t<=0, S(t)=1 for t>=1 and
// S', ..., S^(N) vanishing at both ends, so gluing two C^N pieces through
// (1-S)*left + S*right preserves class C^N at the junction.
//
// S_N(t) = sum_{k=N+1}^{2N+1} binom(2N+1,k) t^k (1-t)^(2N+1-k)   (Bernstein form)
// S_N'(t) = (2N+1)!/(N!)^2 * t^N (1-t)^N >= 0, so S is monotone.
class Smoothstep {
 public:
  explicit Smoothstep(int contact_order);

  double value(double t) const;
  // k-th derivative, k >= 1; zero outside (0,1).
  double derivative(double t, int k) const;
  int contact_order() const { return order_; }

 private:
  int order_ = 0;
  double leading_ = 0.0;  // (2N+1)!/(N!)^2
};

}  // namespace warpsmooth
