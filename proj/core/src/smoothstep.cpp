#include "warpsmooth/smoothstep.hpp"

#include <cmath>
#include <stdexcept>

namespace warpsmooth {

namespace {

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

// N! / (N-i)!
double falling(int n, int i) {
  double r = 1.0;
  for (int j = 0; j < i; ++j) r *= double(n - j);
  return r;
}

}  // namespace

Smoothstep::Smoothstep(int contact_order) : order_(contact_order) {
  if (contact_order < 1 || contact_order > 16)
    throw std::invalid_argument("Smoothstep: contact order must be in [1,16]");
  leading_ = double(2 * order_ + 1) * binom(2 * order_, order_);
}

double Smoothstep::value(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const int n = order_;
  // Bernstein sum: all terms nonnegative and <= 1, stable near both ends.
  double s = 0.0;
  const double u = 1.0 - t;
  for (int k = n + 1; k <= 2 * n + 1; ++k)
    s += binom(2 * n + 1, k) * std::pow(t, k) * std::pow(u, 2 * n + 1 - k);
  return s;
}

double Smoothstep::derivative(double t, int k) const {
  if (k < 1) throw std::invalid_argument("Smoothstep::derivative: k >= 1");
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const int n = order_;
  if (k == 1) return leading_ * std::pow(t, n) * std::pow(1.0 - t, n);
  const int p = k - 1;  // extra derivatives of t^n (1-t)^n
  if (p > 2 * n) return 0.0;
  double acc = 0.0;
  const double u = 1.0 - t;
  for (int i = std::max(0, p - n); i <= std::min(p, n); ++i) {
    const double a = falling(n, i) * std::pow(t, n - i);
    const double b = falling(n, p - i) * std::pow(u, n - (p - i));
    const double sign = ((p - i) % 2 == 0) ? 1.0 : -1.0;
    acc += binom(p, i) * a * sign * b;
  }
  return leading_ * acc;
}

}  // namespace warpsmooth
