#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "warpsmooth/smoothstep.hpp"

namespace warpsmooth::warping {

struct Window {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct Inflection {
  double x_star = 1.0;  // single critical point of the warping
  int order_m = 1;      // A^2 has an inflection of order 2m+1 there
};

// Request for one warping function A: R+ -> R+ with A(x) = x on
// [0, flat_inner_radius] and [flat_outer_radius, inf), a single critical
// point at the inflection (when present), and optionally a window on which
// A^-2 is linear and decreasing.
struct WarpingSpec {
  std::optional<Inflection> inflection;
  double flat_inner_radius = 0.25;
  double flat_outer_radius = 4.0;
  std::optional<Window> reciprocal_window;

  static WarpingSpec flat(double inner = 0.25, double outer = 4.0);

  void validate() const;  // throws std::invalid_argument
  int smoothness_order() const;  // junction continuity class: 2m+2 (8 if flat)
};

// --- analytic models for B(x) = A^2(x) on a segment -------------------------

struct QuadraticModel {};  // B = x^2; A = x handled exactly (including x = 0)

struct InflectionModel {  // B = level + coeff * (x - x_star)^(2m+1)
  double level = 1.0;
  double coeff = 1.0;
  double x_star = 1.0;
  int m = 1;
};

struct ReciprocalModel {  // B = 1 / (c_abs - c_slope * x); A^-2 linear
  double c_abs = 1.0;
  double c_slope = 0.0;
};

using LocalModel = std::variant<QuadraticModel, InflectionModel, ReciprocalModel>;

// d^order/dx^order of B for a local model.
double model_b(const LocalModel& model, double x, int order);

struct Segment {
  double x_lo = 0.0;
  double x_hi = 0.0;       // +inf encoded as a large sentinel for the tail
  bool is_blend = false;   // blend: (1-S)*lo_model + S*hi_model
  LocalModel lo_model;
  LocalModel hi_model;     // == lo_model on pure segments
};

// Piecewise-analytic warping profile.  All evaluation is closed form; blends
// are convex smoothstep combinations, so monotonicity follows from the
// ordering of the neighboring models verified at build time.
class WarpingProfile {
 public:
  WarpingProfile() = default;
  WarpingProfile(WarpingSpec spec, std::vector<Segment> segments,
                 std::map<std::string, double> solved_constants);

  // A^(order)(x); order 0 is the warping itself.
  double eval(double x, int order) const;
  // (A^2)^(order)(x)
  double eval_b(double x, int order) const;
  // (A^-2)^(order)(x), order <= 2; this is the mode potential V_j.
  double eval_reciprocal_b(double x, int order) const;

  const WarpingSpec& spec() const { return spec_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const std::map<std::string, double>& solved_constants() const { return constants_; }
  int smoothness_order() const { return spec_.smoothness_order(); }

  bool has_inflection() const { return spec_.inflection.has_value(); }
  double x_star() const;
  int inflection_order() const;
  // B(x_star) = A^2 at the critical point; the trapped mode energy is k^2/B.
  double trapped_level() const;

 private:
  const Segment& segment_at(double x) const;

  WarpingSpec spec_;
  std::vector<Segment> segments_;
  std::map<std::string, double> constants_;
  Smoothstep step_{4};
};

// Solves the blend constants so that the profile satisfies all invariants.
// Throws InfeasibleSpec naming the violated constraint when no monotone
// profile exists for the given windows.
WarpingProfile build_profile(const WarpingSpec& spec);

struct ProfileCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
};

// Invariant battery: flats exact, A' >= 0 with the single critical point,
// inflection derivative pattern, reciprocal-window linearity, junction
// continuity to the declared smoothness order.
std::vector<ProfileCheck> validate_profile(const WarpingProfile& profile);
bool all_passed(const std::vector<ProfileCheck>& checks);

// --- commutator weight -------------------------------------------------------

// zeta == 1 on [0, decay_scale], comparable to <x>^-3 at infinity;
// f(x) = int_0^x zeta.  f is exact on the flat part, panel-cached quadrature
// through the transition, closed form beyond it.
class WeightFunction {
 public:
  explicit WeightFunction(double decay_scale);

  double zeta(double x) const;
  double f(double x) const;
  double decay_scale() const { return scale_; }
  // c with f'(x) >= c <x>^-3, from dense sampling of [0, 100].
  double lower_bound_const() const { return lower_bound_; }

 private:
  double scale_ = 1.0;
  double lower_bound_ = 0.0;
  double f_transition_end_ = 0.0;  // f(2*scale)
  std::vector<double> panel_x_, panel_f_;  // cached cumulative nodes
  Smoothstep step_{8};
};

WeightFunction build_weight(double decay_scale);

struct TrappingBoundOptions {
  std::optional<double> x_star;  // defaults to the profile's inflection
  std::optional<int> m;
  double x_max = 100.0;
  int n_samples = 100000;
  double x_min = 1e-2;
};

// Largest C with f(x) A'(x) A^-3(x) >= C (x-x*)^{2m} / (x^2 <x>^{1+2m}) on a
// dense sample of (0, x_max].  Throws NonpositiveBound when the sampled
// infimum is <= 0 (a second critical point).
double trapping_lower_bound(const WarpingProfile& profile, const WeightFunction& weight,
                            const TrappingBoundOptions& opts = {});

// 17-significant-digit JSON round trip; bit-reproducible across runs.
std::string profile_to_json(const WarpingProfile& profile);
WarpingProfile profile_from_json(const std::string& text);

}  // namespace warpsmooth::warping
