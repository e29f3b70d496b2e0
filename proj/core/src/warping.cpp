#include "warpsmooth/warping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "warpsmooth/errors.hpp"
#include "warpsmooth/io_util.hpp"

namespace warpsmooth::warping {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

double falling(int n, int i) {
  double r = 1.0;
  for (int j = 0; j < i; ++j) r *= double(n - j);
  return r;
}

}  // namespace

WarpingSpec WarpingSpec::flat(double inner, double outer) {
  WarpingSpec s;
  s.inflection.reset();
  s.flat_inner_radius = inner;
  s.flat_outer_radius = outer;
  s.reciprocal_window.reset();
  return s;
}

void WarpingSpec::validate() const {
  if (!(flat_inner_radius > 0.0))
    throw std::invalid_argument("WarpingSpec: flat_inner_radius must be > 0");
  if (!(flat_outer_radius > flat_inner_radius))
    throw std::invalid_argument("WarpingSpec: need r0 < R0");
  if (inflection) {
    if (inflection->order_m < 1)
      throw std::invalid_argument("WarpingSpec: inflection order m must be >= 1");
    if (!(inflection->x_star > flat_inner_radius &&
          inflection->x_star < flat_outer_radius))
      throw std::invalid_argument("WarpingSpec: need r0 < x* < R0");
  }
  if (reciprocal_window) {
    const Window& w = *reciprocal_window;
    if (!(w.lo < w.hi))
      throw std::invalid_argument("WarpingSpec: reciprocal window is empty");
    if (!(w.lo > flat_inner_radius && w.hi < flat_outer_radius))
      throw std::invalid_argument("WarpingSpec: reciprocal window must lie in (r0, R0)");
    if (!inflection)
      throw std::invalid_argument("WarpingSpec: reciprocal window requires an inflection");
    if (w.contains(inflection->x_star))
      throw std::invalid_argument("WarpingSpec: reciprocal window must exclude x*");
  }
}

int WarpingSpec::smoothness_order() const {
  return inflection ? 2 * inflection->order_m + 2 : 8;
}

// --- local models ------------------------------------------------------------

double model_b(const LocalModel& model, double x, int order) {
  if (std::holds_alternative<QuadraticModel>(model)) {
    if (order == 0) return x * x;
    if (order == 1) return 2.0 * x;
    if (order == 2) return 2.0;
    return 0.0;
  }
  if (const auto* m = std::get_if<InflectionModel>(&model)) {
    const int p = 2 * m->m + 1;
    if (order == 0) return m->level + m->coeff * std::pow(x - m->x_star, p);
    if (order > p) return 0.0;
    return m->coeff * falling(p, order) * std::pow(x - m->x_star, p - order);
  }
  const auto& r = std::get<ReciprocalModel>(model);
  const double u = r.c_abs - r.c_slope * x;
  // d^k/dx^k (1/u) = k! c_slope^k u^-(k+1)
  double fact = 1.0;
  for (int i = 2; i <= order; ++i) fact *= i;
  return fact * std::pow(r.c_slope, order) * std::pow(u, -(order + 1));
}

namespace {

double blend_b(const Segment& seg, double x, int order, const Smoothstep& step) {
  const double delta = seg.x_hi - seg.x_lo;
  const double t = (x - seg.x_lo) / delta;
  double value = model_b(seg.lo_model, x, order);
  for (int i = 0; i <= order; ++i) {
    const double s_i = (i == 0) ? step.value(t) : step.derivative(t, i);
    if (s_i == 0.0) continue;
    const double diff = model_b(seg.hi_model, x, order - i) -
                        model_b(seg.lo_model, x, order - i);
    value += binom(order, i) * s_i * std::pow(delta, -i) * diff;
  }
  return value;
}

double segment_b(const Segment& seg, double x, int order, const Smoothstep& step) {
  return seg.is_blend ? blend_b(seg, x, order, step) : model_b(seg.lo_model, x, order);
}

}  // namespace

// --- profile -----------------------------------------------------------------

WarpingProfile::WarpingProfile(WarpingSpec spec, std::vector<Segment> segments,
                               std::map<std::string, double> solved_constants)
    : spec_(std::move(spec)), segments_(std::move(segments)),
      constants_(std::move(solved_constants)), step_(spec_.smoothness_order()) {
  if (segments_.empty()) throw std::invalid_argument("WarpingProfile: no segments");
}

const Segment& WarpingProfile::segment_at(double x) const {
  if (x < 0.0) throw std::invalid_argument("WarpingProfile: x must be >= 0");
  // segments are sorted and contiguous; the tail is unbounded
  int lo = 0, hi = static_cast<int>(segments_.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (x < segments_[mid].x_hi)
      hi = mid;
    else
      lo = mid + 1;
  }
  return segments_[lo];
}

double WarpingProfile::eval_b(double x, int order) const {
  if (order < 0) throw std::invalid_argument("eval_b: order >= 0");
  if (order > smoothness_order())
    throw OrderTooHigh("eval_b: order " + std::to_string(order) +
                       " exceeds smoothness class " + std::to_string(smoothness_order()));
  return segment_b(segment_at(x), x, order, step_);
}

double WarpingProfile::eval(double x, int order) const {
  if (order < 0) throw std::invalid_argument("eval: order >= 0");
  if (order > smoothness_order())
    throw OrderTooHigh("eval: order " + std::to_string(order) +
                       " exceeds smoothness class " + std::to_string(smoothness_order()));
  const Segment& seg = segment_at(x);
  // Pure quadratic pieces are A = x exactly; this also covers x = 0 where the
  // square-root recursion would divide by zero.
  if (!seg.is_blend && std::holds_alternative<QuadraticModel>(seg.lo_model)) {
    if (order == 0) return x;
    if (order == 1) return 1.0;
    return 0.0;
  }
  // A = sqrt(B): 2 A A^(j) = B^(j) - sum_{i=1}^{j-1} C(j,i) A^(i) A^(j-i)
  std::vector<double> a(order + 1, 0.0);
  const double b0 = segment_b(seg, x, 0, step_);
  a[0] = std::sqrt(b0);
  for (int j = 1; j <= order; ++j) {
    double rhs = segment_b(seg, x, j, step_);
    for (int i = 1; i < j; ++i) rhs -= binom(j, i) * a[i] * a[j - i];
    a[j] = rhs / (2.0 * a[0]);
  }
  return a[order];
}

double WarpingProfile::eval_reciprocal_b(double x, int order) const {
  if (order < 0 || order > 2)
    throw std::invalid_argument("eval_reciprocal_b: order in {0,1,2}");
  const double b = eval_b(x, 0);
  if (order == 0) return 1.0 / b;
  const double b1 = eval_b(x, 1);
  if (order == 1) return -b1 / (b * b);
  const double b2 = eval_b(x, 2);
  return 2.0 * b1 * b1 / (b * b * b) - b2 / (b * b);
}

double WarpingProfile::x_star() const {
  if (!spec_.inflection) throw std::invalid_argument("profile has no inflection");
  return spec_.inflection->x_star;
}

int WarpingProfile::inflection_order() const {
  if (!spec_.inflection) throw std::invalid_argument("profile has no inflection");
  return spec_.inflection->order_m;
}

double WarpingProfile::trapped_level() const { return eval_b(x_star(), 0); }

// --- builder -----------------------------------------------------------------

namespace {

struct BuilderGeometry {
  double w = 0.0;          // inflection half width
  double a = 0.0, b = 0.0; // inflection interval [a, b]
  bool has_window = false;
  bool window_right = false;
  double c = 0.0, d = 0.0; // reciprocal window [c, d]
};

BuilderGeometry plan_geometry(const WarpingSpec& spec) {
  BuilderGeometry g;
  const double xs = spec.inflection->x_star;
  const double r0 = spec.flat_inner_radius, R0 = spec.flat_outer_radius;
  double room_left = xs - r0, room_right = R0 - xs;
  if (spec.reciprocal_window) {
    g.has_window = true;
    g.c = spec.reciprocal_window->lo;
    g.d = spec.reciprocal_window->hi;
    g.window_right = g.c > xs;
    if (g.window_right)
      room_right = g.c - xs;
    else
      room_left = xs - g.d;
  }
  const double room = std::min(room_left, room_right);
  g.w = 0.4 * room;
  g.a = xs - g.w;
  g.b = xs + g.w;
  if (g.w < 1e-3)
    throw InfeasibleSpec("no room for the inflection interval between the flat "
                         "region and the reciprocal window (half width " +
                         std::to_string(g.w) + "); widen the windows");
  return g;
}

struct Candidate {
  std::vector<Segment> segments;
  std::map<std::string, double> constants;
};

// Samples g over [lo, hi] and returns the minimum.
template <typename F>
double sampled_min(const F& fn, double lo, double hi, int n = 256) {
  double m = kInf;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    m = std::min(m, fn(x));
  }
  return m;
}

std::string check_blend_ordering(const Segment& seg, const char* label) {
  // hi_model >= lo_model and both nondecreasing on the closure: together with
  // S' >= 0 this makes the blended B monotone.
  const double gap = sampled_min(
      [&](double x) { return model_b(seg.hi_model, x, 0) - model_b(seg.lo_model, x, 0); },
      seg.x_lo, seg.x_hi);
  if (gap < -1e-12)
    return std::string(label) + ": outgoing model dips below incoming model (gap " +
           std::to_string(gap) + ")";
  const double lo_slope = sampled_min(
      [&](double x) { return model_b(seg.lo_model, x, 1); }, seg.x_lo, seg.x_hi);
  const double hi_slope = sampled_min(
      [&](double x) { return model_b(seg.hi_model, x, 1); }, seg.x_lo, seg.x_hi);
  if (lo_slope < -1e-12 || hi_slope < -1e-12)
    return std::string(label) + ": a neighboring model decreases inside the blend";
  return {};
}

}  // namespace

WarpingProfile build_profile(const WarpingSpec& spec) {
  spec.validate();

  if (!spec.inflection) {
    std::vector<Segment> segs{Segment{0.0, kInf, false, QuadraticModel{}, QuadraticModel{}}};
    return WarpingProfile(spec, std::move(segs), {});
  }

  const double xs = spec.inflection->x_star;
  const int m = spec.inflection->order_m;
  const double r0 = spec.flat_inner_radius, R0 = spec.flat_outer_radius;
  const BuilderGeometry g = plan_geometry(spec);
  const double kappa = 1.3;  // ordering margin for the reciprocal corridor
  const double level = xs * xs;

  std::string failure;
  for (double rho = 0.5; rho > 1e-3; rho *= 0.5) {
    // Inflection coefficient from the ordering caps against x^2.
    double cap = sampled_min(
        [&](double x) { return (xs + x) / std::pow(xs - x, 2 * m); }, r0, g.a);
    if (!g.has_window || !g.window_right) {
      cap = std::min(cap, sampled_min(
          [&](double x) { return (x + xs) / std::pow(x - xs, 2 * m); }, g.b, R0));
    }
    const double coeff = rho * cap;
    const InflectionModel inflection{level, coeff, xs, m};

    ReciprocalModel recip{};
    if (g.has_window) {
      if (g.window_right) {
        // Anchor the linear A^-2 just above the x^-2 corridor on [d, R0].
        const double ud = kappa / (g.d * g.d);
        const double uR = kappa / (R0 * R0);
        const double slope = (ud - uR) / (R0 - g.d);
        recip = ReciprocalModel{ud + slope * g.d, slope};
      } else {
        const double uc = 1.0 / (kappa * g.c * g.c);
        // Slope caps: stay under x^-2 toward the origin, above kappa/M_inf
        // toward the inflection, and positive through the blend.
        double cap_slope = kInf;
        for (int i = 0; i <= 256; ++i) {
          const double x = r0 + (g.c - r0) * i / 256.0;
          if (x < g.c - 1e-9)
            cap_slope = std::min(cap_slope, (1.0 / (x * x) - uc) / (g.c - x));
        }
        for (int i = 0; i <= 256; ++i) {
          const double x = g.d + (g.a - g.d) * i / 256.0;
          const double minf = model_b(LocalModel{inflection}, x, 0);
          cap_slope = std::min(cap_slope, (uc - kappa / minf) / (x - g.c));
        }
        cap_slope = std::min(cap_slope, uc / (g.a - g.c) * (1.0 - 1e-6));
        if (cap_slope <= 0.0) {
          failure = "reciprocal corridor empty: the window is too close to the "
                    "inflection level for a decreasing linear A^-2";
          continue;
        }
        const double slope = 0.5 * cap_slope;
        recip = ReciprocalModel{uc + slope * g.c, slope};
      }
    }

    // Assemble the ordered segment list.
    std::vector<Segment> segs;
    const LocalModel quad = QuadraticModel{};
    const LocalModel infl = inflection;
    const LocalModel rec = recip;
    if (!g.has_window) {
      segs = {Segment{0.0, r0, false, quad, quad},
              Segment{r0, g.a, true, quad, infl},
              Segment{g.a, g.b, false, infl, infl},
              Segment{g.b, R0, true, infl, quad},
              Segment{R0, kInf, false, quad, quad}};
    } else if (g.window_right) {
      segs = {Segment{0.0, r0, false, quad, quad},
              Segment{r0, g.a, true, quad, infl},
              Segment{g.a, g.b, false, infl, infl},
              Segment{g.b, g.c, true, infl, rec},
              Segment{g.c, g.d, false, rec, rec},
              Segment{g.d, R0, true, rec, quad},
              Segment{R0, kInf, false, quad, quad}};
    } else {
      segs = {Segment{0.0, r0, false, quad, quad},
              Segment{r0, g.c, true, quad, rec},
              Segment{g.c, g.d, false, rec, rec},
              Segment{g.d, g.a, true, rec, infl},
              Segment{g.a, g.b, false, infl, infl},
              Segment{g.b, R0, true, infl, quad},
              Segment{R0, kInf, false, quad, quad}};
    }

    // Feasibility battery on the candidate.
    failure.clear();
    for (const Segment& seg : segs) {
      if (!seg.is_blend) continue;
      std::string msg = check_blend_ordering(seg, "blend");
      if (!msg.empty()) {
        failure = msg + " on [" + std::to_string(seg.x_lo) + ", " +
                  std::to_string(seg.x_hi) + "]";
        break;
      }
    }
    if (g.has_window && failure.empty()) {
      const double umin = sampled_min(
          [&](double x) { return recip.c_abs - recip.c_slope * x; },
          g.window_right ? g.b : r0, g.window_right ? R0 : g.a);
      if (umin <= 1e-9) failure = "linear A^-2 loses positivity inside its range";
    }
    if (!failure.empty()) continue;

    std::map<std::string, double> constants{
        {"inflection_level", level},
        {"inflection_coeff", coeff},
        {"inflection_halfwidth", g.w},
        {"feasibility_scale", rho},
    };
    if (g.has_window) {
      constants["reciprocal_abs"] = recip.c_abs;
      constants["reciprocal_slope"] = recip.c_slope;
      constants["ordering_margin"] = kappa;
    }
    WarpingProfile profile(spec, std::move(segs), std::move(constants));

    // Monotonicity over the whole compact part, directly on the blended B.
    const double bp_min = sampled_min(
        [&](double x) { return profile.eval_b(x, 1); }, 1e-6, R0 * 1.05, 4096);
    if (bp_min < -1e-12) {
      failure = "blended profile loses monotonicity (min B' = " +
                std::to_string(bp_min) + ")";
      continue;
    }
    return profile;
  }
  throw InfeasibleSpec("build_profile: " + failure);
}

// --- validation --------------------------------------------------------------

namespace {

void push_check(std::vector<ProfileCheck>& out, const std::string& name, bool passed,
                double value, double tol) {
  out.push_back(ProfileCheck{name, passed, value, tol});
}

// Central finite difference of callable fn at x, order <= 4, step h.
template <typename F>
double central_fd(const F& fn, double x, int order, double h) {
  switch (order) {
    case 1: return (fn(x + h) - fn(x - h)) / (2 * h);
    case 2: return (fn(x + h) - 2 * fn(x) + fn(x - h)) / (h * h);
    case 3: return (fn(x + 2 * h) - 2 * fn(x + h) + 2 * fn(x - h) - fn(x - 2 * h)) /
                   (2 * h * h * h);
    case 4: return (fn(x + 2 * h) - 4 * fn(x + h) + 6 * fn(x) - 4 * fn(x - h) +
                    fn(x - 2 * h)) / (h * h * h * h);
    default: throw std::invalid_argument("central_fd: order <= 4");
  }
}

}  // namespace

std::vector<ProfileCheck> validate_profile(const WarpingProfile& profile) {
  std::vector<ProfileCheck> out;
  const WarpingSpec& spec = profile.spec();
  const double r0 = spec.flat_inner_radius, R0 = spec.flat_outer_radius;

  double dev = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double x = r0 * i / 200.0;
    dev = std::max(dev, std::abs(profile.eval(x, 0) - x));
  }
  push_check(out, "flat_inner_identity", dev <= 1e-14, dev, 1e-14);

  dev = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double x = R0 + R0 * i / 200.0;
    dev = std::max(dev, std::abs(profile.eval(x, 0) - x));
  }
  push_check(out, "flat_outer_identity", dev <= 1e-14, dev, 1e-14);

  double min_a = kInf, min_ap = kInf;
  for (int i = 1; i <= 4000; ++i) {
    const double x = (R0 * 1.2) * i / 4000.0;
    min_a = std::min(min_a, profile.eval(x, 0));
    min_ap = std::min(min_ap, profile.eval(x, 1));
  }
  push_check(out, "positive", min_a > 0.0, min_a, 0.0);
  push_check(out, "monotone", min_ap >= -1e-12, min_ap, 1e-12);

  push_check(out, "trapping_present", true, profile.has_inflection() ? 1.0 : 0.0, 0.0);

  if (profile.has_inflection()) {
    const double xs = profile.x_star();
    const int m = profile.inflection_order();
    const double coeff = profile.solved_constants().at("inflection_coeff");
    const double a0 = profile.eval(xs, 0);

    // A' vanishes at x* and nowhere else: outside the scale where the local
    // model itself forces A' below threshold, demand A' above threshold.
    const double apx = std::abs(profile.eval(xs, 1));
    push_check(out, "critical_point_at_x_star", apx <= 1e-10, apx, 1e-10);
    const double nbhd =
        2.0 * std::pow(2.0 * a0 * 1e-8 / ((2 * m + 1) * coeff), 1.0 / (2 * m));
    double min_outside = kInf;
    for (int i = 1; i <= 4000; ++i) {
      const double x = (R0 * 1.2) * i / 4000.0;
      if (std::abs(x - xs) <= nbhd) continue;
      min_outside = std::min(min_outside, profile.eval(x, 1));
    }
    push_check(out, "single_critical_point", min_outside >= 1e-8, min_outside, 1e-8);

    // (A^2)^(j)(x*) = 0 for 1 <= j <= 2m, analytically and by finite
    // differences on the evaluated profile; (A^2)^(2m+1)(x*) > 0.
    double worst = 0.0;
    for (int j = 1; j <= 2 * m; ++j)
      worst = std::max(worst, std::abs(profile.eval_b(xs, j)));
    push_check(out, "inflection_jets_analytic", worst <= 1e-12, worst, 1e-12);

    const double h_fd = 1e-3;
    auto b0 = [&](double x) { return profile.eval_b(x, 0); };
    double worst_fd = 0.0;
    for (int j = 1; j <= std::min(2 * m, 4); ++j)
      worst_fd = std::max(worst_fd, std::abs(central_fd(b0, xs, j, h_fd)));
    push_check(out, "inflection_jets_fd", worst_fd <= 1e-6, worst_fd, 1e-6);

    double lead;
    if (2 * m + 1 <= profile.smoothness_order()) {
      lead = profile.eval_b(xs, 2 * m + 1);
    } else {
      lead = coeff;  // analytic leading coefficient
      for (int i = 1; i <= 2 * m + 1; ++i) lead *= i;
    }
    push_check(out, "inflection_leading_positive", lead > 0.0, lead, 0.0);
  }

  if (spec.reciprocal_window) {
    const Window& w = *spec.reciprocal_window;
    double max_curv = 0.0, max_slope = -kInf;
    for (int i = 0; i <= 200; ++i) {
      const double x = w.lo + w.width() * i / 200.0;
      max_curv = std::max(max_curv, std::abs(profile.eval_reciprocal_b(x, 2)));
      max_slope = std::max(max_slope, profile.eval_reciprocal_b(x, 1));
    }
    push_check(out, "reciprocal_linear", max_curv <= 1e-8, max_curv, 1e-8);
    push_check(out, "reciprocal_decreasing", max_slope < 0.0, max_slope, 0.0);
  }

  // Junction continuity through the declared smoothness class.
  double worst_jump = 0.0;
  const auto& segs = profile.segments();
  for (size_t i = 0; i + 1 < segs.size(); ++i) {
    const double x = segs[i].x_hi;
    for (int j = 0; j <= profile.smoothness_order(); ++j) {
      const double eps = 1e-9 * std::max(1.0, std::abs(x));
      auto b_at = [&](double xx) { return profile.eval_b(xx, j); };
      const double jump = std::abs(b_at(x - eps) - b_at(x + eps));
      const double scale = std::max({1.0, std::abs(b_at(x - eps)), std::abs(b_at(x + eps))});
      worst_jump = std::max(worst_jump, jump / scale);
    }
  }
  push_check(out, "junction_continuity", worst_jump <= 1e-5, worst_jump, 1e-5);

  return out;
}

bool all_passed(const std::vector<ProfileCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ProfileCheck& c) { return c.passed; });
}

// --- weight ------------------------------------------------------------------

namespace {

// 15-point Gauss-Legendre on [-1, 1]; exact through degree 29.
constexpr int kGlN = 15;
constexpr double kGlNode[kGlN] = {
    -0.98799251802048543, -0.93727339240070590, -0.84820658341042722,
    -0.72441773136017005, -0.57097217260853885, -0.39415134707756337,
    -0.20119409399743452, 0.0,
    0.20119409399743452,  0.39415134707756337,  0.57097217260853885,
    0.72441773136017005,  0.84820658341042722,  0.93727339240070590,
    0.98799251802048543};
constexpr double kGlWeight[kGlN] = {
    0.030753241996117268, 0.070366047488108125, 0.107159220467171935,
    0.139570677926154314, 0.166269205816993934, 0.186161000015562211,
    0.198431485327111576, 0.202578241925561273,
    0.198431485327111576, 0.186161000015562211, 0.166269205816993934,
    0.139570677926154314, 0.107159220467171935, 0.070366047488108125,
    0.030753241996117268};

template <typename F>
double gauss15(const F& fn, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < kGlN; ++i) s += kGlWeight[i] * fn(mid + half * kGlNode[i]);
  return s * half;
}

double decay_tail(double y) { return y / std::sqrt(1.0 + y * y); }  // int <y>^-3 dy

}  // namespace

WeightFunction::WeightFunction(double decay_scale) : scale_(decay_scale) {
  if (!(decay_scale > 0.0))
    throw std::invalid_argument("WeightFunction: decay_scale must be > 0");
  // Cache cumulative integrals over the transition zone [s, 2s].
  const int panels = 32;
  panel_x_.resize(panels + 1);
  panel_f_.resize(panels + 1);
  panel_x_[0] = scale_;
  panel_f_[0] = scale_;  // f(s) = s on the flat part
  for (int i = 1; i <= panels; ++i) {
    panel_x_[i] = scale_ + scale_ * i / panels;
    panel_f_[i] = panel_f_[i - 1] +
                  gauss15([this](double t) { return zeta(t); }, panel_x_[i - 1], panel_x_[i]);
  }
  f_transition_end_ = panel_f_.back();

  double c = kInf;
  for (int i = 0; i <= 20000; ++i) {
    const double x = 100.0 * i / 20000.0;
    const double w = std::sqrt(1.0 + x * x);
    c = std::min(c, zeta(x) * w * w * w);
  }
  lower_bound_ = c;
}

double WeightFunction::zeta(double x) const {
  if (x <= scale_) return 1.0;
  const double y = x - scale_;
  const double g = std::pow(1.0 + y * y, -1.5);
  if (x >= 2.0 * scale_) return g;
  const double s = step_.value(y / scale_);
  return 1.0 + s * (g - 1.0);
}

double WeightFunction::f(double x) const {
  if (x <= scale_) return x;
  if (x >= 2.0 * scale_)
    return f_transition_end_ + decay_tail(x - scale_) - decay_tail(scale_);
  const auto it = std::upper_bound(panel_x_.begin(), panel_x_.end(), x);
  const size_t i = static_cast<size_t>(it - panel_x_.begin()) - 1;
  return panel_f_[i] + gauss15([this](double t) { return zeta(t); }, panel_x_[i], x);
}

WeightFunction build_weight(double decay_scale) { return WeightFunction(decay_scale); }

// --- trapping lower bound ------------------------------------------------------

double trapping_lower_bound(const WarpingProfile& profile, const WeightFunction& weight,
                            const TrappingBoundOptions& opts) {
  double xs;
  int m;
  if (profile.has_inflection()) {
    xs = profile.x_star();
    m = profile.inflection_order();
  } else {
    if (!opts.x_star || !opts.m)
      throw std::invalid_argument(
          "trapping_lower_bound: flat profile needs explicit reference x* and m");
    xs = *opts.x_star;
    m = *opts.m;
  }

  double inf_ratio = kInf;
  double worst_x = 0.0;
  const int n = opts.n_samples;
  for (int i = 0; i <= n; ++i) {
    const double x = opts.x_min + (opts.x_max - opts.x_min) * double(i) / n;
    const double wx2 = 1.0 + x * x;
    double ratio;
    const double b = profile.eval_b(x, 0);
    const double bp = profile.eval_b(x, 1);
    // f A' A^-3 = f B' / (2 B^2); on the inflection piece B' carries the
    // (x-x*)^{2m} factor analytically, so the quotient has no 0/0 there.
    const bool on_inflection_piece =
        profile.has_inflection() &&
        std::abs(x - xs) < 1e-12 * std::max(1.0, std::abs(xs));
    const double denom = std::pow(x - xs, 2 * m) / (x * x * std::pow(wx2, 0.5 * (1 + 2 * m)));
    if (on_inflection_piece || denom == 0.0) {
      const double coeff = profile.has_inflection()
                               ? profile.solved_constants().at("inflection_coeff")
                               : 0.0;
      if (coeff == 0.0) continue;  // flat reference exactly at x*: skip sample
      ratio = weight.f(x) * (2 * m + 1) * coeff / (2.0 * b * b) * x * x *
              std::pow(wx2, 0.5 * (1 + 2 * m));
    } else {
      const double num = weight.f(x) * bp / (2.0 * b * b);
      ratio = num / denom;
    }
    if (ratio < inf_ratio) {
      inf_ratio = ratio;
      worst_x = x;
    }
  }
  if (!(inf_ratio > 0.0))
    throw NonpositiveBound("trapping_lower_bound: sampled infimum " +
                           std::to_string(inf_ratio) + " at x = " +
                           std::to_string(worst_x) +
                           " (profile has a second critical point)");
  return inf_ratio;
}

// --- JSON --------------------------------------------------------------------

namespace {

void write_model(io::JsonWriter& w, const LocalModel& model) {
  w.begin_object();
  if (std::holds_alternative<QuadraticModel>(model)) {
    w.key("kind").value("quadratic");
  } else if (const auto* im = std::get_if<InflectionModel>(&model)) {
    w.key("kind").value("inflection");
    w.key("level").value(im->level);
    w.key("coeff").value(im->coeff);
    w.key("x_star").value(im->x_star);
    w.key("m").value(im->m);
  } else {
    const auto& r = std::get<ReciprocalModel>(model);
    w.key("kind").value("reciprocal");
    w.key("c_abs").value(r.c_abs);
    w.key("c_slope").value(r.c_slope);
  }
  w.end_object();
}

LocalModel parse_model(const nlohmann::json& j) {
  const std::string kind = j.at("kind");
  if (kind == "quadratic") return QuadraticModel{};
  if (kind == "inflection")
    return InflectionModel{j.at("level"), j.at("coeff"), j.at("x_star"), j.at("m")};
  if (kind == "reciprocal") return ReciprocalModel{j.at("c_abs"), j.at("c_slope")};
  throw IoError("profile JSON: unknown model kind " + kind);
}

}  // namespace

std::string profile_to_json(const WarpingProfile& profile) {
  io::JsonWriter w;
  w.begin_object();
  w.key("format").value("warpsmooth-profile-v1");
  w.key("smoothness_order").value(profile.smoothness_order());
  const WarpingSpec& s = profile.spec();
  w.key("spec").begin_object();
  w.key("flat_inner_radius").value(s.flat_inner_radius);
  w.key("flat_outer_radius").value(s.flat_outer_radius);
  if (s.inflection) {
    w.key("inflection").begin_object();
    w.key("x_star").value(s.inflection->x_star);
    w.key("order_m").value(s.inflection->order_m);
    w.end_object();
  } else {
    w.key("inflection").null();
  }
  if (s.reciprocal_window) {
    w.key("reciprocal_window").begin_array();
    w.value(s.reciprocal_window->lo).value(s.reciprocal_window->hi);
    w.end_array();
  } else {
    w.key("reciprocal_window").null();
  }
  w.end_object();
  w.key("solved_constants").begin_object();
  for (const auto& [k, v] : profile.solved_constants()) w.key(k).value(v);
  w.end_object();
  w.key("segments").begin_array();
  for (const Segment& seg : profile.segments()) {
    w.begin_object();
    w.key("x_lo").value(seg.x_lo);
    if (std::isinf(seg.x_hi))
      w.key("x_hi").null();
    else
      w.key("x_hi").value(seg.x_hi);
    w.key("blend").value(seg.is_blend);
    w.key("lo");
    write_model(w, seg.lo_model);
    w.key("hi");
    write_model(w, seg.hi_model);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str() + "\n";
}

WarpingProfile profile_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("format") != "warpsmooth-profile-v1")
    throw IoError("profile JSON: unsupported format");
  WarpingSpec spec;
  const auto& js = j.at("spec");
  spec.flat_inner_radius = js.at("flat_inner_radius");
  spec.flat_outer_radius = js.at("flat_outer_radius");
  if (!js.at("inflection").is_null())
    spec.inflection = Inflection{js.at("inflection").at("x_star"),
                                 js.at("inflection").at("order_m")};
  if (!js.at("reciprocal_window").is_null())
    spec.reciprocal_window =
        Window{js.at("reciprocal_window")[0], js.at("reciprocal_window")[1]};
  std::map<std::string, double> constants;
  for (const auto& [k, v] : j.at("solved_constants").items())
    constants[k] = v.get<double>();
  std::vector<Segment> segments;
  for (const auto& sj : j.at("segments")) {
    Segment seg;
    seg.x_lo = sj.at("x_lo");
    seg.x_hi = sj.at("x_hi").is_null() ? kInf : sj.at("x_hi").get<double>();
    seg.is_blend = sj.at("blend");
    seg.lo_model = parse_model(sj.at("lo"));
    seg.hi_model = parse_model(sj.at("hi"));
    segments.push_back(seg);
  }
  return WarpingProfile(spec, std::move(segments), std::move(constants));
}

}  // namespace warpsmooth::warping
