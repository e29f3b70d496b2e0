#include "warpsmooth/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "warpsmooth/errors.hpp"

namespace warpsmooth::smoothing {

using evolve::InitialDataSpec;
using evolve::ModeState;
using geometry::ManifoldModel;
using geometry::ModeOperator;
using geometry::RadialGrid;

namespace {

double pick_dt(const ManifoldModel& model, const InitialDataSpec& data, double dt_scale) {
  const double v1_star = model.profile_1.has_inflection()
                             ? model.trapped_potential_1()
                             : model.profile_1.eval_reciprocal_b(data.center, 0);
  double energy = std::max(1.0, double(data.k) * data.k * v1_star);
  if (data.kind == InitialDataSpec::Kind::gaussian_coherent)
    energy = std::max(energy, 1.0 / (data.width * data.width));
  return dt_scale / energy;
}

geometry::SpongeSpec scaled_sponge(const RunOptions& opts, int k) {
  geometry::SpongeSpec sp = opts.sponge_spec;
  sp.sigma0 = std::max(sp.sigma0, opts.sponge_sigma0_per_k * std::abs(k));
  return sp;
}

struct RunResult {
  ModeState u0;
  double lhs = 0.0;
  bool contaminated = false;
};

RunResult evolve_lhs(const ManifoldModel& model, const InitialDataSpec& data, double T,
                     const RunOptions& opts) {
  const RadialGrid& grid = model.grid;
  std::optional<geometry::SpongeSpec> sponge;
  if (opts.sponge) sponge = scaled_sponge(opts, data.k);
  const ModeOperator op_evolve = geometry::assemble_mode_operator(
      model, data.k, data.n, grid, opts.stencil_order, sponge);

  RunResult out;
  out.u0 = evolve::make_initial_data(data, model, grid, op_evolve);
  if (T == 0.0) return out;

  const double dt = std::min(pick_dt(model, data, opts.dt_scale), T);
  std::vector<geometry::QuadraticObservable> obs{
      geometry::metric_h1_observable(model, data.k, data.n)};
  evolve::EvolveOptions eopts;
  eopts.early_stop = opts.early_stop && opts.sponge;
  const evolve::TrajectorySummary summary =
      evolve::evolve_mode(op_evolve, out.u0, T, dt, obs, eopts);
  out.lhs = summary.integrals[0];
  out.contaminated = summary.boundary_contamination;
  return out;
}

}  // namespace

SmoothingRecord smoothing_quotient(const ManifoldModel& model,
                                   const InitialDataSpec& data_spec, double T, double s,
                                   const RunOptions& opts) {
  if (s < 0.0 || s > 1.0)
    throw std::invalid_argument("smoothing_quotient: s in [0, 1]");
  if (T < 0.0) throw std::invalid_argument("smoothing_quotient: T >= 0");

  const RunResult run = evolve_lhs(model, data_spec, T, opts);
  SmoothingRecord rec;
  rec.k = data_spec.k;
  rec.n = data_spec.n;
  rec.s_used = s;
  rec.lhs = run.lhs;
  rec.boundary_contamination = run.contaminated;

  const std::vector<ModeState> states{run.u0};
  rec.rhs_hs = geometry::sobolev_norm(states, s, model, model.grid, opts.sobolev);
  rec.rhs_h_half = (s == 0.5) ? rec.rhs_hs
                              : geometry::sobolev_norm(states, 0.5, model, model.grid,
                                                       opts.sobolev);
  rec.quotient = rec.lhs / rec.rhs_hs;
  rec.g_value = rec.lhs / rec.rhs_h_half;
  return rec;
}

ExponentFit fit_from_growth(std::span<const int> k_list, std::span<const double> g,
                            double theory_exponent) {
  if (k_list.size() != g.size() || k_list.size() < 4)
    throw std::invalid_argument("fit_from_growth: need >= 4 dyadic frequencies");
  std::vector<double> ks(k_list.size());
  for (size_t i = 0; i < k_list.size(); ++i) ks[i] = double(k_list[i]);
  ExponentFit out;
  out.fit = fit_loglog(ks, std::vector<double>(g.begin(), g.end()));
  out.slope = out.fit.slope;
  out.fitted_exponent = 1.0 - (1.0 - out.slope) / 2.0;
  out.r2 = out.fit.r2;
  out.conf_halfwidth = 0.5 * out.fit.conf_halfwidth;
  out.theory_exponent = theory_exponent;
  if (out.r2 < 0.9)
    throw PoorFit("exponent_fit: R^2 = " + std::to_string(out.r2) +
                  " < 0.9; increase T or refine the grid");
  return out;
}

ExponentFit exponent_fit(const ManifoldModel& model, const InitialDataSpec& family,
                         std::span<const int> k_list, double T, const RunOptions& opts) {
  if (k_list.size() < 4)
    throw std::invalid_argument("exponent_fit: k_list needs >= 4 dyadic entries");

  TaskPool inline_pool(1);
  const TaskPool& pool = opts.pool ? *opts.pool : inline_pool;
  std::vector<SmoothingRecord> records =
      pool.map_indexed<SmoothingRecord>(static_cast<int>(k_list.size()), [&](int i) {
        InitialDataSpec data = family;
        data.k = k_list[i];
        return smoothing_quotient(model, data, T, 0.5, opts);
      });

  std::vector<double> g(records.size());
  for (size_t i = 0; i < records.size(); ++i) g[i] = records[i].g_value;
  ExponentFit out = fit_from_growth(k_list, g, model.theory_smoothing_exponent());
  out.records = std::move(records);
  return out;
}

LemmaReport lemma_initial_check(const ManifoldModel& model,
                                const InitialDataSpec& data_spec, double T,
                                std::span<const int> k_list, const RunOptions& opts) {
  LemmaReport report;
  const RadialGrid& grid = model.grid;
  for (int k : k_list) {
    InitialDataSpec data = data_spec;
    data.k = k;
    std::optional<geometry::SpongeSpec> sponge;
    if (opts.sponge) sponge = scaled_sponge(opts, k);
    const ModeOperator op = geometry::assemble_mode_operator(
        model, data.k, data.n, grid, opts.stencil_order, sponge);
    const ModeState u0 = evolve::make_initial_data(data, model, grid, op);

    std::vector<geometry::QuadraticObservable> obs{
        geometry::lemma_dx_observable(model),
        geometry::lemma_theta_observable(model, data.k),
        geometry::lemma_omega_observable(model, data.n)};
    const double dt = std::min(pick_dt(model, data, opts.dt_scale), T);
    evolve::EvolveOptions eopts;
    eopts.early_stop = opts.early_stop && opts.sponge;
    const evolve::TrajectorySummary summary =
        evolve::evolve_mode(op, u0, T, dt, obs, eopts);

    LemmaTermRecord rec;
    rec.k = k;
    rec.dx_term = summary.integrals[0];
    rec.theta_term = summary.integrals[1];
    rec.omega_term = summary.integrals[2];
    const std::vector<ModeState> states{u0};
    rec.rhs_h_half = geometry::sobolev_norm(states, 0.5, model, grid, opts.sobolev);
    rec.realized_constant =
        (rec.dx_term + rec.theta_term + rec.omega_term) / rec.rhs_h_half;
    report.records.push_back(rec);
  }
  double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
  for (const auto& r : report.records) {
    cmin = std::min(cmin, r.realized_constant);
    cmax = std::max(cmax, r.realized_constant);
  }
  report.constant_spread = (cmin > 0.0) ? cmax / cmin : 0.0;
  return report;
}

}  // namespace warpsmooth::smoothing
