#include "warpsmooth/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "warpsmooth/errors.hpp"
#include "warpsmooth/io_util.hpp"

namespace warpsmooth::geometry {

Eigen::VectorXd RadialGrid::nodes() const {
  Eigen::VectorXd x(n_points);
  for (int i = 0; i < n_points; ++i) x[i] = node(i);
  return x;
}

double conjugation_potential(const warping::WarpingProfile& p1,
                             const warping::WarpingProfile& p2, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("conjugation_potential: x > 0");
  const double a1 = p1.eval(x, 0), a1p = p1.eval(x, 1), a1pp = p1.eval(x, 2);
  const double a2 = p2.eval(x, 0), a2p = p2.eval(x, 1), a2pp = p2.eval(x, 2);
  return 0.25 * a1p * a1p / (a1 * a1) - 0.5 * a1pp / a1 +
         0.25 * a2p * a2p / (a2 * a2) - 0.5 * a2pp / a2 -
         0.5 * a1p * a2p / (a1 * a2);
}

int ManifoldModel::m_max() const {
  int m = 0;
  if (profile_1.has_inflection()) m = std::max(m, profile_1.inflection_order());
  if (profile_2.has_inflection()) m = std::max(m, profile_2.inflection_order());
  return m;
}

double ManifoldModel::theory_smoothing_exponent() const {
  const int m = m_max();
  if (m == 0) return 0.5;  // non-trapping gain
  return double(2 * m + 1) / double(2 * m + 3);
}

double ManifoldModel::theory_resolvent_slope() const {
  const int m = m_max();
  if (m == 0) return 0.0;
  return double(4 * m + 2) / double(2 * m + 3);
}

bool ManifoldModel::is_flat() const { return m_max() == 0; }

ManifoldModel build_model(const warping::WarpingProfile& p1,
                          const warping::WarpingProfile& p2, const RadialGrid& grid) {
  ManifoldModel model{p1, p2, grid, {}, {}, {}};
  const int n = grid.n_points;
  model.v.resize(n);
  model.v1.resize(n);
  model.v2.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = grid.node(i);
    model.v[i] = conjugation_potential(p1, p2, x);
    model.v1[i] = p1.eval_reciprocal_b(x, 0);
    model.v2[i] = p2.eval_reciprocal_b(x, 0);
  }
  return model;
}

Eigen::VectorXd sponge_profile(const RadialGrid& grid, const SpongeSpec& sponge) {
  Eigen::VectorXd sigma = Eigen::VectorXd::Zero(grid.n_points);
  const double xs = sponge.start_fraction * grid.x_max;
  const double width = grid.x_max - xs;
  for (int i = 0; i < grid.n_points; ++i) {
    const double x = grid.node(i);
    if (x > xs) sigma[i] = sponge.sigma0 * std::pow((x - xs) / width, sponge.power);
  }
  return sigma;
}

SymmetricBanded laplacian_band(const RadialGrid& grid, int stencil_order, double scale) {
  if (stencil_order != 2 && stencil_order != 4)
    throw std::invalid_argument("laplacian_band: stencil order 2 or 4");
  const int n = grid.n_points;
  const double h2 = grid.dx() * grid.dx();
  SymmetricBanded m(n, stencil_order / 2);
  if (stencil_order == 2) {
    for (int i = 0; i < n; ++i) {
      m.at(i, i) = scale * 2.0 / h2;
      if (i + 1 < n) m.at(i + 1, i) = -scale / h2;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      m.at(i, i) = scale * 30.0 / (12.0 * h2);
      if (i + 1 < n) m.at(i + 1, i) = -scale * 16.0 / (12.0 * h2);
      if (i + 2 < n) m.at(i + 2, i) = scale * 1.0 / (12.0 * h2);
    }
  }
  return m;
}

void ModeOperator::apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
  y.resize(x.size());
  matrix.apply(x.data(), y.data());
  if (sponge) {
    const std::complex<double> mi(0.0, -1.0);
    for (int i = 0; i < x.size(); ++i) y[i] += mi * (*sponge)[i] * x[i];
  }
}

ModeOperator assemble_custom_operator(const RadialGrid& grid, double kinetic_scale,
                                      Eigen::VectorXd w, int stencil_order,
                                      const std::optional<SpongeSpec>& sponge) {
  ModeOperator op;
  op.grid = grid;
  op.stencil_order = stencil_order;
  op.kinetic_scale = kinetic_scale;
  op.matrix = laplacian_band(grid, stencil_order, kinetic_scale);
  for (int i = 0; i < grid.n_points; ++i) op.matrix.at(i, i) += w[i];
  op.w = std::move(w);
  if (sponge) op.sponge = sponge_profile(grid, *sponge);
  return op;
}

ModeOperator assemble_mode_operator(const ManifoldModel& model, int k, int n,
                                    const RadialGrid& grid, int stencil_order,
                                    const std::optional<SpongeSpec>& sponge) {
  if (grid.n_points != model.grid.n_points || grid.x_max != model.grid.x_max)
    throw std::invalid_argument("assemble_mode_operator: grid differs from model grid");
  const double r0 = std::min(model.profile_1.spec().flat_inner_radius,
                             model.profile_2.spec().flat_inner_radius);
  Eigen::VectorXd w(grid.n_points);
  double w_max_regular = 0.0;
  for (int i = 0; i < grid.n_points; ++i) {
    w[i] = double(k) * k * model.v1[i] + double(n) * n * model.v2[i] - model.v[i];
    if (grid.node(i) >= r0) w_max_regular = std::max(w_max_regular, std::abs(w[i]));
  }
  // Sampling criterion on the region where modes are oscillatory; inside the
  // inner flat radius the centrifugal wall makes them evanescent.
  const double dx2 = grid.dx() * grid.dx();
  if (dx2 * w_max_regular > 1.0)
    throw GridTooCoarse("assemble_mode_operator: dx^2 max|W| = " +
                        std::to_string(dx2 * w_max_regular) +
                        " > 1; refine the grid (k=" + std::to_string(k) +
                        ", n=" + std::to_string(n) + ")");
  ModeOperator op = assemble_custom_operator(grid, 1.0, std::move(w), stencil_order, sponge);
  op.k = k;
  op.n = n;
  return op;
}

double sobolev_norm(std::span<const evolve::ModeState> states, double s,
                    const ManifoldModel& model, const RadialGrid& grid,
                    const SobolevOptions& opts) {
  const double dx = grid.dx();
  double total = 0.0;
  for (const auto& st : states) {
    if (st.amplitudes.size() != grid.n_points)
      throw std::invalid_argument("sobolev_norm: state length mismatch");
    ModeOperator op =
        assemble_mode_operator(model, st.k, st.n, grid, opts.stencil_order, {});
    auto f = [s](double lambda) {
      return std::pow(1.0 + lambda, s);
    };
    if (grid.n_points <= opts.dense_threshold) {
      EigenDecomposition eig = eigendecompose(op.matrix);
      if (eig.values[0] <= -1.0)
        throw NegativeOperator("sobolev_norm: I + P has eigenvalue " +
                               std::to_string(1.0 + eig.values[0]));
      // expansion coefficients in the l2-orthonormal eigenbasis
      Eigen::VectorXcd coeff = eig.vectors.transpose() * st.amplitudes;
      double acc = 0.0;
      for (int j = 0; j < coeff.size(); ++j)
        acc += f(eig.values[j]) * std::norm(coeff[j]);
      total += acc * dx;
    } else {
      double min_ritz = 0.0;
      auto apply = [&op](const double* x, double* y) { op.apply_real(x, y); };
      std::vector<std::function<double(double)>> fs{f};
      const std::vector<double> forms = lanczos_quadratic_forms(
          apply, grid.n_points, st.amplitudes, fs, opts.lanczos_iters, &min_ritz);
      if (min_ritz <= -1.0)
        throw NegativeOperator("sobolev_norm: I + P has Ritz value " +
                               std::to_string(1.0 + min_ritz));
      total += forms[0] * dx;
    }
  }
  return total;
}

double QuadraticObservable::evaluate(const Eigen::VectorXcd& u, double dx) const {
  double acc = 0.0;
  if (weight_u.size()) {
    for (int i = 0; i < u.size(); ++i) acc += weight_u[i] * std::norm(u[i]);
  }
  if (weight_du.size()) {
    const int n = static_cast<int>(u.size());
    for (int i = 0; i < n; ++i) {
      const std::complex<double> up = (i + 1 < n) ? u[i + 1] : std::complex<double>(0.0);
      const std::complex<double> um = (i > 0) ? u[i - 1] : std::complex<double>(0.0);
      acc += weight_du[i] * std::norm((up - um) / (2.0 * dx));
    }
  }
  return acc * dx;
}

namespace {

Eigen::VectorXd bracket_weight(const RadialGrid& grid, double power) {
  // <x>^power sampled at the nodes
  Eigen::VectorXd w(grid.n_points);
  for (int i = 0; i < grid.n_points; ++i) {
    const double x = grid.node(i);
    w[i] = std::pow(1.0 + x * x, 0.5 * power);
  }
  return w;
}

}  // namespace

QuadraticObservable metric_h1_observable(const ManifoldModel& model, int k, int n) {
  const RadialGrid& grid = model.grid;
  QuadraticObservable obs;
  obs.name = "metric_h1";
  obs.weight_du = bracket_weight(grid, -3.0);
  obs.weight_u.resize(grid.n_points);
  for (int i = 0; i < grid.n_points; ++i) {
    const double w3 = obs.weight_du[i];
    obs.weight_u[i] =
        w3 * (double(k) * k * model.v1[i] + double(n) * n * model.v2[i] + 1.0);
  }
  return obs;
}

QuadraticObservable lemma_dx_observable(const ManifoldModel& model) {
  QuadraticObservable obs;
  obs.name = "lemma_dx";
  obs.weight_du = bracket_weight(model.grid, -3.0);
  return obs;
}

namespace {

QuadraticObservable lemma_angular(const ManifoldModel& model,
                                  const warping::WarpingProfile& profile,
                                  const Eigen::VectorXd& v_samples, int freq,
                                  const char* name) {
  // weight^2 = freq^2 (x - x*)^{2m} <x>^{-1-2m} V_j(x); m = 0 for a flat
  // profile, where the weight degenerates to <x>^-1 V_j.
  const RadialGrid& grid = model.grid;
  QuadraticObservable obs;
  obs.name = name;
  obs.weight_u.resize(grid.n_points);
  const bool has = profile.has_inflection();
  const double xs = has ? profile.x_star() : 0.0;
  const int m = has ? profile.inflection_order() : 0;
  for (int i = 0; i < grid.n_points; ++i) {
    const double x = grid.node(i);
    const double br = 1.0 + x * x;
    obs.weight_u[i] = double(freq) * freq * std::pow(x - xs, 2 * m) *
                      std::pow(br, -0.5 * (1.0 + 2 * m)) * v_samples[i];
  }
  return obs;
}

}  // namespace

QuadraticObservable lemma_theta_observable(const ManifoldModel& model, int k) {
  return lemma_angular(model, model.profile_1, model.v1, k, "lemma_theta");
}

QuadraticObservable lemma_omega_observable(const ManifoldModel& model, int n) {
  return lemma_angular(model, model.profile_2, model.v2, n, "lemma_omega");
}

WeightedH1 weighted_local_h1(std::span<const evolve::ModeState> states,
                             const ManifoldModel& model, const RadialGrid& grid) {
  WeightedH1 out;
  const double dx = grid.dx();
  for (const auto& st : states) {
    QuadraticObservable h1 = metric_h1_observable(model, st.k, st.n);
    QuadraticObservable ldx = lemma_dx_observable(model);
    QuadraticObservable lth = lemma_theta_observable(model, st.k);
    QuadraticObservable lom = lemma_omega_observable(model, st.n);
    out.metric_h1 += h1.evaluate(st.amplitudes, dx);
    out.lemma_dx += ldx.evaluate(st.amplitudes, dx);
    out.lemma_theta += lth.evaluate(st.amplitudes, dx);
    out.lemma_omega += lom.evaluate(st.amplitudes, dx);
  }
  return out;
}

void write_model_snapshot(const ManifoldModel& model, const std::string& json_path,
                          const std::string& bin_path) {
  io::JsonWriter w;
  w.begin_object();
  w.key("format").value("warpsmooth-model-v1");
  w.key("grid").begin_object();
  w.key("x_max").value(model.grid.x_max);
  w.key("n_points").value(model.grid.n_points);
  w.end_object();
  w.key("profile_1");
  w.value(warping::profile_to_json(model.profile_1));
  w.key("profile_2");
  w.value(warping::profile_to_json(model.profile_2));
  w.key("binary_layout").value("8-byte little-endian count, then count float64: "
                               "rows V, V1, V2 of length n_points each");
  w.end_object();
  io::write_file(json_path, w.str() + "\n");

  std::vector<double> data;
  data.reserve(3 * model.grid.n_points);
  for (int i = 0; i < model.grid.n_points; ++i) data.push_back(model.v[i]);
  for (int i = 0; i < model.grid.n_points; ++i) data.push_back(model.v1[i]);
  for (int i = 0; i < model.grid.n_points; ++i) data.push_back(model.v2[i]);
  io::write_binary_doubles(bin_path, data);
}

ManifoldModel read_model_snapshot(const std::string& json_path,
                                  const std::string& bin_path) {
  nlohmann::json j = nlohmann::json::parse(io::read_file(json_path));
  if (j.at("format") != "warpsmooth-model-v1")
    throw IoError("model snapshot: unsupported format");
  RadialGrid grid{j.at("grid").at("x_max"), j.at("grid").at("n_points")};
  warping::WarpingProfile p1 = warping::profile_from_json(j.at("profile_1"));
  warping::WarpingProfile p2 = warping::profile_from_json(j.at("profile_2"));
  const std::vector<double> data = io::read_binary_doubles(bin_path);
  if (static_cast<int>(data.size()) != 3 * grid.n_points)
    throw IoError("model snapshot: binary array length mismatch");
  ManifoldModel model{std::move(p1), std::move(p2), grid, {}, {}, {}};
  model.v.resize(grid.n_points);
  model.v1.resize(grid.n_points);
  model.v2.resize(grid.n_points);
  for (int i = 0; i < grid.n_points; ++i) {
    model.v[i] = data[i];
    model.v1[i] = data[grid.n_points + i];
    model.v2[i] = data[2 * grid.n_points + i];
  }
  return model;
}

}  // namespace warpsmooth::geometry
