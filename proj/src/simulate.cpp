#include "preavg/simulate.hpp"

#include <cmath>

#include "preavg/numeric.hpp"

namespace preavg {

namespace {
constexpr double overflow_guard = 1e12;
}

model_spec model_spec::make_gbm(double a, double sigma, double x0, double omega) {
  if (sigma < 0) throw error("gbm sigma must be >= 0");
  if (!(x0 > 0)) throw error("gbm x0 must be > 0");
  if (omega < 0) throw error("omega must be >= 0");
  model_spec m;
  m.kind = model_kind::gbm;
  m.a = a;
  m.sigma = sigma;
  m.x0 = x0;
  m.omega = omega;
  return m;
}

model_spec model_spec::make_constant_vol(double b, double drift, double omega,
                                         double x0) {
  if (b < 0) throw error("constant_vol b must be >= 0");
  if (omega < 0) throw error("omega must be >= 0");
  model_spec m;
  m.kind = model_kind::constant_vol;
  m.b = b;
  m.drift = drift;
  m.x0 = x0;
  m.omega = omega;
  return m;
}

model_spec model_spec::make_custom(sde_coeffs coeffs, double x0, double omega) {
  if (!coeffs.b1 || !coeffs.b2) throw error("custom_sde needs b1 and b2 maps");
  if (omega < 0) throw error("omega must be >= 0");
  model_spec m;
  m.kind = model_kind::custom_sde;
  m.coeffs = std::move(coeffs);
  m.x0 = x0;
  m.omega = omega;
  return m;
}

std::function<double(double)> model_b1(const model_spec& model) {
  switch (model.kind) {
    case model_kind::gbm:
      return [s = model.sigma](double x) { return s * x; };
    case model_kind::constant_vol:
      return [b = model.b](double) { return b; };
    case model_kind::custom_sde:
      return model.coeffs.b1;
  }
  throw error("unknown model kind");
}

latent_path simulate_gbm(const model_spec& model, const grid_spec& grid,
                         path_seed seed, int oversample) {
  if (model.kind != model_kind::gbm) throw error("simulate_gbm needs a gbm model");
  if (oversample < 1) throw error("oversample must be >= 1");

  const long n = grid.n;
  const double dt = grid.delta / oversample;
  const double sq_dt = std::sqrt(dt);
  const double drift_step = (model.a - 0.5 * model.sigma * model.sigma) * dt;

  latent_path path;
  path.grid = grid;
  path.x.resize(std::size_t(n) + 1);
  path.w.resize(std::size_t(n) + 1);

  normal_stream zs(seed, stream_role::brownian);
  double xv = model.x0;
  double wv = 0.0;
  double tv = 0.0;
  path.x[0] = xv;
  path.w[0] = 0.0;
  for (long i = 1; i <= n; ++i) {
    for (int s = 0; s < oversample; ++s) {
      const double dw = sq_dt * zs.next();
      tv += model.sigma * model.sigma * xv * xv * dt;
      xv *= std::exp(drift_step + model.sigma * dw);
      wv += dw;
    }
    if (!std::isfinite(xv) || std::abs(xv) > overflow_guard)
      throw simulation_diverged_error("gbm path diverged at step " + std::to_string(i));
    path.x[std::size_t(i)] = xv;
    path.w[std::size_t(i)] = wv;
  }
  path.true_v = tv;
  return path;
}

latent_path simulate_sde_euler(const model_spec& model, const grid_spec& grid,
                               path_seed seed, int oversample) {
  if (model.kind == model_kind::gbm)
    throw error("simulate_sde_euler expects constant_vol or custom_sde");
  if (oversample < 1) throw error("oversample must be >= 1");

  std::function<double(double)> b1;
  std::function<double(double)> b2;
  if (model.kind == model_kind::constant_vol) {
    b1 = [b = model.b](double) { return b; };
    b2 = [d = model.drift](double) { return d; };
  } else {
    if (!model.coeffs.b1 || !model.coeffs.b2)
      throw error("custom_sde needs b1 and b2 maps");
    b1 = model.coeffs.b1;
    b2 = model.coeffs.b2;
  }

  const long n = grid.n;
  const double dt = grid.delta / oversample;
  const double sq_dt = std::sqrt(dt);

  latent_path path;
  path.grid = grid;
  path.x.resize(std::size_t(n) + 1);
  path.w.resize(std::size_t(n) + 1);

  normal_stream zs(seed, stream_role::brownian);
  double xv = model.x0;
  double wv = 0.0;
  double tv = 0.0;
  path.x[0] = xv;
  path.w[0] = 0.0;
  for (long i = 1; i <= n; ++i) {
    for (int s = 0; s < oversample; ++s) {
      const double dw = sq_dt * zs.next();
      const double diff = b1(xv);
      const double dr = b2(xv);
      if (!std::isfinite(diff) || !std::isfinite(dr))
        throw simulation_diverged_error("sde coefficients non-finite at step " +
                                        std::to_string(i));
      tv += diff * diff * dt;
      xv += diff * dw + dr * dt;
      wv += dw;
    }
    if (!std::isfinite(xv) || std::abs(xv) > overflow_guard)
      throw simulation_diverged_error("sde path diverged at step " + std::to_string(i));
    path.x[std::size_t(i)] = xv;
    path.w[std::size_t(i)] = wv;
  }
  path.true_v = tv;
  return path;
}

latent_path simulate_path(const model_spec& model, const grid_spec& grid,
                          path_seed seed, int oversample) {
  if (model.kind == model_kind::gbm) return simulate_gbm(model, grid, seed, oversample);
  return simulate_sde_euler(model, grid, seed, oversample);
}

observation_series add_noise(const latent_path& path, double omega, path_seed seed) {
  if (omega < 0) throw error("omega must be >= 0");
  observation_series obs;
  obs.grid = path.grid;
  obs.omega_true = omega;
  obs.y.resize(path.x.size());
  normal_stream zs(seed, stream_role::noise);
  for (std::size_t i = 0; i < path.x.size(); ++i) obs.y[i] = path.x[i] + omega * zs.next();
  return obs;
}

void dump_path_csv(std::ostream& os, const latent_path& path,
                   const observation_series* obs) {
  os << (obs ? "t,x,w,y\n" : "t,x,w\n");
  for (std::size_t i = 0; i < path.x.size(); ++i) {
    os << format_g17(double(i) * path.grid.delta) << ',' << format_g17(path.x[i])
       << ',' << format_g17(path.w[i]);
    if (obs) os << ',' << format_g17(obs->y[i]);
    os << '\n';
  }
}

}  // namespace preavg
