#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "preavg/rng.hpp"
#include "preavg/weights.hpp"

namespace preavg {

enum class model_kind { gbm, constant_vol, custom_sde };

// Coefficient maps for a generic scalar SDE dX = b1(X) dW + b2(X) dt,
// together with their first two derivatives.
struct sde_coeffs {
  std::function<double(double)> b1, b1p, b1pp;
  std::function<double(double)> b2, b2p, b2pp;
};

struct model_spec {
  model_kind kind = model_kind::gbm;
  double a = 0.0;      // gbm drift rate
  double sigma = 0.0;  // gbm volatility
  double x0 = 1.0;
  double b = 0.0;      // constant_vol volatility level
  double drift = 0.0;  // constant_vol drift
  sde_coeffs coeffs;   // custom_sde
  double omega = 0.0;  // microstructure noise standard deviation

  static model_spec make_gbm(double a, double sigma, double x0, double omega);
  static model_spec make_constant_vol(double b, double drift, double omega,
                                      double x0 = 0.0);
  static model_spec make_custom(sde_coeffs coeffs, double x0, double omega);
};

// Latent diffusion on the observation grid plus everything the expansion
// functionals need: the driving Brownian levels and the true integrated
// volatility (left Riemann sum on the simulation grid).
struct latent_path {
  grid_spec grid;
  std::vector<double> x;
  std::vector<double> w;
  double true_v = 0.0;
};

struct observation_series {
  grid_spec grid;
  std::vector<double> y;
  std::optional<double> omega_true;
};

// Exact log-Euler scheme for geometric Brownian motion. `oversample` refines
// the internal step (true_v is then accumulated on the fine grid) while x/w
// are recorded at observation times.
latent_path simulate_gbm(const model_spec& model, const grid_spec& grid,
                         path_seed seed, int oversample = 1);

// Euler-Maruyama for constant_vol and custom_sde models. Throws
// simulation_diverged_error past the overflow guard |X| > 1e12.
latent_path simulate_sde_euler(const model_spec& model, const grid_spec& grid,
                               path_seed seed, int oversample = 1);

// Dispatch on model.kind.
latent_path simulate_path(const model_spec& model, const grid_spec& grid,
                          path_seed seed, int oversample = 1);

// y_i = x_i + eps_i with eps_i i.i.d. N(0, omega^2) from the noise substream
// of the same key, so changing omega never perturbs the path.
observation_series add_noise(const latent_path& path, double omega, path_seed seed);

// CSV dump with header t,x,w,y (y column only when a series is supplied).
void dump_path_csv(std::ostream& os, const latent_path& path,
                   const observation_series* obs = nullptr);

// Diffusion coefficient b1 of the model as a callable.
std::function<double(double)> model_b1(const model_spec& model);

}  // namespace preavg
