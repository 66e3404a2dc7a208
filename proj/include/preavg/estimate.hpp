#pragma once

#include <functional>
#include <istream>
#include <optional>
#include <string>

#include "preavg/simulate.hpp"
#include "preavg/weights.hpp"

namespace preavg {

// Weight function sampled on a grid's window, with the discrete and limit
// psi constants that parameterize every estimator.
struct weight_scheme {
  std::vector<double> g;  // g(j/k_n), j = 0..k_n
  long k_n = 0;
  double theta = 0;  // theta_n = k_n sqrt(delta)
  psi_discrete_t psi_n;
  psi_limits_t psi;

  static weight_scheme make(const weight_function& w, const grid_spec& grid,
                            int quad_points = 2048);
};

// Pre-averaged increment at start index i:
// sum_{j=1}^{k_n-1} g(j/k_n) (y_{i+j} - y_{i+j-1}). Requires i + k_n <= n.
double preaverage(const observation_series& y, long i, const weight_scheme& w);

// Pre-averaging estimator of integrated volatility over non-overlapping
// windows with stride k_n, with the realized-variance bias corrector.
double estimate_V(const observation_series& y, const weight_scheme& w,
                  const grid_spec& grid);

// Estimator of the asymptotic conditional variance of the studentized scale.
double estimate_F(const observation_series& y, const weight_scheme& w,
                  const grid_spec& grid);

// omega^2 estimate (2n)^{-1} sum (dY_i)^2.
double estimate_noise_variance(const observation_series& y);

// Local volatility estimate on the tail block J_n = {n-p_n+1,...,n},
// overlapping windows. Requires k_n + 1 <= p_n <= n - k_n + 1.
double estimate_edge_volatility(const observation_series& y, const weight_scheme& w,
                                const grid_spec& grid, long p_n);

// Default tail window floor(n^{3/4}); satisfies p_n -> inf, p_n delta -> 0,
// p_n sqrt(delta) -> inf.
long default_edge_window(const grid_spec& grid);

struct report_options {
  std::optional<double> true_v;
  double alpha = 0.05;
  std::optional<long> p_n;
  std::function<double(double)> quantile;  // defaults to the normal quantile
  std::string quantile_source = "normal";
};

struct estimate_report {
  double v_n = 0;
  double f_n = 0;
  double omega2_hat = 0;
  std::optional<double> b2_edge;  // absent on strict grids (empty tail)
  double v_corrected = 0;
  std::optional<double> z_star;
  std::optional<double> t_stat;
  double ci_lo = 0, ci_hi = 0;
  double alpha = 0.05;
  std::string quantile_source;
  bool negative_v = false;  // V_n < 0 is reported as-is, only flagged
  long n = 0, k_n = 0, d_n = 0;
};

estimate_report build_report(const observation_series& y, const weight_scheme& w,
                             const grid_spec& grid, const report_options& options);

// Data-mode ingestion: CSV with header `t,y`, equidistant timestamps
// (validated to 1e-9 relative); n is inferred and time rescaled to [0,1].
observation_series load_observation_csv(std::istream& in, long k_n, bool strict = false);
observation_series load_observation_csv(const std::string& filename, long k_n,
                                        bool strict = false);

}  // namespace preavg
