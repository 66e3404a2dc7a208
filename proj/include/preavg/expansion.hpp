#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "preavg/simulate.hpp"
#include "preavg/weights.hpp"

namespace preavg {

struct expansion_constants {
  double theta = 0;
  double omega = 0;
  psi_limits_t psi;

  // omega^2 psi1 / (theta^2 psi2), the additive noise term of the state
  // a(x) = b1(x)^2 + noise_term().
  double noise_term() const {
    return omega * omega * psi.psi1 / (theta * theta * psi.psi2);
  }
};

// Kernels of the second-order stable limit: the conditional mean/second
// moment of the expansion remainder given the state (b1, b2, b11), and the
// covariance entries of (M, N, C_hat, F_hat).
struct clt2_kernels {
  expansion_constants c;

  double state_a(double b1) const { return b1 * b1 + c.noise_term(); }
  double mu2(double x, double y, double z) const;
  double sigma2(double x, double y, double z) const;
  double sigma22(double x, double y, double z) const {
    const double m = mu2(x, y, z);
    return sigma2(x, y, z) - m * m;
  }
  double sigma11(double b1) const;
  double sigma13(double b1) const;
  double sigma14(double b1) const;
  double sigma33(double b1) const;
  double sigma34(double b1) const;
  double sigma44(double b1) const;
};

clt2_kernels make_clt2_kernels(const expansion_constants& c);

// Per-path ingredients of the correction term. All integrals are left-point
// Riemann sums on the path grid (the h2 stochastic integral is an Ito sum).
struct path_functionals {
  double c_big = 0;
  double h1_tilde = 0;
  double h2 = 0;
  double h3_tilde = 0;
  double h4 = 0;
  double h5 = 0;
};

path_functionals path_functionals_bs(const latent_path& path, const model_spec& model,
                                     const expansion_constants& c);

// Constant volatility: everything is deterministic, h2 is its expectation
// (theta psi3^2 / psi2) drift^2, and h4 = h5 = 0.
path_functionals path_functionals_constvol(double b, double drift, double omega,
                                           double theta, const psi_limits_t& psi);

struct mc_options {
  long n_paths = 10000;
  std::uint64_t seed = 0;
  int workers = 0;
};

// The five expectations of the correction term, collapsed into the linear
// and cubic polynomial coefficients.
struct expansion_coefficients {
  double e_h2 = 0;  // E[H2 C^{-1/2}]
  double e_h5 = 0;  // E[H5 C^{-3/2}]
  double e_h4 = 0;  // E[H4 C^{-5/2}]
  double e_h3 = 0;  // E[H3~ C^{-1/2}]
  double e_h1 = 0;  // E[H1~ C^{-1/2}]
  double lin = 0;   // e_h2 - e_h5/2 + 3 e_h4/4 + e_h3 - 3 e_h1
  double cub = 0;   // e_h1 - e_h3/2
  std::array<double, 5> mc_stderr{};  // ordered as e_h2, e_h5, e_h4, e_h3, e_h1
  long n_paths = 0;
  std::uint64_t seed = 0;
};

expansion_coefficients collapse_coefficients(double e_h2, double e_h5, double e_h4,
                                             double e_h3, double e_h1);

// Monte Carlo over fresh latent paths for gbm; closed form for constant_vol
// (n_paths is ignored there); custom_sde is rejected.
expansion_coefficients expansion_coefficients_for(const model_spec& model,
                                                  const grid_spec& grid,
                                                  const expansion_constants& c,
                                                  const mc_options& mc);

// Corrected density p(y) = phi(y) (1 + delta^{1/4} (lin y + cub y^3)).
double studentized_density(const expansion_coefficients& coeffs, double delta,
                           double y);

// Analytic antiderivative Phi(y) - delta^{1/4} phi(y) (lin + cub (y^2+2)).
double studentized_cdf(const expansion_coefficients& coeffs, double delta, double y);

// Monotone rearrangement of the corrected CDF (running supremum), clamped to
// [0,1]; construction throws invalid_expansion_error when the lost mass on
// [-10,10] is beyond repair.
class corrected_law {
 public:
  corrected_law(const expansion_coefficients& coeffs, double delta);
  double cdf(double y) const;
  double quantile(double alpha) const;  // bisection to 1e-10

 private:
  double raw_cdf(double y) const;
  double d4_ = 0, lin_ = 0, cub_ = 0;
  std::vector<double> bounds_;      // section boundaries (density sign changes)
  std::vector<bool> increasing_;    // per section
  std::vector<double> left_value_;  // raw cdf at section left ends
  std::vector<double> right_value_;
};

double corrected_quantile(const expansion_coefficients& coeffs, double delta,
                          double alpha);

}  // namespace preavg
