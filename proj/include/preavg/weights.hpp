#pragma once

#include <functional>

#include "preavg/errors.hpp"

namespace preavg {

enum class weight_kind { tent, custom };

// Pre-averaging weight g on [0,1]: continuous, non-negative, g(0)=g(1)=0,
// with positive L2 norm. `deriv` supplies the piecewise derivative g'
// (asserted for the tent, a documented contract for custom weights).
struct weight_function {
  std::function<double(double)> eval;
  std::function<double(double)> deriv;
  weight_kind kind = weight_kind::custom;
};

// g(x) = min(x, 1-x), derivative +1 on [0,1/2), -1 on (1/2,1].
weight_function make_tent_weight();

// Wraps user-supplied maps after checking the boundary conditions.
weight_function make_custom_weight(std::function<double(double)> eval,
                                   std::function<double(double)> deriv);

struct psi_discrete_t {
  double psi1n = 0, psi2n = 0, psi3n = 0, psi4n = 0;
  long k_n = 0;
};

struct psi_limits_t {
  double psi1 = 0, psi2 = 0, psi3 = 0, psi4 = 0, psi5 = 0, psi6 = 0, psi7 = 0;
};

// Sampling skeleton shared by every estimator: n steps on [0,1], window k_n,
// d_n = floor(n/k_n) non-overlapping windows, theta = k_n/sqrt(n).
struct grid_spec {
  long n = 0;
  double delta = 0;
  long k_n = 0;
  long d_n = 0;
  double theta = 0;
  bool strict = true;
};

// strict mode insists k_n divides n so the tail interval [d_n k_n delta, 1]
// is empty; relaxed mode leaves the tail for the edge-volatility correction.
grid_spec validate_grid(long n, long k_n, bool strict = true);

// Exact summation of the window constants psi_i^n, i=1..4.
psi_discrete_t psi_discrete(const weight_function& w, long k_n);

// Limit constants psi_1..psi_7. For the tent the closed forms are returned;
// anything else goes through the quadrature below.
psi_limits_t psi_limits(const weight_function& w, int quad_points = 2048);

// Composite midpoint rule at quad_points and 2*quad_points cells with
// Richardson extrapolation; used directly when the closed forms must be
// cross-checked.
psi_limits_t psi_limits_quadrature(const weight_function& w, int quad_points);

// Rational arithmetic for the tent weight, where every psi_i^n is exact.
struct rational {
  long long num = 0;
  long long den = 1;
  double value() const { return double(num) / double(den); }
  bool operator==(const rational&) const = default;
};
std::string to_string(const rational& r);

struct tent_psi_rational {
  rational psi1n, psi2n, psi3n, psi4n;
};

tent_psi_rational tent_psi_discrete_exact(long k_n);  // term-by-term summation
tent_psi_rational tent_psi_closed_form(long k_n);     // even/odd closed forms
psi_limits_t tent_psi_limits();                       // 1, 1/12, 1/4, 1/24, 1/96, 143/24192, 1/105

}  // namespace preavg
