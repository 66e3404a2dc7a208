#include "preavg/weights.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace preavg {

weight_function make_tent_weight() {
  weight_function w;
  w.eval = [](double x) { return x < 1.0 - x ? x : 1.0 - x; };
  w.deriv = [](double x) { return x < 0.5 ? 1.0 : -1.0; };
  w.kind = weight_kind::tent;
  return w;
}

weight_function make_custom_weight(std::function<double(double)> eval,
                                   std::function<double(double)> deriv) {
  if (!eval || !deriv) throw error("custom weight needs eval and deriv maps");
  if (std::abs(eval(0.0)) > 1e-12 || std::abs(eval(1.0)) > 1e-12)
    throw error("weight function must vanish at 0 and 1");
  weight_function w;
  w.eval = std::move(eval);
  w.deriv = std::move(deriv);
  w.kind = weight_kind::custom;
  return w;
}

grid_spec validate_grid(long n, long k_n, bool strict) {
  if (k_n < 2) throw invalid_grid_error("k_n must be >= 2");
  if (n < k_n) throw invalid_grid_error("n must be >= k_n");
  grid_spec g;
  g.n = n;
  g.delta = 1.0 / double(n);
  g.k_n = k_n;
  g.d_n = n / k_n;
  if (g.d_n < 1) throw invalid_grid_error("d_n must be >= 1");
  if (strict && g.d_n * k_n != n)
    throw misaligned_grid_error("strict grid requires k_n * d_n == n (n=" +
                                std::to_string(n) + ", k_n=" + std::to_string(k_n) + ")");
  g.theta = double(k_n) / std::sqrt(double(n));
  g.strict = strict;
  return g;
}

psi_discrete_t psi_discrete(const weight_function& w, long k_n) {
  if (k_n < 2) throw invalid_grid_error("k_n must be >= 2");
  const double k = double(k_n);
  std::vector<double> g(std::size_t(k_n) + 1);
  for (long j = 0; j <= k_n; ++j) g[std::size_t(j)] = w.eval(double(j) / k);

  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (long j = 0; j < k_n; ++j) {
    const double h = g[std::size_t(j) + 1] - g[std::size_t(j)];
    s1 += h * h;
  }
  for (long j = 1; j < k_n; ++j) {
    const double gj = g[std::size_t(j)];
    s2 += gj * gj;
    s3 += gj;
    s4 += gj * gj * (double(j) - 0.5);
  }
  psi_discrete_t p;
  p.k_n = k_n;
  p.psi1n = k * s1;
  p.psi2n = s2 / k;
  p.psi3n = s3 / k;
  p.psi4n = s4 / (k * k);
  if (!(p.psi2n > 0)) throw numeric_error("psi2^n must be positive");
  return p;
}

namespace {

// Midpoint-rule machinery. Cumulative integrals are evaluated at arbitrary
// points by summing whole cells and closing the fractional cell with its own
// midpoint, which keeps the whole construction O(h^2)-consistent (and exact
// for piecewise-linear integrands when kinks sit on cell edges).
struct cumulative_midpoint {
  cumulative_midpoint(std::function<double(double)> f, int m)
      : f_(std::move(f)), m_(m), h_(1.0 / m) {
    edge_.resize(std::size_t(m) + 1, 0.0);
    for (int j = 0; j < m; ++j)
      edge_[std::size_t(j) + 1] = edge_[std::size_t(j)] + h_ * f_((j + 0.5) * h_);
  }
  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return edge_.back();
    int j = int(x / h_);
    if (j >= m_) j = m_ - 1;
    const double left = j * h_;
    const double frac = x - left;
    return edge_[std::size_t(j)] + frac * f_(left + 0.5 * frac);
  }
  std::function<double(double)> f_;
  int m_;
  double h_;
  std::vector<double> edge_;
};

psi_limits_t psi_quadrature_once(const weight_function& w, int m) {
  const double h = 1.0 / m;
  auto g = [&](double x) { return w.eval(x); };
  auto g2 = [&](double x) {
    const double v = w.eval(x);
    return v * v;
  };

  psi_limits_t p;
  for (int i = 0; i < m; ++i) {
    const double s = (i + 0.5) * h;
    const double gs = w.eval(s);
    const double ds = w.deriv(s);
    p.psi1 += ds * ds * h;
    p.psi2 += gs * gs * h;
    p.psi3 += gs * h;
    p.psi4 += s * gs * gs * h;
  }

  const cumulative_midpoint G(g, m);   // int_0^x g
  const cumulative_midpoint Q(g2, m);  // int_0^x g^2
  const double psi2 = p.psi2;

  // A(s) = int_0^s (2g(s)+g(r))^2 dr = 4 s g(s)^2 + 4 g(s) G(s) + Q(s)
  std::function<double(double)> A = [&](double s) {
    const double gs = w.eval(s);
    return 4.0 * s * gs * gs + 4.0 * gs * G(s) + Q(s);
  };
  const cumulative_midpoint B(A, m);  // int_0^u A

  for (int i = 0; i < m; ++i) {
    const double u = (i + 0.5) * h;
    const double gu = w.eval(u);
    const double Gu = G(u);
    p.psi5 += Gu * gu * gu * h;
    const double inner = Gu * gu - (Gu - psi2 * u);
    p.psi6 += inner * inner * h;
    p.psi7 += B(u) * gu * gu * h;
  }
  return p;
}

}  // namespace

psi_limits_t psi_limits_quadrature(const weight_function& w, int quad_points) {
  if (quad_points < 64) throw error("quad_points must be >= 64");
  const int m = quad_points % 2 == 0 ? quad_points : quad_points + 1;
  const psi_limits_t a = psi_quadrature_once(w, m);
  const psi_limits_t b = psi_quadrature_once(w, 2 * m);
  // Richardson step: midpoint error is O(h^2), so (4 I_{2m} - I_m)/3.
  psi_limits_t r;
  const double* pa = &a.psi1;
  const double* pb = &b.psi1;
  double* pr = &r.psi1;
  for (int i = 0; i < 7; ++i) {
    pr[i] = (4.0 * pb[i] - pa[i]) / 3.0;
    if (!std::isfinite(pr[i])) throw numeric_error("non-finite psi quadrature");
  }
  if (!(r.psi2 > 0)) throw numeric_error("weight has zero L2 norm");
  return r;
}

psi_limits_t psi_limits(const weight_function& w, int quad_points) {
  if (w.kind == weight_kind::tent) return tent_psi_limits();
  return psi_limits_quadrature(w, quad_points);
}

namespace {

long long llgcd(long long a, long long b) { return std::gcd(a, b); }

rational make_rational(long long num, long long den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const long long g = llgcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return rational{num, den};
}

}  // namespace

std::string to_string(const rational& r) {
  if (r.den == 1) return std::to_string(r.num);
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

tent_psi_rational tent_psi_discrete_exact(long k_n) {
  if (k_n < 2) throw invalid_grid_error("k_n must be >= 2");
  if (k_n > 4096) throw invalid_grid_error("exact rational path supports k_n <= 4096");
  const long long k = k_n;
  // g(j/k) = p_j / k with p_j = min(j, k-j)
  long long s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  long long prev = 0;
  for (long long j = 1; j <= k; ++j) {
    const long long pj = j < k - j ? j : k - j;
    const long long dh = pj - prev;
    s1 += dh * dh;
    prev = pj;
    if (j < k) {
      s2 += pj * pj;
      s3 += pj;
      s4 += pj * pj * (2 * j - 1);
    }
  }
  tent_psi_rational t;
  t.psi1n = make_rational(s1, k);
  t.psi2n = make_rational(s2, k * k * k);
  t.psi3n = make_rational(s3, k * k);
  t.psi4n = make_rational(s4, 2 * k * k * k * k);
  return t;
}

tent_psi_rational tent_psi_closed_form(long k_n) {
  if (k_n < 2) throw invalid_grid_error("k_n must be >= 2");
  const long long k = k_n;
  tent_psi_rational t;
  if (k % 2 == 0) {
    t.psi1n = make_rational(1, 1);
    t.psi2n = make_rational(k * k + 2, 12 * k * k);
    t.psi3n = make_rational(1, 4);
    t.psi4n = make_rational((k - 1) * (k * k + 2), 24 * k * k * k);
  } else {
    t.psi1n = make_rational(k - 1, k);
    t.psi2n = make_rational(k * k - 1, 12 * k * k);
    t.psi3n = make_rational(k * k - 1, 4 * k * k);
    t.psi4n = make_rational((k - 1) * (k * k - 1), 24 * k * k * k);
  }
  return t;
}

psi_limits_t tent_psi_limits() {
  psi_limits_t p;
  p.psi1 = 1.0;
  p.psi2 = 1.0 / 12.0;
  p.psi3 = 1.0 / 4.0;
  p.psi4 = 1.0 / 24.0;
  p.psi5 = 1.0 / 96.0;
  p.psi6 = 143.0 / 24192.0;
  p.psi7 = 1.0 / 105.0;
  return p;
}

}  // namespace preavg
