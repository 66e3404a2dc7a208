#include "preavg/expansion.hpp"

#include <algorithm>
#include <cmath>

#include "preavg/numeric.hpp"

namespace preavg {

clt2_kernels make_clt2_kernels(const expansion_constants& c) {
  if (!(c.theta > 0)) throw error("theta must be positive");
  if (!(c.psi.psi2 > 0)) throw error("psi2 must be positive");
  return clt2_kernels{c};
}

double clt2_kernels::mu2(double x, double y, double z) const {
  const auto& p = c.psi;
  return c.theta * x / p.psi2 *
         ((p.psi3 * p.psi3 + 2.0 * p.psi4 - p.psi2) * z + 2.0 * p.psi3 * p.psi3 * y);
}

double clt2_kernels::sigma2(double x, double y, double z) const {
  const auto& p = c.psi;
  const double th2 = c.theta * c.theta;
  const double om2 = c.omega * c.omega;
  const double p2sq = p.psi2 * p.psi2;
  return 4.0 * th2 * x * x / p2sq *
             ((p.psi7 + p.psi6) * z * z + (4.0 * p.psi5 - p.psi2) * p.psi3 * y * z +
              p.psi3 * p.psi3 * p.psi2 * y * y) +
         4.0 * om2 * p.psi1 / p2sq * (p.psi3 * p.psi3 * y * y + p.psi4 * z * z) +
         3.0 * om2 * om2 * p.psi1 * p.psi1 / (th2 * th2 * p2sq);
}

double clt2_kernels::sigma11(double b1) const {
  const double a = state_a(b1);
  return 2.0 * c.theta * a * a;
}

double clt2_kernels::sigma13(double b1) const {
  const double a = state_a(b1);
  return 8.0 * c.theta * c.theta / 3.0 * a * a * a;
}

double clt2_kernels::sigma14(double b1) const {
  const double a = state_a(b1);
  return 8.0 * c.theta * c.theta * a * a * a;
}

double clt2_kernels::sigma33(double b1) const {
  const double a = state_a(b1);
  return 16.0 * c.theta * c.theta * c.theta / 3.0 * a * a * a * a;
}

double clt2_kernels::sigma34(double b1) const {
  const double a = state_a(b1);
  return 44.0 * c.theta * c.theta / 3.0 * a * a * a;
}

double clt2_kernels::sigma44(double b1) const {
  const double a = state_a(b1);
  return 128.0 * c.theta * c.theta * c.theta / 3.0 * a * a * a * a;
}

path_functionals path_functionals_bs(const latent_path& path, const model_spec& model,
                                     const expansion_constants& c) {
  if (model.kind != model_kind::gbm)
    throw unsupported_model_error("path_functionals_bs needs a gbm model");

  const long n = path.grid.n;
  const double dt = path.grid.delta;
  const double theta = c.theta;
  const double kappa = c.noise_term();
  const double sig = model.sigma;
  const double sig2 = sig * sig;
  const auto& p = c.psi;

  double sa2 = 0, sa3 = 0, ito = 0, xint = 0;
  for (long i = 0; i < n; ++i) {
    const double xi = path.x[std::size_t(i)];
    const double ai = sig2 * xi * xi + kappa;
    sa2 += ai * ai * dt;
    sa3 += ai * ai * ai * dt;
    ito += xi * xi * (path.w[std::size_t(i) + 1] - path.w[std::size_t(i)]);
    xint += xi * xi * dt;
  }

  path_functionals f;
  f.c_big = 2.0 * theta * sa2;
  f.h1_tilde = 2.0 * theta / 3.0 * sa3 / sa2;
  f.h3_tilde = 6.0 * f.h1_tilde;

  const double p3sq = p.psi3 * p.psi3;
  const double cw =
      theta * sig * ((p3sq + 2.0 * p.psi4 - p.psi2) * sig2 + 2.0 * p3sq * model.a) /
      p.psi2;
  const double ct = theta *
                    (2.0 * p3sq * (sig2 * model.a + model.a * model.a) +
                     (2.0 * p.psi4 - p.psi2) * (2.0 * sig2 * model.a + sig2 * sig2)) /
                    (2.0 * p.psi2);
  f.h2 = cw * ito + ct * xint;

  // c(x) = (sig^2 x^2 + kappa)^2, c'(x) x = 4 sig^2 x^2 (sig^2 x^2 + kappa),
  // c''(x) x^2 + c'(x) x with D_t X_r = sig X_r folded into the prefactors.
  double acc1 = 0, acc2 = 0, h4sum = 0, h5sum = 0;
  for (long i = n - 1; i >= 0; --i) {
    const double xi = path.x[std::size_t(i)];
    const double x2 = xi * xi;
    const double cpx = 4.0 * sig2 * x2 * (sig2 * x2 + kappa);
    const double cppx = (12.0 * sig2 * sig2 * x2 + 4.0 * sig2 * kappa) * x2 + cpx;
    acc1 += cpx * dt;
    acc2 += cppx * dt;
    h4sum += x2 * acc1 * acc1 * dt;
    h5sum += x2 * acc2 * dt;
  }
  f.h4 = 4.0 * theta * theta * theta * p3sq * sig2 * sig2 / p.psi2 * h4sum;
  f.h5 = 2.0 * theta * theta * p3sq * sig2 * sig2 / p.psi2 * h5sum;
  return f;
}

path_functionals path_functionals_constvol(double b, double drift, double omega,
                                           double theta, const psi_limits_t& psi) {
  if (b < 0) throw error("b must be >= 0");
  expansion_constants c{theta, omega, psi};
  const double a = b * b + c.noise_term();
  path_functionals f;
  f.c_big = 2.0 * theta * a * a;
  f.h1_tilde = 2.0 * theta / 3.0 * a;
  f.h3_tilde = 6.0 * f.h1_tilde;
  f.h2 = theta * psi.psi3 * psi.psi3 / psi.psi2 * drift * drift;
  f.h4 = 0.0;
  f.h5 = 0.0;
  return f;
}

expansion_coefficients collapse_coefficients(double e_h2, double e_h5, double e_h4,
                                             double e_h3, double e_h1) {
  expansion_coefficients c;
  c.e_h2 = e_h2;
  c.e_h5 = e_h5;
  c.e_h4 = e_h4;
  c.e_h3 = e_h3;
  c.e_h1 = e_h1;
  c.lin = e_h2 - 0.5 * e_h5 + 0.75 * e_h4 + e_h3 - 3.0 * e_h1;
  c.cub = e_h1 - 0.5 * e_h3;
  return c;
}

namespace {

double stderr_of(std::span<const double> v, double mean) {
  const std::size_t m = v.size();
  if (m < 2) return 0.0;
  std::vector<double> sq(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double d = v[i] - mean;
    sq[i] = d * d;
  }
  return std::sqrt(pairwise_sum(sq) / (double(m) * double(m - 1)));
}

}  // namespace

expansion_coefficients expansion_coefficients_for(const model_spec& model,
                                                  const grid_spec& grid,
                                                  const expansion_constants& c,
                                                  const mc_options& mc) {
  if (model.kind == model_kind::constant_vol) {
    const path_functionals f =
        path_functionals_constvol(model.b, model.drift, model.omega, c.theta, c.psi);
    const double rc = std::sqrt(f.c_big);
    expansion_coefficients out = collapse_coefficients(
        f.h2 / rc, 0.0, 0.0, f.h3_tilde / rc, f.h1_tilde / rc);
    out.n_paths = 0;
    out.seed = mc.seed;
    return out;
  }
  if (model.kind != model_kind::gbm)
    throw unsupported_model_error(
        "expansion coefficients support gbm and constant_vol models only");
  if (mc.n_paths < 100) throw error("n_paths must be >= 100 for gbm");

  const long m = mc.n_paths;
  const std::size_t sz = std::size_t(m);
  std::vector<double> r2(sz), r5(sz), r4(sz), r3(sz), r1(sz);
  parallel_for(m, mc.workers, [&](long i) {
    latent_path path;
    try {
      path = simulate_gbm(model, grid, path_seed{mc.seed, std::uint32_t(i)});
    } catch (const simulation_diverged_error& e) {
      throw tainted_replication_error(std::string(e.what()) + " (seed " +
                                          std::to_string(mc.seed) + ", path " +
                                          std::to_string(i) + ")",
                                      mc.seed, std::uint32_t(i));
    }
    const path_functionals f = path_functionals_bs(path, model, c);
    const double rc = std::sqrt(f.c_big);
    const double v2 = f.h2 / rc;
    const double v5 = f.h5 / (f.c_big * rc);
    const double v4 = f.h4 / (f.c_big * f.c_big * rc);
    const double v3 = f.h3_tilde / rc;
    const double v1 = f.h1_tilde / rc;
    if (!std::isfinite(v2) || !std::isfinite(v5) || !std::isfinite(v4) ||
        !std::isfinite(v3) || !std::isfinite(v1))
      throw tainted_replication_error("non-finite path functional (seed " +
                                          std::to_string(mc.seed) + ", path " +
                                          std::to_string(i) + ")",
                                      mc.seed, std::uint32_t(i));
    r2[std::size_t(i)] = v2;
    r5[std::size_t(i)] = v5;
    r4[std::size_t(i)] = v4;
    r3[std::size_t(i)] = v3;
    r1[std::size_t(i)] = v1;
  });

  const double e2 = sample_mean(r2);
  const double e5 = sample_mean(r5);
  const double e4 = sample_mean(r4);
  const double e3 = sample_mean(r3);
  const double e1 = sample_mean(r1);
  expansion_coefficients out = collapse_coefficients(e2, e5, e4, e3, e1);
  out.mc_stderr = {stderr_of(r2, e2), stderr_of(r5, e5), stderr_of(r4, e4),
                   stderr_of(r3, e3), stderr_of(r1, e1)};
  out.n_paths = m;
  out.seed = mc.seed;
  return out;
}

double studentized_density(const expansion_coefficients& coeffs, double delta,
                           double y) {
  if (!(delta > 0)) throw error("delta must be positive");
  const double d4 = std::pow(delta, 0.25);
  return normal_pdf(y) * (1.0 + d4 * (coeffs.lin * y + coeffs.cub * y * y * y));
}

double studentized_cdf(const expansion_coefficients& coeffs, double delta, double y) {
  if (!(delta > 0)) throw error("delta must be positive");
  const double d4 = std::pow(delta, 0.25);
  return normal_cdf(y) - d4 * normal_pdf(y) * (coeffs.lin + coeffs.cub * (y * y + 2.0));
}

namespace {

// Ascending real roots of q(y) = 1 + L y + K y^3 (the density over phi).
std::vector<double> cubic_roots(double L, double K) {
  std::vector<double> roots;
  if (std::abs(K) < 1e-14) {
    if (std::abs(L) > 1e-14) roots.push_back(-1.0 / L);
  } else {
    const double p = L / K;
    const double q = 1.0 / K;
    const double disc = q * q / 4.0 + p * p * p / 27.0;
    if (disc > 0) {
      const double s = std::sqrt(disc);
      roots.push_back(std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s));
    } else {
      const double r = std::sqrt(-p / 3.0);
      const double phi = std::acos(std::clamp(3.0 * q / (2.0 * p * r), -1.0, 1.0));
      for (int k = 0; k < 3; ++k)
        roots.push_back(2.0 * r * std::cos(phi / 3.0 - 2.0943951023931953 * k));
    }
    // Newton polish on q(y)
    for (double& y : roots)
      for (int it = 0; it < 3; ++it) {
        const double f = 1.0 + L * y + K * y * y * y;
        const double fp = L + 3.0 * K * y * y;
        if (std::abs(fp) < 1e-300) break;
        y -= f / fp;
      }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace

corrected_law::corrected_law(const expansion_coefficients& coeffs, double delta) {
  if (!(delta > 0)) throw error("delta must be positive");
  d4_ = std::pow(delta, 0.25);
  lin_ = coeffs.lin;
  cub_ = coeffs.cub;

  const std::vector<double> roots = cubic_roots(d4_ * lin_, d4_ * cub_);
  bounds_.push_back(-40.0);
  for (double r : roots)
    if (r > -40.0 && r < 40.0) bounds_.push_back(r);
  bounds_.push_back(40.0);

  double lost = 0.0;
  double worst_lost = 0.0;
  double worst_lo = 0.0, worst_hi = 0.0;
  for (std::size_t s = 0; s + 1 < bounds_.size(); ++s) {
    const double lo = bounds_[s];
    const double hi = bounds_[s + 1];
    const double mid = 0.5 * (lo + hi);
    const double q = 1.0 + d4_ * (lin_ * mid + cub_ * mid * mid * mid);
    increasing_.push_back(q >= 0.0);
    left_value_.push_back(raw_cdf(lo));
    right_value_.push_back(raw_cdf(hi));
    if (q < 0.0 && hi > -10.0 && lo < 10.0) {
      const double drop = left_value_.back() - right_value_.back();
      if (drop > 0) {
        lost += drop;
        if (drop > worst_lost) {
          worst_lost = drop;
          worst_lo = lo;
          worst_hi = hi;
        }
      }
    }
  }
  if (lost > 0.1)
    throw invalid_expansion_error(
        "corrected CDF loses mass " + format_g17(lost) + " on [" +
        format_g17(std::max(worst_lo, -10.0)) + ", " +
        format_g17(std::min(worst_hi, 10.0)) + "]: expansion not usable");
}

double corrected_law::raw_cdf(double y) const {
  return normal_cdf(y) - d4_ * normal_pdf(y) * (lin_ + cub_ * (y * y + 2.0));
}

double corrected_law::cdf(double y) const {
  double sup = 0.0;
  for (std::size_t s = 0; s < increasing_.size(); ++s) {
    const double lo = bounds_[s];
    const double hi = bounds_[s + 1];
    if (y <= lo) break;
    if (increasing_[s]) sup = std::max(sup, y >= hi ? right_value_[s] : raw_cdf(y));
    else sup = std::max(sup, left_value_[s]);
  }
  if (y >= bounds_.back()) sup = std::max(sup, raw_cdf(y));
  return std::clamp(sup, 0.0, 1.0);
}

double corrected_law::quantile(double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw error("alpha must lie in (0,1)");
  double sup = 0.0;
  double arg_sup = bounds_.front();
  for (std::size_t s = 0; s < increasing_.size(); ++s) {
    if (!increasing_[s]) {
      if (left_value_[s] > sup) {
        sup = left_value_[s];
        arg_sup = bounds_[s];
      }
      continue;
    }
    const double attainable_hi = std::max(sup, right_value_[s]);
    if (alpha <= sup) return arg_sup;
    if (alpha <= attainable_hi) {
      // strictly increasing here; bisect raw_cdf to 1e-10
      double lo = bounds_[s];
      double hi = bounds_[s + 1];
      if (alpha <= std::max(sup, left_value_[s])) return lo;
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (raw_cdf(mid) < alpha) lo = mid;
        else hi = mid;
      }
      return 0.5 * (lo + hi);
    }
    if (right_value_[s] > sup) {
      sup = right_value_[s];
      arg_sup = bounds_[s + 1];
    }
  }
  return arg_sup;
}

double corrected_quantile(const expansion_coefficients& coeffs, double delta,
                          double alpha) {
  return corrected_law(coeffs, delta).quantile(alpha);
}

}  // namespace preavg
