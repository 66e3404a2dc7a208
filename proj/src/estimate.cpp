#include "preavg/estimate.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "preavg/numeric.hpp"

namespace preavg {

weight_scheme weight_scheme::make(const weight_function& w, const grid_spec& grid,
                                  int quad_points) {
  weight_scheme s;
  s.k_n = grid.k_n;
  s.theta = grid.theta;
  s.g.resize(std::size_t(grid.k_n) + 1);
  for (long j = 0; j <= grid.k_n; ++j)
    s.g[std::size_t(j)] = w.eval(double(j) / double(grid.k_n));
  s.psi_n = psi_discrete(w, grid.k_n);
  s.psi = psi_limits(w, quad_points);
  return s;
}

namespace {

void check_series(const observation_series& y, const grid_spec& grid) {
  if (long(y.y.size()) != grid.n + 1)
    throw error("series length " + std::to_string(y.y.size()) +
                " does not match grid n=" + std::to_string(grid.n));
}

double realized_variance(const observation_series& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < y.y.size(); ++i) {
    const double d = y.y[i] - y.y[i - 1];
    s += d * d;
  }
  return s;
}

}  // namespace

double preaverage(const observation_series& y, long i, const weight_scheme& w) {
  const long n = long(y.y.size()) - 1;
  if (i < 0 || i + w.k_n > n)
    throw index_error("preaverage window [" + std::to_string(i) + ", " +
                      std::to_string(i + w.k_n) + "] exceeds series of length n=" +
                      std::to_string(n));
  double s = 0.0;
  for (long j = 1; j < w.k_n; ++j)
    s += w.g[std::size_t(j)] * (y.y[std::size_t(i + j)] - y.y[std::size_t(i + j - 1)]);
  return s;
}

double estimate_V(const observation_series& y, const weight_scheme& w,
                  const grid_spec& grid) {
  check_series(y, grid);
  double sq = 0.0;
  for (long i = 0; i < grid.d_n; ++i) {
    const double bar = preaverage(y, i * grid.k_n, w);
    sq += bar * bar;
  }
  const double rv = realized_variance(y);
  return sq / w.psi_n.psi2n -
         w.psi_n.psi1n * double(grid.d_n) * grid.delta /
             (2.0 * w.psi_n.psi2n * double(grid.k_n)) * rv;
}

double estimate_F(const observation_series& y, const weight_scheme& w,
                  const grid_spec& grid) {
  check_series(y, grid);
  double s4 = 0.0;
  for (long i = 0; i < grid.d_n; ++i) {
    const double bar = preaverage(y, i * grid.k_n, w);
    s4 += bar * bar * bar * bar;
  }
  return 2.0 / (std::sqrt(grid.delta) * 3.0 * w.psi_n.psi2n * w.psi_n.psi2n) * s4;
}

double estimate_noise_variance(const observation_series& y) {
  const long n = long(y.y.size()) - 1;
  if (n < 1) throw error("need at least two observations");
  return realized_variance(y) / (2.0 * double(n));
}

double estimate_edge_volatility(const observation_series& y, const weight_scheme& w,
                                const grid_spec& grid, long p_n) {
  check_series(y, grid);
  const long n = grid.n;
  if (p_n < grid.k_n + 1 || p_n > n - grid.k_n + 1)
    throw invalid_window_error("p_n=" + std::to_string(p_n) + " outside [" +
                               std::to_string(grid.k_n + 1) + ", " +
                               std::to_string(n - grid.k_n + 1) + "]");
  // overlapping windows whose right edge lands in J_n = {n-p_n+1, ..., n}
  double sq = 0.0;
  for (long i = n - p_n + 1 - grid.k_n; i <= n - grid.k_n; ++i) {
    const double bar = preaverage(y, i, w);
    sq += bar * bar;
  }
  double rv_tail = 0.0;
  for (long i = n - p_n + 1; i <= n; ++i) {
    const double d = y.y[std::size_t(i)] - y.y[std::size_t(i - 1)];
    rv_tail += d * d;
  }
  const double theta2 = w.theta * w.theta;
  return sq / (w.psi_n.psi2n * double(grid.k_n) * grid.delta * double(p_n)) -
         w.psi_n.psi1n / (2.0 * theta2 * w.psi_n.psi2n * double(p_n)) * rv_tail;
}

long default_edge_window(const grid_spec& grid) {
  return long(std::floor(std::pow(double(grid.n), 0.75)));
}

estimate_report build_report(const observation_series& y, const weight_scheme& w,
                             const grid_spec& grid, const report_options& options) {
  estimate_report r;
  r.n = grid.n;
  r.k_n = grid.k_n;
  r.d_n = grid.d_n;
  r.alpha = options.alpha;
  r.quantile_source = options.quantile_source;

  r.v_n = estimate_V(y, w, grid);
  r.f_n = estimate_F(y, w, grid);
  r.omega2_hat = estimate_noise_variance(y);
  r.negative_v = r.v_n < 0.0;

  const long tail_steps = grid.n - grid.d_n * grid.k_n;
  if (tail_steps > 0) {
    const long p_n = options.p_n.value_or(default_edge_window(grid));
    const double b2 = estimate_edge_volatility(y, w, grid, p_n);
    r.b2_edge = b2;
    r.v_corrected = r.v_n + double(tail_steps) * grid.delta * b2;
  } else {
    r.v_corrected = r.v_n;
  }

  if (r.f_n == 0.0)
    throw degenerate_variance_error("F_n = 0: studentization impossible");

  const double root4 = std::pow(grid.delta, 0.25);
  if (options.true_v) {
    r.z_star = (r.v_corrected - *options.true_v) / root4;
    r.t_stat = *r.z_star / std::sqrt(r.f_n);
  }

  auto q = options.quantile ? options.quantile
                            : std::function<double(double)>(normal_quantile);
  const double q_lo = q(options.alpha / 2.0);
  const double q_hi = q(1.0 - options.alpha / 2.0);
  const double scale = root4 * std::sqrt(r.f_n);
  r.ci_lo = r.v_corrected - q_hi * scale;
  r.ci_hi = r.v_corrected - q_lo * scale;
  return r;
}

namespace {

double parse_double(const std::string& field, std::size_t line_no) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw parse_error("line " + std::to_string(line_no) + ": bad number '" + field + "'");
  return v;
}

}  // namespace

observation_series load_observation_csv(std::istream& in, long k_n, bool strict) {
  std::string line;
  if (!std::getline(in, line)) throw parse_error("empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,y") throw parse_error("line 1: expected header 't,y', got '" + line + "'");

  std::vector<double> t, y;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw parse_error("line " + std::to_string(line_no) + ": expected 't,y' row");
    t.push_back(parse_double(line.substr(0, comma), line_no));
    y.push_back(parse_double(line.substr(comma + 1), line_no));
  }
  if (t.size() < 2) throw parse_error("need at least two rows");

  const double dt0 = t[1] - t[0];
  if (!(dt0 > 0)) throw parse_error("line 3: timestamps must be increasing");
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double dt = t[i] - t[i - 1];
    if (std::abs(dt - dt0) > 1e-9 * std::abs(dt0))
      throw parse_error("line " + std::to_string(i + 2) +
                        ": non-equidistant timestamp (step " + format_g17(dt) +
                        " vs " + format_g17(dt0) + ")");
  }

  const long n = long(t.size()) - 1;
  observation_series obs;
  obs.grid = validate_grid(n, k_n, strict);
  obs.y = std::move(y);
  return obs;
}

observation_series load_observation_csv(const std::string& filename, long k_n,
                                        bool strict) {
  std::ifstream in(filename);
  if (!in) throw parse_error("cannot open '" + filename + "'");
  return load_observation_csv(in, k_n, strict);
}

}  // namespace preavg
