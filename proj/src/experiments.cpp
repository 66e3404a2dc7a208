#include "preavg/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "preavg/numeric.hpp"

namespace preavg {

namespace {

model_spec normalize_model(const model_spec& model) {
  // gbm studies run at x0 = 1 for conditioning; estimates scale as x0^2 and
  // the studentized statistic is scale-invariant.
  if (model.kind == model_kind::gbm && model.x0 != 1.0)
    return model_spec::make_gbm(model.a, model.sigma, 1.0, model.omega / model.x0);
  return model;
}

double state_a(const model_spec& model, double x, double noise_term) {
  const double b1 = model_b1(model)(x);
  return b1 * b1 + noise_term;
}

std::uint64_t ensemble_seed(std::uint64_t master) {
  return splitmix64(master ^ 0xC0FFEE5EEDull);
}

}  // namespace

study_context make_study_context(const study_config& config, study_grid g) {
  study_context ctx;
  ctx.model = normalize_model(config.model);
  ctx.grid = validate_grid(g.n, g.k_n, config.strict);
  ctx.scheme = weight_scheme::make(make_tent_weight(), ctx.grid, config.quad_points);
  ctx.consts = expansion_constants{ctx.grid.theta, ctx.model.omega, ctx.scheme.psi};

  if (config.source == expansion_src::closed_form &&
      ctx.model.kind != model_kind::constant_vol)
    throw study_invalid_error("closed_form expansion requires a constant_vol model");

  try {
    ctx.coeffs = expansion_coefficients_for(
        ctx.model, ctx.grid, ctx.consts,
        mc_options{config.expansion_paths, ensemble_seed(config.master_seed),
                   config.workers});
  } catch (const tainted_replication_error& e) {
    throw study_invalid_error(std::string("expansion ensemble tainted: ") + e.what());
  }

  const corrected_law law(ctx.coeffs, ctx.grid.delta);
  for (double alpha : config.alphas) {
    ctx.q_norm_lo.push_back(normal_quantile(alpha / 2.0));
    ctx.q_norm_hi.push_back(normal_quantile(1.0 - alpha / 2.0));
    ctx.q_corr_lo.push_back(law.quantile(alpha / 2.0));
    ctx.q_corr_hi.push_back(law.quantile(1.0 - alpha / 2.0));
  }
  return ctx;
}

replication_record run_replication(const study_config& config,
                                   const study_context& ctx, long rep_id) {
  replication_record rec;
  rec.rep_id = rep_id;
  const std::size_t na = config.alphas.size();
  rec.covered_normal.assign(na, 0);
  rec.covered_corrected.assign(na, 0);
  rec.covered_oracle.assign(na, 0);

  const path_seed seed{config.master_seed, std::uint32_t(rep_id)};
  try {
    const latent_path path =
        simulate_path(ctx.model, ctx.grid, seed, config.oversample);
    const observation_series obs = add_noise(path, ctx.model.omega, seed);

    report_options opts;
    opts.true_v = path.true_v;
    opts.p_n = config.p_n;
    const estimate_report report = build_report(obs, ctx.scheme, ctx.grid, opts);

    rec.v_n = report.v_n;
    rec.f_n = report.f_n;
    rec.z_star = *report.z_star;
    rec.t_stat = *report.t_stat;
    rec.true_v = path.true_v;

    const double kappa = ctx.consts.noise_term();
    double c_sum = 0.0;
    for (long i = 0; i < ctx.grid.n; ++i) {
      const double a = state_a(ctx.model, path.x[std::size_t(i)], kappa);
      c_sum += a * a;
    }
    rec.c_path = 2.0 * ctx.grid.theta * c_sum * ctx.grid.delta;

    const double t_oracle = rec.z_star / std::sqrt(rec.c_path);
    for (std::size_t a = 0; a < na; ++a) {
      rec.covered_normal[a] =
          rec.t_stat >= ctx.q_norm_lo[a] && rec.t_stat <= ctx.q_norm_hi[a];
      rec.covered_corrected[a] =
          rec.t_stat >= ctx.q_corr_lo[a] && rec.t_stat <= ctx.q_corr_hi[a];
      rec.covered_oracle[a] =
          t_oracle >= ctx.q_norm_lo[a] && t_oracle <= ctx.q_norm_hi[a];
    }
  } catch (const simulation_diverged_error&) {
    rec.tainted = true;
  } catch (const degenerate_variance_error&) {
    rec.tainted = true;
  }
  return rec;
}

double ks_distance(std::vector<double> samples,
                   const std::function<double(double)>& cdf) {
  if (samples.empty()) throw error("ks_distance: empty sample");
  for (double s : samples)
    if (!std::isfinite(s)) throw error("ks_distance: non-finite sample");
  std::sort(samples.begin(), samples.end());
  const double m = double(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double c = cdf(samples[i]);
    d = std::max(d, std::abs(c - double(i + 1) / m));
    d = std::max(d, std::abs(c - double(i) / m));
  }
  return d;
}

grid_report aggregate_records(const study_config& config, const study_context& ctx,
                              std::vector<replication_record> records) {
  grid_report rep;
  rep.n = ctx.grid.n;
  rep.k_n = ctx.grid.k_n;
  rep.d_n = ctx.grid.d_n;
  rep.theta = ctx.grid.theta;
  rep.coeffs = ctx.coeffs;

  long tainted = 0;
  for (const auto& r : records) tainted += r.tainted ? 1 : 0;
  rep.tainted = tainted;
  rep.replications_used = long(records.size()) - tainted;
  if (tainted * 100 > long(records.size()))
    throw study_invalid_error(std::to_string(tainted) + " of " +
                              std::to_string(records.size()) +
                              " replications tainted (> 1%)");
  if (rep.replications_used == 0) throw study_invalid_error("no usable replications");

  std::vector<double> t, verr2, frel;
  t.reserve(records.size());
  for (const auto& r : records) {
    if (r.tainted) continue;
    t.push_back(r.t_stat);
    const double ve = r.v_n - r.true_v;
    verr2.push_back(ve * ve);
    frel.push_back(std::abs(r.f_n - r.c_path) / r.c_path);
  }
  rep.t_samples = t;

  const double m = double(t.size());
  rep.t_mean = sample_mean(t);
  std::vector<double> c2(t.size()), c3(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = t[i] - rep.t_mean;
    c2[i] = d * d;
    c3[i] = d * d * d;
  }
  const double m2 = pairwise_sum(c2) / m;
  rep.t_var = m > 1 ? pairwise_sum(c2) / (m - 1.0) : 0.0;
  rep.t_skew = m2 > 0 ? (pairwise_sum(c3) / m) / std::pow(m2, 1.5) : 0.0;

  rep.ks_normal = ks_distance(t, [](double y) { return normal_cdf(y); });
  const corrected_law law(ctx.coeffs, ctx.grid.delta);
  rep.ks_edgeworth = ks_distance(t, [&law](double y) { return law.cdf(y); });

  for (std::size_t a = 0; a < config.alphas.size(); ++a) {
    coverage_entry cov;
    cov.alpha = config.alphas[a];
    long cn = 0, cc = 0, co = 0;
    for (const auto& r : records) {
      if (r.tainted) continue;
      cn += r.covered_normal[a];
      cc += r.covered_corrected[a];
      co += r.covered_oracle[a];
    }
    cov.normal = double(cn) / m;
    cov.corrected = double(cc) / m;
    cov.oracle = double(co) / m;
    rep.coverage.push_back(cov);
  }

  rep.v_n_rmse = std::sqrt(pairwise_sum(verr2) / m);
  std::nth_element(frel.begin(), frel.begin() + long(frel.size() / 2), frel.end());
  rep.f_n_median_rel_err = frel[frel.size() / 2];

  rep.records = std::move(records);
  return rep;
}

study_report run_study(const study_config& config) {
  if (config.replications < 1) throw study_invalid_error("replications must be >= 1");
  if (config.grids.empty()) throw study_invalid_error("no grids configured");

  study_report report;
  report.config = config;
  for (const study_grid g : config.grids) {
    const auto t0 = std::chrono::steady_clock::now();
    const study_context ctx = make_study_context(config, g);
    std::vector<replication_record> records(std::size_t(config.replications));
    parallel_for(config.replications, config.workers, [&](long rep_id) {
      records[std::size_t(rep_id)] = run_replication(config, ctx, rep_id);
    });
    grid_report grid_rep = aggregate_records(config, ctx, std::move(records));
    grid_rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.grids.push_back(std::move(grid_rep));
  }
  return report;
}

nlohmann::json coefficients_to_json(const expansion_coefficients& c) {
  nlohmann::json j;
  j["e_h2"] = c.e_h2;
  j["e_h5"] = c.e_h5;
  j["e_h4"] = c.e_h4;
  j["e_h3"] = c.e_h3;
  j["e_h1"] = c.e_h1;
  j["lin"] = c.lin;
  j["cub"] = c.cub;
  j["stderr"] = {{"e_h2", c.mc_stderr[0]},
                 {"e_h5", c.mc_stderr[1]},
                 {"e_h4", c.mc_stderr[2]},
                 {"e_h3", c.mc_stderr[3]},
                 {"e_h1", c.mc_stderr[4]}};
  j["n_paths"] = c.n_paths;
  j["seed"] = c.seed;
  return j;
}

nlohmann::json study_report_to_json(const study_report& report, bool include_timing) {
  const study_config& c = report.config;
  nlohmann::json j;
  nlohmann::json model;
  switch (c.model.kind) {
    case model_kind::gbm:
      model["kind"] = "gbm";
      model["a"] = c.model.a;
      model["sigma"] = c.model.sigma;
      model["x0"] = c.model.x0;
      break;
    case model_kind::constant_vol:
      model["kind"] = "constant_vol";
      model["b"] = c.model.b;
      model["drift"] = c.model.drift;
      break;
    case model_kind::custom_sde:
      model["kind"] = "custom_sde";
      break;
  }
  model["omega"] = c.model.omega;
  j["model"] = model;
  j["replications"] = c.replications;
  j["master_seed"] = c.master_seed;
  j["alphas"] = c.alphas;
  j["expansion"] =
      c.source == expansion_src::monte_carlo ? "monte_carlo" : "closed_form";
  j["expansion_paths"] = c.expansion_paths;
  j["strict"] = c.strict;

  j["grids"] = nlohmann::json::array();
  for (const auto& g : report.grids) {
    nlohmann::json jg;
    jg["n"] = g.n;
    jg["k_n"] = g.k_n;
    jg["d_n"] = g.d_n;
    jg["theta"] = g.theta;
    jg["replications_used"] = g.replications_used;
    jg["tainted"] = g.tainted;
    jg["t_mean"] = g.t_mean;
    jg["t_var"] = g.t_var;
    jg["t_skew"] = g.t_skew;
    jg["ks_normal"] = g.ks_normal;
    jg["ks_edgeworth"] = g.ks_edgeworth;
    jg["coverage"] = nlohmann::json::array();
    for (const auto& cov : g.coverage)
      jg["coverage"].push_back({{"alpha", cov.alpha},
                                {"normal", cov.normal},
                                {"corrected", cov.corrected},
                                {"oracle", cov.oracle}});
    jg["v_n_rmse"] = g.v_n_rmse;
    jg["f_n_median_rel_err"] = g.f_n_median_rel_err;
    jg["coefficients"] = coefficients_to_json(g.coeffs);
    if (include_timing) jg["wall_seconds"] = g.wall_seconds;
    j["grids"].push_back(jg);
  }
  return j;
}

void write_records_csv(std::ostream& os, std::span<const replication_record> records,
                       std::span<const double> alphas) {
  std::size_t a95 = 0;
  for (std::size_t a = 0; a < alphas.size(); ++a)
    if (std::abs(alphas[a] - 0.05) < 1e-12) a95 = a;
  os << "rep_id,v_n,f_n,z_star,t_stat,c_path,covered_95\n";
  for (const auto& r : records) {
    if (r.tainted) continue;
    os << r.rep_id << ',' << format_g17(r.v_n) << ',' << format_g17(r.f_n) << ','
       << format_g17(r.z_star) << ',' << format_g17(r.t_stat) << ','
       << format_g17(r.c_path) << ',' << int(r.covered_corrected[a95]) << '\n';
  }
}

void write_density_csv(std::ostream& os, const grid_report& grid, double delta) {
  const double lo = -5.0, hi = 5.0;
  const int bins = 80;
  const double width = (hi - lo) / bins;
  std::vector<long> counts(bins, 0);
  long inside = 0;
  for (double t : grid.t_samples) {
    if (t < lo || t >= hi) continue;
    ++counts[std::size_t((t - lo) / width)];
    ++inside;
  }
  (void)inside;
  const double m = double(grid.t_samples.size());
  os << "y,empirical,normal,edgeworth\n";
  for (int b = 0; b < bins; ++b) {
    const double y = lo + (b + 0.5) * width;
    const double emp = m > 0 ? double(counts[std::size_t(b)]) / (m * width) : 0.0;
    os << format_g17(y) << ',' << format_g17(emp) << ',' << format_g17(normal_pdf(y))
       << ',' << format_g17(studentized_density(grid.coeffs, delta, y)) << '\n';
  }
}

}  // namespace preavg
