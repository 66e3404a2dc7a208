#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "preavg/estimate.hpp"
#include "preavg/expansion.hpp"
#include "preavg/simulate.hpp"

namespace preavg {

struct study_grid {
  long n = 0;
  long k_n = 0;
};

enum class expansion_src { monte_carlo, closed_form };

struct study_config {
  model_spec model;
  std::vector<study_grid> grids;
  long replications = 1000;
  std::uint64_t master_seed = 0;
  std::vector<double> alphas{0.05};
  expansion_src source = expansion_src::monte_carlo;
  long expansion_paths = 10000;
  std::optional<long> p_n;
  bool strict = true;
  int workers = 0;
  int quad_points = 2048;
  int oversample = 1;
};

// Everything shared by the replications of one grid: the grid itself, the
// weight scheme, and the expansion coefficients (computed once, from a path
// ensemble on a derived seed so it never overlaps the study streams).
struct study_context {
  model_spec model;  // normalized (gbm rescaled to x0 = 1)
  grid_spec grid;
  weight_scheme scheme;
  expansion_constants consts;
  expansion_coefficients coeffs;
  std::vector<double> q_norm_lo, q_norm_hi;
  std::vector<double> q_corr_lo, q_corr_hi;
};

study_context make_study_context(const study_config& config, study_grid g);

struct replication_record {
  long rep_id = 0;
  bool tainted = false;
  double v_n = 0, f_n = 0, z_star = 0, t_stat = 0, c_path = 0, true_v = 0;
  std::vector<std::uint8_t> covered_normal;     // per alpha
  std::vector<std::uint8_t> covered_corrected;  // per alpha
  std::vector<std::uint8_t> covered_oracle;     // per alpha, per-path C in place of F_n
};

// Deterministic given (config.master_seed, rep_id); divergence and
// degenerate-variance failures come back as tainted records.
replication_record run_replication(const study_config& config,
                                   const study_context& ctx, long rep_id);

// Sup distance between the empirical CDF of samples and cdf, evaluated from
// both sides at the sample points.
double ks_distance(std::vector<double> samples,
                   const std::function<double(double)>& cdf);

struct coverage_entry {
  double alpha = 0;
  double normal = 0;
  double corrected = 0;
  double oracle = 0;
};

struct grid_report {
  long n = 0, k_n = 0, d_n = 0;
  double theta = 0;
  long replications_used = 0;
  long tainted = 0;
  double t_mean = 0, t_var = 0, t_skew = 0;
  double ks_normal = 0, ks_edgeworth = 0;
  std::vector<coverage_entry> coverage;
  double v_n_rmse = 0;
  double f_n_median_rel_err = 0;
  double wall_seconds = 0;  // excluded from serialized reports
  expansion_coefficients coeffs;
  std::vector<replication_record> records;
  std::vector<double> t_samples;  // untainted, in replication order
};

struct study_report {
  study_config config;
  std::vector<grid_report> grids;
};

// Throws study_invalid_error when more than 1% of replications taint.
grid_report aggregate_records(const study_config& config, const study_context& ctx,
                              std::vector<replication_record> records);

study_report run_study(const study_config& config);

nlohmann::json coefficients_to_json(const expansion_coefficients& c);
nlohmann::json study_report_to_json(const study_report& report,
                                    bool include_timing = false);

// rep_id,v_n,f_n,z_star,t_stat,c_path,covered_95
void write_records_csv(std::ostream& os, std::span<const replication_record> records,
                       std::span<const double> alphas);

// y grid with empirical histogram density, phi(y) and the corrected density.
void write_density_csv(std::ostream& os, const grid_report& grid, double delta);

}  // namespace preavg
