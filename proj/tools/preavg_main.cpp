// preavg: pre-averaging estimation of integrated volatility under
// microstructure noise, with second-order corrected inference and a Monte
// Carlo study engine. Subcommands: psi, simulate, estimate, expand, study.

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "preavg/estimate.hpp"
#include "preavg/experiments.hpp"
#include "preavg/expansion.hpp"
#include "preavg/numeric.hpp"
#include "preavg/simulate.hpp"
#include "preavg/weights.hpp"

namespace {

using nlohmann::json;

std::unique_ptr<std::ofstream> open_output(const std::string& path) {
  auto os = std::make_unique<std::ofstream>(path);
  if (!*os) throw preavg::error("cannot open output file '" + path + "'");
  return os;
}

std::ostream& sink(std::unique_ptr<std::ofstream>& file, const std::string& path) {
  if (path.empty()) return std::cout;
  file = open_output(path);
  return *file;
}

// Piecewise-linear weight from a CSV table with header x,g (x ascending from
// 0 to 1, g vanishing at both ends).
preavg::weight_function load_weight_table(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw preavg::parse_error("cannot open weight table '" + filename + "'");
  std::string line;
  if (!std::getline(in, line)) throw preavg::parse_error("empty weight table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,g")
    throw preavg::parse_error("line 1: expected header 'x,g', got '" + line + "'");
  auto xs = std::make_shared<std::vector<double>>();
  auto gs = std::make_shared<std::vector<double>>();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double x = 0, g = 0;
    char comma = 0;
    std::istringstream row(line);
    if (!(row >> x >> comma >> g) || comma != ',')
      throw preavg::parse_error("line " + std::to_string(line_no) + ": expected 'x,g' row");
    if (!xs->empty() && x <= xs->back())
      throw preavg::parse_error("line " + std::to_string(line_no) + ": x must be ascending");
    xs->push_back(x);
    gs->push_back(g);
  }
  if (xs->size() < 3) throw preavg::parse_error("weight table needs at least 3 rows");
  if (std::abs(xs->front()) > 1e-12 || std::abs(xs->back() - 1.0) > 1e-12)
    throw preavg::parse_error("weight table must span x = 0 .. 1");
  if (std::abs(gs->front()) > 1e-12 || std::abs(gs->back()) > 1e-12)
    throw preavg::parse_error("weight table must have g(0) = g(1) = 0");

  auto segment = [xs](double x) {
    std::size_t lo = 0, hi = xs->size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if ((*xs)[mid] <= x) lo = mid;
      else hi = mid;
    }
    return lo;
  };
  auto eval = [xs, gs, segment](double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const std::size_t s = segment(x);
    const double t = (x - (*xs)[s]) / ((*xs)[s + 1] - (*xs)[s]);
    return (1.0 - t) * (*gs)[s] + t * (*gs)[s + 1];
  };
  auto deriv = [xs, gs, segment](double x) {
    const std::size_t s = segment(std::clamp(x, 0.0, 1.0 - 1e-12));
    return ((*gs)[s + 1] - (*gs)[s]) / ((*xs)[s + 1] - (*xs)[s]);
  };
  return preavg::make_custom_weight(eval, deriv);
}

struct model_flags {
  std::string model = "gbm";
  double a = 0.05;
  double sigma = 0.3;
  double x0 = 100.0;
  double b = 0.2;
  double drift = 0.0;
  double omega = 0.01;

  void add_to(CLI::App* cmd, bool with_omega = true) {
    cmd->add_option("--model", model, "model kind")
        ->check(CLI::IsMember({"gbm", "constant-vol"}));
    cmd->add_option("--a", a, "gbm drift rate");
    cmd->add_option("--sigma", sigma, "gbm volatility");
    cmd->add_option("--x0", x0, "initial level");
    cmd->add_option("--b", b, "constant volatility level");
    cmd->add_option("--drift", drift, "constant drift");
    if (with_omega) cmd->add_option("--omega", omega, "noise standard deviation");
  }
  preavg::model_spec build() const {
    if (model == "gbm") return preavg::model_spec::make_gbm(a, sigma, x0, omega);
    return preavg::model_spec::make_constant_vol(b, drift, omega, x0);
  }
};

json report_to_json(const preavg::estimate_report& r) {
  json j;
  j["n"] = r.n;
  j["k_n"] = r.k_n;
  j["d_n"] = r.d_n;
  j["v_n"] = r.v_n;
  j["f_n"] = r.f_n;
  j["omega2_hat"] = r.omega2_hat;
  j["b2_edge"] = r.b2_edge ? json(*r.b2_edge) : json(nullptr);
  j["v_corrected"] = r.v_corrected;
  j["z_star"] = r.z_star ? json(*r.z_star) : json(nullptr);
  j["t_stat"] = r.t_stat ? json(*r.t_stat) : json(nullptr);
  j["ci"] = {{"alpha", r.alpha},
             {"lo", r.ci_lo},
             {"hi", r.ci_hi},
             {"quantiles", r.quantile_source}};
  j["negative_v"] = r.negative_v;
  return j;
}

void report_to_csv(std::ostream& os, const preavg::estimate_report& r,
                   bool no_ci = false) {
  using preavg::format_g17;
  os << "key,value\n";
  os << "n," << r.n << "\nk_n," << r.k_n << "\nd_n," << r.d_n << '\n';
  os << "v_n," << format_g17(r.v_n) << '\n';
  os << "f_n," << format_g17(r.f_n) << '\n';
  os << "omega2_hat," << format_g17(r.omega2_hat) << '\n';
  os << "b2_edge," << (r.b2_edge ? format_g17(*r.b2_edge) : "") << '\n';
  os << "v_corrected," << format_g17(r.v_corrected) << '\n';
  os << "z_star," << (r.z_star ? format_g17(*r.z_star) : "") << '\n';
  os << "t_stat," << (r.t_stat ? format_g17(*r.t_stat) : "") << '\n';
  os << "alpha," << format_g17(r.alpha) << '\n';
  os << "ci_lo," << (no_ci ? "" : format_g17(r.ci_lo)) << '\n';
  os << "ci_hi," << (no_ci ? "" : format_g17(r.ci_hi)) << '\n';
  os << "quantiles," << r.quantile_source << '\n';
  os << "negative_v," << (r.negative_v ? 1 : 0) << '\n';
}

std::string with_grid_suffix(const std::string& path, long n, bool multiple) {
  if (!multiple) return path;
  const auto dot = path.rfind('.');
  if (dot == std::string::npos) return path + "-n" + std::to_string(n);
  return path.substr(0, dot) + "-n" + std::to_string(n) + path.substr(dot);
}

// ---- subcommand bodies ----------------------------------------------------

struct psi_args {
  std::string weight = "tent";
  std::vector<long> kns;
  bool limits = false;
  bool exact = false;
  int quad_points = 2048;
  std::string format = "csv";
  std::string out;
};

void cmd_psi(const psi_args& a) {
  const bool tent = a.weight == "tent";
  const preavg::weight_function w =
      tent ? preavg::make_tent_weight() : load_weight_table(a.weight);
  if (a.exact && !tent)
    throw preavg::error("--exact is only available for the tent weight");
  if (a.kns.empty() && !a.limits)
    throw preavg::error("nothing to do: pass --kn values and/or --limits");
  for (long kn : a.kns)
    if (kn < 2) throw preavg::invalid_grid_error("k_n must be >= 2");

  std::unique_ptr<std::ofstream> file;
  std::ostream& os = sink(file, a.out);

  json jout;
  if (a.format == "json") jout["discrete"] = json::array();
  else if (!a.kns.empty()) {
    os << "kn,psi1n,psi2n,psi3n,psi4n\n";
  }
  for (long kn : a.kns) {
    if (a.exact) {
      const auto t = preavg::tent_psi_discrete_exact(kn);
      if (a.format == "json")
        jout["discrete"].push_back({{"kn", kn},
                                    {"psi1n", preavg::to_string(t.psi1n)},
                                    {"psi2n", preavg::to_string(t.psi2n)},
                                    {"psi3n", preavg::to_string(t.psi3n)},
                                    {"psi4n", preavg::to_string(t.psi4n)}});
      else
        os << kn << ',' << preavg::to_string(t.psi1n) << ','
           << preavg::to_string(t.psi2n) << ',' << preavg::to_string(t.psi3n) << ','
           << preavg::to_string(t.psi4n) << '\n';
    } else {
      const auto p = preavg::psi_discrete(w, kn);
      if (a.format == "json")
        jout["discrete"].push_back({{"kn", kn},
                                    {"psi1n", p.psi1n},
                                    {"psi2n", p.psi2n},
                                    {"psi3n", p.psi3n},
                                    {"psi4n", p.psi4n}});
      else
        os << kn << ',' << preavg::format_g17(p.psi1n) << ','
           << preavg::format_g17(p.psi2n) << ',' << preavg::format_g17(p.psi3n) << ','
           << preavg::format_g17(p.psi4n) << '\n';
    }
  }
  if (a.limits) {
    const auto p = preavg::psi_limits(w, a.quad_points);
    if (a.format == "json")
      jout["limits"] = {{"psi1", p.psi1}, {"psi2", p.psi2}, {"psi3", p.psi3},
                        {"psi4", p.psi4}, {"psi5", p.psi5}, {"psi6", p.psi6},
                        {"psi7", p.psi7}};
    else {
      if (!a.kns.empty()) os << '\n';
      os << "psi1,psi2,psi3,psi4,psi5,psi6,psi7\n";
      os << preavg::format_g17(p.psi1) << ',' << preavg::format_g17(p.psi2) << ','
         << preavg::format_g17(p.psi3) << ',' << preavg::format_g17(p.psi4) << ','
         << preavg::format_g17(p.psi5) << ',' << preavg::format_g17(p.psi6) << ','
         << preavg::format_g17(p.psi7) << '\n';
    }
  }
  if (a.format == "json") os << jout.dump(2) << '\n';
}

struct simulate_args {
  model_flags model;
  long n = 14400;
  long k_n = 120;
  std::uint64_t seed = 0;
  std::uint32_t rep = 0;
  int oversample = 1;
  bool strict = false;
  std::string out;
  std::string obs_out;
};

void cmd_simulate(const simulate_args& a) {
  const preavg::model_spec model = a.model.build();
  const preavg::grid_spec grid = preavg::validate_grid(a.n, a.k_n, a.strict);
  const preavg::path_seed seed{a.seed, a.rep};
  const preavg::latent_path path =
      preavg::simulate_path(model, grid, seed, a.oversample);
  const preavg::observation_series obs = preavg::add_noise(path, model.omega, seed);

  if (!a.obs_out.empty()) {
    auto os = open_output(a.obs_out);
    *os << "t,y\n";
    for (std::size_t i = 0; i < obs.y.size(); ++i)
      *os << preavg::format_g17(double(i) * grid.delta) << ','
          << preavg::format_g17(obs.y[i]) << '\n';
  }
  if (!a.obs_out.empty() && a.out.empty()) return;
  std::unique_ptr<std::ofstream> file;
  std::ostream& os = sink(file, a.out);
  preavg::dump_path_csv(os, path, &obs);
}

struct estimate_args {
  std::string input;
  long k_n = 120;
  double alpha = 0.05;
  std::optional<long> p_n;
  std::optional<double> true_v;
  std::string quantiles = "normal";
  bool have_model = false;
  model_flags model;
  std::optional<double> omega_override;
  long expansion_paths = 10000;
  std::uint64_t seed = 0;
  int quad_points = 2048;
  int workers = 0;
  bool strict = false;
  std::string format = "json";
  std::string out;
};

void cmd_estimate(const estimate_args& a) {
  const preavg::observation_series obs =
      preavg::load_observation_csv(a.input, a.k_n, a.strict);
  const preavg::grid_spec& grid = obs.grid;
  const preavg::weight_scheme scheme =
      preavg::weight_scheme::make(preavg::make_tent_weight(), grid, a.quad_points);

  preavg::report_options opts;
  opts.alpha = a.alpha;
  opts.p_n = a.p_n;
  opts.true_v = a.true_v;

  std::optional<preavg::corrected_law> law;
  if (a.quantiles == "edgeworth") {
    if (!a.have_model) {
      std::cerr << "notice: Edgeworth quantiles need --model; using normal quantiles\n";
    } else {
      model_flags mf = a.model;
      // data-mode plug-ins: noise level from the series, start level from y_0
      mf.omega = a.omega_override
                     ? *a.omega_override
                     : std::sqrt(preavg::estimate_noise_variance(obs));
      if (mf.model == "gbm" && mf.x0 <= 0) mf.x0 = obs.y.front();
      const preavg::model_spec model = mf.build();
      const preavg::expansion_constants consts{grid.theta, model.omega, scheme.psi};
      const preavg::expansion_coefficients coeffs = preavg::expansion_coefficients_for(
          model, grid, consts,
          preavg::mc_options{a.expansion_paths, a.seed, a.workers});
      law.emplace(coeffs, grid.delta);
      opts.quantile = [&law](double p) { return law->quantile(p); };
      opts.quantile_source = "edgeworth";
    }
  }

  preavg::estimate_report report;
  bool degenerate = false;
  try {
    report = preavg::build_report(obs, scheme, grid, opts);
  } catch (const preavg::degenerate_variance_error& e) {
    // still report the point estimates; only studentization and the CI die
    std::cerr << "notice: " << e.what() << "; confidence interval omitted\n";
    degenerate = true;
    report.n = grid.n;
    report.k_n = grid.k_n;
    report.d_n = grid.d_n;
    report.alpha = a.alpha;
    report.quantile_source = "none";
    report.v_n = preavg::estimate_V(obs, scheme, grid);
    report.f_n = preavg::estimate_F(obs, scheme, grid);
    report.omega2_hat = preavg::estimate_noise_variance(obs);
    report.negative_v = report.v_n < 0.0;
    const long tail = grid.n - grid.d_n * grid.k_n;
    if (tail > 0) {
      const long p_n = opts.p_n.value_or(preavg::default_edge_window(grid));
      report.b2_edge = preavg::estimate_edge_volatility(obs, scheme, grid, p_n);
      report.v_corrected = report.v_n + double(tail) * grid.delta * *report.b2_edge;
    } else {
      report.v_corrected = report.v_n;
    }
  }
  std::unique_ptr<std::ofstream> file;
  std::ostream& os = sink(file, a.out);
  if (a.format == "json") {
    nlohmann::json j = report_to_json(report);
    if (degenerate) j["ci"] = nullptr;
    os << j.dump(2) << '\n';
  } else {
    report_to_csv(os, report, degenerate);
  }
}

struct expand_args {
  model_flags model;
  long n = 14400;
  long k_n = 120;
  long paths = 10000;
  std::uint64_t seed = 0;
  int quad_points = 2048;
  int workers = 0;
  std::string out;
};

void cmd_expand(const expand_args& a) {
  const preavg::model_spec model = a.model.build();
  const preavg::grid_spec grid = preavg::validate_grid(a.n, a.k_n, false);
  const preavg::weight_scheme scheme =
      preavg::weight_scheme::make(preavg::make_tent_weight(), grid, a.quad_points);
  const preavg::expansion_constants consts{grid.theta, model.omega, scheme.psi};
  const preavg::expansion_coefficients coeffs = preavg::expansion_coefficients_for(
      model, grid, consts, preavg::mc_options{a.paths, a.seed, a.workers});

  json j = preavg::coefficients_to_json(coeffs);
  j["n"] = grid.n;
  j["k_n"] = grid.k_n;
  j["theta"] = grid.theta;
  std::unique_ptr<std::ofstream> file;
  std::ostream& os = sink(file, a.out);
  os << j.dump(2) << '\n';
}

struct study_args {
  std::string config_file;
  model_flags model;
  std::optional<double> noise_ratio;
  std::vector<long> ns{3600};
  std::vector<long> kns{60};
  long replications = 1000;
  std::uint64_t seed = 0;
  std::vector<double> alphas{0.05};
  std::string expansion = "monte_carlo";
  long expansion_paths = 10000;
  std::optional<long> p_n;
  int workers = 0;
  int oversample = 1;
  int quad_points = 2048;
  bool relaxed = false;
  std::string out;
  std::string density_out;
  std::string records_out;
};

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Flat key=value manifest. Values already fixed on the command line win over
// the file; '#' starts a comment.
void apply_study_config(const std::string& path, const CLI::App* cmd, study_args& a) {
  std::ifstream in(path);
  if (!in) throw preavg::parse_error("cannot open config '" + path + "'");

  auto parse_long = [](const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const long out = std::stol(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw preavg::parse_error("config key '" + key + "': bad integer '" + v + "'");
    }
  };
  auto parse_double = [](const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double out = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw preavg::parse_error("config key '" + key + "': bad number '" + v + "'");
    }
  };
  auto split = [](const std::string& v) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= v.size()) {
      const auto comma = v.find(',', pos);
      parts.push_back(v.substr(pos, comma == std::string::npos ? comma : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return parts;
  };
  auto overridden = [cmd](const std::string& flag) {
    return cmd->count("--" + flag) > 0;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trimmed(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw preavg::parse_error("config line " + std::to_string(line_no) +
                                ": expected key=value");
    const std::string key = trimmed(line.substr(0, eq));
    const std::string val = trimmed(line.substr(eq + 1));

    static const std::set<std::string> known = {
        "model",  "a",        "sigma",           "x0",      "b",
        "drift",  "omega",    "noise-ratio",     "n",       "kn",
        "alphas", "replications", "seed",        "expansion",
        "expansion-paths", "pn", "workers",      "oversample",
        "quad-points", "relaxed", "out",         "density-out",
        "records-out"};
    if (!known.count(key))
      throw preavg::parse_error("config key '" + key + "' is not recognized (line " +
                                std::to_string(line_no) + ")");
    if (overridden(key)) continue;
    if (key == "model") {
      if (val != "gbm" && val != "constant-vol")
        throw preavg::parse_error("config key 'model': unknown model '" + val + "'");
      a.model.model = val;
    } else if (key == "a") a.model.a = parse_double(key, val);
    else if (key == "sigma") a.model.sigma = parse_double(key, val);
    else if (key == "x0") a.model.x0 = parse_double(key, val);
    else if (key == "b") a.model.b = parse_double(key, val);
    else if (key == "drift") a.model.drift = parse_double(key, val);
    else if (key == "omega") a.model.omega = parse_double(key, val);
    else if (key == "noise-ratio") a.noise_ratio = parse_double(key, val);
    else if (key == "n") {
      a.ns.clear();
      for (const auto& p : split(val)) a.ns.push_back(parse_long(key, trimmed(p)));
    } else if (key == "kn") {
      a.kns.clear();
      for (const auto& p : split(val)) a.kns.push_back(parse_long(key, trimmed(p)));
    } else if (key == "alphas") {
      a.alphas.clear();
      for (const auto& p : split(val)) a.alphas.push_back(parse_double(key, trimmed(p)));
    } else if (key == "replications") a.replications = parse_long(key, val);
    else if (key == "seed") a.seed = std::uint64_t(parse_long(key, val));
    else if (key == "expansion") {
      if (val != "monte_carlo" && val != "closed_form")
        throw preavg::parse_error("config key 'expansion': unknown source '" + val + "'");
      a.expansion = val;
    } else if (key == "expansion-paths") a.expansion_paths = parse_long(key, val);
    else if (key == "pn") a.p_n = parse_long(key, val);
    else if (key == "workers") a.workers = int(parse_long(key, val));
    else if (key == "oversample") a.oversample = int(parse_long(key, val));
    else if (key == "quad-points") a.quad_points = int(parse_long(key, val));
    else if (key == "relaxed") a.relaxed = val == "1" || val == "true";
    else if (key == "out") a.out = val;
    else if (key == "density-out") a.density_out = val;
    else if (key == "records-out") a.records_out = val;
    else
      throw preavg::parse_error("config key '" + key + "' is not recognized (line " +
                                std::to_string(line_no) + ")");
  }
}

void cmd_study(const study_args& a) {
  if (a.ns.size() != a.kns.size())
    throw preavg::error("--n and --kn need the same number of entries");

  model_flags mf = a.model;
  if (a.noise_ratio) {
    if (mf.model != "gbm")
      throw preavg::error("--noise-ratio is defined for gbm models");
    // omega such that omega^2 psi1/(theta^2 psi2) = ratio * sigma^2 E int X^2
    // at the normalized scale x0 = 1, theta of the first grid.
    const auto psi = preavg::tent_psi_limits();
    const double theta = double(a.kns.front()) / std::sqrt(double(a.ns.front()));
    const double h = 2.0 * mf.a + mf.sigma * mf.sigma;
    const double ex2 = std::abs(h) > 1e-12 ? (std::exp(h) - 1.0) / h : 1.0;
    const double kappa = *a.noise_ratio * mf.sigma * mf.sigma * ex2;
    mf.omega = mf.x0 * std::sqrt(kappa * theta * theta * psi.psi2 / psi.psi1);
  }

  preavg::study_config config;
  config.model = mf.build();
  for (std::size_t i = 0; i < a.ns.size(); ++i)
    config.grids.push_back({a.ns[i], a.kns[i]});
  config.replications = a.replications;
  config.master_seed = a.seed;
  config.alphas = a.alphas;
  config.source = a.expansion == "closed_form" ? preavg::expansion_src::closed_form
                                               : preavg::expansion_src::monte_carlo;
  config.expansion_paths = a.expansion_paths;
  config.p_n = a.p_n;
  config.strict = !a.relaxed;
  config.workers = a.workers;
  config.oversample = a.oversample;
  config.quad_points = a.quad_points;

  const preavg::study_report report = preavg::run_study(config);

  std::unique_ptr<std::ofstream> file;
  std::ostream& os = sink(file, a.out);
  os << preavg::study_report_to_json(report).dump(2) << '\n';

  const bool multiple = report.grids.size() > 1;
  for (const auto& g : report.grids) {
    std::cerr << "grid n=" << g.n << ": " << g.replications_used
              << " replications in " << g.wall_seconds << " s\n";
    const double delta = 1.0 / double(g.n);
    if (!a.density_out.empty()) {
      auto d = open_output(with_grid_suffix(a.density_out, g.n, multiple));
      preavg::write_density_csv(*d, g, delta);
    }
    if (!a.records_out.empty()) {
      auto r = open_output(with_grid_suffix(a.records_out, g.n, multiple));
      preavg::write_records_csv(*r, g.records, config.alphas);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pre-averaging estimation of integrated volatility under noise,\n"
               "with second-order corrected confidence intervals"};
  app.require_subcommand(1);

  psi_args pa;
  auto* psi = app.add_subcommand("psi", "weight-function constants");
  psi->add_option("--weight", pa.weight, "tent, or a CSV table with header x,g");
  psi->add_option("--kn", pa.kns, "window sizes k_n")->delimiter(',');
  psi->add_flag("--limits", pa.limits, "print the limit constants psi_1..psi_7");
  psi->add_flag("--exact", pa.exact, "exact rationals (tent only)");
  psi->add_option("--quad-points", pa.quad_points, "quadrature cells");
  psi->add_option("--format", pa.format)->check(CLI::IsMember({"csv", "json"}));
  psi->add_option("--out", pa.out, "output file (default stdout)");
  psi->callback([&pa] { cmd_psi(pa); });

  simulate_args sa;
  auto* sim = app.add_subcommand("simulate", "simulate a noisy diffusion path");
  sa.model.add_to(sim);
  sim->add_option("--n", sa.n, "observation steps");
  sim->add_option("--kn", sa.k_n, "window size");
  sim->add_option("--seed", sa.seed, "master seed");
  sim->add_option("--rep", sa.rep, "replication id");
  sim->add_option("--oversample", sa.oversample, "internal steps per observation");
  sim->add_flag("--strict", sa.strict, "require k_n | n");
  sim->add_option("--out", sa.out, "path dump t,x,w,y (default stdout)");
  sim->add_option("--obs-out", sa.obs_out, "observations-only dump t,y");
  sim->callback([&sa] { cmd_simulate(sa); });

  estimate_args ea;
  auto* est = app.add_subcommand("estimate", "estimate from a t,y CSV");
  est->add_option("--input", ea.input, "observations CSV")->required();
  est->add_option("--kn", ea.k_n, "window size")->required();
  est->add_option("--alpha", ea.alpha, "CI level");
  est->add_option("--pn", ea.p_n, "tail window for the edge estimator");
  est->add_option("--true-v", ea.true_v, "known integrated volatility (simulation mode)");
  est->add_option("--quantiles", ea.quantiles)
      ->check(CLI::IsMember({"normal", "edgeworth"}));
  auto* est_model = est->add_option("--model", ea.model.model, "model for Edgeworth CI")
                        ->check(CLI::IsMember({"gbm", "constant-vol"}));
  est->add_option("--a", ea.model.a);
  est->add_option("--sigma", ea.model.sigma);
  est->add_option("--x0", ea.model.x0)->default_val(0.0);
  est->add_option("--b", ea.model.b);
  est->add_option("--drift", ea.model.drift);
  est->add_option("--omega", ea.omega_override, "noise sd (default: estimated)");
  est->add_option("--expansion-paths", ea.expansion_paths);
  est->add_option("--seed", ea.seed);
  est->add_option("--quad-points", ea.quad_points);
  est->add_option("--workers", ea.workers);
  est->add_flag("--strict", ea.strict, "require k_n | n");
  est->add_option("--format", ea.format)->check(CLI::IsMember({"csv", "json"}));
  est->add_option("--out", ea.out);
  est->callback([&ea, est_model] {
    ea.have_model = est_model->count() > 0;
    cmd_estimate(ea);
  });

  expand_args xa;
  auto* exp = app.add_subcommand("expand", "Edgeworth expansion coefficients");
  xa.model.add_to(exp);
  exp->add_option("--n", xa.n, "observation steps");
  exp->add_option("--kn", xa.k_n, "window size");
  exp->add_option("--paths", xa.paths, "Monte Carlo ensemble size");
  exp->add_option("--seed", xa.seed);
  exp->add_option("--quad-points", xa.quad_points);
  exp->add_option("--workers", xa.workers);
  exp->add_option("--out", xa.out);
  exp->callback([&xa] { cmd_expand(xa); });

  study_args ya;
  auto* study = app.add_subcommand("study", "Monte Carlo study of the studentized statistic");
  study->add_option("--config", ya.config_file, "flat key=value study manifest");
  ya.model.add_to(study);
  study->add_option("--noise-ratio", ya.noise_ratio,
                    "set omega from a noise-to-signal ratio (gbm)");
  study->add_option("--n", ya.ns, "observation steps per grid")->delimiter(',');
  study->add_option("--kn", ya.kns, "window size per grid")->delimiter(',');
  study->add_option("--replications", ya.replications);
  study->add_option("--seed", ya.seed, "master seed");
  study->add_option("--alphas", ya.alphas)->delimiter(',');
  study->add_option("--expansion", ya.expansion)
      ->check(CLI::IsMember({"monte_carlo", "closed_form"}));
  study->add_option("--expansion-paths", ya.expansion_paths);
  study->add_option("--pn", ya.p_n);
  study->add_option("--workers", ya.workers);
  study->add_option("--oversample", ya.oversample);
  study->add_option("--quad-points", ya.quad_points);
  study->add_flag("--relaxed", ya.relaxed, "allow k_n not dividing n");
  study->add_option("--out", ya.out, "report JSON (default stdout)");
  study->add_option("--density-out", ya.density_out, "density comparison CSV");
  study->add_option("--records-out", ya.records_out, "per-replication CSV");
  study->callback([&ya, study] {
    if (!ya.config_file.empty()) apply_study_config(ya.config_file, study, ya);
    cmd_study(ya);
  });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const preavg::study_invalid_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const preavg::numeric_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const preavg::degenerate_variance_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const preavg::simulation_diverged_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const preavg::invalid_expansion_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const preavg::tainted_replication_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
