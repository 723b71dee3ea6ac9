#include "tdpauc/cli.hpp"

#include "tdpauc/bandwidth.hpp"
#include "tdpauc/compare.hpp"
#include "tdpauc/data.hpp"
#include "tdpauc/error.hpp"
#include "tdpauc/inference.hpp"
#include "tdpauc/normal.hpp"
#include "tdpauc/parallel.hpp"
#include "tdpauc/pauc.hpp"
#include "tdpauc/simulate.hpp"
#include "tdpauc/survival.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <unistd.h>

namespace tdpauc {

namespace {

using nlohmann::json;

struct Globals {
  std::string input;
  std::string time_col = "time";
  std::string status_col = "status";
  std::string marker_col = "marker";
  std::string group_col;
  std::string out;
  std::string format;
  int threads = 0;
  bool summary = false;
  std::string dump_surface;
};

struct BandwidthSpec {
  std::optional<double> fixed;
  bool automatic = false;
  double grid_min = 0.01;
  double grid_max = 0.20;
  double grid_step = 0.01;
};

void add_bandwidth_flags(CLI::App* cmd, BandwidthSpec& spec) {
  auto* fixed = cmd->add_option("--bandwidth", spec.fixed, "Fixed rank-scale bandwidth in (0, 1]");
  auto* autoflag = cmd->add_flag("--auto-bandwidth", spec.automatic,
                                 "Select the bandwidth by leave-one-out ISE (default when "
                                 "--bandwidth is absent)");
  fixed->excludes(autoflag);
  cmd->add_option("--grid-min", spec.grid_min, "Smallest candidate bandwidth")->capture_default_str();
  cmd->add_option("--grid-max", spec.grid_max, "Largest candidate bandwidth")->capture_default_str();
  cmd->add_option("--grid-step", spec.grid_step, "Candidate bandwidth spacing")->capture_default_str();
}

// Writes to --out atomically (temporary file in the same directory, then
// rename) or to the output stream.
void emit(const Globals& g, std::ostream& out, const std::string& text) {
  if (g.out.empty()) {
    out << text;
    out.flush();
    return;
  }
  const std::filesystem::path target(g.out);
  std::filesystem::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot open --out file '" + g.out + "' for writing");
    f << text;
    f.flush();
    if (!f) {
      std::filesystem::remove(tmp);
      throw InputError("failed writing --out file '" + g.out + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InputError("cannot move output into place at '" + g.out + "': " + ec.message());
  }
}

std::string format_of(const Globals& g, const char* fallback) {
  const std::string f = g.format.empty() ? fallback : g.format;
  if (f != "csv" && f != "json") throw ParameterError("--format must be csv or json, got '" + f + "'");
  return f;
}

ColumnMap columns_of(const Globals& g, bool with_group) {
  ColumnMap map;
  map.time = g.time_col;
  map.status = g.status_col;
  map.marker = g.marker_col;
  if (with_group && !g.group_col.empty()) map.group = g.group_col;
  return map;
}

void report(const Cohort& cohort, const Globals& g, std::ostream& out, std::ostream& err,
            const std::string& label = "") {
  if (cohort.marker_tie_count() > 0) {
    err << "warning: " << (label.empty() ? "" : label + ": ") << cohort.marker_tie_count()
        << " tied marker value(s); ties contribute through strict inequalities only\n";
  }
  if (g.summary) out << summary_json(summarize(cohort)) << '\n';
}

Cohort load_input(const Globals& g, std::ostream& out, std::ostream& err) {
  if (g.input.empty()) throw InputError("--input is required");
  Cohort cohort = load_cohort(g.input, columns_of(g, false));
  report(cohort, g, out, err);
  return cohort;
}

double resolve_bandwidth(const BandwidthSpec& spec, const Cohort& cohort, std::ostream& err) {
  if (spec.fixed) {
    if (!(*spec.fixed > 0.0 && *spec.fixed <= 1.0)) {
      std::ostringstream msg;
      msg << "--bandwidth " << *spec.fixed << " outside (0, 1]";
      throw ParameterError(msg.str());
    }
    return *spec.fixed;
  }
  const auto grid = bandwidth_grid(spec.grid_min, spec.grid_max, spec.grid_step);
  const BandwidthSelection sel = select_bandwidth(cohort, grid);
  err << "selected bandwidth " << sel.chosen << " from " << grid.size() << " candidates\n";
  return sel.chosen;
}

void validate_bandwidth_spec(const BandwidthSpec& spec) {
  if (!spec.fixed) bandwidth_grid(spec.grid_min, spec.grid_max, spec.grid_step);
}

void validate_level(double level, const char* flag) {
  if (!(level > 0.0 && level < 1.0)) {
    std::ostringstream msg;
    msg << flag << ' ' << level << " outside (0, 1)";
    throw ParameterError(msg.str());
  }
}

void validate_alpha(double alpha, const char* flag) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    std::ostringstream msg;
    msg << flag << ' ' << alpha << " outside (0, 1]";
    throw ParameterError(msg.str());
  }
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json quantile_json(const Threshold& q) {
  return q.is_minus_infinity() ? json("-inf") : json(q.value());
}

void dump_surface(const Globals& g, const ConditionalSurvivalSurface& surface, const Cohort& cohort) {
  if (g.dump_surface.empty()) return;
  std::ostringstream s;
  s << std::setprecision(12) << "subject,marker";
  for (double t : surface.grid().points()) s << ',' << t;
  s << '\n';
  for (std::size_t j = 0; j < surface.subjects(); ++j) {
    s << j + 1 << ',' << cohort.markers()[j];
    for (std::size_t k = 0; k < surface.grid().size(); ++k) {
      s << ',' << surface.st()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
    }
    s << '\n';
  }
  Globals file = g;
  file.out = g.dump_surface;
  std::ostringstream unused;
  emit(file, unused, s.str());
}

TimeGrid band_grid(const Cohort& cohort, std::optional<double> tau1, std::optional<double> tau2,
                   double lower_q, double upper_q) {
  if (tau1 || tau2) {
    if (!tau1 || !tau2) throw ParameterError("--tau1 and --tau2 must be given together");
    if (!(*tau1 > 0.0 && *tau1 < *tau2)) throw ParameterError("--tau1 must be positive and below --tau2");
    TimeGrid grid = event_times_between(cohort, *tau1, *tau2);
    if (grid.empty()) {
      std::ostringstream msg;
      msg << "no event times within [--tau1 " << *tau1 << ", --tau2 " << *tau2 << "]; widen the range";
      throw DegenerateError(msg.str());
    }
    return grid;
  }
  return default_grid(cohort, lower_q, upper_q);
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::vector<double> times;
  double alpha = 0.1;
  std::optional<double> alpha_high;
  BandwidthSpec bw;
  bool complete = false;
  double level = 0.95;
};

int run_estimate(const Globals& g, const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  const std::string fmt = format_of(g, "json");
  if (a.times.empty()) throw ParameterError("--time is required");
  if (a.alpha_high) {
    if (!(a.alpha >= 0.0 && a.alpha < *a.alpha_high && *a.alpha_high <= 1.0)) {
      throw ParameterError("--alpha and --alpha-high must satisfy 0 <= alpha < alpha-high <= 1");
    }
    if (a.complete) throw ParameterError("--alpha-high is only available for the censored estimator");
  } else {
    validate_alpha(a.alpha, "--alpha");
  }
  validate_level(a.level, "--level");
  validate_bandwidth_spec(a.bw);
  for (double t : a.times) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("--time values must be positive");
  }
  std::vector<double> pts(a.times);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  const Cohort cohort = load_input(g, out, err);
  const TimeGrid grid(pts);
  check_grid(cohort, grid);

  json results = json::array();
  if (a.complete) {
    const InfluenceMatrix infl = influence_matrix_complete(cohort, a.alpha, grid);
    const CovarianceFunction cov = covariance(infl);
    for (double t : a.times) {
      const std::size_t k = grid.index_of(t);
      const PaucEstimate& est = infl.estimates[k];
      const ConfidenceBand ci = pointwise_ci(est, cov, a.level);
      results.push_back({{"t", t}, {"alpha", a.alpha}, {"theta", est.theta},
                         {"quantile", quantile_json(est.quantile)}, {"se", number_or_null(ci.se[0])},
                         {"bandwidth", nullptr}, {"kind", "complete"}, {"level", a.level},
                         {"lower", ci.lower[0]}, {"upper", ci.upper[0]}});
    }
  } else {
    const double lambda = resolve_bandwidth(a.bw, cohort, err);
    const auto surface = conditional_km(cohort, lambda, grid);
    dump_surface(g, surface, cohort);
    const JointSurvivor joint(surface, cohort);
    if (surface.capped_subjects() > 0) {
      err << "note: " << surface.capped_subjects()
          << " subject(s) reached zero conditional survival; their martingale terms are capped\n";
    }
    if (a.alpha_high) {
      for (double t : a.times) {
        const PaucRangeEstimate est = pauc_range(surface, joint, cohort, grid.index_of(t), a.alpha, *a.alpha_high);
        results.push_back({{"t", t}, {"alpha", a.alpha}, {"alpha_high", *a.alpha_high},
                           {"theta", est.theta}, {"quantile", quantile_json(est.quantile_low)},
                           {"quantile_high", quantile_json(est.quantile_high)}, {"se", nullptr},
                           {"bandwidth", lambda}, {"kind", "censored"}});
      }
    } else {
      const InfluenceMatrix infl = influence_matrix(surface, joint, cohort, a.alpha);
      const CovarianceFunction cov = covariance(infl);
      for (double t : a.times) {
        const PaucEstimate& est = infl.estimates[grid.index_of(t)];
        const ConfidenceBand ci = pointwise_ci(est, cov, a.level);
        results.push_back({{"t", t}, {"alpha", a.alpha}, {"theta", est.theta},
                           {"quantile", quantile_json(est.quantile)}, {"se", number_or_null(ci.se[0])},
                           {"bandwidth", lambda}, {"kind", "censored"}, {"level", a.level},
                           {"lower", ci.lower[0]}, {"upper", ci.upper[0]}});
      }
    }
  }

  std::ostringstream s;
  if (fmt == "json") {
    s << (results.size() == 1 ? results[0] : results).dump(2) << '\n';
  } else {
    s << std::setprecision(12) << "t,alpha,theta,quantile,se,bandwidth\n";
    for (const auto& r : results) {
      s << r["t"].get<double>() << ',' << r["alpha"].get<double>() << ',' << r["theta"].get<double>() << ',';
      if (r["quantile"].is_string()) s << "-inf"; else s << r["quantile"].get<double>();
      s << ',';
      if (!r["se"].is_null()) s << r["se"].get<double>();
      s << ',';
      if (!r["bandwidth"].is_null()) s << r["bandwidth"].get<double>();
      s << '\n';
    }
  }
  emit(g, out, s.str());
  return 0;
}

// -------------------------------------------------------------------- band

struct BandArgs {
  double alpha = 0.1;
  double level = 0.95;
  std::size_t resamples = 1000;
  std::uint64_t seed = 0;
  std::optional<double> tau1;
  std::optional<double> tau2;
  double lower_quantile = 0.1;
  double upper_quantile = 0.9;
  BandwidthSpec bw;
  bool complete = false;
  bool clip = false;
};

void validate_band(const BandArgs& a) {
  validate_alpha(a.alpha, "--alpha");
  validate_level(a.level, "--level");
  if (a.resamples < 100) throw ParameterError("--resamples must be at least 100");
  validate_bandwidth_spec(a.bw);
}

int run_band(const Globals& g, const BandArgs& a, std::ostream& out, std::ostream& err) {
  const std::string fmt = format_of(g, "csv");
  validate_band(a);
  const Cohort cohort = load_input(g, out, err);
  const TimeGrid grid = band_grid(cohort, a.tau1, a.tau2, a.lower_quantile, a.upper_quantile);

  std::optional<double> lambda;
  InfluenceMatrix infl;
  if (a.complete) {
    infl = influence_matrix_complete(cohort, a.alpha, grid);
  } else {
    lambda = resolve_bandwidth(a.bw, cohort, err);
    const auto surface = conditional_km(cohort, *lambda, grid);
    dump_surface(g, surface, cohort);
    const JointSurvivor joint(surface, cohort);
    infl = influence_matrix(surface, joint, cohort, a.alpha);
  }
  std::vector<double> center;
  for (const auto& e : infl.estimates) center.push_back(e.theta);
  const CovarianceFunction cov = covariance(infl);
  ConfidenceBand pw = pointwise_band(center, cov, a.level);
  MultiplierOptions mo;
  mo.resamples = a.resamples;
  mo.seed = a.seed;
  ConfidenceBand sim = simultaneous_band(center, infl, a.level, mo);
  if (a.clip) {
    pw = pw.clipped(0.0, a.alpha);
    sim = sim.clipped(0.0, a.alpha);
  }

  std::ostringstream s;
  s << std::setprecision(12);
  if (fmt == "csv") {
    s << "t,theta,se,lower_pw,upper_pw,lower_sim,upper_sim\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
      s << grid[k] << ',' << center[k] << ',' << pw.se[k] << ',' << pw.lower[k] << ',' << pw.upper[k]
        << ',' << sim.lower[k] << ',' << sim.upper[k] << '\n';
    }
  } else {
    json j = {{"alpha", a.alpha},
              {"level", a.level},
              {"bandwidth", lambda ? json(*lambda) : json(nullptr)},
              {"kind", to_string(infl.kind)},
              {"z", pw.critical_value},
              {"critical_value", sim.critical_value},
              {"resamples", a.resamples},
              {"seed", a.seed},
              {"t", grid.points()},
              {"theta", center},
              {"se", pw.se},
              {"lower_pw", pw.lower},
              {"upper_pw", pw.upper},
              {"lower_sim", sim.lower},
              {"upper_sim", sim.upper}};
    s << j.dump(2) << '\n';
  }
  emit(g, out, s.str());
  err << "critical values: pointwise " << pw.critical_value << ", simultaneous " << sim.critical_value
      << " (" << a.resamples << " resamples)\n";
  return 0;
}

// ----------------------------------------------------------------- compare

struct CompareArgs {
  BandArgs band;
  std::string input2;
  std::vector<int> groups;
  std::optional<double> bandwidth2;
};

int run_compare(const Globals& g, const CompareArgs& a, std::ostream& out, std::ostream& err) {
  const std::string fmt = format_of(g, "csv");
  validate_band(a.band);
  if (a.band.complete) throw ParameterError("compare uses the censored estimator; drop --complete-data");
  if (g.input.empty()) throw InputError("--input is required");

  std::optional<Cohort> first;
  std::optional<Cohort> second;
  std::string label1 = "group 1";
  std::string label2 = "group 2";
  if (!a.input2.empty()) {
    first.emplace(load_cohort(g.input, columns_of(g, false)));
    second.emplace(load_cohort(a.input2, columns_of(g, false)));
  } else {
    if (g.group_col.empty()) throw ParameterError("compare needs --group-col or --input2");
    const Cohort all = load_cohort(g.input, columns_of(g, true));
    auto parts = split_by_group(all);
    std::vector<int> labels = a.groups;
    if (labels.empty()) {
      for (const auto& [k, v] : parts) labels.push_back(k);
    }
    if (labels.size() != 2) {
      std::ostringstream msg;
      msg << "--group-col must define exactly two groups (found " << labels.size()
          << "); pick two with --groups";
      throw InputError(msg.str());
    }
    for (int l : labels) {
      if (!parts.count(l)) throw InputError("group label " + std::to_string(l) + " not present in --group-col");
    }
    first.emplace(parts.at(labels[0]));
    second.emplace(parts.at(labels[1]));
    label1 = "group " + std::to_string(labels[0]);
    label2 = "group " + std::to_string(labels[1]);
  }
  report(*first, g, out, err, label1);
  report(*second, g, out, err, label2);

  // The grid comes from the pooled observations so both groups share it.
  std::vector<SurvivalRecord> pooled(first->records());
  pooled.insert(pooled.end(), second->records().begin(), second->records().end());
  for (auto& r : pooled) r.group.reset();
  const Cohort all(pooled);
  TimeGrid grid = band_grid(all, a.band.tau1, a.band.tau2, a.band.lower_quantile, a.band.upper_quantile);
  const double last = std::min(first->max_time(), second->max_time());
  grid = grid.restricted(0.0, last);
  if (grid.empty()) throw DegenerateError("no grid time lies within both groups' follow-up");

  CompareOptions opt;
  opt.alpha = a.band.alpha;
  opt.level = a.band.level;
  opt.multiplier.resamples = a.band.resamples;
  opt.multiplier.seed = a.band.seed;
  opt.lambda1 = resolve_bandwidth(a.band.bw, *first, err);
  BandwidthSpec bw2 = a.band.bw;
  if (a.bandwidth2) bw2.fixed = a.bandwidth2;
  opt.lambda2 = resolve_bandwidth(bw2, *second, err);
  const ComparisonResult res = compare_paucs(*first, *second, grid, opt);
  ConfidenceBand pw = res.pointwise;
  ConfidenceBand sim = res.simultaneous;
  if (a.band.clip) {
    pw = pw.clipped(-a.band.alpha, a.band.alpha);
    sim = sim.clipped(-a.band.alpha, a.band.alpha);
  }

  std::ostringstream s;
  s << std::setprecision(12);
  if (fmt == "csv") {
    s << "t,gamma,theta1,theta2,se,lower_pw,upper_pw,lower_sim,upper_sim\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
      s << grid[k] << ',' << res.gamma[k] << ',' << res.theta1[k] << ',' << res.theta2[k] << ','
        << pw.se[k] << ',' << pw.lower[k] << ',' << pw.upper[k] << ',' << sim.lower[k] << ','
        << sim.upper[k] << '\n';
    }
  } else {
    json j = {{"alpha", opt.alpha},        {"level", opt.level},
              {"bandwidth1", opt.lambda1}, {"bandwidth2", opt.lambda2},
              {"n1", res.n1},              {"n2", res.n2},
              {"z", pw.critical_value},    {"critical_value", sim.critical_value},
              {"t", grid.points()},        {"gamma", res.gamma},
              {"theta1", res.theta1},      {"theta2", res.theta2},
              {"se", pw.se},               {"lower_pw", pw.lower},
              {"upper_pw", pw.upper},      {"lower_sim", sim.lower},
              {"upper_sim", sim.upper}};
    s << j.dump(2) << '\n';
  }
  emit(g, out, s.str());
  return 0;
}

// --------------------------------------------------------------- bandwidth

int run_bandwidth(const Globals& g, const BandwidthSpec& bw, std::ostream& out, std::ostream& err) {
  const std::string fmt = format_of(g, "json");
  const auto grid = bandwidth_grid(bw.grid_min, bw.grid_max, bw.grid_step);
  const Cohort cohort = load_input(g, out, err);
  const BandwidthSelection sel = select_bandwidth(cohort, grid);
  std::ostringstream s;
  s << std::setprecision(12);
  if (fmt == "json") {
    json scores = json::array();
    for (std::size_t c = 0; c < sel.grid.size(); ++c) {
      scores.push_back({{"lambda", sel.grid[c]}, {"ise", sel.scores[c]}});
    }
    s << json{{"chosen", sel.chosen}, {"scores", scores}}.dump(2) << '\n';
  } else {
    s << "lambda,ise,chosen\n";
    for (std::size_t c = 0; c < sel.grid.size(); ++c) {
      s << sel.grid[c] << ',' << sel.scores[c] << ',' << (sel.grid[c] == sel.chosen ? 1 : 0) << '\n';
    }
  }
  emit(g, out, s.str());
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::size_t n = 500;
  double censor_rate = 0.0;
  std::size_t replicates = 200;
  std::uint64_t seed = 1;
  std::vector<double> alphas{0.1, 0.2, 0.3};
  std::string bandwidth = "auto";
  double level = 0.95;
  std::size_t resamples = 1000;
  double log_sd = 0.3;
  double marker_slope = 0.15;
  bool null_marker = false;
  bool no_bands = false;
  std::string write_cohort;
};

int run_simulate(const Globals& g, const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const std::string fmt = format_of(g, "csv");
  ExperimentConfig cfg;
  cfg.design.n = a.n;
  cfg.design.censor_rate = a.censor_rate;
  cfg.design.seed = a.seed;
  cfg.design.replicates = a.replicates;
  cfg.design.log_sd = a.log_sd;
  cfg.design.marker_slope = a.marker_slope;
  cfg.design.independent_marker = a.null_marker;
  cfg.alphas = a.alphas;
  cfg.level = a.level;
  cfg.resamples = a.resamples;
  if (a.no_bands) cfg.band_intervals.clear();
  if (!(a.censor_rate >= 0.0 && a.censor_rate < 1.0)) throw ParameterError("--censor-rate must lie in [0, 1)");
  if (a.n < 3) throw ParameterError("--n must be at least 3");
  validate_level(a.level, "--level");
  for (double al : a.alphas) validate_alpha(al, "--alphas");
  if (a.bandwidth == "auto") {
    cfg.estimator.mode = BandwidthMode::automatic;
  } else if (a.bandwidth == "complete") {
    cfg.estimator.mode = BandwidthMode::complete;
  } else {
    cfg.estimator.mode = BandwidthMode::fixed;
    try {
      std::size_t used = 0;
      cfg.estimator.lambda = std::stod(a.bandwidth, &used);
      if (used != a.bandwidth.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw ParameterError("--bandwidth must be auto, complete or a number, got '" + a.bandwidth + "'");
    }
    if (!(cfg.estimator.lambda > 0.0 && cfg.estimator.lambda <= 1.0)) {
      throw ParameterError("--bandwidth outside (0, 1]");
    }
  }

  if (a.censor_rate > 0.0) {
    cfg.design.censor_scale = calibrate_censoring_scale(a.censor_rate, a.marker_slope, a.log_sd);
    err << "calibrated censoring scale b = " << cfg.design.censor_scale << " for rate " << a.censor_rate
        << '\n';
  }
  if (!a.write_cohort.empty()) {
    std::ostringstream c;
    write_cohort_csv(generate_cohort(cfg.design, 0), c);
    Globals file = g;
    file.out = a.write_cohort;
    std::ostringstream unused;
    emit(file, unused, c.str());
  }

  const ExperimentResult res = run_table_experiment(cfg);
  err << "replicates: " << (a.replicates - res.failures) << " ok, " << res.failures
      << " failed; realized censoring " << res.realized_censoring << '\n';
  if (!res.bandwidths.empty()) err << "median bandwidth " << median(res.bandwidths) << '\n';
  for (const auto& m : res.failure_messages) err << "  " << m << '\n';

  std::ostringstream s;
  if (fmt == "csv") {
    write_table_csv(res, s);
  } else {
    json rows = json::array();
    for (const auto& r : res.rows) {
      rows.push_back({{"t_quantile", r.t_quantile}, {"t", r.t}, {"alpha", r.alpha}, {"truth", r.truth},
                      {"mean", r.mean}, {"sd", r.sd}, {"se", r.mean_se}, {"cp", r.coverage},
                      {"replicates", r.replicates}});
    }
    json bands = json::array();
    for (const auto& b : res.bands) {
      bands.push_back({{"alpha", b.alpha}, {"p_low", b.p_low}, {"p_high", b.p_high},
                       {"cp", b.coverage}, {"critical_value", b.mean_critical_value},
                       {"replicates", b.replicates}});
    }
    json j = {{"estimator", res.estimator},
              {"censor_scale", res.censor_scale},
              {"realized_censoring", res.realized_censoring},
              {"failures", res.failures},
              {"median_bandwidth", res.bandwidths.empty() ? json(nullptr) : json(median(res.bandwidths))},
              {"rows", rows},
              {"bands", bands}};
    s << j.dump(2) << '\n';
  }
  emit(g, out, s.str());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-dependent partial AUC for censored survival data"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Globals g;
  app.add_option("--input", g.input, "Input CSV file (headered, comma separated)");
  app.add_option("--time-col", g.time_col, "Column holding follow-up times")->capture_default_str();
  app.add_option("--status-col", g.status_col, "Column holding event indicators (1 event, 0 censored)")
      ->capture_default_str();
  app.add_option("--marker-col", g.marker_col, "Column holding the marker")->capture_default_str();
  app.add_option("--group-col", g.group_col, "Column holding integer group labels (compare)");
  app.add_option("--out", g.out, "Output file, written atomically (default: standard output)");
  app.add_option("--format", g.format, "Output format: csv or json (default depends on subcommand)");
  app.add_option("--threads", g.threads, "OpenMP threads (0 keeps the runtime default)")->capture_default_str();
  app.add_flag("--summary", g.summary, "Print the cohort summary as JSON to standard output");
  app.add_option("--dump-surface", g.dump_surface, "Write S_T(t|Y_j) over subjects x grid as CSV");

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "Point estimate, standard error and pointwise interval");
  c_est->add_option("--time", est.times, "Evaluation time(s)")->required();
  c_est->add_option("--alpha", est.alpha, "FPR bound (lower bound with --alpha-high)")->capture_default_str();
  c_est->add_option("--alpha-high", est.alpha_high, "Upper FPR bound for the range version");
  c_est->add_flag("--complete-data", est.complete, "Use the complete-data estimator (no censoring allowed)");
  c_est->add_option("--level", est.level, "Confidence level")->capture_default_str();
  add_bandwidth_flags(c_est, est.bw);

  BandArgs band;
  auto add_band_flags = [](CLI::App* cmd, BandArgs& b) {
    cmd->add_option("--alpha", b.alpha, "FPR bound")->capture_default_str();
    cmd->add_option("--level", b.level, "Confidence level")->capture_default_str();
    cmd->add_option("--resamples", b.resamples, "Multiplier resamples B")->capture_default_str();
    cmd->add_option("--seed", b.seed, "Multiplier seed")->capture_default_str();
    cmd->add_option("--tau1", b.tau1, "Start of the band interval (event times in [tau1, tau2])");
    cmd->add_option("--tau2", b.tau2, "End of the band interval");
    cmd->add_option("--lower-quantile", b.lower_quantile, "Grid start as a quantile of time when tau is absent")
        ->capture_default_str();
    cmd->add_option("--upper-quantile", b.upper_quantile, "Grid end as a quantile of time when tau is absent")
        ->capture_default_str();
    cmd->add_flag("--clip", b.clip, "Clip bands to the parameter range");
    add_bandwidth_flags(cmd, b.bw);
  };
  auto* c_band = app.add_subcommand("band", "Pointwise and simultaneous bands over a time grid");
  add_band_flags(c_band, band);
  c_band->add_flag("--complete-data", band.complete, "Use the complete-data estimator");

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "Difference of two groups' pAUC curves");
  add_band_flags(c_cmp, cmp.band);
  c_cmp->add_option("--input2", cmp.input2, "Second sample (instead of --group-col)");
  c_cmp->add_option("--groups", cmp.groups, "Two group labels to compare (first minus second)")->expected(2);
  c_cmp->add_option("--bandwidth2", cmp.bandwidth2, "Fixed bandwidth for the second group");

  BandwidthSpec bws;
  auto* c_bw = app.add_subcommand("bandwidth", "Leave-one-out ISE bandwidth selection");
  c_bw->add_option("--grid-min", bws.grid_min, "Smallest candidate")->capture_default_str();
  c_bw->add_option("--grid-max", bws.grid_max, "Largest candidate")->capture_default_str();
  c_bw->add_option("--grid-step", bws.grid_step, "Spacing")->capture_default_str();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo table experiment on the lognormal design");
  c_sim->add_option("--n", sim.n, "Sample size")->capture_default_str();
  c_sim->add_option("--censor-rate", sim.censor_rate, "Target censoring rate in [0, 1)")->capture_default_str();
  c_sim->add_option("--replicates", sim.replicates, "Replicates (at least 50)")->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  c_sim->add_option("--alphas", sim.alphas, "FPR bounds")->delimiter(',')->capture_default_str();
  c_sim->add_option("--bandwidth", sim.bandwidth, "auto, complete, or a fixed value")->capture_default_str();
  c_sim->add_option("--level", sim.level, "Confidence level")->capture_default_str();
  c_sim->add_option("--resamples", sim.resamples, "Multiplier resamples per band")->capture_default_str();
  c_sim->add_option("--log-sd", sim.log_sd, "Standard deviation of log T given the marker")->capture_default_str();
  c_sim->add_option("--marker-slope", sim.marker_slope, "Marker coefficient in the mean of log T (negated)")
      ->capture_default_str();
  c_sim->add_flag("--null-marker", sim.null_marker, "Report a marker independent of (T, C)");
  c_sim->add_flag("--no-bands", sim.no_bands, "Skip the simultaneous band coverage");
  c_sim->add_option("--write-cohort", sim.write_cohort, "Also write replicate 0 as CSV to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o;
    std::ostringstream e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : kExitInput;
  }

  try {
    set_threads(g.threads);
    if (c_est->parsed()) return run_estimate(g, est, out, err);
    if (c_band->parsed()) return run_band(g, band, out, err);
    if (c_cmp->parsed()) return run_compare(g, cmp, out, err);
    if (c_bw->parsed()) return run_bandwidth(g, bws, out, err);
    if (c_sim->parsed()) return run_simulate(g, sim, out, err);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DegenerateError& e) {
    err << "degenerate data: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const NumericError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitInput;
}

}  // namespace tdpauc
