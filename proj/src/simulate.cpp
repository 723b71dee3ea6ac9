#include "tdpauc/simulate.hpp"

#include "tdpauc/bandwidth.hpp"
#include "tdpauc/error.hpp"
#include "tdpauc/inference.hpp"
#include "tdpauc/normal.hpp"
#include "tdpauc/survival.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

namespace tdpauc {

namespace {

constexpr double kLower = -8.0;
constexpr double kUpper = 8.0;
constexpr double kLogMedian = 2.302585092994045684;  // ln 10
constexpr double kQuadTolerance = 1e-10;

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

template <class F>
double integrate(F f, double a, double b) {
  if (!(b > a)) return 0.0;
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, kQuadTolerance, &error);
  if (!(error <= 1e-7) || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << "quadrature over [" << a << ", " << b << "] did not converge (estimated error " << error
        << ")";
    throw NumericError(msg.str());
  }
  return value;
}

template <class F>
double solve(F f, double lo, double hi) {
  std::uintmax_t iterations = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, boost::math::tools::eps_tolerance<double>(45), iterations);
  if (iterations >= 200) throw NumericError("root finding did not converge");
  return 0.5 * (a + b);
}

std::mt19937_64 replicate_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double censor_mean(double b, double y) { return 10.0 * b * (y < 0.0 ? 2.0 : 1.0); }

// Neumaier-compensated running sum.
struct Sum {
  double s = 0.0;
  double c = 0.0;
  void add(double v) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

}  // namespace

double censoring_probability(double censor_scale, double marker_slope, double log_sd) {
  if (!(censor_scale > 0.0)) throw ParameterError("censoring scale must be positive");
  auto given_y = [&](double y) {
    const double mu = -marker_slope * y + kLogMedian;
    const double m = censor_mean(censor_scale, y);
    auto inner = [&](double z) { return phi(z) * std::exp(-std::exp(mu + log_sd * z) / m); };
    return phi(y) * integrate(inner, kLower, kUpper);
  };
  // The censoring mean jumps at y = 0; split there.
  const double kept = integrate(given_y, kLower, 0.0) + integrate(given_y, 0.0, kUpper);
  return 1.0 - kept;
}

double calibrate_censoring_scale(double rate, double marker_slope, double log_sd) {
  if (!(rate > 0.0 && rate < 1.0)) {
    std::ostringstream msg;
    msg << "censoring rate " << rate << " outside (0, 1)";
    throw ParameterError(msg.str());
  }
  auto f = [&](double log_b) { return censoring_probability(std::exp(log_b), marker_slope, log_sd) - rate; };
  double lo = -12.0;
  double hi = 12.0;
  if (f(lo) * f(hi) > 0.0) throw NumericError("could not bracket the censoring scale");
  return std::exp(solve(f, lo, hi));
}

Cohort generate_cohort(const SimDesign& design, std::size_t replicate) {
  if (design.n < 2) throw ParameterError("simulated sample size must be at least 2");
  const bool censored = design.censor_rate > 0.0;
  if (censored && !(design.censor_scale > 0.0)) {
    throw ParameterError("censored design needs a positive censoring scale; calibrate it first");
  }
  auto rng = replicate_engine(design.seed, replicate, 0x7d3a);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> unit_exp(1.0);
  std::vector<SurvivalRecord> records(design.n);
  for (auto& r : records) {
    const double y = normal(rng);
    const double z = normal(rng);
    const double latent = design.independent_marker ? normal(rng) : y;
    const double t = std::exp(-design.marker_slope * latent + kLogMedian + design.log_sd * z);
    double c = std::numeric_limits<double>::infinity();
    const double e = unit_exp(rng);
    if (censored) c = censor_mean(design.censor_scale, latent) * e;
    r.time = std::min(t, c);
    r.status = t <= c ? 1 : 0;
    r.marker = y;
  }
  return Cohort(std::move(records));
}

TruthModel::TruthModel(double marker_slope, double log_sd) : slope_(marker_slope), log_sd_(log_sd) {
  if (!(log_sd > 0.0)) throw ParameterError("log-scale standard deviation must be positive");
}

double TruthModel::conditional_survival(double t, double y) const {
  const double mu = -slope_ * y + kLogMedian;
  return 1.0 - normal_cdf((std::log(t) - mu) / log_sd_);
}

double TruthModel::joint(double t, double y) const {
  const double lo = std::max(y, kLower);
  return integrate([&](double u) { return conditional_survival(t, u) * phi(u); }, lo, kUpper);
}

double TruthModel::survival(double t) const { return joint(t, kLower); }

double TruthModel::time_quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("time quantile level must lie in (0, 1)");
  const double spread = std::hypot(slope_, log_sd_);
  auto f = [&](double log_t) { return 1.0 - survival(std::exp(log_t)) - p; };
  return std::exp(solve(f, kLogMedian - 12.0 * spread, kLogMedian + 12.0 * spread));
}

double TruthModel::fpr_quantile(double t, double alpha) const {
  check_alpha(alpha);
  if (alpha >= 1.0) return kLower;
  const double target = alpha * survival(t);
  return solve([&](double y) { return joint(t, y) - target; }, kLower, kUpper);
}

double TruthModel::pauc(double t, double alpha) const {
  const double st = survival(t);
  const double q = fpr_quantile(t, alpha);
  // P(Y_i > Y_j > q, T_i <= t, T_j > t) for independent subjects i, j.
  auto cases_above = [&](double u) {
    return integrate([&](double v) { return (1.0 - conditional_survival(t, v)) * phi(v); }, u, kUpper);
  };
  const double num =
      integrate([&](double u) { return cases_above(u) * conditional_survival(t, u) * phi(u); }, q, kUpper);
  return num / (st * (1.0 - st));
}

double true_pauc_oracle(double alpha, double p, double marker_slope, double log_sd) {
  const TruthModel model(marker_slope, log_sd);
  return model.pauc(model.time_quantile(p), alpha);
}

std::string to_string(BandwidthMode mode) {
  switch (mode) {
    case BandwidthMode::automatic: return "lambda_opt";
    case BandwidthMode::fixed: return "lambda_fixed";
    case BandwidthMode::complete: return "complete";
  }
  return "unknown";
}

double median(std::vector<double> values) {
  if (values.empty()) throw ParameterError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

namespace {

// Truth curve over [lo, hi] on an even grid, interpolated linearly.
class TruthCurve {
 public:
  TruthCurve(const TruthModel& model, double alpha, double lo, double hi, std::size_t points)
      : lo_(lo), hi_(hi) {
    for (std::size_t k = 0; k < points; ++k) {
      const double t = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
      values_.push_back(model.pauc(t, alpha));
    }
  }
  double operator()(double t) const {
    const double h = (t - lo_) / (hi_ - lo_) * static_cast<double>(values_.size() - 1);
    const auto k = std::min(static_cast<std::size_t>(std::max(h, 0.0)), values_.size() - 2);
    const double w = std::clamp(h - static_cast<double>(k), 0.0, 1.0);
    return (1.0 - w) * values_[k] + w * values_[k + 1];
  }

 private:
  double lo_;
  double hi_;
  std::vector<double> values_;
};

struct ReplicateOutcome {
  bool ok = false;
  std::string error;
  double lambda = 0.0;
  double censoring = 0.0;
  std::vector<double> theta;  // [alpha][t_quantile]
  std::vector<double> se;
  std::vector<char> covered;
  std::vector<char> band_covered;  // [alpha][interval]
  std::vector<double> band_crit;
};

}  // namespace

ExperimentResult run_table_experiment(const ExperimentConfig& config) {
  if (config.design.replicates < 50) throw ParameterError("experiments need at least 50 replicates");
  if (config.t_quantiles.empty() || config.alphas.empty()) {
    throw ParameterError("experiment needs at least one time point and one alpha");
  }
  for (double a : config.alphas) check_alpha(a);
  const BandwidthMode mode = config.estimator.mode;
  if (mode == BandwidthMode::complete && config.design.censor_rate > 0.0) {
    throw ParameterError("the complete-data estimator needs an uncensored design");
  }

  SimDesign design = config.design;
  if (design.censor_rate > 0.0 && !(design.censor_scale > 0.0)) {
    design.censor_scale =
        calibrate_censoring_scale(design.censor_rate, design.marker_slope, design.log_sd);
  }
  const double truth_slope = design.independent_marker ? 0.0 : design.marker_slope;
  const TruthModel model(truth_slope, design.log_sd);

  const std::size_t na = config.alphas.size();
  const std::size_t np = config.t_quantiles.size();
  const std::size_t nb = config.band_intervals.size();
  std::vector<double> t_points(np);
  for (std::size_t p = 0; p < np; ++p) t_points[p] = model.time_quantile(config.t_quantiles[p]);
  std::vector<double> truth(na * np);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t p = 0; p < np; ++p) truth[a * np + p] = model.pauc(t_points[p], config.alphas[a]);
  }
  std::vector<std::pair<double, double>> band_times;
  std::vector<TruthCurve> curves;  // [alpha][interval]
  for (const auto& [pl, ph] : config.band_intervals) {
    if (!(pl < ph)) throw ParameterError("band interval quantiles must be increasing");
    band_times.emplace_back(model.time_quantile(pl), model.time_quantile(ph));
  }
  for (std::size_t a = 0; a < na; ++a) {
    for (const auto& [lo, hi] : band_times) curves.emplace_back(model, config.alphas[a], lo, hi, 41);
  }

  const std::vector<double> lambda_grid =
      config.estimator.lambda_grid.empty() ? default_bandwidth_grid() : config.estimator.lambda_grid;
  const double z = two_sided_z(config.level);

  std::vector<ReplicateOutcome> outcomes(design.replicates);
  const auto sr = static_cast<std::ptrdiff_t>(design.replicates);
#pragma omp parallel for schedule(dynamic) if (config.exec == Exec::parallel)
  for (std::ptrdiff_t rs = 0; rs < sr; ++rs) {
    const auto r = static_cast<std::size_t>(rs);
    ReplicateOutcome& out = outcomes[r];
    try {
      const Cohort cohort = generate_cohort(design, r);
      out.censoring = cohort.censoring_rate();

      std::vector<double> pts(t_points);
      for (const auto& [lo, hi] : band_times) {
        const TimeGrid ev = event_times_between(cohort, lo, hi);
        pts.insert(pts.end(), ev.points().begin(), ev.points().end());
        pts.push_back(lo);
        pts.push_back(hi);
      }
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      const TimeGrid grid(pts);
      check_grid(cohort, grid);

      std::optional<ConditionalSurvivalSurface> surface;
      std::optional<JointSurvivor> joint;
      if (mode != BandwidthMode::complete) {
        out.lambda = mode == BandwidthMode::fixed
                         ? config.estimator.lambda
                         : select_bandwidth(cohort, lambda_grid, Exec::serial).chosen;
        surface.emplace(conditional_km(cohort, out.lambda, grid, {.zero_xi = false, .exec = Exec::serial}));
        joint.emplace(*surface, cohort);
      }

      for (std::size_t a = 0; a < na; ++a) {
        const double alpha = config.alphas[a];
        const InfluenceMatrix infl =
            mode == BandwidthMode::complete
                ? influence_matrix_complete(cohort, alpha, grid, Exec::serial)
                : influence_matrix(*surface, *joint, cohort, alpha, Exec::serial);
        const CovarianceFunction cov = covariance(infl);
        for (std::size_t p = 0; p < np; ++p) {
          const std::size_t k = grid.index_of(t_points[p]);
          const double theta = infl.estimates[k].theta;
          const double se = cov.standard_error(k);
          const double tr = truth[a * np + p];
          out.theta.push_back(theta);
          out.se.push_back(se);
          out.covered.push_back(std::abs(theta - tr) <= z * se ? 1 : 0);
        }
        for (std::size_t b = 0; b < nb; ++b) {
          const auto [lo, hi] = band_times[b];
          std::vector<Eigen::Index> cols;
          for (std::size_t k = 0; k < grid.size(); ++k) {
            if (grid[k] >= lo && grid[k] <= hi) cols.push_back(static_cast<Eigen::Index>(k));
          }
          Eigen::MatrixXd rows(infl.values.rows(), static_cast<Eigen::Index>(cols.size()));
          std::vector<double> center;
          std::vector<double> times;
          std::vector<double> target;
          for (std::size_t c = 0; c < cols.size(); ++c) {
            rows.col(static_cast<Eigen::Index>(c)) = infl.values.col(cols[c]);
            const double t = grid[static_cast<std::size_t>(cols[c])];
            center.push_back(infl.estimates[static_cast<std::size_t>(cols[c])].theta);
            times.push_back(t);
            target.push_back(curves[a * nb + b](t));
          }
          const CovarianceFunction sub = gram_covariance(rows, TimeGrid(times), cohort.size());
          MultiplierOptions mo;
          mo.resamples = config.resamples;
          mo.seed = mix(design.seed ^ mix(r * 1315423911ULL + a * 131 + b));
          mo.exec = Exec::serial;
          const ConfidenceBand band = simultaneous_band(center, rows, sub, config.level, mo);
          out.band_covered.push_back(band.covers(target) ? 1 : 0);
          out.band_crit.push_back(band.critical_value);
        }
      }
      out.ok = true;
    } catch (const Error& e) {
      out.ok = false;
      out.error = "replicate " + std::to_string(r) + ": " + e.what();
    }
  }

  ExperimentResult result;
  result.estimator = to_string(mode);
  result.censor_scale = design.censor_scale;
  std::size_t good = 0;
  Sum censor_sum;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++result.failures;
      result.failure_messages.push_back(o.error);
      continue;
    }
    ++good;
    censor_sum.add(o.censoring);
    if (mode != BandwidthMode::complete) result.bandwidths.push_back(o.lambda);
  }
  const double allowed = config.max_failure_rate * static_cast<double>(design.replicates);
  if (static_cast<double>(result.failures) > allowed || good < 2) {
    std::ostringstream msg;
    msg << "aborting: " << result.failures << " of " << design.replicates << " replicates failed";
    if (!result.failure_messages.empty()) msg << " (first: " << result.failure_messages.front() << ")";
    throw NumericError(msg.str());
  }
  result.realized_censoring = censor_sum.value() / static_cast<double>(good);
  const double g = static_cast<double>(good);

  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t p = 0; p < np; ++p) {
      const std::size_t idx = a * np + p;
      Sum s, se, cov;
      for (const auto& o : outcomes) {
        if (!o.ok) continue;
        s.add(o.theta[idx]);
        se.add(o.se[idx]);
        cov.add(o.covered[idx]);
      }
      const double mean = s.value() / g;
      Sum dev;
      for (const auto& o : outcomes) {
        if (o.ok) dev.add((o.theta[idx] - mean) * (o.theta[idx] - mean));
      }
      TableRow row;
      row.t_quantile = config.t_quantiles[p];
      row.t = t_points[p];
      row.alpha = config.alphas[a];
      row.truth = truth[idx];
      row.mean = mean;
      row.sd = std::sqrt(dev.value() / (g - 1.0));
      row.mean_se = se.value() / g;
      row.coverage = cov.value() / g;
      row.replicates = good;
      result.rows.push_back(row);
    }
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t idx = a * nb + b;
      Sum cov, crit;
      for (const auto& o : outcomes) {
        if (!o.ok) continue;
        cov.add(o.band_covered[idx]);
        crit.add(o.band_crit[idx]);
      }
      BandRow row;
      row.alpha = config.alphas[a];
      row.p_low = config.band_intervals[b].first;
      row.p_high = config.band_intervals[b].second;
      row.coverage = cov.value() / g;
      row.mean_critical_value = crit.value() / g;
      row.replicates = good;
      result.bands.push_back(row);
    }
  }
  return result;
}

void write_table_csv(const ExperimentResult& result, std::ostream& out) {
  const auto old = out.precision(6);
  out << "kind,estimator,t_quantile,t,alpha,truth,mean,sd,se,cp,replicates\n";
  for (const auto& r : result.rows) {
    out << "pointwise," << result.estimator << ',' << r.t_quantile << ',' << r.t << ',' << r.alpha
        << ',' << r.truth << ',' << r.mean << ',' << r.sd << ',' << r.mean_se << ','
        << r.coverage << ',' << r.replicates << '\n';
  }
  for (const auto& b : result.bands) {
    out << "band," << result.estimator << ',' << b.p_low << '-' << b.p_high << ",," << b.alpha
        << ",,,,," << b.coverage << ',' << b.replicates << '\n';
  }
  out.precision(old);
}

}  // namespace tdpauc
