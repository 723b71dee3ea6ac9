#pragma once

#include "tdpauc/data.hpp"
#include "tdpauc/parallel.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace tdpauc {

/// Marker Y ~ N(0,1); log T = -slope * Y + ln 10 + log_sd * Z; censoring
/// C ~ exponential with mean 10 b (2 if Y < 0, else 1). censor_rate 0 means
/// no censoring at all.
struct SimDesign {
  std::size_t n = 500;
  double censor_rate = 0.0;
  /// b; 0 asks the harness to calibrate it for censor_rate.
  double censor_scale = 0.0;
  std::uint64_t seed = 1;
  std::size_t replicates = 200;
  double marker_slope = 0.15;
  double log_sd = 0.3;
  /// Report a marker drawn independently of (T, C): the null model.
  bool independent_marker = false;
};

/// P(C < T) under the design for a given b, by quadrature.
double censoring_probability(double censor_scale, double marker_slope, double log_sd);

/// b with censoring_probability(b) = rate, for rate in (0, 1).
double calibrate_censoring_scale(double rate, double marker_slope, double log_sd);

/// Deterministic in (design.seed, replicate). Throws ParameterError for a
/// censored design whose censor_scale is not positive.
Cohort generate_cohort(const SimDesign& design, std::size_t replicate);

/// Population quantities of the design computed by adaptive Gauss-Kronrod
/// quadrature over y in [-8, 8] and bracketing root finding.
class TruthModel {
 public:
  TruthModel(double marker_slope, double log_sd);

  /// S_T(t | y).
  double conditional_survival(double t, double y) const;
  /// S_T(t).
  double survival(double t) const;
  /// S(t, y) = P(T > t, Y > y).
  double joint(double t, double y) const;
  /// t_p with P(T <= t_p) = p.
  double time_quantile(double p) const;
  /// q with FPR_t(q) = alpha; -8 stands in for -infinity when alpha = 1.
  double fpr_quantile(double t, double alpha) const;
  /// theta_t(q_{alpha t}).
  double pauc(double t, double alpha) const;

 private:
  double slope_;
  double log_sd_;
};

/// theta at t_p for the design with the given parameters.
double true_pauc_oracle(double alpha, double p, double marker_slope = 0.15, double log_sd = 0.3);

enum class BandwidthMode { automatic, fixed, complete };

std::string to_string(BandwidthMode mode);

struct EstimatorConfig {
  BandwidthMode mode = BandwidthMode::automatic;
  double lambda = 0.1;              // fixed mode
  std::vector<double> lambda_grid;  // automatic mode; empty means the default grid
};

struct ExperimentConfig {
  SimDesign design;
  std::vector<double> alphas{0.1, 0.2, 0.3};
  std::vector<double> t_quantiles{0.4, 0.5, 0.6};
  /// Simultaneous bands over [t_p1, t_p2]; empty disables them.
  std::vector<std::pair<double, double>> band_intervals{{0.4, 0.5}, {0.4, 0.6}};
  EstimatorConfig estimator;
  double level = 0.95;
  std::size_t resamples = 1000;
  /// Abort when more than this fraction of replicates fail.
  double max_failure_rate = 0.02;
  Exec exec = Exec::parallel;
};

struct TableRow {
  double t_quantile = 0.0;
  double t = 0.0;
  double alpha = 0.0;
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double mean_se = 0.0;
  double coverage = 0.0;
  std::size_t replicates = 0;
};

struct BandRow {
  double alpha = 0.0;
  double p_low = 0.0;
  double p_high = 0.0;
  double coverage = 0.0;
  double mean_critical_value = 0.0;
  std::size_t replicates = 0;
};

struct ExperimentResult {
  std::string estimator;
  double censor_scale = 0.0;
  double realized_censoring = 0.0;
  std::vector<TableRow> rows;
  std::vector<BandRow> bands;
  /// Bandwidth used per successful replicate (empty in complete mode).
  std::vector<double> bandwidths;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
};

/// Monte Carlo harness: per replicate generate, choose the bandwidth,
/// estimate at every (t_p, alpha), build pointwise intervals and the
/// simultaneous bands, then aggregate. Replicates run in parallel; results
/// do not depend on the thread count.
ExperimentResult run_table_experiment(const ExperimentConfig& config);

/// Rows as CSV: estimator,t_quantile,t,alpha,truth,mean,sd,se,cp,replicates
/// followed by band rows.
void write_table_csv(const ExperimentResult& result, std::ostream& out);

/// Median of a nonempty sample.
double median(std::vector<double> values);

}  // namespace tdpauc
