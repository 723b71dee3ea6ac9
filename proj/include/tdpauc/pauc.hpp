#pragma once

#include "tdpauc/data.hpp"
#include "tdpauc/ranks.hpp"
#include "tdpauc/survival.hpp"

#include <cmath>
#include <limits>
#include <span>

namespace tdpauc {

enum class EstimatorKind { censored, complete };

std::string_view to_string(EstimatorKind kind);

/// Time-dependent partial AUC restricted to FPR <= alpha at time t.
struct PaucEstimate {
  double t = 0.0;
  double alpha = 0.0;
  double theta = 0.0;
  Threshold quantile = Threshold::minus_infinity();
  EstimatorKind kind = EstimatorKind::censored;
  /// Standard error sqrt(Sigma(t,t)/n); filled in by the inference layer.
  double se = std::numeric_limits<double>::quiet_NaN();

  /// theta / alpha, in [0, 1].
  double rescaled() const { return theta / alpha; }
};

/// Difference theta(q_{alpha_high}) - theta(q_{alpha_low}).
struct PaucRangeEstimate {
  double t = 0.0;
  double alpha_low = 0.0;
  double alpha_high = 0.0;
  double theta = 0.0;
  Threshold quantile_low = Threshold::minus_infinity();
  Threshold quantile_high = Threshold::minus_infinity();
};

/// How the pair sum over (case, control) subjects is evaluated.
enum class PairSum {
  sorted,  // suffix sums over marker-sorted groups, O(n log n)
  pairs,   // literal O(n^2) double loop, kept as the oracle
};

/// Relative slack in FPR(y) <= alpha so that exact ratios such as 1/3 are
/// not lost to rounding of the two sums.
inline constexpr double kQuantileSlack = 1e-12;

/// inf{ y in {-inf} u {markers} : FPR_t(y) <= alpha }. FPR_t is a
/// right-continuous step function in y, so scanning the distinct marker
/// values from the top is exact. Accepts alpha in [0, 1].
Threshold fpr_quantile(const JointSurvivor& joint, std::size_t k, double alpha);

/// sum_{i != j} (1 - s_i) s_j I(Y_i > Y_j > y), s = conditional survivals
/// at one time. Accumulates from the largest marker down, so the value is
/// nondecreasing as y decreases, exactly, in floating point.
double pair_sum(std::span<const double> survivals, const MarkerOrder& order, const Threshold& y);

/// Censored-data estimator at grid point k.
PaucEstimate pauc_censored(const ConditionalSurvivalSurface& surface, const JointSurvivor& joint,
                           const Cohort& cohort, std::size_t k, double alpha,
                           PairSum mode = PairSum::sorted);

/// Complete-data estimator with empirical case/control indicators. Throws
/// ParameterError when any record is censored.
PaucEstimate pauc_complete(const Cohort& cohort, double t, double alpha);

PaucRangeEstimate pauc_range(const ConditionalSurvivalSurface& surface, const JointSurvivor& joint,
                             const Cohort& cohort, std::size_t k, double alpha_low,
                             double alpha_high);

/// theta at an explicit threshold (used by the range estimator and the
/// influence functions).
double pauc_at(std::span<const double> survivals, const MarkerOrder& order, const Threshold& y,
               double survival_t, PairSum mode = PairSum::sorted);

void check_alpha(double alpha);

}  // namespace tdpauc
