#pragma once

#include "tdpauc/data.hpp"
#include "tdpauc/parallel.hpp"
#include "tdpauc/pauc.hpp"
#include "tdpauc/survival.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace tdpauc {

/// Estimated influence values Psi_i(t): rows are subjects, columns are grid
/// times. The estimates at each grid time travel with the matrix.
struct InfluenceMatrix {
  Eigen::MatrixXd values;
  double alpha = 0.0;
  EstimatorKind kind = EstimatorKind::censored;
  TimeGrid grid;
  std::vector<PaucEstimate> estimates;

  std::size_t subjects() const { return static_cast<std::size_t>(values.rows()); }
};

/// Censored-data influence functions at every grid time, evaluated at the
/// estimated quantile q_{alpha t}. Also fills `estimates` (theta, q).
InfluenceMatrix influence_matrix(const ConditionalSurvivalSurface& surface,
                                 const JointSurvivor& joint, const Cohort& cohort, double alpha,
                                 Exec exec = Exec::parallel);

/// Complete-data counterpart: case/control indicators replace the kernel
/// conditional survivals and the martingale correction vanishes.
InfluenceMatrix influence_matrix_complete(const Cohort& cohort, double alpha, const TimeGrid& grid,
                                          Exec exec = Exec::parallel);

/// Sigma(s,t) = n^-1 sum_i Psi_i(s) Psi_i(t) over the grid.
struct CovarianceFunction {
  TimeGrid grid;
  Eigen::MatrixXd matrix;
  std::size_t n = 0;  // sample size used in sqrt(Sigma/n)

  double variance(std::size_t k) const {
    return matrix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  }
  double standard_error(std::size_t k) const;
  double min_eigenvalue() const;
};

CovarianceFunction covariance(const InfluenceMatrix& infl);

/// Gram form (1/n) R^T R for an arbitrary row matrix R. The symmetric
/// result is assembled from the upper triangle, so it is exactly symmetric.
CovarianceFunction gram_covariance(const Eigen::MatrixXd& rows, const TimeGrid& grid,
                                   std::size_t n);

enum class BandKind { pointwise, simultaneous };

struct ConfidenceBand {
  TimeGrid grid;
  std::vector<double> center;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> se;
  double level = 0.95;
  double critical_value = 0.0;
  BandKind kind = BandKind::pointwise;
  std::size_t resamples = 0;

  /// Band clipped to [lo, hi]; bands are reported unclipped by default.
  ConfidenceBand clipped(double lo, double hi) const;
  /// True when lo <= truth <= hi at every grid point.
  bool covers(std::span<const double> truth) const;
};

/// theta +- z * sqrt(Sigma(t,t)/n) at the estimate's time.
ConfidenceBand pointwise_ci(const PaucEstimate& estimate, const CovarianceFunction& cov,
                            double level);

/// Pointwise intervals at every grid point of `cov`.
ConfidenceBand pointwise_band(std::span<const double> center, const CovarianceFunction& cov,
                              double level);

struct MultiplierOptions {
  std::size_t resamples = 1000;
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
};

/// Critical value L such that sup_t |n^-1/2 sum_i G_i R_i(t)| / sd(t) < L
/// with probability `level`, estimated from standard normal multipliers G.
/// Replicate b draws from its own generator seeded by (seed, b), so the
/// value does not depend on the thread count.
double multiplier_critical_value(const Eigen::MatrixXd& rows, std::span<const double> sd,
                                 double level, const MultiplierOptions& options);

/// The sup statistics themselves, one per replicate (exposed for tests).
std::vector<double> multiplier_sup_statistics(const Eigen::MatrixXd& rows,
                                              std::span<const double> sd,
                                              const MultiplierOptions& options);

/// Simultaneous band theta_t +- L * sqrt(Sigma(t,t)/n) over the grid.
ConfidenceBand simultaneous_band(std::span<const double> center, const InfluenceMatrix& infl,
                                 double level, const MultiplierOptions& options);

/// Same construction for an arbitrary (possibly stacked) row matrix.
ConfidenceBand simultaneous_band(std::span<const double> center, const Eigen::MatrixXd& rows,
                                 const CovarianceFunction& cov, double level,
                                 const MultiplierOptions& options);

}  // namespace tdpauc
