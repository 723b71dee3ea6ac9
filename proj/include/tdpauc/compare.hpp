#pragma once

#include "tdpauc/data.hpp"
#include "tdpauc/inference.hpp"

#include <vector>

namespace tdpauc {

struct CompareOptions {
  double alpha = 0.1;
  double lambda1 = 0.1;
  double lambda2 = 0.1;
  double level = 0.95;
  MultiplierOptions multiplier;
};

/// gamma(t) = theta^(1)(t) - theta^(2)(t) with its covariance function and
/// bands. cov.n is n1 + n2.
struct ComparisonResult {
  TimeGrid grid;
  std::vector<double> gamma;
  std::vector<double> theta1;
  std::vector<double> theta2;
  CovarianceFunction cov;
  ConfidenceBand pointwise;
  ConfidenceBand simultaneous;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  /// Stacked rows (n/n1) Psi^(1) over (n/n2) Psi^(2); cov = n^-1 Z^T Z.
  Eigen::MatrixXd stacked;
};

/// Two independent samples. Each group uses its own bandwidth; every grid
/// time must be nondegenerate in both groups.
ComparisonResult compare_paucs(const Cohort& first, const Cohort& second, const TimeGrid& grid,
                               const CompareOptions& options);

}  // namespace tdpauc
