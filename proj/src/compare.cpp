#include "tdpauc/compare.hpp"

#include "tdpauc/error.hpp"
#include "tdpauc/survival.hpp"

namespace tdpauc {

namespace {

InfluenceMatrix group_influence(const Cohort& cohort, const TimeGrid& grid, double lambda,
                                double alpha, Exec exec, int label) {
  try {
    const auto surface = conditional_km(cohort, lambda, grid, {.zero_xi = false, .exec = exec});
    const JointSurvivor joint(surface, cohort);
    return influence_matrix(surface, joint, cohort, alpha, exec);
  } catch (const DegenerateError& e) {
    throw DegenerateError("group " + std::to_string(label) + ": " + e.what());
  }
}

}  // namespace

ComparisonResult compare_paucs(const Cohort& first, const Cohort& second, const TimeGrid& grid,
                               const CompareOptions& options) {
  if (grid.empty()) throw ParameterError("comparison grid is empty");
  const Exec exec = options.multiplier.exec;
  const InfluenceMatrix a =
      group_influence(first, grid, options.lambda1, options.alpha, exec, 1);
  const InfluenceMatrix b =
      group_influence(second, grid, options.lambda2, options.alpha, exec, 2);

  ComparisonResult out;
  out.grid = grid;
  out.n1 = first.size();
  out.n2 = second.size();
  const std::size_t n = out.n1 + out.n2;
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.theta1.push_back(a.estimates[k].theta);
    out.theta2.push_back(b.estimates[k].theta);
    out.gamma.push_back(out.theta1.back() - out.theta2.back());
  }

  // Each group's term is formed separately and the two are added, so
  // swapping the groups leaves the covariance bit-identical.
  const CovarianceFunction c1 = gram_covariance(a.values, grid, out.n1);
  const CovarianceFunction c2 = gram_covariance(b.values, grid, out.n2);
  const double w1 = nd / static_cast<double>(out.n1);
  const double w2 = nd / static_cast<double>(out.n2);
  out.cov.grid = grid;
  out.cov.n = n;
  out.cov.matrix = w1 * c1.matrix + w2 * c2.matrix;

  out.stacked.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(grid.size()));
  out.stacked.topRows(static_cast<Eigen::Index>(out.n1)) = w1 * a.values;
  out.stacked.bottomRows(static_cast<Eigen::Index>(out.n2)) = w2 * b.values;

  out.pointwise = pointwise_band(out.gamma, out.cov, options.level);
  out.simultaneous =
      simultaneous_band(out.gamma, out.stacked, out.cov, options.level, options.multiplier);
  return out;
}

}  // namespace tdpauc
