#include "tdpauc/inference.hpp"

#include "tdpauc/error.hpp"
#include "tdpauc/normal.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace tdpauc {

namespace {

// Psi_i at one time. `s` and `xi` are the subject columns, `ranks` holds
// S_Y(Y_i). Sums are kept unscaled until the end.
void influence_column(std::span<const double> s, std::span<const double> xi,
                      const MarkerOrder& order, std::span<const double> ranks,
                      const Threshold& q, double alpha, Eigen::Ref<Eigen::VectorXd> out) {
  const std::size_t n = s.size();
  const double nd = static_cast<double>(n);
  const std::size_t groups = order.group_count();
  const auto ord = order.order();
  const auto starts = order.group_starts();

  // controls_from[g] = sum of s over groups >= g; cases_above[g] = sum of
  // (1 - s) over groups > g.
  std::vector<double> controls_from(groups + 1, 0.0);
  std::vector<double> cases_above(groups, 0.0);
  double pairs = 0.0;
  double cases_acc = 0.0;
  const std::size_t first_above_q = order.first_group_above(q);
  for (std::size_t g = groups; g-- > 0;) {
    double controls = 0.0;
    double cases = 0.0;
    for (std::size_t p = starts[g]; p < starts[g + 1]; ++p) {
      controls += s[ord[p]];
      cases += 1.0 - s[ord[p]];
    }
    controls_from[g] = controls_from[g + 1] + controls;
    cases_above[g] = cases_acc;
    if (g >= first_above_q) pairs += cases_acc * controls;
    cases_acc += cases;
  }

  const double big_h = pairs / (nd * nd);
  const double st = controls_from[0] / nd;
  const double s_q = controls_from[first_above_q] / nd;
  const double sy_q = static_cast<double>(n - starts[first_above_q]) / nd;
  const double eta = big_h * (2.0 * st - 1.0) / (st - st * st);
  const double denom = st * (1.0 - st);
  const double coef = alpha * st - sy_q;

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = order.group_of(i);
    const bool above = g >= first_above_q;
    double u = -2.0 * big_h;
    if (above) {
      const double below_i = controls_from[first_above_q] - controls_from[g];
      const double row = (1.0 - s[i]) * below_i + s[i] * cases_above[g];
      u += row / nd + (ranks[i] - s_q) * xi[i];
    }
    const double v_q = (above ? s[i] + xi[i] : 0.0) - s_q;
    const double v_all = s[i] + xi[i] - st;
    out(static_cast<Eigen::Index>(i)) = (u + eta * v_all + coef * (v_q - alpha * v_all)) / denom;
  }
}

InfluenceMatrix assemble(const Eigen::MatrixXd& st, const Eigen::MatrixXd* xi,
                         const JointSurvivor& joint, const Cohort& cohort, double alpha,
                         EstimatorKind kind, Exec exec) {
  check_alpha(alpha);
  const TimeGrid& grid = joint.grid();
  const std::size_t n = cohort.size();
  const std::size_t g = grid.size();
  for (std::size_t k = 0; k < g; ++k) joint.require_nondegenerate(k);

  InfluenceMatrix infl;
  infl.alpha = alpha;
  infl.kind = kind;
  infl.grid = grid;
  infl.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(g));
  infl.estimates.resize(g);

  const auto ranks = joint.marker_survivor().subject_values();
  const std::vector<double> zeros(n, 0.0);
  const auto sg = static_cast<std::ptrdiff_t>(g);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (std::ptrdiff_t ks = 0; ks < sg; ++ks) {
    const auto k = static_cast<std::size_t>(ks);
    const auto col = static_cast<Eigen::Index>(k);
    std::vector<double> s(n);
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = st(static_cast<Eigen::Index>(i), col);
      if (xi != nullptr) x[i] = (*xi)(static_cast<Eigen::Index>(i), col);
    }
    PaucEstimate est;
    est.t = grid[k];
    est.alpha = alpha;
    est.kind = kind;
    est.quantile = fpr_quantile(joint, k, alpha);
    est.theta = pauc_at(s, joint.marker_order(), est.quantile, joint.survival(k));
    influence_column(s, x, joint.marker_order(), ranks, est.quantile, alpha,
                     infl.values.col(col));
    infl.estimates[k] = est;
  }
  return infl;
}

}  // namespace

InfluenceMatrix influence_matrix(const ConditionalSurvivalSurface& surface,
                                 const JointSurvivor& joint, const Cohort& cohort, double alpha,
                                 Exec exec) {
  if (surface.subjects() != cohort.size() || joint.subjects() != cohort.size()) {
    throw ParameterError("surface, joint survivor and cohort sizes differ");
  }
  return assemble(surface.st(), &surface.xi(), joint, cohort, alpha, EstimatorKind::censored, exec);
}

InfluenceMatrix influence_matrix_complete(const Cohort& cohort, double alpha, const TimeGrid& grid,
                                          Exec exec) {
  if (!cohort.fully_observed()) {
    throw ParameterError(
        "complete-data influence functions require every record uncensored");
  }
  check_grid(cohort, grid);
  Eigen::MatrixXd indicators(static_cast<Eigen::Index>(cohort.size()),
                             static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      indicators(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          cohort.times()[i] > grid[k] ? 1.0 : 0.0;
    }
  }
  const JointSurvivor joint(indicators, grid, cohort);
  InfluenceMatrix infl =
      assemble(indicators, nullptr, joint, cohort, alpha, EstimatorKind::complete, exec);
  // Report the counting estimator itself; it agrees with the indicator
  // substitution above up to rounding.
  for (std::size_t k = 0; k < grid.size(); ++k) {
    infl.estimates[k] = pauc_complete(cohort, grid[k], alpha);
  }
  return infl;
}

double CovarianceFunction::standard_error(std::size_t k) const {
  return std::sqrt(variance(k) / static_cast<double>(n));
}

double CovarianceFunction::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

CovarianceFunction gram_covariance(const Eigen::MatrixXd& rows, const TimeGrid& grid,
                                   std::size_t n) {
  if (static_cast<std::size_t>(rows.cols()) != grid.size()) {
    throw ParameterError("influence matrix columns do not match the grid");
  }
  CovarianceFunction cov;
  cov.grid = grid;
  cov.n = n;
  const Eigen::Index g = rows.cols();
  cov.matrix.resize(g, g);
  for (Eigen::Index a = 0; a < g; ++a) {
    for (Eigen::Index b = a; b < g; ++b) {
      const double v = rows.col(a).dot(rows.col(b)) / static_cast<double>(n);
      cov.matrix(a, b) = v;
      cov.matrix(b, a) = v;
    }
  }
  return cov;
}

CovarianceFunction covariance(const InfluenceMatrix& infl) {
  return gram_covariance(infl.values, infl.grid, infl.subjects());
}

ConfidenceBand ConfidenceBand::clipped(double lo, double hi) const {
  ConfidenceBand out = *this;
  for (auto& v : out.lower) v = std::clamp(v, lo, hi);
  for (auto& v : out.upper) v = std::clamp(v, lo, hi);
  return out;
}

bool ConfidenceBand::covers(std::span<const double> truth) const {
  if (truth.size() != lower.size()) throw ParameterError("truth curve length differs from band");
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k] < lower[k] || truth[k] > upper[k]) return false;
  }
  return true;
}

ConfidenceBand pointwise_band(std::span<const double> center, const CovarianceFunction& cov,
                              double level) {
  if (center.size() != cov.grid.size()) throw ParameterError("center curve length differs from grid");
  const double z = two_sided_z(level);
  ConfidenceBand band;
  band.grid = cov.grid;
  band.level = level;
  band.critical_value = z;
  band.kind = BandKind::pointwise;
  for (std::size_t k = 0; k < center.size(); ++k) {
    const double se = cov.standard_error(k);
    if (!std::isfinite(se)) {
      std::ostringstream msg;
      msg << "non-finite variance at t=" << cov.grid[k];
      throw NumericError(msg.str());
    }
    band.center.push_back(center[k]);
    band.se.push_back(se);
    band.lower.push_back(center[k] - z * se);
    band.upper.push_back(center[k] + z * se);
  }
  return band;
}

ConfidenceBand pointwise_ci(const PaucEstimate& estimate, const CovarianceFunction& cov,
                            double level) {
  const std::size_t k = cov.grid.index_of(estimate.t);
  const double center = estimate.theta;
  CovarianceFunction one;
  one.grid = TimeGrid({estimate.t});
  one.n = cov.n;
  one.matrix = Eigen::MatrixXd::Constant(1, 1, cov.variance(k));
  return pointwise_band(std::span(&center, 1), one, level);
}

std::vector<double> multiplier_sup_statistics(const Eigen::MatrixXd& rows,
                                              std::span<const double> sd,
                                              const MultiplierOptions& options) {
  if (options.resamples == 0) throw ParameterError("number of resamples must be positive");
  const auto n = rows.rows();
  const auto g = rows.cols();
  if (static_cast<std::size_t>(g) != sd.size()) throw ParameterError("sd length differs from grid");
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> sup(options.resamples);
  const auto sb = static_cast<std::ptrdiff_t>(options.resamples);
#pragma omp parallel for schedule(static) if (options.exec == Exec::parallel)
  for (std::ptrdiff_t b = 0; b < sb; ++b) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                      static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    Eigen::VectorXd multipliers(n);
    for (Eigen::Index i = 0; i < n; ++i) multipliers(i) = normal(rng);
    double w = 0.0;
    for (Eigen::Index k = 0; k < g; ++k) {
      const double z = std::abs(scale * rows.col(k).dot(multipliers)) / sd[static_cast<std::size_t>(k)];
      w = std::max(w, z);
    }
    sup[static_cast<std::size_t>(b)] = w;
  }
  return sup;
}

double multiplier_critical_value(const Eigen::MatrixXd& rows, std::span<const double> sd,
                                 double level, const MultiplierOptions& options) {
  if (!(level > 0.0 && level < 1.0)) {
    std::ostringstream msg;
    msg << "confidence level " << level << " outside (0, 1)";
    throw ParameterError(msg.str());
  }
  std::vector<double> sup = multiplier_sup_statistics(rows, sd, options);
  // Empirical quantile: the ceil(level * B)-th order statistic.
  const auto rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(sup.size())));
  const std::size_t idx = std::clamp<std::size_t>(rank, 1, sup.size()) - 1;
  std::nth_element(sup.begin(), sup.begin() + static_cast<std::ptrdiff_t>(idx), sup.end());
  return sup[idx];
}

ConfidenceBand simultaneous_band(std::span<const double> center, const Eigen::MatrixXd& rows,
                                 const CovarianceFunction& cov, double level,
                                 const MultiplierOptions& options) {
  if (options.resamples < 100) throw ParameterError("simultaneous bands need at least 100 resamples");
  if (center.size() != cov.grid.size()) throw ParameterError("center curve length differs from grid");
  std::vector<double> sd(cov.grid.size());
  std::ostringstream bad;
  for (std::size_t k = 0; k < sd.size(); ++k) {
    const double v = cov.variance(k);
    if (!(v > 0.0) || !std::isfinite(v)) bad << (bad.tellp() > 0 ? ", " : "") << cov.grid[k];
    sd[k] = std::sqrt(v);
  }
  if (bad.tellp() > 0) {
    throw NumericError("non-positive variance estimate at t = " + bad.str());
  }
  const double crit = multiplier_critical_value(rows, sd, level, options);
  const double root_n = std::sqrt(static_cast<double>(cov.n));
  ConfidenceBand band;
  band.grid = cov.grid;
  band.level = level;
  band.critical_value = crit;
  band.kind = BandKind::simultaneous;
  band.resamples = options.resamples;
  for (std::size_t k = 0; k < center.size(); ++k) {
    const double se = sd[k] / root_n;
    band.center.push_back(center[k]);
    band.se.push_back(se);
    band.lower.push_back(center[k] - crit * se);
    band.upper.push_back(center[k] + crit * se);
  }
  return band;
}

ConfidenceBand simultaneous_band(std::span<const double> center, const InfluenceMatrix& infl,
                                 double level, const MultiplierOptions& options) {
  return simultaneous_band(center, infl.values, covariance(infl), level, options);
}

}  // namespace tdpauc
