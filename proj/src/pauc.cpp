#include "tdpauc/pauc.hpp"

#include "tdpauc/error.hpp"
#include "tdpauc/reference.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

namespace tdpauc {

std::string_view to_string(EstimatorKind kind) {
  return kind == EstimatorKind::censored ? "censored" : "complete";
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    std::ostringstream msg;
    msg << "alpha " << alpha << " outside (0, 1]";
    throw ParameterError(msg.str());
  }
}

Threshold fpr_quantile(const JointSurvivor& joint, std::size_t k, double alpha) {
  joint.require_nondegenerate(k);
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    std::ostringstream msg;
    msg << "alpha " << alpha << " outside [0, 1]";
    throw ParameterError(msg.str());
  }
  if (alpha >= 1.0) return Threshold::minus_infinity();

  const double limit = alpha * joint.survival(k) * (1.0 + kQuantileSlack);
  const auto& order = joint.marker_order();
  // FPR at the group value u_g counts groups strictly above g. The top group
  // always qualifies (nobody exceeds the largest marker).
  std::size_t g = order.group_count() - 1;
  while (g > 0 && joint.group_suffix(k, g) <= limit) --g;
  return Threshold::at(order.values()[g]);
}

double pair_sum(std::span<const double> survivals, const MarkerOrder& order, const Threshold& y) {
  const auto ord = order.order();
  const auto starts = order.group_starts();
  const auto values = order.values();
  double above_cases = 0.0;  // sum of (1 - s_i) over strictly higher groups
  double total = 0.0;
  for (std::size_t g = order.group_count(); g-- > 0;) {
    if (!y.exceeded_by(values[g])) break;
    double controls = 0.0;
    double cases = 0.0;
    for (std::size_t p = starts[g]; p < starts[g + 1]; ++p) {
      const double s = survivals[ord[p]];
      controls += s;
      cases += 1.0 - s;
    }
    total += above_cases * controls;
    above_cases += cases;
  }
  return total;
}

double pauc_at(std::span<const double> survivals, const MarkerOrder& order, const Threshold& y,
               double survival_t, PairSum mode) {
  const double n = static_cast<double>(survivals.size());
  double sum = 0.0;
  if (mode == PairSum::sorted) {
    sum = pair_sum(survivals, order, y);
  } else {
    std::vector<double> markers(survivals.size());
    // The pair loop needs markers by subject; recover them from the order.
    const auto ord = order.order();
    const auto starts = order.group_starts();
    for (std::size_t g = 0; g < order.group_count(); ++g) {
      for (std::size_t p = starts[g]; p < starts[g + 1]; ++p) markers[ord[p]] = order.values()[g];
    }
    sum = reference::pair_sum(survivals, markers, y);
  }
  return (sum / (n * n)) / (survival_t * (1.0 - survival_t));
}

namespace {

std::vector<double> column(const Eigen::MatrixXd& m, std::size_t k) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, static_cast<Eigen::Index>(k));
  return out;
}

}  // namespace

PaucEstimate pauc_censored(const ConditionalSurvivalSurface& surface, const JointSurvivor& joint,
                           const Cohort& cohort, std::size_t k, double alpha, PairSum mode) {
  check_alpha(alpha);
  if (surface.subjects() != cohort.size() || joint.subjects() != cohort.size()) {
    throw ParameterError("surface, joint survivor and cohort sizes differ");
  }
  joint.require_nondegenerate(k);
  PaucEstimate est;
  est.t = surface.grid()[k];
  est.alpha = alpha;
  est.kind = EstimatorKind::censored;
  est.quantile = fpr_quantile(joint, k, alpha);
  const auto s = column(surface.st(), k);
  est.theta = pauc_at(s, joint.marker_order(), est.quantile, joint.survival(k), mode);
  return est;
}

PaucEstimate pauc_complete(const Cohort& cohort, double t, double alpha) {
  check_alpha(alpha);
  if (!cohort.fully_observed()) {
    throw ParameterError(
        "complete-data estimator requires every record uncensored; use the censored estimator");
  }
  const std::size_t n = cohort.size();
  const auto x = cohort.times();
  const auto y = cohort.markers();

  std::vector<double> case_markers;
  std::vector<double> control_markers;
  for (std::size_t i = 0; i < n; ++i) (x[i] <= t ? case_markers : control_markers).push_back(y[i]);
  if (case_markers.empty() || control_markers.empty()) {
    std::ostringstream msg;
    msg << "degenerate time t=" << t << ": " << (case_markers.empty() ? "no cases" : "no controls");
    throw DegenerateError(msg.str());
  }
  std::sort(case_markers.begin(), case_markers.end());
  std::sort(control_markers.begin(), control_markers.end());
  const double n_controls = static_cast<double>(control_markers.size());
  const double survival = n_controls / static_cast<double>(n);

  // Empirical FPR(v) = #{controls > v} / #controls; the smallest observed
  // marker v with FPR(v) <= alpha, or -inf when alpha = 1.
  auto controls_above = [&](double v) {
    return static_cast<double>(control_markers.end() -
                               std::upper_bound(control_markers.begin(), control_markers.end(), v));
  };
  Threshold q = Threshold::minus_infinity();
  if (alpha < 1.0) {
    std::vector<double> candidates(y.begin(), y.end());
    std::sort(candidates.begin(), candidates.end());
    const double limit = alpha * n_controls * (1.0 + kQuantileSlack);
    for (double v : candidates) {
      if (controls_above(v) <= limit) {
        q = Threshold::at(v);
        break;
      }
    }
  }

  double pairs = 0.0;
  for (double c : control_markers) {
    if (!q.exceeded_by(c)) continue;
    pairs += static_cast<double>(case_markers.end() -
                                 std::upper_bound(case_markers.begin(), case_markers.end(), c));
  }

  PaucEstimate est;
  est.t = t;
  est.alpha = alpha;
  est.kind = EstimatorKind::complete;
  est.quantile = q;
  const double nn = static_cast<double>(n);
  est.theta = (pairs / (nn * nn)) / (survival * (1.0 - survival));
  return est;
}

PaucRangeEstimate pauc_range(const ConditionalSurvivalSurface& surface, const JointSurvivor& joint,
                             const Cohort& cohort, std::size_t k, double alpha_low,
                             double alpha_high) {
  if (!(alpha_low >= 0.0 && alpha_low < alpha_high && alpha_high <= 1.0)) {
    std::ostringstream msg;
    msg << "FPR range [" << alpha_low << ", " << alpha_high
        << "] must satisfy 0 <= low < high <= 1";
    throw ParameterError(msg.str());
  }
  if (surface.subjects() != cohort.size()) throw ParameterError("surface and cohort sizes differ");
  joint.require_nondegenerate(k);
  const auto s = column(surface.st(), k);
  PaucRangeEstimate est;
  est.t = surface.grid()[k];
  est.alpha_low = alpha_low;
  est.alpha_high = alpha_high;
  est.quantile_low = fpr_quantile(joint, k, alpha_low);
  est.quantile_high = fpr_quantile(joint, k, alpha_high);
  const double st = joint.survival(k);
  est.theta = pauc_at(s, joint.marker_order(), est.quantile_high, st) -
              pauc_at(s, joint.marker_order(), est.quantile_low, st);
  return est;
}

}  // namespace tdpauc
