#pragma once

#include "tdpauc/data.hpp"
#include "tdpauc/parallel.hpp"
#include "tdpauc/ranks.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace tdpauc {

/// Floor applied to log product-limit factors before they enter the
/// martingale integral, so a conditional survival that reaches zero gives a
/// bounded influence contribution.
inline constexpr double kLogFloorArgument = 1e-12;

struct SurfaceOptions {
  /// Force the martingale correction xi to zero (used to compare the
  /// censored influence functions with their complete-data counterparts).
  bool zero_xi = false;
  Exec exec = Exec::parallel;
};

/// Nearest-neighbour conditional survival estimates on a time grid.
///
/// Rows are subjects, columns are grid times:
///   st(j, k) = S_T(t_k | Y_j)   kernel product-limit estimate
///   sx(j, k) = S_X(t_k | Y_j)   kernel-weighted at-risk fraction
///   xi(j, k) = xi_j(t_k)        martingale integral used by the influence
///                               functions
/// The uniform kernel acts on marker ranks S_Y(Y), so the whole surface is
/// invariant under strictly increasing transformations of the marker.
class ConditionalSurvivalSurface {
 public:
  double bandwidth() const { return bandwidth_; }
  const TimeGrid& grid() const { return grid_; }
  std::size_t subjects() const { return static_cast<std::size_t>(st_.rows()); }

  const Eigen::MatrixXd& st() const { return st_; }
  const Eigen::MatrixXd& sx() const { return sx_; }
  const Eigen::MatrixXd& xi() const { return xi_; }

  /// Sorted distinct observed event times.
  std::span<const double> event_times() const { return event_times_; }
  /// Subjects whose log-survival hit the floor somewhere on the grid.
  std::size_t capped_subjects() const { return capped_; }

 private:
  friend ConditionalSurvivalSurface conditional_km(const Cohort&, double, const TimeGrid&,
                                                   SurfaceOptions);
  double bandwidth_ = 0.0;
  TimeGrid grid_;
  Eigen::MatrixXd st_, sx_, xi_;
  std::vector<double> event_times_;
  std::size_t capped_ = 0;
};

/// Builds the surface for every subject and grid time. Each subject's row
/// is an independent product-limit walk over its rank window, so rows are
/// computed in parallel. Throws ParameterError unless 0 < lambda <= 1.
ConditionalSurvivalSurface conditional_km(const Cohort& cohort, double lambda,
                                          const TimeGrid& grid, SurfaceOptions options = {});

/// A bandwidth narrow enough that every window holds only the subject itself
/// (plus exact marker ties). With it, S_T(t|Y_j) collapses to I(X_j > t) for
/// uncensored data.
double isolating_bandwidth(std::size_t n);

/// S(t, y) = n^-1 sum_i S_T(t|Y_i) I(Y_i > y) and the derived FPR/TPR.
class JointSurvivor {
 public:
  JointSurvivor(const ConditionalSurvivalSurface& surface, const Cohort& cohort);
  /// Same construction from an explicit n x G matrix of conditional
  /// survivals; the complete-data estimators use indicator columns here.
  JointSurvivor(const Eigen::MatrixXd& st, const TimeGrid& grid, const Cohort& cohort);

  const TimeGrid& grid() const { return grid_; }
  std::size_t subjects() const { return order_.size(); }
  const MarkerOrder& marker_order() const { return order_; }
  const RankSurvivor& marker_survivor() const { return marker_survivor_; }

  /// S_T(t_k) = S(t_k, -inf).
  double survival(std::size_t k) const { return suffix_(0, static_cast<Eigen::Index>(k)); }
  double joint(std::size_t k, const Threshold& y) const;
  double fpr(std::size_t k, const Threshold& y) const;
  double tpr(std::size_t k, const Threshold& y) const;

  /// Throws DegenerateError unless eps <= S_T(t_k) <= 1 - eps.
  void require_nondegenerate(std::size_t k, double eps = 1e-6) const;

  /// n^-1 times the sum of conditional survivals over marker groups >= g.
  double group_suffix(std::size_t k, std::size_t g) const {
    return suffix_(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(k));
  }

 private:
  void build(const Eigen::MatrixXd& st);

  TimeGrid grid_;
  MarkerOrder order_;
  RankSurvivor marker_survivor_;
  Eigen::MatrixXd suffix_;  // (groups + 1) x G
};

}  // namespace tdpauc
