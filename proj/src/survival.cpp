#include "tdpauc/survival.hpp"

#include "tdpauc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tdpauc {

namespace {

// Subject indices by ascending time; at equal times events precede
// censorings.
std::vector<std::size_t> time_order(const Cohort& cohort) {
  std::vector<std::size_t> idx(cohort.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto x = cohort.times();
  const auto d = cohort.statuses();
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return d[a] > d[b];
  });
  return idx;
}

struct RowResult {
  bool capped = false;
};

// One subject's row of the surface. `members` are the window members in time
// order; at_risk[p] counts members with time >= time of members[p].
RowResult fill_row(std::size_t j, const Cohort& cohort, const std::vector<std::size_t>& members,
                   const std::vector<std::size_t>& at_risk, const TimeGrid& grid,
                   double two_lambda_n, bool zero_xi, Eigen::MatrixXd& st, Eigen::MatrixXd& sx,
                   Eigen::MatrixXd& xi) {
  const auto x = cohort.times();
  const auto d = cohort.statuses();
  const double own_time = x[j];
  const std::size_t m = members.size();
  const double log_floor = std::log(kLogFloorArgument);

  // Members at risk at the subject's own time: the subject itself is one.
  std::size_t own_at_risk = 0;
  for (std::size_t p = 0; p < m; ++p) {
    if (x[members[p]] >= own_time) {
      own_at_risk = m - p;
      break;
    }
  }
  if (own_at_risk == 0) throw NumericError("internal: subject missing from its own window");

  RowResult result;
  double surv = 1.0;
  double integral = 0.0;  // sum of dlog S_T(u|Y_j) / S_X(u|Y_j) over u <= min(t, X_j)
  std::size_t p = 0;      // next member whose event factor is not applied yet
  std::size_t below = 0;  // members with time < t
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    for (; p < m && x[members[p]] <= t; ++p) {
      const std::size_t i = members[p];
      if (d[i] != 1) continue;
      const double r = static_cast<double>(at_risk[p]);
      if (!(r > 0.0)) throw NumericError("internal: empty risk set at an event time");
      const double factor = std::clamp(1.0 - 1.0 / r, 0.0, 1.0);
      surv *= factor;
      if (x[i] <= own_time) {
        double log_factor = std::log(factor);
        if (!(log_factor >= log_floor)) {
          log_factor = log_floor;
          result.capped = true;
        }
        integral += log_factor * two_lambda_n / r;
      }
    }
    while (below < m && x[members[below]] < t) ++below;

    const auto row = static_cast<Eigen::Index>(j);
    const auto col = static_cast<Eigen::Index>(k);
    st(row, col) = surv;
    sx(row, col) = static_cast<double>(m - below) / two_lambda_n;
    if (zero_xi) {
      xi(row, col) = 0.0;
    } else {
      double total = integral;
      if (d[j] == 1 && own_time <= t) total += two_lambda_n / static_cast<double>(own_at_risk);
      xi(row, col) = surv == 0.0 ? 0.0 : -surv * total;
    }
  }
  return result;
}

}  // namespace

double isolating_bandwidth(std::size_t n) { return 0.5 / static_cast<double>(n); }

ConditionalSurvivalSurface conditional_km(const Cohort& cohort, double lambda,
                                          const TimeGrid& grid, SurfaceOptions options) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    std::ostringstream msg;
    msg << "bandwidth " << lambda << " outside (0, 1]";
    throw ParameterError(msg.str());
  }
  check_grid(cohort, grid);

  const std::size_t n = cohort.size();
  const auto g = static_cast<Eigen::Index>(grid.size());
  const RankSurvivor ranks(cohort.markers());
  const auto r = ranks.subject_values();
  const auto x = cohort.times();
  const std::vector<std::size_t> by_time = time_order(cohort);
  const double two_lambda_n = 2.0 * lambda * static_cast<double>(n);

  ConditionalSurvivalSurface surface;
  surface.bandwidth_ = lambda;
  surface.grid_ = grid;
  surface.st_.resize(static_cast<Eigen::Index>(n), g);
  surface.sx_.resize(static_cast<Eigen::Index>(n), g);
  surface.xi_.resize(static_cast<Eigen::Index>(n), g);
  for (std::size_t i = 0; i < n; ++i) {
    if (cohort.statuses()[i] == 1) surface.event_times_.push_back(x[i]);
  }
  std::sort(surface.event_times_.begin(), surface.event_times_.end());
  surface.event_times_.erase(std::unique(surface.event_times_.begin(), surface.event_times_.end()),
                             surface.event_times_.end());

  std::vector<char> capped(n, 0);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16) if (options.exec == Exec::parallel)
  for (std::ptrdiff_t js = 0; js < sn; ++js) {
    const auto j = static_cast<std::size_t>(js);
    std::vector<std::size_t> members;
    members.reserve(n);
    for (std::size_t i : by_time) {
      if (std::abs(r[i] - r[j]) < lambda) members.push_back(i);
    }
    std::vector<std::size_t> at_risk(members.size());
    for (std::size_t p = 0, start = 0; p < members.size(); ++p) {
      if (p == 0 || x[members[p]] != x[members[p - 1]]) start = p;
      at_risk[p] = members.size() - start;
    }
    capped[j] = fill_row(j, cohort, members, at_risk, grid, two_lambda_n, options.zero_xi,
                         surface.st_, surface.sx_, surface.xi_)
                    .capped;
  }
  surface.capped_ = static_cast<std::size_t>(std::count(capped.begin(), capped.end(), 1));
  return surface;
}

JointSurvivor::JointSurvivor(const ConditionalSurvivalSurface& surface, const Cohort& cohort)
    : grid_(surface.grid()), order_(cohort.markers()), marker_survivor_(cohort.markers()) {
  if (surface.subjects() != cohort.size()) {
    throw ParameterError("surface and cohort sizes differ");
  }
  build(surface.st());
}

JointSurvivor::JointSurvivor(const Eigen::MatrixXd& st, const TimeGrid& grid, const Cohort& cohort)
    : grid_(grid), order_(cohort.markers()), marker_survivor_(cohort.markers()) {
  if (static_cast<std::size_t>(st.rows()) != cohort.size() ||
      static_cast<std::size_t>(st.cols()) != grid.size()) {
    throw ParameterError("survival matrix shape does not match cohort and grid");
  }
  build(st);
}

void JointSurvivor::build(const Eigen::MatrixXd& st) {
  const auto groups = order_.group_count();
  const auto order = order_.order();
  const auto starts = order_.group_starts();
  const double n = static_cast<double>(order_.size());
  suffix_.setZero(static_cast<Eigen::Index>(groups + 1), st.cols());
  for (Eigen::Index k = 0; k < st.cols(); ++k) {
    double acc = 0.0;
    for (std::size_t gi = groups; gi-- > 0;) {
      for (std::size_t p = starts[gi]; p < starts[gi + 1]; ++p) {
        acc += st(static_cast<Eigen::Index>(order[p]), k);
      }
      suffix_(static_cast<Eigen::Index>(gi), k) = acc / n;
    }
  }
}

double JointSurvivor::joint(std::size_t k, const Threshold& y) const {
  return group_suffix(k, order_.first_group_above(y));
}

double JointSurvivor::fpr(std::size_t k, const Threshold& y) const {
  require_nondegenerate(k);
  if (y.is_minus_infinity()) return 1.0;
  return joint(k, y) / survival(k);
}

double JointSurvivor::tpr(std::size_t k, const Threshold& y) const {
  require_nondegenerate(k);
  if (y.is_minus_infinity()) return 1.0;
  return (marker_survivor_(y) - joint(k, y)) / (1.0 - survival(k));
}

void JointSurvivor::require_nondegenerate(std::size_t k, double eps) const {
  const double s = survival(k);
  if (!(s >= eps && s <= 1.0 - eps)) {
    std::ostringstream msg;
    msg << "degenerate time t=" << grid_[k] << ": estimated S_T(t)=" << s
        << (s < eps ? " (no controls)" : " (no cases)");
    throw DegenerateError(msg.str());
  }
}

}  // namespace tdpauc
