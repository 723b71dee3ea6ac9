#include "tdpauc/bandwidth.hpp"

#include "tdpauc/error.hpp"
#include "tdpauc/ranks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tdpauc {

namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    std::ostringstream msg;
    msg << "bandwidth " << lambda << " outside (0, 1]";
    throw ParameterError(msg.str());
  }
}

}  // namespace

std::vector<Residual> loo_residuals(const Cohort& cohort, double lambda, Exec exec) {
  check_lambda(lambda);
  const std::size_t n = cohort.size();
  if (n < 3) throw DegenerateError("leave-one-out residuals need at least 3 records");
  const auto x = cohort.times();
  const auto d = cohort.statuses();
  const auto y = cohort.markers();
  const MarkerOrder order(y);

  std::vector<std::size_t> by_time(n);
  std::iota(by_time.begin(), by_time.end(), std::size_t{0});
  std::stable_sort(by_time.begin(), by_time.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return d[a] > d[b];
  });
  // above[k] = #{l : Y_l > Y_k} in the full sample.
  std::vector<std::size_t> above(n);
  for (std::size_t k = 0; k < n; ++k) above[k] = order.count_above(k);

  const double m = static_cast<double>(n - 1);
  std::vector<Residual> out(n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16) if (exec == Exec::parallel)
  for (std::ptrdiff_t is = 0; is < sn; ++is) {
    const auto i = static_cast<std::size_t>(is);
    // Ranks without subject i; the target rank at Y_i keeps its count since
    // i never exceeds itself.
    const double target = static_cast<double>(above[i]) / m;
    std::vector<std::size_t> members;
    members.reserve(n);
    for (std::size_t k : by_time) {
      if (k == i) continue;
      const std::size_t c = above[k] - (y[i] > y[k] ? 1 : 0);
      if (std::abs(static_cast<double>(c) / m - target) < lambda) members.push_back(k);
    }
    double surv = 1.0;
    const std::size_t size = members.size();
    for (std::size_t p = 0, start = 0; p < size; ++p) {
      const std::size_t k = members[p];
      if (x[k] > x[i]) break;
      if (p == 0 || x[k] != x[members[p - 1]]) start = p;
      if (d[k] != 1) continue;
      surv *= std::clamp(1.0 - 1.0 / static_cast<double>(size - start), 0.0, 1.0);
    }
    out[i] = {1.0 - surv, d[i]};
  }
  return out;
}

double ise(std::span<const Residual> residuals) {
  std::vector<std::size_t> idx(residuals.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return residuals[a].e < residuals[b].e; });

  const std::size_t n = idx.size();
  double surv = 1.0;
  double total = 0.0;
  bool any_event = false;
  for (std::size_t p = 0; p < n;) {
    const double e = residuals[idx[p]].e;
    std::size_t q = p;
    std::size_t events = 0;
    while (q < n && residuals[idx[q]].e == e) events += residuals[idx[q++]].status == 1 ? 1 : 0;
    if (events > 0) {
      any_event = true;
      surv *= 1.0 - static_cast<double>(events) / static_cast<double>(n - p);
      const double diff = surv - (1.0 - e);
      total += static_cast<double>(events) * diff * diff;
    }
    p = q;
  }
  if (!any_event) throw DegenerateError("integrated squared error needs an uncensored residual");
  return total;
}

BandwidthSelection select_bandwidth(const Cohort& cohort, std::span<const double> grid,
                                    Exec exec) {
  if (grid.empty()) throw ParameterError("bandwidth grid is empty");
  for (double lambda : grid) check_lambda(lambda);
  BandwidthSelection sel;
  sel.grid.assign(grid.begin(), grid.end());
  std::size_t best = 0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    std::vector<Residual> res = loo_residuals(cohort, grid[c], exec);
    const double score = ise(res);
    if (!std::isfinite(score)) {
      std::ostringstream msg;
      msg << "non-finite ISE at bandwidth " << grid[c];
      throw NumericError(msg.str());
    }
    sel.scores.push_back(score);
    const bool better = c == 0 || score < sel.scores[best] ||
                        (score == sel.scores[best] && grid[c] < grid[best]);
    if (better) {
      best = c;
      sel.residuals = std::move(res);
    }
  }
  sel.chosen = grid[best];
  return sel;
}

std::vector<double> bandwidth_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo > 0.0) || !(hi >= lo) || hi > 1.0) {
    std::ostringstream msg;
    msg << "bandwidth grid [" << lo << ", " << hi << "] step " << step
        << " must satisfy 0 < min <= max <= 1 and step > 0";
    throw ParameterError(msg.str());
  }
  std::vector<double> out;
  for (std::size_t k = 0;; ++k) {
    const double v = std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12;
    if (v > hi + 1e-9) break;
    out.push_back(std::min(v, 1.0));
    if (v >= 1.0) break;
  }
  return out;
}

std::vector<double> default_bandwidth_grid() { return bandwidth_grid(0.01, 0.20, 0.01); }

}  // namespace tdpauc
