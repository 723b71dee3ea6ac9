#include "tdpauc/reference.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tdpauc::reference {

Sample view(const Cohort& cohort) { return {cohort.times(), cohort.statuses(), cohort.markers()}; }

double marker_survival(const Sample& s, double y) {
  std::size_t count = 0;
  for (double m : s.marker) count += m > y ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(s.marker.size());
}

double kernel(double u, double lambda) { return std::abs(u) < lambda ? 1.0 / (2.0 * lambda) : 0.0; }

double at_risk(const Sample& s, double lambda, double y, double t) {
  const double n = static_cast<double>(s.time.size());
  const double sy = marker_survival(s, y);
  double sum = 0.0;
  for (std::size_t j = 0; j < s.time.size(); ++j) {
    if (s.time[j] >= t) sum += kernel(marker_survival(s, s.marker[j]) - sy, lambda);
  }
  return sum / n;
}

double conditional_survival(const Sample& s, double lambda, double y, double t) {
  const double n = static_cast<double>(s.time.size());
  const double sy = marker_survival(s, y);
  double prod = 1.0;
  for (std::size_t i = 0; i < s.time.size(); ++i) {
    if (s.status[i] != 1 || s.time[i] > t) continue;
    const double k = kernel(marker_survival(s, s.marker[i]) - sy, lambda);
    if (k == 0.0) continue;
    prod *= std::clamp(1.0 - k / (n * at_risk(s, lambda, y, s.time[i])), 0.0, 1.0);
  }
  return prod;
}

double xi(const Sample& s, double lambda, std::size_t i, double t) {
  const double y = s.marker[i];
  const double st = conditional_survival(s, lambda, y, t);
  if (st == 0.0) return 0.0;
  const double upper = std::min(t, s.time[i]);
  std::set<double> jumps;
  for (std::size_t k = 0; k < s.time.size(); ++k) {
    if (s.status[k] == 1 && s.time[k] <= upper) jumps.insert(s.time[k]);
  }
  double integral = 0.0;
  double log_prev = 0.0;
  for (double u : jumps) {
    const double log_now = std::log(conditional_survival(s, lambda, y, u));
    integral += (log_now - log_prev) / at_risk(s, lambda, y, u);
    log_prev = log_now;
  }
  if (s.status[i] == 1 && s.time[i] <= t) integral += 1.0 / at_risk(s, lambda, y, s.time[i]);
  return -st * integral;
}

double pair_sum(std::span<const double> survivals, std::span<const double> markers,
                const Threshold& y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    for (std::size_t j = 0; j < markers.size(); ++j) {
      if (i == j) continue;
      if (markers[i] > markers[j] && y.exceeded_by(markers[j])) {
        sum += (1.0 - survivals[i]) * survivals[j];
      }
    }
  }
  return sum;
}

std::vector<double> influence_column(std::span<const double> survivals, std::span<const double> xi,
                                     std::span<const double> markers, const Threshold& q,
                                     double alpha) {
  const std::size_t n = markers.size();
  const double nd = static_cast<double>(n);
  auto phi = [&](std::size_t i, std::size_t j) {
    return markers[i] > markers[j] && q.exceeded_by(markers[j]);
  };
  auto h = [&](std::size_t i, std::size_t j) {
    return phi(i, j) ? (1.0 - survivals[i]) * survivals[j] : 0.0;
  };

  double big_h = 0.0;
  double st = 0.0;
  double s_q = 0.0;
  double sy_q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) big_h += h(i, j);
    }
    st += survivals[i];
    if (q.exceeded_by(markers[i])) {
      s_q += survivals[i];
      sy_q += 1.0;
    }
  }
  big_h /= nd * nd;
  st /= nd;
  s_q /= nd;
  sy_q /= nd;
  const double eta = big_h * (2.0 * st - 1.0) / (st - st * st);

  std::vector<double> psi(n);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    double sy_i = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row += h(i, j) + h(j, i);
      if (markers[j] > markers[i]) sy_i += 1.0;
    }
    sy_i /= nd;
    const bool above = q.exceeded_by(markers[i]);
    const double u = row / nd - 2.0 * big_h + (above ? (sy_i - s_q) * xi[i] : 0.0);
    const double v_q = (above ? survivals[i] + xi[i] : 0.0) - s_q;
    const double v_all = survivals[i] + xi[i] - st;
    psi[i] = (u + eta * v_all + (alpha * st - sy_q) * (v_q - alpha * v_all)) / (st * (1.0 - st));
  }
  return psi;
}

std::vector<double> loo_residuals(const Sample& s, double lambda) {
  const std::size_t n = s.time.size();
  std::vector<double> e(n);
  std::vector<double> time;
  std::vector<int> status;
  std::vector<double> marker;
  for (std::size_t i = 0; i < n; ++i) {
    time.clear();
    status.clear();
    marker.clear();
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      time.push_back(s.time[k]);
      status.push_back(s.status[k]);
      marker.push_back(s.marker[k]);
    }
    const Sample rest{time, status, marker};
    e[i] = 1.0 - conditional_survival(rest, lambda, s.marker[i], s.time[i]);
  }
  return e;
}

}  // namespace tdpauc::reference
