#pragma once

#include "tdpauc/data.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace tdpauc::testing {

// Random cohort with roughly `censor_prob` censoring. Markers are rounded to
// `marker_digits` decimals when positive, which produces ties.
inline Cohort random_cohort(std::mt19937_64& rng, std::size_t n, double censor_prob,
                            int marker_digits = -1) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  std::vector<SurvivalRecord> rec(n);
  bool any_event = false;
  for (auto& r : rec) {
    r.marker = normal(rng);
    if (marker_digits >= 0) {
      const double s = std::pow(10.0, marker_digits);
      r.marker = std::round(r.marker * s) / s;
    }
    r.time = std::exp(-0.5 * r.marker + 0.8 * normal(rng));
    r.status = unif(rng) < censor_prob ? 0 : 1;
    any_event = any_event || r.status == 1;
  }
  if (!any_event) rec[0].status = 1;
  return Cohort(std::move(rec));
}

// Textbook product-limit estimate from grouped death and at-risk counts.
inline double kaplan_meier(const std::vector<double>& time, const std::vector<int>& status, double t) {
  std::vector<double> deaths;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (status[i] == 1 && time[i] <= t) deaths.push_back(time[i]);
  }
  std::sort(deaths.begin(), deaths.end());
  deaths.erase(std::unique(deaths.begin(), deaths.end()), deaths.end());
  double s = 1.0;
  for (double u : deaths) {
    double d = 0.0;
    double r = 0.0;
    for (std::size_t i = 0; i < time.size(); ++i) {
      if (time[i] >= u) r += 1.0;
      if (time[i] == u && status[i] == 1) d += 1.0;
    }
    s *= 1.0 - d / r;
  }
  return s;
}

inline std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index k) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, k);
  return out;
}

}  // namespace tdpauc::testing
