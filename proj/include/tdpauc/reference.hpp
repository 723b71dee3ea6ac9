#pragma once

// Serial, formula-by-formula implementations kept as oracles for the fast
// kernels. They recompute every sum from scratch (O(n^2) or worse per
// value) and share no code with the production paths beyond the data types.

#include "tdpauc/data.hpp"
#include "tdpauc/ranks.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace tdpauc::reference {

struct Sample {
  std::span<const double> time;
  std::span<const int> status;
  std::span<const double> marker;
};

Sample view(const Cohort& cohort);

/// S_Y(y) = n^-1 sum_j I(Y_j > y).
double marker_survival(const Sample& s, double y);

/// K_lambda(u) = (2 lambda)^-1 I(|u| < lambda).
double kernel(double u, double lambda);

/// S_X(t|y) = n^-1 sum_j I(X_j >= t) K_lambda(S_Y(Y_j) - S_Y(y)).
double at_risk(const Sample& s, double lambda, double y, double t);

/// Product over events X_i <= t of clamp(1 - K/(n S_X(X_i|y)), 0, 1).
double conditional_survival(const Sample& s, double lambda, double y, double t);

/// -S_T(t|Y_i) * integral_0^t S_X^{-1}(u|Y_i) dM_i(u|Y_i), summed over the
/// jump points of M_i. Returns 0 when S_T(t|Y_i) = 0.
double xi(const Sample& s, double lambda, std::size_t i, double t);

/// sum_{i != j} (1 - s_i) s_j I(Y_i > Y_j > y) by the double loop.
double pair_sum(std::span<const double> survivals, std::span<const double> markers,
                const Threshold& y);

/// Influence values at one time from the literal pair definitions of
/// h_ij, H, U_i, V_i and eta. `survivals` and `xi` are the columns at t.
std::vector<double> influence_column(std::span<const double> survivals, std::span<const double> xi,
                                     std::span<const double> markers, const Threshold& q,
                                     double alpha);

/// Leave-one-out residuals 1 - S_T^{(-i)}(X_i|Y_i) computed by physically
/// dropping subject i and re-running conditional_survival on the rest.
std::vector<double> loo_residuals(const Sample& s, double lambda);

}  // namespace tdpauc::reference
