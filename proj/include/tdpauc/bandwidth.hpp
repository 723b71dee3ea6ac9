#pragma once

#include "tdpauc/data.hpp"
#include "tdpauc/parallel.hpp"

#include <span>
#include <vector>

namespace tdpauc {

/// e_i = 1 - S_T^{(-i)}(X_i | Y_i) with the subject's own event indicator.
struct Residual {
  double e = 0.0;
  int status = 0;
};

/// Leave-one-out residuals. Subject i is removed, ranks are recomputed on
/// the remaining n - 1 records, and the conditional product-limit estimate
/// is evaluated at (X_i, Y_i). Requires n >= 3 and 0 < lambda <= 1.
std::vector<Residual> loo_residuals(const Cohort& cohort, double lambda,
                                    Exec exec = Exec::parallel);

/// Sum over uncensored residuals of (S_e(e_i) - (1 - e_i))^2, where S_e is
/// the Kaplan-Meier fit of the residuals evaluated just after its jump at
/// e_i. Throws DegenerateError when no residual is uncensored.
double ise(std::span<const Residual> residuals);

struct BandwidthSelection {
  double chosen = 0.0;
  std::vector<double> grid;
  std::vector<double> scores;
  std::vector<Residual> residuals;  // at the chosen bandwidth
};

/// Minimizes ise(loo_residuals(cohort, lambda)) over the candidates; ties go
/// to the smallest bandwidth.
BandwidthSelection select_bandwidth(const Cohort& cohort, std::span<const double> grid,
                                    Exec exec = Exec::parallel);

/// lo, lo + step, ..., up to hi (inclusive). Values are
/// rounded to 12 decimals so 0.01 * 7 prints as 0.07.
std::vector<double> bandwidth_grid(double lo, double hi, double step);

/// {0.01, 0.02, ..., 0.20}.
std::vector<double> default_bandwidth_grid();

}  // namespace tdpauc
