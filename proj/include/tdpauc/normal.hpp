#pragma once

namespace tdpauc {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile: Acklam's rational approximation followed by one
/// Halley step against erfc, giving close to full double precision on
/// (0, 1). Throws ParameterError outside the open interval.
double normal_quantile(double p);

/// Two-sided critical value z_{(1-level)/2}, e.g. 1.959964 for level 0.95.
double two_sided_z(double level);

}  // namespace tdpauc
