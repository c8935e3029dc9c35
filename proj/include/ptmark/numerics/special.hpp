#pragma once

#include <cstddef>

namespace ptmark {

/// Regularized lower incomplete gamma P(s, x). Series for x < s+1, Lentz continued
/// fraction for the complement otherwise.
double reg_lower_incomplete_gamma(double s, double x);

/// Regularized upper incomplete gamma Q(s, x) = 1 − P(s, x), computed directly when small.
double reg_upper_incomplete_gamma(double s, double x);

/// Central χ² CDF with k degrees of freedom.
double chi2_cdf(double x, double k);

/// Non-central χ² CDF as a Poisson mixture of central χ² CDFs. Summation starts at the
/// Poisson mode and walks outward until the remaining Poisson mass on each side is
/// below 1e-20. Values above 1/2 are returned as one minus the upper-tail mixture.
/// Throws NumericalError if the walk takes more than 100000 terms.
double noncentral_chi2_cdf(double x, double k, double lambda_nc);

}  // namespace ptmark
