#pragma once

#include <cstddef>
#include <span>

namespace issuelab {

struct Correlation {
  double r = 0;
  double p = 1;  // two-sided
  std::size_t n = 0;
};

/// Sample Pearson coefficient with its two-sided p-value from Student's t
/// with n - 2 degrees of freedom. |r| == 1 gives p == 0.
///
/// Throws std::invalid_argument on a length mismatch or n < 3, and
/// UndefinedCorrelation when either series has a single distinct value.
Correlation pearson(std::span<const double> x, std::span<const double> y);

/// Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0,1].
double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with `df`
/// degrees of freedom.
double student_t_two_sided(double t, double df);

}  // namespace issuelab
