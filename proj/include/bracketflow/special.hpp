#ifndef BRACKETFLOW_SPECIAL_HPP
#define BRACKETFLOW_SPECIAL_HPP

#include <cstddef>
#include <span>

namespace bracketflow {

/// 2/y - coth(y/2), the mean of x = cos theta under the density
/// proportional to exp(-(y/2) x) on [-1, 1]. Series -y/6 + y^3/360 below
/// y = 1e-6; tends to -1 as y -> +inf.
double langevin_mean(double y);

/// Variance of x under the same density.
double langevin_variance(double y);

/// CDF of x on [-1, 1] for density proportional to exp(-a x).
double exponential_x_cdf(double x, double a);

/// Upper tail P(chi^2_dof > statistic).
double chi_square_survival(double statistic, double dof);

struct ChiSquareResult {
  double statistic{0};
  int dof{0};
  double p_value{1};
  std::size_t merged_bins{0};
};

/// Pearson chi-square goodness of fit. Adjacent bins are merged until each
/// expected count is at least min_expected; dof = (merged bins - 1).
ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected, double min_expected = 5.0);

}  // namespace bracketflow

#endif  // BRACKETFLOW_SPECIAL_HPP
