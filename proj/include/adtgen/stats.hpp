#pragma once

#include <cstdint>
#include <vector>

namespace adtgen {

/// Lower regularized incomplete gamma P(a, x).
double lower_regularized_gamma(double a, double x);

/// CDF of the chi-square distribution with `dof` degrees of freedom.
double chi_square_cdf(double x, int dof);

/// Quantile (inverse CDF) of the chi-square distribution.
double chi_square_quantile(double p, int dof);

/// Pearson statistic of observed counts against explicit expected counts.
double chi_square_statistic(const std::vector<std::uint64_t>& observed,
                            const std::vector<double>& expected);

/// Pearson statistic against the uniform distribution over the bins.
double chi_square_statistic_uniform(const std::vector<std::uint64_t>& observed);

struct ChiSquareResult {
  double statistic;
  double critical;
  int dof;
  bool pass;  // statistic below the critical value at the given level
};

/// Tests observed counts against uniform at significance alpha
/// (pass = statistic < quantile(1 - alpha, bins - 1)).
ChiSquareResult chi_square_uniform_test(const std::vector<std::uint64_t>& observed,
                                        double alpha);

}  // namespace adtgen
