#include "adtgen/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace adtgen {

namespace {

// Series expansion, good for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x), good for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double lower_regularized_gamma(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("lower_regularized_gamma: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double chi_square_cdf(double x, int dof) {
  if (x <= 0.0) return 0.0;
  return lower_regularized_gamma(0.5 * dof, 0.5 * x);
}

double chi_square_quantile(double p, int dof) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) throw std::invalid_argument("chi_square_quantile: p must be in (0,1)");
  double hi = static_cast<double>(dof) + 10.0;
  while (chi_square_cdf(hi, dof) < p) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi_square_cdf(mid, dof) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double chi_square_statistic(const std::vector<std::uint64_t>& observed,
                            const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi_square_statistic: size mismatch");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected[i];
    if (e <= 0.0) throw std::invalid_argument("chi_square_statistic: nonpositive expected count");
    const double d = static_cast<double>(observed[i]) - e;
    stat += d * d / e;
  }
  return stat;
}

double chi_square_statistic_uniform(const std::vector<std::uint64_t>& observed) {
  std::uint64_t total = 0;
  for (auto c : observed) total += c;
  const double e = static_cast<double>(total) / static_cast<double>(observed.size());
  std::vector<double> expected(observed.size(), e);
  return chi_square_statistic(observed, expected);
}

ChiSquareResult chi_square_uniform_test(const std::vector<std::uint64_t>& observed,
                                        double alpha) {
  ChiSquareResult r{};
  r.dof = static_cast<int>(observed.size()) - 1;
  r.statistic = chi_square_statistic_uniform(observed);
  r.critical = chi_square_quantile(1.0 - alpha, r.dof);
  r.pass = r.statistic < r.critical;
  return r;
}

}  // namespace adtgen
