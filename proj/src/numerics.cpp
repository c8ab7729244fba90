#include "ccf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "ccf/errors.hpp"

namespace ccf {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_pdf(double z) {
  constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("normal_quantile: p must lie in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double student_t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("student_t_quantile: p must lie in (0,1)");
  if (!(df > 0.0)) throw DomainError("student_t_quantile: degrees of freedom must be positive");
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  if (std::isinf(lower) || std::isinf(upper)) return lower == upper ? lower : 0.5 * lower + 0.5 * upper;
  return 0.5 * (lower + upper);
}

double order_statistic(std::vector<double> values, std::size_t rank) {
  if (rank == 0 || rank > values.size()) throw ArgumentError("order_statistic: rank out of range");
  std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
  return values[rank - 1];
}

std::size_t robust_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(x));
}

}  // namespace ccf
