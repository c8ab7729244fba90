#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ccf {

// Extended-precision running sum for the G-sums behind sigma^2 and the
// moment estimators.
class WideSum {
 public:
  void add(double x) { sum_ += static_cast<long double>(x); }
  void add(long double x) { sum_ += x; }
  long double value() const { return sum_; }
  double mean(std::size_t n) const { return static_cast<double>(sum_ / static_cast<long double>(n)); }

 private:
  long double sum_ = 0.0L;
};

double normal_cdf(double z);
double normal_pdf(double z);
// Phi^{-1}(p), 0 < p < 1 (Boost.Math, erf_inv rational approximations).
double normal_quantile(double p);
// Quantile of Student's t with df degrees of freedom.
double student_t_quantile(double p, double df);

// Median with the average-of-middle-pair convention for even sizes.
// Infinite entries are allowed; NaN entries are skipped. Returns NaN if empty.
double median(std::vector<double> values);

// The `rank`-th smallest value (1-based) of `values`.
double order_statistic(std::vector<double> values, std::size_t rank);

// ceil(x) robust to representation error, e.g. 400 * 0.95 -> 380.
std::size_t robust_ceil(double x);

}  // namespace ccf
