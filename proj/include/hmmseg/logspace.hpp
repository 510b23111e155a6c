#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace hmmseg {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(0) is -inf, never NaN.
inline double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_sum_exp(std::span<const double> xs) {
  double hi = kNegInf;
  for (double x : xs) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

}  // namespace hmmseg
