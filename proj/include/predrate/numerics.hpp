#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace predrate {

/// log(sum_k exp(values[k])). Returns -inf for an empty span or when every
/// entry is -inf.
double log_sum_exp(std::span<const double> values);

/// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b);

/// Normalized probabilities exp(v - log_sum_exp(v)).
std::vector<double> softmax(std::span<const double> log_values);

/// Sample mean and standard error of the mean (plug-in, n - 1 divisor).
struct MeanAndError {
  double mean = 0.0;
  double standard_error = 0.0;
};
MeanAndError mean_and_error(std::span<const double> xs);

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> xs, double q);

}  // namespace predrate
