#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace predrate {

/// Gaussian AR(1) transition: Y' | Y = y ~ N(theta * y, noise_sd^2).
struct MarkovParam {
  double theta = 0.0;
  double noise_sd = 1.0;

  bool is_stationary() const { return std::abs(theta) < 1.0 && noise_sd > 0.0; }

  double transition_mean(double previous) const { return theta * previous; }

  /// Standard deviation of the stationary law N(0, noise_sd^2 / (1 - theta^2)).
  double stationary_sd() const {
    if (!is_stationary()) throw std::domain_error("no stationary density");
    return noise_sd / std::sqrt(1.0 - theta * theta);
  }
};

inline double normal_log_pdf(double y, double mean, double sd) {
  const double z = (y - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace predrate
