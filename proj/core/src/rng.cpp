// SPDX-License-Identifier: Apache-2.0
#include "wetlearn/rng.hpp"

#include <cmath>
#include <numbers>

namespace wet {

double CounterRng::gaussian() {
  if (hasSpare_) {
    hasSpare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniformPositive()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_ = radius * std::sin(angle);
  hasSpare_ = true;
  return radius * std::cos(angle);
}

std::complex<double> CounterRng::complexGaussian(double variance) {
  const double sd = std::sqrt(variance / 2.0);
  const double re = gaussian();
  const double im = gaussian();
  return {sd * re, sd * im};
}

}  // namespace wet
