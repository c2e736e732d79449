#pragma once

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>

namespace designforge::detail {

// (2/z)^nu J_nu(z), finite at z = 0 where it equals 1 / Gamma(nu + 1).
inline double bessel_ratio(double nu, double z) {
  z = std::abs(z);
  if (z < 3.0) {
    const double w = -0.25 * z * z;
    double term = 1.0 / std::tgamma(nu + 1.0), sum = term;
    for (int k = 1; k < 200; ++k) {
      term *= w / (k * (nu + k));
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return std::pow(2.0 / z, nu) * boost::math::cyl_bessel_j(nu, z);
}

// int_0^1 (1 - s^2)^q cos(z s) ds.
inline double poly_bump_cosine_integral(int q, double z) {
  return 0.5 * std::sqrt(std::numbers::pi) * std::tgamma(q + 1.0) * bessel_ratio(q + 0.5, z);
}

}  // namespace designforge::detail
