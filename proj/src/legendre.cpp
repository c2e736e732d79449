#include "legendre.hpp"

#include <cmath>

namespace designforge::detail {

namespace {

// Fills out[idx(l,m)] for one m by the upward recurrence in l, given the seed at l = m.
void climb(int lmax, int m, double x, double seed, std::vector<double>& out) {
  out[LegendreTable::idx(m, m)] = seed;
  if (m + 1 > lmax) return;
  double prev2 = seed;
  double prev1 = std::sqrt(2.0 * m + 3.0) * x * seed;
  out[LegendreTable::idx(m + 1, m)] = prev1;
  for (int l = m + 2; l <= lmax; ++l) {
    const double ll = l, mm = m;
    const double a = std::sqrt((4 * ll * ll - 1) / (ll * ll - mm * mm));
    const double b = std::sqrt(((ll - 1) * (ll - 1) - mm * mm) / (4 * (ll - 1) * (ll - 1) - 1));
    const double cur = a * (x * prev1 - b * prev2);
    out[LegendreTable::idx(l, m)] = cur;
    prev2 = prev1;
    prev1 = cur;
  }
}

}  // namespace

void LegendreTable::compute(int lmax, double theta, bool with_derivative) {
  lmax_ = lmax;
  const std::size_t size = static_cast<std::size_t>((lmax + 1) * (lmax + 2) / 2);
  n_.assign(size, 0.0);
  m_.assign(size, 0.0);
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  double nmm = 1.0;   // N_m^m
  double mmm = 0.0;   // N_m^m / sin
  for (int m = 0; m <= lmax; ++m) {
    if (m == 1) {
      mmm = -std::sqrt(1.5);
      nmm = mmm * s;
    } else if (m > 1) {
      const double f = -std::sqrt((2.0 * m + 1) / (2.0 * m));
      mmm *= f * s;
      nmm *= f * s;
    }
    climb(lmax, m, x, nmm, n_);
    if (m >= 1) climb(lmax, m, x, mmm, m_);
  }
  if (!with_derivative) return;
  dn_.assign(size, 0.0);
  for (int l = 1; l <= lmax; ++l) {
    dn_[idx(l, 0)] = std::sqrt(l * (l + 1.0)) * n_[idx(l, 1)];
    for (int m = 1; m <= l; ++m) {
      const double lower = m <= l - 1 ? m_[idx(l - 1, m)] : 0.0;
      dn_[idx(l, m)] = l * x * m_[idx(l, m)] -
                       std::sqrt((2.0 * l + 1) * (l - m) * (l + m) / (2.0 * l - 1)) * lower;
    }
  }
}

}  // namespace designforge::detail
