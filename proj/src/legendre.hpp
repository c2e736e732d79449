#pragma once

#include <vector>

namespace designforge::detail {

// Associated Legendre functions N_l^m(cos theta) with Condon-Shortley phase,
// normalized so N_l^0 and sqrt2 N_l^m cos(m phi) have unit mean square on the
// sphere. Also M_l^m = N_l^m / sin theta (m >= 1, finite at the poles) and
// dN_l^m / dtheta.
class LegendreTable {
 public:
  void compute(int lmax, double theta, bool with_derivative);

  int lmax() const { return lmax_; }
  static int idx(int l, int m) { return l * (l + 1) / 2 + m; }
  double n(int l, int m) const { return n_[idx(l, m)]; }
  double over_sin(int l, int m) const { return m_[idx(l, m)]; }
  double dtheta(int l, int m) const { return dn_[idx(l, m)]; }

 private:
  int lmax_ = -1;
  std::vector<double> n_, m_, dn_;
};

}  // namespace designforge::detail
