#pragma once

#include <span>
#include <utility>
#include <vector>

#include "designforge/manifold.hpp"

namespace designforge {

struct HeatSum {
  double value = 0.0;
  // Magnitude of the discarded terms with lambda_max < lambda <= lambda_check.
  double truncation_estimate = 0.0;
  double lambda_max = 0.0;
  std::size_t terms = 0;
};

// sum_k exp(-lambda_k^2 t) X...phi_k(x) Y...phi_k(y) with frame fields given by index.
// Truncated where exp(-lambda^2 t) drops below 1e-16.
HeatSum heat_sum(const Manifold& m, double t, const Point& x, const Point& y,
                 std::span<const int> left_fields, std::span<const int> right_fields);

struct PointPair {
  Point x;
  Point y;
};

struct GreinerFit {
  int left_count = 0;
  int right_count = 0;
  double c7_hat = 0.0;       // smallest constant making the bound hold at every point
  double c8_hat = 0.0;       // fitted Gaussian rate
  double t_exponent = 0.0;   // fitted power of t
  double nominal_exponent = 0.0;  // -(d + l + m)/2
  double residual_rms = 0.0;
  bool bound_holds = false;
  std::size_t points_used = 0;
  std::size_t points_dropped = 0;
};

// Least-squares fit log|H| = a + beta log t - c8 |x-y|^2 / t over the grid.
// Points with |H| < 1e-12 carry no usable sign of the Gaussian and are dropped.
// Field counts use the first frame field repeatedly.
GreinerFit greiner_fit(const Manifold& m, int left_count, int right_count,
                       const std::vector<double>& t_grid, const std::vector<PointPair>& pairs);

// Same fit on the parabolic grid y = exp_x(s sqrt(t) e_0), s in s_grid. There the
// Euclidean kernel is exactly t^{-(d+l+m)/2} F(s), so the fitted power of t is
// not contaminated by the distance-dependent prefactor of derivative kernels.
GreinerFit greiner_fit_parabolic(const Manifold& m, int left_count, int right_count,
                                 const std::vector<double>& t_grid, const Point& x,
                                 const std::vector<double>& s_grid);

struct PowerLawFit {
  double exponent = 0.0;
  double nominal = 0.0;
  double prefactor = 0.0;
  std::vector<std::pair<double, double>> samples;  // (t, envelope)
};

// Power law of the near-diagonal envelope max_{|x-y| <= 3 sqrt t} |H(t, x, y)|.
// For (0,0) and (1,1) the maximum sits on the diagonal; for odd total order
// the diagonal value vanishes on these homogeneous models, so the envelope is used.
PowerLawFit diagonal_power_law(const Manifold& m, int left_count, int right_count,
                               const std::vector<double>& t_grid, const Point& x);

}  // namespace designforge
