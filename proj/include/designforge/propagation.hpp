#pragma once

#include <vector>

#include "designforge/manifold.hpp"

namespace designforge {

// Even multiplier G(lambda) = (1/pi) int_0^a Ghat(xi) cos(lambda xi) dxi whose
// transform is supported in [-a, a], a = 2r. Values are closed forms.
class BandLimitedMultiplier {
 public:
  enum class Shape { Zero, PolyBump, Fejer };

  // Ghat(xi) = (1 - (xi/2r)^2)_+^q.
  static BandLimitedMultiplier poly_bump(double r, int q);
  // Ghat(xi) = (1 - |xi|/2r)_+.
  static BandLimitedMultiplier fejer(double r);
  static BandLimitedMultiplier zero();

  double operator()(double lambda) const;
  double transform(double xi) const;
  double half_width() const { return a_; }
  Shape shape() const { return shape_; }
  int power() const { return q_; }

 private:
  BandLimitedMultiplier(Shape s, double a, int q) : shape_(s), a_(a), q_(q) {}
  Shape shape_;
  double a_;
  int q_;
};

struct PropagationValue {
  double value = 0.0;
  // Circle only: sum_m Ghat(2 pi m - u), the exact value by Poisson summation.
  bool has_poisson = false;
  double poisson = 0.0;
  std::size_t terms = 0;
};

// sum_k G(lambda_k) phi_k(x) phi_k(y) on a torus by direct summation over the
// lattice, truncated where a tail estimate drops below 1e-13 (or at a size cap).
PropagationValue propagation_check(const Manifold& m, const BandLimitedMultiplier& G, const Point& x,
                                   const Point& y);

struct HeatBoundRow {
  double t, K, bound;
  bool holds;
};

struct HeatBoundReport {
  double r = 0.0;
  double coefficient_l1 = 0.0;     // sum |a_n|
  double max_w_on_vanishing = 0.0;  // max |W(t)| over [0, 2r]
  std::vector<HeatBoundRow> rows;
  bool all_hold = false;
};

// W(t) = (1 - ((t - pi)/(pi - 2r))^2)_+^q vanishes on [0, 2r]; with cosine
// coefficients a_n, checks |sum a_n e^{-n^2 t}| <= e exp(-r^2/t) sum |a_n|.
HeatBoundReport propagation_heat_bound(double r, const std::vector<double>& t_grid, int q);

}  // namespace designforge
