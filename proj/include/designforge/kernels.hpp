#pragma once

#include <memory>
#include <vector>

#include "designforge/cutoff.hpp"
#include "designforge/spectral.hpp"

namespace designforge {

struct KernelSpec {
  Manifold manifold = Manifold::torus(1);
  CutoffFunction cutoff;
  double L = 1.0;
  std::vector<int> left_fields;   // frame fields applied at x (0 to 2)
  std::vector<int> right_fields;  // frame fields applied at y (0 to 2)
  // Multiplies term k by lambda_k^{-2p}; the constant term is then dropped.
  int inverse_laplacian_power = 0;
  bool drop_constant = false;

  // Growth exponent K = d + l + m - 2p of the on-diagonal value.
  double K() const;
};

// sum_k H(lambda_k / L) lambda_k^{-2p} X..phi_k(x) Y..phi_k(y), summed over the
// support of H.
class LocalizedKernel {
 public:
  explicit LocalizedKernel(KernelSpec spec);

  const KernelSpec& spec() const { return spec_; }
  const SpectralBasis& basis() const { return *basis_; }
  // Spectral multiplier of each basis element.
  const Eigen::VectorXd& multipliers() const { return mult_; }

  double operator()(const Point& x, const Point& y) const;
  // One extra frame derivative at y, for each frame index.
  Vec gradient_y(const Point& x, const Point& y) const;
  // Bound on floating-point noise in a single evaluation.
  double noise_floor() const { return noise_; }

 private:
  KernelSpec spec_;
  BasisPtr basis_;
  Eigen::VectorXd mult_;
  double noise_ = 0.0;
};

double localized_kernel(const KernelSpec& spec, const Point& x, const Point& y);

struct DecayRow {
  double L, dist, value, bound, ratio;
};

struct DecayReport {
  std::vector<DecayRow> rows;
  double C9_hat = 0.0;
  double exponent = 0.0;  // fitted decay exponent of the upper envelope
  int S = 0;              // exponent used in the bound
  double K = 0.0;
  bool degenerate = false;  // too few points above the noise floor to fit
  std::size_t points_fitted = 0;
};

// Distances r with L r in [2, 50], clipped to the diameter, along the first
// frame direction from x.
std::vector<double> decay_distance_grid(const Manifold& m, double L, int count);

DecayReport decay_profile(const KernelSpec& spec, const Point& x, const std::vector<double>& distances);

struct CauchySchwarzCheck {
  double value = 0.0;  // |kernel(x, x)|
  double rhs = 0.0;    // e sqrt(k1 k2) max|H| (aL)^K with a the cutoff support
  double kappa1 = 0.0;
  double kappa2 = 0.0;
};

// Empirical kappa_i = sup_t t^{A_i/2} sum e^{-lambda^2 t} |X..phi_k(x)|^2 over the
// grid plus t = (aL)^{-2}.
CauchySchwarzCheck diagonal_cauchy_schwarz(const KernelSpec& spec, const Point& x, std::vector<double> t_grid);

// H_Y with Hhat_Y(xi) = Hhat(xi) V(xi / Y); V is evaluated as the transform profile.
CutoffFunction truncate_HY(const CutoffFunction& H, const CutoffFunction& V, double Y);

struct TruncationRow {
  double Y = 0.0;
  double sup_diff = 0.0;  // max over the distance grid of |K_H - K_HY|
  double c_hat = 0.0;     // sup_diff * Y^S / L^K
};

std::vector<TruncationRow> truncation_table(const KernelSpec& spec, const CutoffFunction& V,
                                            const std::vector<double>& Ys, const Point& x,
                                            const std::vector<double>& distances);

struct GradientKernelRow {
  double L, dist, actual, model, ratio;  // model = L^{d+1} (1 + L r)^{-d-1}
};

struct DyadicRow {
  double L, dist, lhs, rhs;
  bool holds;
};

struct GradientKernelReport {
  std::vector<GradientKernelRow> rows;
  std::vector<double> kappa_per_L;
  double kappa_hat = 0.0;
  double kappa_spread = 0.0;  // max / min of kappa_per_L
  bool dominated = false;     // kappa_hat * model >= actual everywhere
  bool diagonal_ok = false;   // actual(x, x) <= 2^{d+2} L^{d+1} kappa_hat
  std::vector<DyadicRow> dyadic;
  bool dyadic_ok = false;
};

// W_L = sum_{lambda > 0} h(lambda/L) lambda^{-2} phi(x) phi(y) with the plateau h.
KernelSpec w_kernel_spec(const Manifold& m, double L);

// |grad_y X X W_L(x, y)| with X the first frame field, against
// kappa L^{d+1} (1 + L r)^{-d-1}.
GradientKernelReport gradient_kernel_bound(const Manifold& m, const std::vector<double>& L_grid, const Point& x,
                                           const std::vector<double>& scaled_distances, int dyadic_S);

// sum_{j>=0} (2L 2^{-j})^{d+1} (1 + 2L 2^{-j} r)^{-S} against 2^{d+3} L^{d+1} (1 + L r)^{-d-1}.
DyadicRow dyadic_check(int d, int S, double L, double r);

}  // namespace designforge
