#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "designforge/node_set.hpp"
#include "designforge/partition.hpp"
#include "designforge/spectral.hpp"

namespace designforge {

// v_eps: equals eps/2 below eps/4, equals u above eps, smooth and
// nondecreasing in between, and v_eps(u) >= u.
class Smoother {
 public:
  explicit Smoother(double eps);
  double eps() const { return eps_; }
  double operator()(double u) const;
  double derivative(double u) const;

 private:
  double eps_;
  std::vector<double> gx_, gw_;
};

// Quadrature adapted to a non-smooth integrand |P| or |grad P|. On the circle
// the panels split at the zeros, so the rule is exact up to rounding.
// Elsewhere one coordinate at a time is integrated by dyadic Gauss-Legendre
// panels, refined until each panel agrees with its halves to 1e-8 relative of
// the total; lines are split at the zeros of P. On Torus(3) only `value` is
// filled (the node set would be tens of millions of points).
struct AbsQuadrature {
  std::vector<Point> nodes;
  std::vector<double> weights;
  double value = 0.0;
  int resolution = 0;
  bool converged = false;
};

AbsQuadrature abs_value_quadrature(const DiffusionPolynomial& P);
AbsQuadrature gradient_norm_quadrature(const DiffusionPolynomial& P);

// |int|P| - (1/N) sum|P(x_j)|| / (L N^{-1/d} int|P|), L the bandwidth of P.
double mz_value_ratio(const DiffusionPolynomial& P, const NodeSet& nodes);
// Same with |grad P|; P must be non-constant.
double mz_gradient_ratio(const DiffusionPolynomial& P, const NodeSet& nodes);

// Signed errors |(1/N) sum P(x_j) - int P| and |(1/N) sum grad P(x_j)| (frame
// components; meaningful on the torus where the frame is global).
struct SignedErrors {
  double value = 0.0;
  double gradient = 0.0;
};
SignedErrors mz_signed_errors(const DiffusionPolynomial& P, const NodeSet& nodes);

// Node rules for the survey. corner: a boundary point of each cell.
// extremal: per cell the maximizer or minimizer of |P| (or |grad P|), whichever
// makes the error larger.
enum class MzRule { Center, Random, Corner, Extremal };
MzRule mz_rule_from_string(const std::string& name);
std::string to_string(MzRule rule);

// Max over T = grad P / v_eps(|grad P|) of T P - |grad P| at the given points (<= 0 expected).
double t_field_excess(const DiffusionPolynomial& P, const Smoother& v, const std::vector<Point>& points);

struct MzRow {
  double L = 0.0;
  int N = 0;
  std::string rule;
  int trial = 0;
  double ratio_value = 0.0;
  double ratio_grad = 0.0;
};

struct MzCell {
  double L = 0.0;
  int N = 0;
  double C_hat = 0.0;   // max value ratio, after ascent
  double C3_hat = 0.0;  // max gradient ratio, after ascent
};

struct MzReport {
  std::string manifold;
  int trials = 0;
  std::vector<MzRow> rows;
  std::vector<MzCell> cells;
  double C_hat = 0.0;
  double C3_hat = 0.0;
  double C_spread = 0.0;   // max / min of C_hat over cells
  double C3_spread = 0.0;
  double center_below_corner = 0.0;  // fraction of trials where center ratio <= corner ratio
};

// Gaussian P in Pi_L^0 per trial and rule; the worst trial of each cell and rule
// is refined by ascent_steps gradient steps on the ratio in coefficient space.
// Every pair needs L <= N^{1/d}.
MzReport mz_survey(const Manifold& m, const std::vector<double>& L_grid, const std::vector<int>& N_grid, int trials,
                   std::uint64_t seed, const std::vector<MzRule>& rules, int ascent_steps = 50);

std::string mz_csv(const MzReport& r);

}  // namespace designforge
