#pragma once

#include <array>
#include <compare>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "designforge/manifold.hpp"

namespace designforge {

// Torus: freq = integer frequency vector (first nonzero entry positive), tag 'c'/'s'
// for sqrt2 cos(n.x) / sqrt2 sin(n.x); the constant has n = 0, tag 'c'.
// Sphere: freq = (l, m, 0) with m >= 0; tag 'c' for N_l^m cos(m phi) (and m = 0),
// 's' for the sine companion.
struct EigenLabel {
  std::array<int, 3> freq{0, 0, 0};
  char tag = 'c';
  auto operator<=>(const EigenLabel&) const = default;
};

struct EigenPair {
  std::size_t index = 0;
  double lambda = 0.0;         // sqrt of the Laplace eigenvalue
  long long lambda_sq = 0;     // exact integer lambda^2, used for ordering
  EigenLabel label;
};

std::string label_to_string(const Manifold& m, const EigenLabel& label);

// All eigenpairs with lambda <= L, ordered by lambda then label.
std::vector<EigenPair> enumerate_basis(const Manifold& m, double L);

// Frame-derivative tables at one point. Column a of grad holds e_a phi_k;
// column a*d+b of hess holds e_a(e_b phi_k).
struct BasisJet {
  Eigen::VectorXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd hess;
};

class SpectralBasis {
 public:
  SpectralBasis(const Manifold& m, double L);

  const Manifold& manifold() const { return m_; }
  double bandwidth() const { return L_; }
  std::size_t size() const { return pairs_.size(); }
  const std::vector<EigenPair>& pairs() const { return pairs_; }
  // Index of the pair with this label; throws InputError when absent.
  std::size_t index_of(const EigenLabel& label) const;

  // order 0: values; 1: + gradients; 2: + second frame derivatives.
  // On the sphere, order 2 throws NumericalError within 1e-8 of a pole.
  void evaluate(const Point& x, int order, BasisJet& out) const;
  Eigen::VectorXd values(const Point& x) const;
  Eigen::MatrixXd gradients(const Point& x) const;
  // X_{f[0]} X_{f[1]} ... phi_k(x) for frame indices f (at most two).
  Eigen::VectorXd derivatives(const Point& x, std::span<const int> fields) const;

 private:
  Manifold m_;
  double L_;
  std::vector<EigenPair> pairs_;
  int lmax_ = 0;  // sphere only
};

using BasisPtr = std::shared_ptr<const SpectralBasis>;

inline BasisPtr make_basis(const Manifold& m, double L) { return std::make_shared<const SpectralBasis>(m, L); }

// Element of Pi_L: sum_k c_k phi_k over the given basis.
class DiffusionPolynomial {
 public:
  DiffusionPolynomial(BasisPtr basis, Eigen::VectorXd coefficients);
  // i.i.d. standard normal coefficients; the constant term is zero when zero_mean.
  static DiffusionPolynomial random(BasisPtr basis, Rng& rng, bool zero_mean);

  const SpectralBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  const Eigen::VectorXd& coefficients() const { return c_; }
  const Manifold& manifold() const { return basis_->manifold(); }
  double bandwidth() const { return basis_->bandwidth(); }

  double value(const Point& x) const;
  TangentVector gradient(const Point& x) const;
  bool in_zero_mean_space() const;
  double l2_norm() const { return c_.norm(); }
  DiffusionPolynomial scaled(double s) const { return DiffusionPolynomial(basis_, s * c_); }

 private:
  BasisPtr basis_;
  Eigen::VectorXd c_;
};

}  // namespace designforge
