#pragma once

#include <memory>
#include <string>
#include <vector>

namespace designforge {

enum class CutoffKind {
  Zero,
  Plateau,           // 1 on [-1,1], 0 off [-2,2]
  Annulus,           // u^{-2}(h(2u) - h(4u)), supported on 1/4 <= |u| <= 1
  Mollifier,         // h(2u): 1 on [-1/2,1/2], 0 off [-1,1]
  PolyBump,          // (1 - u^2)_+^{S+1}, exactly C^S
  Tabulated,         // cubic B-spline through user samples
  FourierTruncated,  // H_Y from Fourier multiplication
};

// Even real function of u, evaluable with derivatives up to smoothness().
class CutoffFunction {
 public:
  class Impl;

  CutoffFunction();  // the zero cutoff
  static CutoffFunction make(CutoffKind kind, int S);
  // Samples of H on the uniform grid u_i = i * umax / (n - 1); zero beyond umax. S <= 2.
  static CutoffFunction tabulated(std::vector<double> samples, double umax);
  static CutoffFunction from_impl(std::shared_ptr<const Impl> impl);

  CutoffKind kind() const;
  std::string name() const;
  int smoothness() const;
  // H vanishes (or is below 1e-17 relative) for |u| > support().
  double support() const;

  double operator()(double u) const;
  double derivative(double u, int order) const;
  double max_abs() const;
  // Hhat(xi) = int H(u) e^{-i u xi} du.
  double fourier_transform(double xi) const;

 private:
  std::shared_ptr<const Impl> impl_;
};

class CutoffFunction::Impl {
 public:
  virtual ~Impl() = default;
  virtual CutoffKind kind() const = 0;
  virtual std::string name() const = 0;
  virtual int smoothness() const = 0;
  virtual double support() const = 0;
  virtual double derivative(double u, int order) const = 0;
  virtual double max_abs() const = 0;
  virtual double fourier_transform(double xi) const;
};

CutoffKind cutoff_kind_from_string(const std::string& name);

}  // namespace designforge
