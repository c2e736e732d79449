#include "designforge/cutoff.hpp"

#include <algorithm>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <numbers>

#include "designforge/errors.hpp"
#include "jet.hpp"
#include "special.hpp"

namespace designforge {

using detail::constant_like;
using detail::Jet;
using detail::value_of;

namespace {

constexpr int kMaxDerivative = 12;

using detail::smooth_step;

template <class T>
T abs_of(const T& u) {
  return value_of(u) < 0 ? -u : u;
}

template <class T>
T plateau(const T& u) {
  return smooth_step(2.0 - abs_of(u));
}

template <class T>
T annulus(const T& u) {
  const double a = std::abs(value_of(u));
  if (a <= 0.25 || a >= 1.0) return constant_like(u, 0.0);
  return (plateau(2.0 * u) - plateau(4.0 * u)) / (u * u);
}

template <class T>
T poly_bump(const T& u, int power) {
  if (std::abs(value_of(u)) >= 1.0) return constant_like(u, 0.0);
  const T base = 1.0 - u * u;
  T r = constant_like(u, 1.0);
  for (int i = 0; i < power; ++i) r = r * base;
  return r;
}

// Fourier transform of an even function by panels narrow enough for the
// oscillation.
double cosine_transform(const std::function<double(double)>& f, double support, double xi) {
  xi = std::abs(xi);
  const double width = xi > 0 ? std::min(support, 8.0 * std::numbers::pi / xi) : support;
  const int panels = std::max(1, static_cast<int>(std::ceil(support / width)));
  double sum = 0;
  for (int p = 0; p < panels; ++p) {
    const double a = support * p / panels, b = support * (p + 1) / panels;
    sum += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double u) { return f(u) * std::cos(u * xi); }, a, b, 12, 1e-14);
  }
  return 2.0 * sum;
}

double scan_max_abs(const CutoffFunction::Impl& f) {
  double m = 0;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) m = std::max(m, std::abs(f.derivative(f.support() * i / n, 0)));
  return m;
}

class ZeroImpl final : public CutoffFunction::Impl {
 public:
  CutoffKind kind() const override { return CutoffKind::Zero; }
  std::string name() const override { return "zero"; }
  int smoothness() const override { return 64; }
  double support() const override { return 0.0; }
  double derivative(double, int) const override { return 0.0; }
  double max_abs() const override { return 0.0; }
  double fourier_transform(double) const override { return 0.0; }
};

class ProfileImpl final : public CutoffFunction::Impl {
 public:
  ProfileImpl(CutoffKind k, int S) : kind_(k), S_(S) {
    max_abs_ = kind_ == CutoffKind::Annulus ? scan_max_abs(*this) : 1.0;
  }
  CutoffKind kind() const override { return kind_; }
  std::string name() const override {
    switch (kind_) {
      case CutoffKind::Plateau: return "plateau";
      case CutoffKind::Annulus: return "annulus";
      case CutoffKind::Mollifier: return "mollifier";
      default: return "poly_bump";
    }
  }
  int smoothness() const override { return S_; }
  double support() const override {
    switch (kind_) {
      case CutoffKind::Plateau: return 2.0;
      default: return 1.0;
    }
  }
  double derivative(double u, int order) const override {
    if (order < 0 || order > kMaxDerivative) throw InputError("derivative order out of range");
    if (order == 0) return eval(u);
    return eval(Jet::variable(u, order)).derivative(order);
  }
  double max_abs() const override { return max_abs_; }
  double fourier_transform(double xi) const override {
    if (kind_ == CutoffKind::PolyBump) return 2.0 * detail::poly_bump_cosine_integral(S_ + 1, xi);
    return Impl::fourier_transform(xi);
  }

 private:
  template <class T>
  T eval(const T& u) const {
    switch (kind_) {
      case CutoffKind::Plateau: return plateau(u);
      case CutoffKind::Annulus: return annulus(u);
      case CutoffKind::Mollifier: return plateau(2.0 * u);
      default: return poly_bump(u, S_ + 1);
    }
  }

  CutoffKind kind_;
  int S_;
  double max_abs_ = 1.0;
};

class TabulatedImpl final : public CutoffFunction::Impl {
 public:
  TabulatedImpl(std::vector<double> samples, double umax)
      : umax_(umax),
        spline_(samples.begin(), samples.end(), 0.0, umax / static_cast<double>(samples.size() - 1), 0.0) {
    for (double s : samples) max_abs_ = std::max(max_abs_, std::abs(s));
  }
  CutoffKind kind() const override { return CutoffKind::Tabulated; }
  std::string name() const override { return "tabulated"; }
  int smoothness() const override { return 2; }
  double support() const override { return umax_; }
  double derivative(double u, int order) const override {
    const double a = std::abs(u);
    if (order < 0 || order > 2) throw InputError("tabulated cutoff has two derivatives");
    if (a > umax_) return 0.0;
    switch (order) {
      case 0: return spline_(a);
      case 1: return u < 0 ? -spline_.prime(a) : spline_.prime(a);
      default: return spline_.double_prime(a);
    }
  }
  double max_abs() const override { return max_abs_; }

 private:
  double umax_;
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
  double max_abs_ = 0.0;
};

}  // namespace

double CutoffFunction::Impl::fourier_transform(double xi) const {
  return cosine_transform([this](double u) { return derivative(u, 0); }, support(), xi);
}

CutoffFunction::CutoffFunction() : impl_(std::make_shared<ZeroImpl>()) {}

CutoffFunction CutoffFunction::make(CutoffKind kind, int S) {
  if (kind == CutoffKind::Zero) return CutoffFunction();
  if (kind == CutoffKind::Tabulated || kind == CutoffKind::FourierTruncated)
    throw InputError("this cutoff kind needs data; use tabulated() or truncate_HY()");
  if (S < 1 || S > kMaxDerivative) throw InputError("cutoff smoothness must be in [1, 12]");
  return from_impl(std::make_shared<ProfileImpl>(kind, S));
}

CutoffFunction CutoffFunction::tabulated(std::vector<double> samples, double umax) {
  if (samples.size() < 4) throw InputError("tabulated cutoff needs at least 4 samples");
  if (!(umax > 0) || !std::isfinite(umax)) throw InputError("tabulated cutoff needs umax > 0");
  for (double s : samples)
    if (!std::isfinite(s)) throw InputError("tabulated cutoff samples must be finite");
  return from_impl(std::make_shared<TabulatedImpl>(std::move(samples), umax));
}

CutoffFunction CutoffFunction::from_impl(std::shared_ptr<const Impl> impl) {
  CutoffFunction f;
  if (impl) f.impl_ = std::move(impl);
  return f;
}

CutoffKind CutoffFunction::kind() const { return impl_->kind(); }
std::string CutoffFunction::name() const { return impl_->name(); }
int CutoffFunction::smoothness() const { return impl_->smoothness(); }
double CutoffFunction::support() const { return impl_->support(); }
double CutoffFunction::operator()(double u) const { return impl_->derivative(u, 0); }
double CutoffFunction::derivative(double u, int order) const { return impl_->derivative(u, order); }
double CutoffFunction::max_abs() const { return impl_->max_abs(); }
double CutoffFunction::fourier_transform(double xi) const { return impl_->fourier_transform(xi); }

CutoffKind cutoff_kind_from_string(const std::string& name) {
  if (name == "zero") return CutoffKind::Zero;
  if (name == "plateau") return CutoffKind::Plateau;
  if (name == "annulus") return CutoffKind::Annulus;
  if (name == "mollifier") return CutoffKind::Mollifier;
  if (name == "poly_bump" || name == "polybump") return CutoffKind::PolyBump;
  throw InputError("unknown cutoff '" + name + "'");
}

}  // namespace designforge
