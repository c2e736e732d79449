#pragma once

#include <cmath>
#include <type_traits>
#include <vector>

namespace designforge::detail {

// Truncated Taylor series f(x0 + e) = sum_k c[k] e^k, used to evaluate
// derivatives of the cutoff profiles exactly.
class Jet {
 public:
  Jet() = default;
  Jet(double v, int order) : c_(static_cast<std::size_t>(order) + 1, 0.0) { c_[0] = v; }

  static Jet variable(double x0, int order) {
    Jet j(x0, order);
    if (order >= 1) j.c_[1] = 1.0;
    return j;
  }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  double value() const { return c_[0]; }
  double coeff(int k) const { return c_[static_cast<std::size_t>(k)]; }
  // k-th derivative at x0.
  double derivative(int k) const {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return c_[static_cast<std::size_t>(k)] * f;
  }

  Jet operator-() const {
    Jet r = *this;
    for (auto& v : r.c_) v = -v;
    return r;
  }
  friend Jet operator+(Jet a, const Jet& b) {
    for (std::size_t i = 0; i < a.c_.size(); ++i) a.c_[i] += b.c_[i];
    return a;
  }
  friend Jet operator-(Jet a, const Jet& b) {
    for (std::size_t i = 0; i < a.c_.size(); ++i) a.c_[i] -= b.c_[i];
    return a;
  }
  friend Jet operator+(Jet a, double s) {
    a.c_[0] += s;
    return a;
  }
  friend Jet operator+(double s, Jet a) { return a + s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) + s; }
  friend Jet operator-(Jet a, double s) {
    a.c_[0] -= s;
    return a;
  }
  friend Jet operator*(Jet a, double s) {
    for (auto& v : a.c_) v *= s;
    return a;
  }
  friend Jet operator*(double s, Jet a) { return a * s; }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(0.0, a.order());
    for (std::size_t k = 0; k < r.c_.size(); ++k) {
      double s = 0;
      for (std::size_t j = 0; j <= k; ++j) s += a.c_[j] * b.c_[k - j];
      r.c_[k] = s;
    }
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r(0.0, a.order());
    for (std::size_t k = 0; k < r.c_.size(); ++k) {
      double s = a.c_[k];
      for (std::size_t j = 1; j <= k; ++j) s -= b.c_[j] * r.c_[k - j];
      r.c_[k] = s / b.c_[0];
    }
    return r;
  }
  friend Jet operator/(double s, const Jet& b) { return Jet(s, b.order()) / b; }

  friend Jet exp(const Jet& f) {
    Jet g(std::exp(f.c_[0]), f.order());
    for (std::size_t k = 1; k < g.c_.size(); ++k) {
      double s = 0;
      for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * f.c_[j] * g.c_[k - j];
      g.c_[k] = s / static_cast<double>(k);
    }
    return g;
  }

 private:
  std::vector<double> c_;
};

inline double value_of(double v) { return v; }
inline double value_of(const Jet& j) { return j.value(); }

template <class T>
T constant_like(const T& like, double v) {
  if constexpr (std::is_same_v<T, double>) {
    (void)like;
    return v;
  } else {
    return T(v, like.order());
  }
}

// exp(-1/t) for t > 0. Below 1e-3 every derivative up to order 12
// underflows, so the jet is returned as exactly zero.
template <class T>
T flat(const T& t) {
  if (value_of(t) <= 1e-3) return constant_like(t, 0.0);
  return exp(-1.0 / t);
}

template <class T>
T smooth_step(const T& t) {
  const double v = value_of(t);
  if (v <= 0.0) return constant_like(t, 0.0);
  if (v >= 1.0) return constant_like(t, 1.0);
  const T a = flat(t);
  const T b = flat(1.0 - t);
  return a / (a + b);
}

}  // namespace designforge::detail
