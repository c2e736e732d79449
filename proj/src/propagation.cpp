#include "designforge/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "designforge/errors.hpp"
#include "special.hpp"

namespace designforge {

namespace {

using std::numbers::pi;

constexpr double kTailTarget = 1e-13;

// Lattice radius whose tail estimate, for |G(lambda)| <= C lambda^{-s}, is
// below kTailTarget; capped to keep the sum tractable.
long long lattice_radius(int d, double C, double s) {
  const long long cap = d == 1 ? 2000000 : (d == 2 ? 1500 : 150);
  if (C == 0.0) return 0;
  if (s <= d) return cap;
  const double sphere = d == 1 ? 2.0 : (d == 2 ? 2 * pi : 4 * pi);
  const double R = std::pow(sphere * C / ((s - d) * kTailTarget), 1.0 / (s - d));
  return std::clamp(static_cast<long long>(std::ceil(R)), 4LL, cap);
}

}  // namespace

BandLimitedMultiplier BandLimitedMultiplier::poly_bump(double r, int q) {
  if (!(r > 0) || !std::isfinite(r)) throw InputError("radius must be positive");
  if (q < 1 || q > 40) throw InputError("poly_bump power must be in [1, 40]");
  return {Shape::PolyBump, 2 * r, q};
}

BandLimitedMultiplier BandLimitedMultiplier::fejer(double r) {
  if (!(r > 0) || !std::isfinite(r)) throw InputError("radius must be positive");
  return {Shape::Fejer, 2 * r, 1};
}

BandLimitedMultiplier BandLimitedMultiplier::zero() { return {Shape::Zero, 0.0, 0}; }

double BandLimitedMultiplier::operator()(double lambda) const {
  lambda = std::abs(lambda);
  switch (shape_) {
    case Shape::Zero: return 0.0;
    case Shape::PolyBump: return a_ / pi * detail::poly_bump_cosine_integral(q_, a_ * lambda);
    case Shape::Fejer: {
      if (a_ * lambda < 1e-8) return a_ / (2 * pi);
      const double s = std::sin(0.5 * a_ * lambda);
      return 2.0 / (pi * a_ * lambda * lambda) * s * s;
    }
  }
  return 0.0;
}

double BandLimitedMultiplier::transform(double xi) const {
  xi = std::abs(xi);
  if (shape_ == Shape::Zero || xi >= a_) return 0.0;
  const double u = xi / a_;
  return shape_ == Shape::Fejer ? 1.0 - u : std::pow(1.0 - u * u, q_);
}

PropagationValue propagation_check(const Manifold& m, const BandLimitedMultiplier& G, const Point& x, const Point& y) {
  if (m.kind() != ManifoldKind::Torus) throw InputError("propagation check runs on the torus only");
  m.validate(x);
  m.validate(y);
  const int d = m.dim();
  const Point u = y - x;
  PropagationValue out;
  if (G.shape() == BandLimitedMultiplier::Shape::Zero) {
    out.has_poisson = d == 1;
    return out;
  }
  const double a = G.half_width();
  // Envelope |G(lambda)| <= C lambda^{-s}.
  double C, s;
  if (G.shape() == BandLimitedMultiplier::Shape::Fejer) {
    C = 2.0 / (pi * a);
    s = 2.0;
  } else {
    const int q = G.power();
    s = q + 1.0;
    C = a / pi * 0.5 * std::sqrt(pi) * std::tgamma(q + 1.0) * std::pow(2.0, q + 0.5) * std::pow(a, -s);
  }
  const long long R = lattice_radius(d, C, s);

  if (d == 1) {
    double sum = 0;
    for (long long n = R; n >= 1; --n) sum += 2.0 * G(static_cast<double>(n)) * std::cos(static_cast<double>(n) * u[0]);
    out.value = sum + G(0.0);
    out.terms = static_cast<std::size_t>(2 * R + 1);
    out.has_poisson = true;
    const long long M = static_cast<long long>(std::ceil((a + std::abs(u[0])) / (2 * pi))) + 1;
    for (long long mm = -M; mm <= M; ++mm) out.poisson += G.transform(2 * pi * static_cast<double>(mm) - u[0]);
    return out;
  }

  // Values depend on |n|^2 only; cache them.
  const long long R2 = R * R;
  std::vector<double> cache(static_cast<std::size_t>(R2) + 1, std::numeric_limits<double>::quiet_NaN());
  auto g = [&](long long q) {
    double& c = cache[static_cast<std::size_t>(q)];
    if (std::isnan(c)) c = G(std::sqrt(static_cast<double>(q)));
    return c;
  };
  double sum = 0;
  std::size_t terms = 0;
  const long long zr = d == 3 ? R : 0;
  for (long long i = -R; i <= R; ++i)
    for (long long j = -R; j <= R; ++j)
      for (long long k = -zr; k <= zr; ++k) {
        const long long q = i * i + j * j + k * k;
        if (q > R2) continue;
        double phase = static_cast<double>(i) * u[0] + static_cast<double>(j) * u[1];
        if (d == 3) phase += static_cast<double>(k) * u[2];
        sum += g(q) * std::cos(phase);
        ++terms;
      }
  out.value = sum;
  out.terms = terms;
  return out;
}

HeatBoundReport propagation_heat_bound(double r, const std::vector<double>& t_grid, int q) {
  if (!(r > 0) || r >= 0.5 * pi) throw InputError("radius must be in (0, pi/2)");
  if (q < 1 || q > 40) throw InputError("power q must be in [1, 40]");
  const double b = pi - 2 * r;
  const int nmax = 4000;
  std::vector<double> a(nmax + 1);
  a[0] = b / pi * detail::poly_bump_cosine_integral(q, 0.0);
  for (int n = 1; n <= nmax; ++n)
    a[static_cast<std::size_t>(n)] = b / pi * (n % 2 ? -2.0 : 2.0) * detail::poly_bump_cosine_integral(q, n * b);

  HeatBoundReport rep;
  rep.r = r;
  for (double v : a) rep.coefficient_l1 += std::abs(v);
  auto series = [&](auto term) {
    double s = 0;
    for (int n = nmax; n >= 0; --n) s += term(n);
    return s;
  };
  for (int i = 0; i <= 200; ++i) {
    const double t = 2 * r * i / 200;
    const double w = series([&](int n) { return a[static_cast<std::size_t>(n)] * std::cos(n * t); });
    rep.max_w_on_vanishing = std::max(rep.max_w_on_vanishing, std::abs(w));
  }
  // Rounding in the series is about eps * sum|a_n|; allow for it.
  const double slack = 64 * std::numeric_limits<double>::epsilon() * rep.coefficient_l1;
  rep.all_hold = true;
  for (double t : t_grid) {
    if (!(t > 0)) throw InputError("heat times must be positive");
    HeatBoundRow row;
    row.t = t;
    row.K = series([&](int n) { return a[static_cast<std::size_t>(n)] * std::exp(-static_cast<double>(n) * n * t); });
    row.bound = std::numbers::e * std::exp(-r * r / t) * rep.coefficient_l1;
    row.holds = std::abs(row.K) <= row.bound + slack;
    rep.all_hold = rep.all_hold && row.holds;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace designforge
