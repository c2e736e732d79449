#include "designforge/manifold.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "designforge/errors.hpp"
#include "designforge/parallel.hpp"

namespace designforge {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAngleSlack = 1e-12;
constexpr double kUnitTol = 1e-9;

double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

// Signed difference in (-pi, pi].
double angle_diff(double a, double b) {
  double d = std::fmod(b - a, kTwoPi);
  if (d > kPi) d -= kTwoPi;
  if (d <= -kPi) d += kTwoPi;
  return d;
}

// Area of a disk of radius rho centered in the square [-a, a]^2.
double disk_in_square(double rho, double a) {
  if (rho <= 0) return 0.0;
  if (rho <= a) return kPi * rho * rho;
  if (rho >= a * std::sqrt(2.0)) return 4 * a * a;
  const double seg = rho * rho * std::acos(a / rho) - a * std::sqrt(rho * rho - a * a);
  return kPi * rho * rho - 4 * seg;
}

}  // namespace

Manifold Manifold::torus(int d) {
  if (d < 1 || d > 3) throw InputError("torus dimension must be 1, 2 or 3");
  return Manifold(ManifoldKind::Torus, d);
}

Manifold Manifold::sphere2() { return Manifold(ManifoldKind::Sphere2, 2); }

Manifold Manifold::from_tag(std::string_view tag) {
  if (tag == "circle" || tag == "torus1") return torus(1);
  if (tag == "torus2") return torus(2);
  if (tag == "torus3") return torus(3);
  if (tag == "sphere2") return sphere2();
  throw InputError("unknown manifold '" + std::string(tag) + "'");
}

std::string Manifold::tag() const {
  if (kind_ == ManifoldKind::Sphere2) return "sphere2";
  return "torus" + std::to_string(dim_);
}

double Manifold::diameter() const {
  return kind_ == ManifoldKind::Sphere2 ? kPi : kPi * std::sqrt(static_cast<double>(dim_));
}

double Manifold::injectivity_radius() const { return kPi; }

void Manifold::validate(const Point& x) const {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) throw InputError("non-finite coordinate");
  if (kind_ == ManifoldKind::Torus) {
    if (x.size() != dim_) throw InputError("torus" + std::to_string(dim_) + " point needs " +
                                           std::to_string(dim_) + " coordinates");
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] < -kAngleSlack || x[i] > kTwoPi + kAngleSlack)
        throw InputError("torus angle out of range [0, 2pi]");
    return;
  }
  if (x.size() == 3) {
    if (std::abs(x.norm() - 1.0) > kUnitTol) throw InputError("sphere point is not a unit vector");
    return;
  }
  if (x.size() != 2) throw InputError("sphere point needs (theta, phi) or (x, y, z)");
  if (x[0] < -kAngleSlack || x[0] > kPi + kAngleSlack) throw InputError("theta out of range [0, pi]");
  if (x[1] < -kAngleSlack || x[1] > kTwoPi + kAngleSlack) throw InputError("phi out of range [0, 2pi]");
}

Point Manifold::canonical(const Point& x) const {
  if (kind_ == ManifoldKind::Torus) {
    Point y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = wrap_angle(x[i]);
    return y;
  }
  if (x.size() == 3) return from_cartesian(x.normalized());
  double th = std::fmod(x[0], kTwoPi);
  if (th < 0) th += kTwoPi;
  double ph = x[1];
  if (th > kPi) {
    th = kTwoPi - th;
    ph += kPi;
  }
  Point y(2);
  y << th, wrap_angle(ph);
  return y;
}

double Manifold::distance(const Point& x0, const Point& y0) const {
  validate(x0);
  validate(y0);
  if (kind_ == ManifoldKind::Torus) {
    double s = 0;
    for (int i = 0; i < dim_; ++i) {
      const double d = angle_diff(x0[i], y0[i]);
      s += d * d;
    }
    return std::sqrt(s);
  }
  const Eigen::Vector3d a = x0.size() == 3 ? Eigen::Vector3d(x0.normalized()) : to_cartesian(x0);
  const Eigen::Vector3d b = y0.size() == 3 ? Eigen::Vector3d(y0.normalized()) : to_cartesian(y0);
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

Point Manifold::exp_map(const Point& x0, const Vec& v, double t) const {
  validate(x0);
  const Point x = canonical(x0);
  if (v.size() != dim_) throw InputError("tangent vector has wrong dimension");
  if (kind_ == ManifoldKind::Torus) return canonical(x + t * v);
  const Eigen::Vector3d p = to_cartesian(x);
  const Eigen::Vector3d a = t * frame_to_ambient(x, v);
  const double s = a.norm();
  if (s == 0.0) return x;
  const Eigen::Vector3d q = std::cos(s) * p + std::sin(s) * (a / s);
  return from_cartesian(q.normalized());
}

Vec Manifold::log_map(const Point& x0, const Point& y0) const {
  validate(x0);
  validate(y0);
  const Point x = canonical(x0);
  const Point y = canonical(y0);
  if (kind_ == ManifoldKind::Torus) {
    Vec v(dim_);
    for (int i = 0; i < dim_; ++i) v[i] = angle_diff(x[i], y[i]);
    return v;
  }
  const Eigen::Vector3d p = to_cartesian(x);
  const Eigen::Vector3d q = to_cartesian(y);
  const Eigen::Vector3d w = q - p.dot(q) * p;
  const double wn = w.norm();
  const double ang = std::atan2(wn, p.dot(q));
  if (wn < 1e-300) {
    Vec v = Vec::Zero(2);
    if (ang > 1.0) v[0] = ang;  // antipodal: any direction is minimizing
    return v;
  }
  return ambient_to_frame(x, w * (ang / wn));
}

Point Manifold::random_point(Rng& rng) const {
  Point x(dim_);
  if (kind_ == ManifoldKind::Torus) {
    for (int i = 0; i < dim_; ++i) x[i] = rng.uniform(0.0, kTwoPi);
    return x;
  }
  const double c = rng.uniform(-1.0, 1.0);
  x << std::acos(c), rng.uniform(0.0, kTwoPi);
  return x;
}

QuadratureRule Manifold::quadrature(int resolution) const {
  if (resolution < 1) throw InputError("quadrature resolution must be >= 1");
  QuadratureRule q;
  if (kind_ == ManifoldKind::Torus) {
    std::size_t total = 1;
    for (int i = 0; i < dim_; ++i) total *= static_cast<std::size_t>(resolution);
    q.nodes.reserve(total);
    const double w = 1.0 / static_cast<double>(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
      Point x(dim_);
      std::size_t rest = flat;
      for (int i = dim_ - 1; i >= 0; --i) {
        x[i] = kTwoPi * static_cast<double>(rest % resolution) / resolution;
        rest /= resolution;
      }
      q.nodes.push_back(x);
    }
    q.weights.assign(total, w);
    q.exactness = resolution - 1;
    return q;
  }
  std::vector<double> gx, gw;
  gauss_legendre(resolution, gx, gw);
  const int nphi = 2 * resolution;
  q.nodes.reserve(static_cast<std::size_t>(resolution) * nphi);
  for (int i = 0; i < resolution; ++i) {
    const double th = std::acos(gx[i]);
    for (int j = 0; j < nphi; ++j) {
      Point x(2);
      x << th, kTwoPi * j / nphi;
      q.nodes.push_back(x);
      q.weights.push_back(gw[i] / 2.0 / nphi);
    }
  }
  q.exactness = 2 * resolution - 1;
  return q;
}

double Manifold::ball_measure(double r) const {
  if (r <= 0) return 0.0;
  if (kind_ == ManifoldKind::Sphere2) return r >= kPi ? 1.0 : (1.0 - std::cos(r)) / 2.0;
  switch (dim_) {
    case 1:
      return std::min(r, kPi) / kPi;
    case 2:
      return disk_in_square(r, kPi) / (kTwoPi * kTwoPi);
    default: {
      const double zmax = std::min(r, kPi);
      auto slice = [&](double z) { return disk_in_square(std::sqrt(std::max(0.0, r * r - z * z)), kPi); };
      const double vol =
          2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(slice, 0.0, zmax, 15, 1e-14);
      return vol / (kTwoPi * kTwoPi * kTwoPi);
    }
  }
}

Eigen::Vector3d Manifold::to_cartesian(const Point& x) {
  if (x.size() == 3) return Eigen::Vector3d(x[0], x[1], x[2]);
  const double st = std::sin(x[0]);
  return {st * std::cos(x[1]), st * std::sin(x[1]), std::cos(x[0])};
}

Point Manifold::from_cartesian(const Eigen::Vector3d& p) {
  Point x(2);
  x << std::atan2(std::hypot(p[0], p[1]), p[2]), wrap_angle(std::atan2(p[1], p[0]));
  return x;
}

Eigen::Vector3d Manifold::frame_to_ambient(const Point& x, const Vec& v) const {
  if (kind_ == ManifoldKind::Torus) {
    Eigen::Vector3d a = Eigen::Vector3d::Zero();
    for (int i = 0; i < dim_; ++i) a[i] = v[i];
    return a;
  }
  const Point y = x.size() == 3 ? from_cartesian(x) : x;
  const double ct = std::cos(y[0]), st = std::sin(y[0]);
  const double cp = std::cos(y[1]), sp = std::sin(y[1]);
  const Eigen::Vector3d e_th(ct * cp, ct * sp, -st);
  const Eigen::Vector3d e_ph(-sp, cp, 0.0);
  return v[0] * e_th + v[1] * e_ph;
}

Vec Manifold::ambient_to_frame(const Point& x, const Eigen::Vector3d& a) const {
  Vec v(dim_);
  if (kind_ == ManifoldKind::Torus) {
    for (int i = 0; i < dim_; ++i) v[i] = a[i];
    return v;
  }
  const Point y = x.size() == 3 ? from_cartesian(x) : x;
  const double ct = std::cos(y[0]), st = std::sin(y[0]);
  const double cp = std::cos(y[1]), sp = std::sin(y[1]);
  v << ct * cp * a[0] + ct * sp * a[1] - st * a[2], -sp * a[0] + cp * a[1];
  return v;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    nodes[i] = -z;
    nodes[n - 1 - i] = z;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

std::vector<BallProfileRow> ball_measure_profile(const Manifold& m, const std::vector<double>& radii,
                                                 int centers, int samples, std::uint64_t seed) {
  for (double r : radii)
    if (!(r > 0) || r > m.diameter() + 1e-12) throw InputError("ball radius must lie in (0, diameter]");
  if (centers < 1 || samples < 1) throw InputError("centers and samples must be positive");
  std::vector<std::vector<double>> measure(radii.size(), std::vector<double>(centers));
  parallel_for(static_cast<std::size_t>(centers), [&](std::size_t c) {
    Rng rng = Rng::stream(seed, c);
    const Point x = m.random_point(rng);
    std::vector<long> hits(radii.size(), 0);
    for (int s = 0; s < samples; ++s) {
      const double d = m.distance(x, m.random_point(rng));
      for (std::size_t i = 0; i < radii.size(); ++i)
        if (d < radii[i]) ++hits[i];
    }
    for (std::size_t i = 0; i < radii.size(); ++i)
      measure[i][c] = static_cast<double>(hits[i]) / samples;
  });
  std::vector<BallProfileRow> rows;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double scale = std::pow(radii[i], m.dim());
    const auto [lo, hi] = std::minmax_element(measure[i].begin(), measure[i].end());
    rows.push_back({radii[i], *lo / scale, *hi / scale});
  }
  return rows;
}

double radial_integral_ratio(const Manifold& m, const Point& x, double L, int resolution) {
  if (!(L > 0)) throw InputError("L must be positive");
  const int d = m.dim();
  if (resolution <= 0) {
    // kink at x needs a fine grid; keep the node count bounded in d > 1
    resolution = d == 1 ? static_cast<int>(64 * L) : static_cast<int>(std::max(64.0, 12 * L));
  }
  const QuadratureRule q = m.quadrature(resolution);
  double lhs = 0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i)
    lhs += q.weights[i] * std::pow(1.0 + L * m.distance(x, q.nodes[i]), -d - 1);
  // integral_0^inf t^{d-1} (1 + L t)^{-d-1} dt = 1 / (d L^d)
  return lhs * d * std::pow(L, d);
}

}  // namespace designforge
