#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

#include "designforge/random.hpp"

namespace designforge {

// Points and tangent components are at most three numbers.
// Torus: angles in [0, 2pi). Sphere: (theta, phi), theta in [0, pi], phi in [0, 2pi).
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
// Tangent components in the global frame: angle frame on the torus,
// (e_theta, e_phi = d_phi / sin theta) on the sphere.
using Vec = Point;

enum class ManifoldKind { Torus, Sphere2 };

struct TangentVector {
  Point base;
  Vec components;
  // Both global frames are orthonormal, so the metric norm is the Euclidean one.
  double norm() const { return components.norm(); }
};

struct QuadratureRule {
  std::vector<Point> nodes;
  std::vector<double> weights;
  // Eigenfunctions with lambda <= exactness integrate exactly.
  int exactness = 0;
};

class Manifold {
 public:
  static Manifold torus(int d);
  static Manifold sphere2();
  // "circle"/"torus1", "torus2", "torus3", "sphere2".
  static Manifold from_tag(std::string_view tag);

  ManifoldKind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::string tag() const;
  double diameter() const;
  // Distance below which geodesics from a point are minimizing.
  double injectivity_radius() const;

  // Throws InputError unless x has the right size and range.
  void validate(const Point& x) const;
  // Reduce angles into their canonical range (wraps phi, reflects theta).
  Point canonical(const Point& x) const;

  double distance(const Point& x, const Point& y) const;
  Point exp_map(const Point& x, const Vec& v, double t = 1.0) const;
  // Tangent vector at x whose exp reaches y, with norm = distance(x, y).
  // Undefined direction at the cut locus; some minimizing direction is returned.
  Vec log_map(const Point& x, const Point& y) const;

  Point random_point(Rng& rng) const;
  QuadratureRule quadrature(int resolution) const;

  // Closed-form measure of a geodesic ball (center-independent on these models).
  double ball_measure(double r) const;

  // Sphere embedding helpers.
  static Eigen::Vector3d to_cartesian(const Point& x);
  static Point from_cartesian(const Eigen::Vector3d& p);
  // Frame components at x <-> ambient R^3 vectors (sphere); identity on the torus.
  Eigen::Vector3d frame_to_ambient(const Point& x, const Vec& v) const;
  Vec ambient_to_frame(const Point& x, const Eigen::Vector3d& a) const;

  bool operator==(const Manifold& o) const { return kind_ == o.kind_ && dim_ == o.dim_; }

 private:
  Manifold(ManifoldKind k, int d) : kind_(k), dim_(d) {}
  ManifoldKind kind_;
  int dim_;
};

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

struct BallProfileRow {
  double r;
  double min_ratio;  // min over centers of mu(B)/r^d
  double max_ratio;
};

// Monte-Carlo estimate of mu(B(x, r)) at random centers, `samples` draws each.
std::vector<BallProfileRow> ball_measure_profile(const Manifold& m, const std::vector<double>& radii,
                                                 int centers, int samples, std::uint64_t seed);

// Quadrature of f(|x - y|) dmu(y) against the radial integral of f(t) t^{d-1};
// returns the ratio (the empirical c6 for that f).
double radial_integral_ratio(const Manifold& m, const Point& x, double L, int resolution);

}  // namespace designforge
