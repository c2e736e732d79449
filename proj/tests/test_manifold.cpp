#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "designforge/errors.hpp"
#include "designforge/manifold.hpp"
#include "oracles.hpp"

using namespace designforge;
using std::numbers::pi;

namespace {

Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) p[i++] = c;
  return p;
}

}  // namespace

TEST(Manifold, DistanceExamples) {
  const auto s = Manifold::sphere2();
  EXPECT_NEAR(s.distance(pt({0, 0}), pt({pi, 0})), pi, 1e-15);
  EXPECT_NEAR(s.distance(pt({pi / 2, 0}), pt({pi / 2, pi / 2})), pi / 2, 1e-15);
  const auto t = Manifold::torus(1);
  EXPECT_NEAR(t.distance(pt({0.2}), pt({6.0})), 2 * pi - 5.8, 1e-14);
}

TEST(Manifold, InvalidCoordinatesRejected) {
  const auto s = Manifold::sphere2();
  EXPECT_THROW(s.distance(pt({4.0, 0}), pt({0, 0})), InputError);
  EXPECT_THROW(s.distance(pt({1.0, 0, 0.1}), pt({0, 0})), InputError);
  EXPECT_NO_THROW(s.distance(pt({1.0, 0, 1e-12}), pt({0, 0})));
  const auto t = Manifold::torus(2);
  EXPECT_THROW(t.distance(pt({-0.5, 0}), pt({0, 0})), InputError);
  EXPECT_THROW(t.distance(pt({0.5}), pt({0, 0})), InputError);
  EXPECT_THROW(Manifold::from_tag("klein"), InputError);
}

TEST(Manifold, CartesianInputMatchesAngles) {
  const auto s = Manifold::sphere2();
  EXPECT_NEAR(s.distance(pt({0, 0, 1}), pt({pi / 2, pi / 2})), pi / 2, 1e-15);
}

TEST(Manifold, ExpMapExamples) {
  const auto t = Manifold::torus(1);
  Point v(1);
  v << 1.0;
  EXPECT_NEAR(t.exp_map(pt({0}), v, pi / 2)[0], pi / 2, 1e-15);
  const auto s = Manifold::sphere2();
  const Point y = s.exp_map(pt({0, 0}), pt({1, 0}), pi / 2);
  EXPECT_NEAR(y[0], pi / 2, 1e-14);
  EXPECT_NEAR(y[1], 0.0, 1e-14);
  for (const auto& m : {t, s, Manifold::torus(2)}) {
    Rng rng(3);
    const Point x = m.random_point(rng);
    const Point z = m.exp_map(x, Vec::Zero(m.dim()), 1.0);
    EXPECT_NEAR(m.distance(x, z), 0.0, 1e-15);
  }
}

TEST(Manifold, ExpMapPreservesSpeed) {
  for (const auto& m : {Manifold::torus(1), Manifold::torus(2), Manifold::sphere2()}) {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
      const Point x = m.random_point(rng);
      Vec v(m.dim());
      for (int a = 0; a < m.dim(); ++a) v[a] = rng.normal();
      const double t = rng.uniform(0.0, 0.99 * m.injectivity_radius() / v.norm());
      EXPECT_NEAR(m.distance(x, m.exp_map(x, v, t)), t * v.norm(), 1e-10);
    }
  }
}

TEST(Manifold, LogMapInvertsExp) {
  for (const auto& m : {Manifold::torus(2), Manifold::sphere2()}) {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      const Point x = m.random_point(rng);
      const Point y = m.random_point(rng);
      const Vec v = m.log_map(x, y);
      EXPECT_NEAR(v.norm(), m.distance(x, y), 1e-12);
      EXPECT_NEAR(m.distance(m.exp_map(x, v, 1.0), y), 0.0, 1e-9);
    }
  }
}

TEST(Manifold, MetricAxiomsOnRandomTriples) {
  for (const auto& m : {Manifold::torus(1), Manifold::torus(2), Manifold::torus(3), Manifold::sphere2()}) {
    Rng rng(17);
    for (int i = 0; i < 1000; ++i) {
      const Point x = m.random_point(rng), y = m.random_point(rng), z = m.random_point(rng);
      const double dxy = m.distance(x, y), dyx = m.distance(y, x);
      EXPECT_DOUBLE_EQ(dxy, dyx);
      EXPECT_GE(m.distance(x, z) + m.distance(z, y) - dxy, -1e-12);
      EXPECT_LE(dxy, m.diameter() + 1e-12);
      EXPECT_EQ(m.distance(x, x), 0.0);
    }
  }
}

TEST(Manifold, QuadratureTorusExactness) {
  const auto t = Manifold::torus(1);
  const auto q = t.quadrature(8);
  ASSERT_EQ(q.nodes.size(), 8u);
  EXPECT_EQ(q.exactness, 7);
  for (double w : q.weights) EXPECT_DOUBLE_EQ(w, 1.0 / 8);
  for (int k = 1; k <= 7; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * std::cos(k * q.nodes[i][0]);
    EXPECT_NEAR(s, 0.0, 1e-15) << k;
  }
}

TEST(Manifold, QuadratureSphereIntegratesHarmonicsToZero) {
  const auto s = Manifold::sphere2();
  const auto q = s.quadrature(12);
  double total = 0;
  for (double w : q.weights) total += w;
  EXPECT_NEAR(total, 1.0, 1e-14);
  for (int l = 1; l <= 11; ++l) {
    for (int m = -l; m <= l; ++m) {
      std::complex<double> acc = 0;
      for (std::size_t i = 0; i < q.nodes.size(); ++i)
        acc += q.weights[i] * oracle::complex_ylm(l, m, q.nodes[i][0], q.nodes[i][1]);
      EXPECT_LT(std::abs(acc), 1e-13) << l << "," << m;
    }
  }
}

TEST(Manifold, BallMeasureClosedForms) {
  EXPECT_DOUBLE_EQ(Manifold::sphere2().ball_measure(pi / 2), 0.5);
  EXPECT_NEAR(Manifold::sphere2().ball_measure(0.1), (1 - std::cos(0.1)) / 2, 1e-17);
  EXPECT_NEAR(Manifold::sphere2().ball_measure(0.1), 0.0024979, 1e-7);
  EXPECT_DOUBLE_EQ(Manifold::torus(1).ball_measure(pi / 4), 0.25);
  EXPECT_NEAR(Manifold::torus(2).ball_measure(1.0), pi / (4 * pi * pi), 1e-15);
  EXPECT_NEAR(Manifold::torus(2).ball_measure(pi * std::sqrt(2.0)), 1.0, 1e-12);
  EXPECT_NEAR(Manifold::torus(3).ball_measure(1.0), 4.0 / 3 * pi / std::pow(2 * pi, 3), 1e-13);
  EXPECT_NEAR(Manifold::torus(3).ball_measure(pi * std::sqrt(3.0)), 1.0, 1e-10);
}

TEST(Manifold, BallMeasureMonteCarloMatchesClosedForm) {
  for (const auto& m : {Manifold::torus(1), Manifold::torus(2), Manifold::sphere2()}) {
    const std::vector<double> radii{0.3, 1.0, 2.0};
    const int samples = 40000;
    const auto rows = ball_measure_profile(m, radii, 4, samples, 9);
    ASSERT_EQ(rows.size(), radii.size());
    for (const auto& row : rows) {
      const double exact = m.ball_measure(row.r);
      const double se = std::sqrt(exact * (1 - exact) / samples);
      const double scale = std::pow(row.r, m.dim());
      EXPECT_NEAR(row.min_ratio * scale, exact, 5 * se + 1e-12);
      EXPECT_NEAR(row.max_ratio * scale, exact, 5 * se + 1e-12);
    }
  }
}

TEST(Manifold, RandomPointUniformity) {
  Rng a(42);
  std::complex<double> mean = 0;
  const auto t = Manifold::torus(1);
  for (int i = 0; i < 100000; ++i) mean += std::polar(1.0, t.random_point(a)[0]);
  EXPECT_LT(std::abs(mean / 1e5), 0.02);
  Rng b(42);
  double c = 0;
  const auto s = Manifold::sphere2();
  for (int i = 0; i < 100000; ++i) c += std::cos(s.random_point(b)[0]);
  EXPECT_LT(std::abs(c / 1e5), 0.02);
  Rng r1(7), r2(7);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(s.random_point(r1), s.random_point(r2));
}

TEST(Manifold, RadialIntegralConstantStable) {
  for (const auto& m : {Manifold::torus(1), Manifold::torus(2), Manifold::sphere2()}) {
    Rng rng(2);
    const Point x = m.random_point(rng);
    std::vector<double> ratios;
    for (double L : {4.0, 8.0, 16.0}) ratios.push_back(radial_integral_ratio(m, x, L, 0));
    const double lo = *std::min_element(ratios.begin(), ratios.end());
    const double hi = *std::max_element(ratios.begin(), ratios.end());
    EXPECT_GT(lo, 0.0);
    EXPECT_LE(hi / lo, 1.2 / 0.8) << m.tag();
  }
}

TEST(Manifold, GaussLegendreIntegratesPolynomials) {
  std::vector<double> x, w;
  gauss_legendre(10, x, w);
  for (int k = 0; k <= 19; ++k) {
    double s = 0;
    for (int i = 0; i < 10; ++i) s += w[i] * std::pow(x[i], k);
    const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
    EXPECT_NEAR(s, exact, 1e-14) << k;
  }
}
