#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "designforge/errors.hpp"
#include "designforge/heat.hpp"
#include "designforge/io.hpp"
#include "designforge/spectral.hpp"
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

Vec unit(int d, int a) {
  Vec v = Vec::Zero(d);
  v[a] = 1.0;
  return v;
}

const std::vector<Manifold>& all_models() {
  static const std::vector<Manifold> ms{Manifold::torus(1), Manifold::torus(2), Manifold::sphere2()};
  return ms;
}

}  // namespace

TEST(Spectral, EnumerationCounts) {
  const auto t1 = enumerate_basis(Manifold::torus(1), 3);
  ASSERT_EQ(t1.size(), 7u);
  EXPECT_EQ(t1[0].lambda, 0.0);
  EXPECT_EQ(enumerate_basis(Manifold::sphere2(), 2).size(), 4u);
  // (+-1,0), (0,+-1) in real form plus the constant
  EXPECT_EQ(enumerate_basis(Manifold::torus(2), 1.2).size(), 5u);
  // |(1,1)| = sqrt2 < 1.5 adds the diagonal frequencies
  EXPECT_EQ(enumerate_basis(Manifold::torus(2), 1.5).size(), 9u);
  EXPECT_EQ(enumerate_basis(Manifold::torus(1), 0).size(), 1u);
}

TEST(Spectral, EnumerationOrderDeterministic) {
  for (const auto& m : all_models()) {
    const auto pairs = enumerate_basis(m, 6.3);
    ASSERT_FALSE(pairs.empty());
    EXPECT_EQ(pairs[0].lambda_sq, 0);
    for (std::size_t k = 1; k < pairs.size(); ++k) {
      EXPECT_EQ(pairs[k].index, k);
      ASSERT_LE(pairs[k - 1].lambda_sq, pairs[k].lambda_sq);
      if (pairs[k - 1].lambda_sq == pairs[k].lambda_sq) {
        EXPECT_LT(pairs[k - 1].label, pairs[k].label);
      }
    }
    const auto again = enumerate_basis(m, 6.3);
    for (std::size_t k = 0; k < pairs.size(); ++k) EXPECT_EQ(pairs[k].label, again[k].label);
  }
}

TEST(Spectral, OrthonormalUnderQuadrature) {
  for (const auto& m : all_models()) {
    const SpectralBasis b(m, 7.0);
    const auto q = m.quadrature(32);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(b.size(), b.size());
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      const Eigen::VectorXd v = b.values(q.nodes[i]);
      gram += q.weights[i] * v * v.transpose();
    }
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff(), 1e-12)
        << m.tag();
  }
}

TEST(Spectral, SphereValuesMatchStdLegendre) {
  const SpectralBasis b(Manifold::sphere2(), 21.0);
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Point x = Manifold::sphere2().random_point(rng);
    const Eigen::VectorXd v = b.values(x);
    for (const auto& p : b.pairs()) {
      const double want = oracle::real_ylm(p.label.freq[0], p.label.freq[1], p.label.tag, x[0], x[1]);
      ASSERT_NEAR(v[p.index], want, 1e-11 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST(Spectral, ConstantAndCriticalPointExamples) {
  for (const auto& m : all_models()) {
    auto basis = make_basis(m, 3.0);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(basis->size());
    c[0] = 1.0;
    const DiffusionPolynomial p(basis, c);
    Rng rng(1);
    const Point x = m.random_point(rng);
    EXPECT_DOUBLE_EQ(p.value(x), 1.0);
    EXPECT_EQ(p.gradient(x).norm(), 0.0);
    EXPECT_FALSE(p.in_zero_mean_space());
  }
  auto basis = make_basis(Manifold::torus(1), 1.0);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis->size());
  c[basis->index_of({{1, 0, 0}, 'c'})] = 1.0;
  const DiffusionPolynomial p(basis, c);
  EXPECT_NEAR(p.value(pt({0.0})), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(p.gradient(pt({0.0})).norm(), 0.0, 1e-15);
  EXPECT_TRUE(p.in_zero_mean_space());
}

TEST(Spectral, FirstDerivativesMatchFiniteDifferences) {
  for (const auto& m : all_models()) {
    const SpectralBasis b(m, 6.0);
    Rng rng(8);
    std::vector<Point> xs;
    for (int i = 0; i < 10; ++i) xs.push_back(m.random_point(rng));
    if (m.kind() == ManifoldKind::Sphere2) {
      xs.push_back(pt({0.0, 0.7}));  // north pole, frame from phi
      xs.push_back(pt({pi, 2.0}));
    }
    const double h = 1e-5;
    for (const auto& x : xs) {
      const Eigen::MatrixXd g = b.gradients(x);
      for (int a = 0; a < m.dim(); ++a) {
        const Eigen::VectorXd fd =
            (b.values(m.exp_map(x, unit(m.dim(), a), h)) - b.values(m.exp_map(x, unit(m.dim(), a), -h))) /
            (2 * h);
        EXPECT_LT((g.col(a) - fd).cwiseAbs().maxCoeff(), 1e-6 * 40) << m.tag() << " a=" << a;
      }
    }
  }
}

TEST(Spectral, SecondDerivativesMatchFiniteDifferences) {
  for (const auto& m : all_models()) {
    const SpectralBasis b(m, 5.0);
    Rng rng(9);
    const double h = 1e-5;
    for (int i = 0; i < 8; ++i) {
      Point x = m.random_point(rng);
      if (m.kind() == ManifoldKind::Sphere2) x[0] = 0.3 + 2.5 * rng.uniform();
      for (int a = 0; a < m.dim(); ++a)
        for (int c = 0; c < m.dim(); ++c) {
          const int fields[2] = {a, c};
          const int inner[1] = {c};
          const Eigen::VectorXd got = b.derivatives(x, fields);
          const Eigen::VectorXd fd = (b.derivatives(m.exp_map(x, unit(m.dim(), a), h), inner) -
                                      b.derivatives(m.exp_map(x, unit(m.dim(), a), -h), inner)) /
                                     (2 * h);
          EXPECT_LT((got - fd).cwiseAbs().maxCoeff(), 1e-4) << m.tag() << " " << a << c;
        }
    }
  }
  const SpectralBasis s(Manifold::sphere2(), 3.0);
  const int fields[2] = {0, 1};
  EXPECT_THROW(s.derivatives(pt({0.0, 1.0}), fields), NumericalError);
}

TEST(Spectral, ParsevalGreenAndEigenRelation) {
  for (const auto& m : all_models()) {
    auto basis = make_basis(m, 6.0);
    Rng rng(21);
    const auto p = DiffusionPolynomial::random(basis, rng, false);
    const auto q = DiffusionPolynomial::random(basis, rng, false);
    const auto rule = m.quadrature(std::max(4 * 6 + 2, 16));
    double l2 = 0, grad_inner = 0, lap_inner = 0;
    Eigen::VectorXd lap_coeffs = p.coefficients();
    for (const auto& pair : basis->pairs()) lap_coeffs[pair.index] *= pair.lambda * pair.lambda;
    const DiffusionPolynomial lap_p(basis, lap_coeffs);
    Eigen::VectorXd grad_sq = Eigen::VectorXd::Zero(basis->size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const auto& x = rule.nodes[i];
      const double w = rule.weights[i];
      l2 += w * p.value(x) * p.value(x);
      grad_inner += w * p.gradient(x).components.dot(q.gradient(x).components);
      lap_inner += w * lap_p.value(x) * q.value(x);
      const Eigen::MatrixXd g = basis->gradients(x);
      grad_sq += w * g.rowwise().squaredNorm();
    }
    const double spectral = lap_coeffs.dot(q.coefficients());
    EXPECT_NEAR(std::sqrt(l2), p.l2_norm(), 1e-12 * p.l2_norm()) << m.tag();
    EXPECT_NEAR(grad_inner, spectral, 1e-10 * std::max(1.0, std::abs(spectral))) << m.tag();
    EXPECT_NEAR(lap_inner, spectral, 1e-10 * std::max(1.0, std::abs(spectral))) << m.tag();
    for (const auto& pair : basis->pairs())
      EXPECT_NEAR(grad_sq[pair.index], pair.lambda * pair.lambda, 1e-10 * (1 + pair.lambda_sq)) << m.tag();
  }
}

TEST(Spectral, WeylCountBracket) {
  struct Case {
    Manifold m;
    double lo, hi;
  };
  // Leading Weyl constants: 2 on the circle, pi on T^2, 1 on S^2.
  const std::vector<Case> cases{{Manifold::torus(1), 2.0, 2.25},
                                {Manifold::torus(2), 0.75 * pi, 1.5 * pi},
                                {Manifold::sphere2(), 0.75, 1.6}};
  for (const auto& c : cases)
    for (double L = 4; L <= 32; L *= 2) {
      const double ratio = static_cast<double>(enumerate_basis(c.m, L).size()) / std::pow(L, c.m.dim());
      EXPECT_GE(ratio, c.lo) << c.m.tag() << " L=" << L;
      EXPECT_LE(ratio, c.hi) << c.m.tag() << " L=" << L;
    }
}

TEST(Spectral, PolynomialJsonRoundTrip) {
  auto basis = make_basis(Manifold::sphere2(), 3.0);
  Rng rng(2);
  const auto p = DiffusionPolynomial::random(basis, rng, true);
  const auto back = polynomial_from_json(polynomial_to_json(p));
  EXPECT_EQ(back.bandwidth(), p.bandwidth());
  EXPECT_EQ(back.coefficients(), p.coefficients());
  EXPECT_TRUE(back.in_zero_mean_space());
}

TEST(Heat, WrappedGaussianOnDiagonal) {
  const auto m = Manifold::torus(1);
  const auto h = heat_sum(m, 0.01, pt({1.0}), pt({1.0}), {}, {});
  EXPECT_NEAR(h.value, std::sqrt(pi / 0.01), 1e-9);
  EXPECT_NEAR(h.value, 17.72454, 1e-5);
  EXPECT_LT(h.truncation_estimate, 1e-12);
  EXPECT_NEAR(std::exp(-h.lambda_max * h.lambda_max * 0.01), 1e-16, 1e-20);
}

TEST(Heat, LargeTimeThreeTermDominance) {
  const auto h = heat_sum(Manifold::torus(1), 1.0, pt({0.4}), pt({0.4}), {}, {});
  EXPECT_NEAR(h.value, 1 + 2 * std::exp(-1.0), 2e-1);
  EXPECT_NEAR(h.value, oracle::wrapped_gaussian(1.0, 0.0), 1e-13);
}

TEST(Heat, AntipodalIsNegligible) {
  const auto h = heat_sum(Manifold::torus(1), 0.01, pt({0.0}), pt({pi}), {}, {});
  EXPECT_LT(std::abs(h.value), 1e-12);
  EXPECT_LE(oracle::wrapped_gaussian(0.01, pi), 17.72454 * std::exp(-pi * pi / 0.04) * 2.1);
}

TEST(Heat, MatchesPoissonOracleWithDerivatives) {
  const auto m = Manifold::torus(1);
  const int one[1] = {0};
  for (double t : {0.02, 0.1, 0.5}) {
    for (double u : {0.0, 0.3, 1.2, 2.9}) {
      const auto h0 = heat_sum(m, t, pt({0.5 + u}), pt({0.5}), {}, {});
      EXPECT_NEAR(h0.value, oracle::wrapped_gaussian(t, u), 1e-10);
      // derivative at x of sum e^{-n^2 t} 2 cos(n (x - y))
      const auto h1 = heat_sum(m, t, pt({0.5 + u}), pt({0.5}), one, {});
      EXPECT_NEAR(h1.value, oracle::wrapped_gaussian_du(t, u), 1e-9);
    }
  }
  EXPECT_THROW(heat_sum(m, 0.0, pt({0.0}), pt({0.0}), {}, {}), InputError);
}

TEST(Heat, SphereDiagonalMatchesAdditionTheorem) {
  const auto m = Manifold::sphere2();
  const double t = 0.05;
  double want = 0;
  for (int l = 0; l < 200; ++l) want += (2 * l + 1) * std::exp(-l * (l + 1.0) * t);
  EXPECT_NEAR(heat_sum(m, t, pt({1.0, 2.0}), pt({1.0, 2.0}), {}, {}).value, want, 1e-10);
  const Point x = pt({0.7, 0.2}), y = pt({1.9, 4.0});
  const double c = Manifold::to_cartesian(x).dot(Manifold::to_cartesian(y));
  double off = 0;
  for (int l = 0; l < 200; ++l) off += (2 * l + 1) * std::exp(-l * (l + 1.0) * t) * oracle::legendre_p(l, c);
  EXPECT_NEAR(heat_sum(m, t, x, y, {}, {}).value, off, 1e-10);
}

TEST(Heat, GreinerFitGaussianRate) {
  std::vector<double> ts;
  for (int i = 0; i < 12; ++i) ts.push_back(std::pow(10.0, -2.0 + 2.0 * i / 11));
  std::vector<PointPair> pairs;
  for (int i = 0; i < 9; ++i) pairs.push_back({pt({0.0}), pt({pi * i / 8})});
  const auto fit = greiner_fit(Manifold::torus(1), 0, 0, ts, pairs);
  EXPECT_GE(fit.c8_hat, 0.20);
  EXPECT_LE(fit.c8_hat, 0.25);
  EXPECT_TRUE(fit.bound_holds);
  std::vector<double> small_t;
  for (int i = 0; i < 10; ++i) small_t.push_back(std::pow(10.0, -3.0 + 2.0 * i / 9));
  std::vector<double> s_grid;
  for (int i = 1; i <= 12; ++i) s_grid.push_back(0.25 * i);
  const auto fit1 = greiner_fit_parabolic(Manifold::torus(1), 1, 0, small_t, pt({0.0}), s_grid);
  EXPECT_GE(fit1.t_exponent, -1.1 * (1 + 1) / 2.0);
  EXPECT_LE(fit1.t_exponent, -0.9 * (1 + 1) / 2.0);
  EXPECT_TRUE(fit1.bound_holds);
  EXPECT_GT(fit1.c8_hat, 0.0);
}

TEST(Heat, DiagonalPowerLaws) {
  std::vector<double> ts;
  for (int i = 0; i < 10; ++i) ts.push_back(std::pow(10.0, -3.0 + 2.0 * i / 9));
  for (auto [l, r] : {std::pair{0, 0}, {1, 0}, {1, 1}, {2, 1}}) {
    const auto fit = diagonal_power_law(Manifold::torus(1), l, r, ts, pt({0.3}));
    EXPECT_NEAR(fit.exponent, -(1 + l + r) / 2.0, 0.05 * (1 + l + r) / 2.0) << l << r;
  }
  const auto s = diagonal_power_law(Manifold::sphere2(), 0, 0, ts, pt({1.0, 1.0}));
  EXPECT_NEAR(s.exponent, -1.0, 0.05);
}
