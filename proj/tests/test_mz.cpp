#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "designforge/errors.hpp"
#include "designforge/mz.hpp"

using namespace designforge;
using std::numbers::pi;

namespace {

NodeSet equispaced(int N, double shift = 0.0) {
  std::vector<Point> pts;
  for (int j = 0; j < N; ++j) {
    Point x(1);
    x[0] = shift + 2 * pi * j / N;
    pts.push_back(x);
  }
  return make_node_set(Manifold::torus(1), pts);
}

// sqrt2 cos(k theta) (or sin) in the basis of bandwidth L.
DiffusionPolynomial circle_mode(double L, int k, char tag = 'c') {
  auto basis = make_basis(Manifold::torus(1), L);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()));
  c[static_cast<Eigen::Index>(basis->index_of({{k, 0, 0}, tag}))] = 1.0;
  return DiffusionPolynomial(basis, c);
}

}  // namespace

TEST(Smoother, DefiningProperties) {
  const double eps = 0.3;
  const Smoother v(eps);
  EXPECT_DOUBLE_EQ(v(2 * eps), 2 * eps);
  EXPECT_DOUBLE_EQ(v(eps), eps);
  EXPECT_DOUBLE_EQ(v(0.0), eps / 2);
  EXPECT_DOUBLE_EQ(v(0.2 * eps), eps / 2);
  Rng rng(1);
  double prev = 0;
  for (int i = 0; i < 100; ++i) {
    const double u = eps * rng.uniform();
    EXPECT_GE(v(u), u);
    EXPECT_GE(v(u), eps / 4);
  }
  for (int i = 0; i <= 400; ++i) {
    const double u = 1.2 * eps * i / 400;
    EXPECT_GE(v(u), prev - 1e-16);
    prev = v(u);
    const double h = 1e-7;
    EXPECT_NEAR((v(u + h) - v(u - h)) / (2 * h), v.derivative(u), 1e-6);
  }
  EXPECT_THROW(Smoother(0.0), InputError);
}

TEST(MZ, CircleAbsoluteIntegralsAreExact) {
  const auto P = circle_mode(3, 1);
  EXPECT_NEAR(abs_value_quadrature(P).value, 2 * std::sqrt(2.0) / pi, 1e-14);
  EXPECT_NEAR(gradient_norm_quadrature(P).value, 2 * std::sqrt(2.0) / pi, 1e-14);
  // |cos 3t + 0.5 sin t| has irregular zeros; compare with brute force.
  auto basis = make_basis(Manifold::torus(1), 3);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()));
  c[static_cast<Eigen::Index>(basis->index_of({{3, 0, 0}, 'c'}))] = 1.0;
  c[static_cast<Eigen::Index>(basis->index_of({{1, 0, 0}, 's'}))] = 0.5;
  const DiffusionPolynomial Q(basis, c);
  double brute = 0;
  const int n = 2000000;
  for (int i = 0; i < n; ++i) {
    const double t = 2 * pi * (i + 0.5) / n;
    brute += std::abs(std::sqrt(2.0) * (std::cos(3 * t) + 0.5 * std::sin(t)));
  }
  EXPECT_NEAR(abs_value_quadrature(Q).value, brute / n, 1e-9);
}

TEST(MZ, SphereAbsoluteIntegralConverges) {
  auto basis = make_basis(Manifold::sphere2(), 2);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()));
  c[static_cast<Eigen::Index>(basis->index_of({{1, 0, 0}, 'c'}))] = 1.0;  // sqrt3 cos(theta)
  const DiffusionPolynomial P(basis, c);
  const auto q = abs_value_quadrature(P);
  EXPECT_NEAR(q.value, std::sqrt(3.0) / 2, 1e-8);
  EXPECT_TRUE(q.converged);
  // |grad sqrt3 cos| = sqrt3 sin(theta), mean sqrt3 pi / 4.
  EXPECT_NEAR(gradient_norm_quadrature(P).value, std::sqrt(3.0) * pi / 4, 1e-8);
}

TEST(MZ, TorusKinkAcrossLines) {
  // sqrt2 cos(x0) is constant along the inner lines; the kinks sit in the outer variable.
  auto basis = make_basis(Manifold::torus(2), 2);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()));
  c[static_cast<Eigen::Index>(basis->index_of({{1, 0, 0}, 'c'}))] = 1.0;
  const DiffusionPolynomial P(basis, c);
  const auto a = abs_value_quadrature(P), g = gradient_norm_quadrature(P);
  EXPECT_NEAR(a.value, 2 * std::sqrt(2.0) / pi, 1e-8);
  EXPECT_NEAR(g.value, 2 * std::sqrt(2.0) / pi, 1e-8);
  double s = 0;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) s += a.weights[i] * std::abs(P.value(a.nodes[i]));
  EXPECT_NEAR(s, a.value, 1e-13);
}

TEST(MZ, SphereSurveyRuns) {
  const auto r = mz_survey(Manifold::sphere2(), {2}, {16}, 3, 4, {MzRule::Center, MzRule::Corner}, 3);
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_GT(r.C_hat, 0.0);
  EXPECT_GT(r.C3_hat, 0.0);
}

TEST(MZ, ValueNumeratorExample) {
  const auto P = circle_mode(1, 1);
  const auto X = equispaced(8);
  const double integral = 2 * std::sqrt(2.0) / pi;
  double avg = 0;
  for (const auto& x : X.points) avg += std::abs(P.value(x)) / 8;
  EXPECT_NEAR(avg, 0.8535533905932737, 1e-15);
  const double numerator = std::abs(integral - avg);
  EXPECT_NEAR(numerator, 0.0468, 1e-4);
  EXPECT_NEAR(mz_value_ratio(P, X), numerator / (1.0 / 8 * integral), 1e-13);
}

TEST(MZ, AliasingWorstCase) {
  const int N = 6;
  const auto P = circle_mode(N, N);
  const auto X = equispaced(N);
  const double numerator = std::sqrt(2.0) - 2 * std::sqrt(2.0) / pi;
  EXPECT_NEAR(numerator, 0.5139, 1e-4);
  EXPECT_NEAR(mz_value_ratio(P, X), numerator / (N * std::pow(N, -1.0) * 2 * std::sqrt(2.0) / pi), 1e-13);
}

TEST(MZ, GradientRatioExample) {
  const auto P = circle_mode(1, 1);
  const auto X = equispaced(8, pi / 8);
  double avg = 0;
  for (const auto& x : X.points) avg += std::sqrt(2.0) * std::abs(std::sin(x[0])) / 8;
  const double integral = 2 * std::sqrt(2.0) / pi;
  const double r = mz_gradient_ratio(P, X);
  EXPECT_NEAR(r, std::abs(integral - avg) / (integral / 8), 1e-13);
  EXPECT_LT(r, 1.0);
  EXPECT_THROW(mz_gradient_ratio(circle_mode(1, 0), X), InputError);
  EXPECT_THROW(mz_value_ratio(P.scaled(0.0), X), InputError);
}

TEST(MZ, SignedErrorsCancelOnSymmetricNodes) {
  const auto e = mz_signed_errors(circle_mode(2, 2), equispaced(8));
  EXPECT_LE(e.value, 1e-12);
  EXPECT_LE(e.gradient, 1e-12);
  // Two nodes where |sqrt2 cos| equals its mean make the absolute numerator vanish.
  const double a = std::acos(2 / pi);
  std::vector<Point> pts(2, Point(1));
  pts[0][0] = a;
  pts[1][0] = pi + a;
  EXPECT_LE(mz_value_ratio(circle_mode(1, 1), make_node_set(Manifold::torus(1), pts)), 1e-12);
}

TEST(MZ, RatiosAreHomogeneous) {
  for (const auto& m : {Manifold::torus(1), Manifold::torus(2), Manifold::sphere2()}) {
    Rng rng(5);
    const auto P = DiffusionPolynomial::random(make_basis(m, 3), rng, true);
    const auto X = pick_nodes(equal_area_partition(m, 30), NodeRule::Random, 2);
    for (double s : {-3.0, 0.01, 250.0}) {
      EXPECT_NEAR(mz_value_ratio(P.scaled(s), X), mz_value_ratio(P, X), 1e-12) << m.tag();
      EXPECT_NEAR(mz_gradient_ratio(P.scaled(s), X), mz_gradient_ratio(P, X), 1e-12) << m.tag();
    }
  }
}

TEST(MZ, TFieldBound) {
  for (const auto& m : {Manifold::torus(2), Manifold::sphere2()}) {
    Rng rng(8);
    const auto P = DiffusionPolynomial::random(make_basis(m, 4), rng, true);
    const Smoother v(1e-3 * gradient_norm_quadrature(P).value);
    std::vector<Point> pts;
    for (int i = 0; i < 1000; ++i) pts.push_back(m.random_point(rng));
    EXPECT_LE(t_field_excess(P, v, pts), 1e-13) << m.tag();
  }
}

TEST(MZ, SurveyContract) {
  const auto m = Manifold::torus(1);
  const std::vector<MzRule> rules{MzRule::Center, MzRule::Random, MzRule::Corner, MzRule::Extremal};
  const auto empty = mz_survey(m, {2}, {8}, 0, 1, rules);
  EXPECT_TRUE(empty.rows.empty());
  EXPECT_TRUE(empty.cells.empty());
  EXPECT_THROW(mz_survey(m, {9}, {8}, 3, 1, rules), InputError);
  EXPECT_THROW(mz_survey(Manifold::torus(2), {4}, {9}, 3, 1, rules), InputError);
  const auto a = mz_survey(m, {2, 4}, {16, 32}, 12, 7, rules, 10);
  const auto b = mz_survey(m, {2, 4}, {16, 32}, 12, 7, rules, 10);
  EXPECT_EQ(mz_csv(a), mz_csv(b));
  EXPECT_EQ(a.rows.size(), 2u * 2u * 12u * 4u);
  EXPECT_EQ(a.cells.size(), 4u);
  for (const auto& r : a.rows) {
    EXPECT_GE(r.ratio_value, 0.0);
    EXPECT_GE(r.ratio_grad, 0.0);
  }
  for (const auto& c : a.cells) EXPECT_GT(c.C_hat, 0.0);
  EXPECT_LE(a.C_spread, 2.0);
  EXPECT_LE(a.C3_spread, 2.0);
  EXPECT_EQ(mz_csv(a).rfind("L,N,rule,trial,ratio_value,ratio_grad\n", 0), 0u);
  EXPECT_EQ(mz_rule_from_string("extremal"), MzRule::Extremal);
  EXPECT_THROW(mz_rule_from_string("bogus"), InputError);
}
