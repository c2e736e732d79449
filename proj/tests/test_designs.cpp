#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "designforge/designs.hpp"
#include "designforge/errors.hpp"
#include "designforge/mz.hpp"
#include "designforge/partition.hpp"
#include "oracles.hpp"

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

NodeSet sphere_nodes(const std::vector<std::vector<double>>& xyz) {
  std::vector<Point> pts;
  for (const auto& v : xyz) pts.push_back(Manifold::from_cartesian(Eigen::Vector3d(v[0], v[1], v[2])));
  return make_node_set(Manifold::sphere2(), pts);
}

NodeSet random_nodes(const Manifold& m, int N, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> pts;
  for (int j = 0; j < N; ++j) pts.push_back(m.random_point(rng));
  return make_node_set(m, pts);
}

}  // namespace

TEST(Defect, CircleExamples) {
  EXPECT_LE(design_defect(equispaced(4), 3).defect, 1e-14);
  const auto r = design_defect(equispaced(3), 3);
  EXPECT_NEAR(r.defect, std::sqrt(2.0), 1e-14);
  // Only the cos 3 theta mode aliases.
  for (std::size_t k = 0; k < r.labels.size(); ++k) {
    if (std::abs(r.residuals[k]) > 1e-14) {
      EXPECT_NEAR(r.residuals[k], std::sqrt(2.0), 1e-14);
    }
  }
  EXPECT_FALSE(r.certified);
  EXPECT_TRUE(design_defect(equispaced(4), 3).certified);
}

TEST(Defect, PlatonicSolids) {
  const auto oct = design_defect(sphere_nodes(oracle::octahedron()), 3.5);
  EXPECT_LE(oct.defect, 1e-12);
  EXPECT_EQ(oct.residuals.size(), 15u);
  const auto ico = design_defect(sphere_nodes(oracle::icosahedron()), 5.0);
  EXPECT_LE(ico.defect, 1e-12);
  for (double res : ico.residuals) EXPECT_LE(std::abs(res), 1e-12);
  // Octahedron is not a 4-design.
  EXPECT_GT(design_defect(sphere_nodes(oracle::octahedron()), 4.8).defect, 0.1);
}

TEST(Defect, DualFormulasAgree) {
  for (const auto& m : {Manifold::torus(1), Manifold::torus(2), Manifold::torus(3), Manifold::sphere2()})
    for (int N : {1, 7, 40}) {
      const double L = m.dim() == 3 ? 3.0 : 5.5;
      const auto r = design_defect(random_nodes(m, N, 100 + static_cast<std::uint64_t>(N)), L);
      EXPECT_NEAR(r.defect * r.defect, r.gram_defect * r.gram_defect, 1e-12) << m.tag() << " N=" << N;
    }
}

TEST(Defect, ProjectionKernelMatchesBasis) {
  for (const auto& m : {Manifold::torus(2), Manifold::sphere2()}) {
    Rng rng(3);
    const double L = 4.2;
    const auto basis = make_basis(m, L);
    for (int i = 0; i < 10; ++i) {
      const Point x = m.random_point(rng), y = m.random_point(rng);
      Eigen::VectorXd a = basis->values(x), b = basis->values(y);
      const double direct = a.dot(b) - a[0] * b[0];
      EXPECT_NEAR(projection_kernel(m, L, x, y), direct, 1e-12) << m.tag();
    }
  }
  // Sphere addition theorem through an independent Legendre recurrence.
  const auto m = Manifold::sphere2();
  Point x(2), y(2);
  x << 0.3, 1.1;
  y << 2.0, 4.0;
  const double c = Manifold::to_cartesian(x).dot(Manifold::to_cartesian(y));
  double ref = 0;
  for (int l = 1; l <= 4; ++l) ref += (2 * l + 1) * oracle::legendre_p(l, c);
  EXPECT_NEAR(projection_kernel(m, 4.8, x, y), ref, 1e-12);
  EXPECT_EQ(band_dimension(m, 4.8), 24u);
  EXPECT_EQ(band_dimension(Manifold::torus(1), 8), 16u);
}

TEST(Defect, IsometryInvariance) {
  const auto X = random_nodes(Manifold::torus(2), 25, 8);
  std::vector<Point> moved;
  for (auto p : X.points) {
    p[0] = std::fmod(p[0] + 0.7, 2 * pi);
    p[1] = std::fmod(p[1] + 2.3, 2 * pi);
    moved.push_back(p);
  }
  const auto Y = make_node_set(X.manifold, moved);
  EXPECT_NEAR(design_defect(X, 4.5).defect, design_defect(Y, 4.5).defect, 1e-12);

  const auto S = random_nodes(Manifold::sphere2(), 30, 9);
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.8, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  std::vector<Point> rotated;
  for (const auto& p : S.points) rotated.push_back(Manifold::from_cartesian(R * Manifold::to_cartesian(p)));
  EXPECT_NEAR(design_defect(S, 5.0).defect, design_defect(make_node_set(S.manifold, rotated), 5.0).defect, 1e-12);
}

TEST(Defect, DesignsIntegrateExactly) {
  const auto X = sphere_nodes(oracle::icosahedron());
  ASSERT_TRUE(design_defect(X, 5.0).certified);
  const auto basis = make_basis(X.manifold, 5.0);
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const auto P = DiffusionPolynomial::random(basis, rng, false);
    double avg = 0;
    for (const auto& x : X.points) avg += P.value(x);
    avg /= static_cast<double>(X.size());
    EXPECT_NEAR(avg, P.coefficients()[0], X.size() * 1e-12);
  }
}

TEST(Construct, CentersAreExactOnTheCircle) {
  DesignOptions o;
  o.init = DesignInit::PartitionCenters;
  const auto r = construct_design(Manifold::torus(1), 8, 9, o);
  ASSERT_FALSE(r.trace.empty());
  EXPECT_LE(r.trace.front().defect, 1e-14);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.iterations, 0);
}

TEST(Construct, RandomStartCircle) {
  for (auto method : {DesignMethod::GradientDescent, DesignMethod::LevenbergMarquardt}) {
    DesignOptions o;
    o.seed = 1;
    o.tol = 1e-8;
    o.budget = 500;
    o.method = method;
    const auto r = construct_design(Manifold::torus(1), 8, 9, o);
    EXPECT_TRUE(r.success) << to_string(method);
    EXPECT_LE(r.report.defect, 1e-8);
    EXPECT_LE(r.iterations, 500);
    // Independent recomputation of the reported defect.
    EXPECT_NEAR(design_defect(r.report.nodes, 8).defect, r.report.defect, 1e-15);
    for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i].defect, r.trace[i - 1].defect);
  }
}

TEST(Construct, RandomStartSphere) {
  DesignOptions o;
  o.seed = 2;
  o.tol = 1e-6;
  o.budget = 5000;
  const auto r = construct_design(Manifold::sphere2(), 3.5, 12, o);
  EXPECT_TRUE(r.success);
  EXPECT_LE(design_defect(r.report.nodes, 3.5).defect, 1e-6);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i].defect, r.trace[i - 1].defect);
}

TEST(Construct, InfeasibleGivesPartialReport) {
  DesignOptions o;
  o.seed = 4;
  o.budget = 300;
  const auto r = construct_design(Manifold::torus(1), 8, 4, o);
  EXPECT_FALSE(r.success);
  EXPECT_TRUE(r.budget_exhausted || r.stalled);
  EXPECT_EQ(r.report.nodes.size(), 4u);
  // Four points alias the cos/sin 4 theta modes at best: the defect stays bounded away from zero.
  EXPECT_GT(r.report.defect, 0.5);
  EXPECT_FALSE(r.warnings.empty());
  double best = r.trace.front().defect;
  for (const auto& t : r.trace) best = std::min(best, t.defect);
  EXPECT_DOUBLE_EQ(best, r.report.defect);
}

TEST(Construct, GivenInitAndErrors) {
  DesignOptions o;
  o.init = DesignInit::Given;
  EXPECT_THROW(construct_design(Manifold::torus(1), 3, 4, o), InputError);
  o.given = equispaced(4, 0.1);
  const auto r = construct_design(Manifold::torus(1), 3, 4, o);
  EXPECT_TRUE(r.success);
  EXPECT_NEAR(r.report.nodes.points[0][0], 0.1, 1e-15);
  o.given = equispaced(5);
  EXPECT_THROW(construct_design(Manifold::torus(1), 3, 4, o), InputError);
  EXPECT_THROW(construct_design(Manifold::torus(1), 3, 0, DesignOptions{}), InputError);
  EXPECT_EQ(design_init_from_string("centers"), DesignInit::PartitionCenters);
  EXPECT_EQ(design_method_from_string("lm"), DesignMethod::LevenbergMarquardt);
  EXPECT_THROW(design_init_from_string("nope"), InputError);
}

TEST(Construct, FlowPolishKeepsMonotoneTrace) {
  DesignOptions o;
  o.seed = 6;
  o.budget = 20;
  o.flow_polish = 3;
  const auto r = construct_design(Manifold::torus(1), 6, 8, o);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i].defect, r.trace[i - 1].defect);
  EXPECT_NEAR(design_defect(r.report.nodes, 6).defect, r.report.defect, 1e-15);
}

TEST(Scaling, CircleNeedsLPlusOne) {
  const auto rep = scaling_experiment(Manifold::torus(1), {4, 8}, 1e-6, 3, 3, 400);
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_EQ(rep.rows[0].N_star, 5);
  EXPECT_EQ(rep.rows[1].N_star, 9);
  EXPECT_NEAR(rep.slope, std::log(9.0 / 5.0) / std::log(2.0), 1e-12);
  EXPECT_EQ(scaling_csv(rep).rfind("L,N_star,attempts,defect\n", 0), 0u);
}

TEST(Wce, CircleAliasTail) {
  const auto X = equispaced(4);
  const auto r = worst_case_error(X, 1.0, 4000);
  double ref = 0;
  for (int m = 1; m < 2000000; ++m) ref += 2.0 / (1.0 + 16.0 * m * m);
  EXPECT_NEAR(ref, pi / 4 / std::tanh(pi / 4) - 1, 1e-6);
  EXPECT_NEAR(r.band_sq, ref, 1e-3);
  EXPECT_NEAR(r.wce, 0.444, 2e-3);
  EXPECT_GE(r.wce_upper, r.wce);
  EXPECT_THROW(worst_case_error(X, 0.5, 10), InputError);
  EXPECT_THROW(worst_case_error(random_nodes(Manifold::sphere2(), 5, 1), 1.0, 10), InputError);
}

TEST(Wce, DesignBandVanishesAndAlphaMonotone) {
  const auto X = sphere_nodes(oracle::icosahedron());
  const auto r = worst_case_error(X, 2.0, 5.0);
  EXPECT_LE(r.band_sq, 1e-24);
  EXPECT_GT(r.tail_expected, 0.0);
  double prev = 1e300;
  for (double a : {1.2, 1.5, 2.0, 3.0}) {
    const double w = worst_case_error(X, a, 40).wce;
    EXPECT_LT(w, prev);
    prev = w;
  }
  // Band sum against the Gram form on a torus.
  const auto T = random_nodes(Manifold::torus(2), 9, 3);
  const auto w = worst_case_error(T, 1.5, 6.0);
  double band = 0;
  const auto basis = make_basis(T.manifold, 6.0);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()));
  for (const auto& x : T.points) s += basis->values(x);
  s /= 9.0;
  for (const auto& p : basis->pairs())
    if (p.lambda_sq > 0) band += std::pow(1.0 + p.lambda * p.lambda, -1.5) * s[static_cast<Eigen::Index>(p.index)] * s[static_cast<Eigen::Index>(p.index)];
  EXPECT_NEAR(w.band_sq, band, 1e-14);
}

TEST(Serialization, ReportsAndTrace) {
  const auto r = design_defect(sphere_nodes(oracle::octahedron()), 3.5);
  const auto j = design_report_to_json(r);
  for (const char* key : {"manifold", "L", "N", "defect", "certified", "nodes"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["N"], 6);
  EXPECT_EQ(trace_csv({{0, 1.0, 0.0}, {1, 0.5, 0.25}}), "iter,defect,step\n0,1,0\n1,0.5,0.25\n");
}
