#include "designforge/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "designforge/errors.hpp"
#include "designforge/mz.hpp"
#include "designforge/parallel.hpp"
#include "designforge/partition.hpp"

namespace designforge {

namespace {

struct NodeFlow {
  const DiffusionPolynomial& P;
  const Manifold& m;
  const Smoother& v;
  int halvings = 0;
  double min_increment = std::numeric_limits<double>::infinity();

  // U(y) in ambient form on the sphere, frame form on tori.
  Eigen::Vector3d field(const Point& y) const {
    const Vec g = P.gradient(y).components;
    const double n = g.norm();
    const Vec u = g / v(n);
    if (m.kind() == ManifoldKind::Sphere2) return m.frame_to_ambient(y, u);
    Eigen::Vector3d a = Eigen::Vector3d::Zero();
    for (int i = 0; i < m.dim(); ++i) a[i] = u[i];
    return a;
  }

  Vec to_frame(const Point& y, const Eigen::Vector3d& a) const {
    if (m.kind() == ManifoldKind::Sphere2) return m.ambient_to_frame(y, a);
    return a.head(m.dim());
  }

  Point rk4(const Point& y, double h) const {
    const Eigen::Vector3d k1 = field(y);
    const Eigen::Vector3d k2 = field(m.exp_map(y, to_frame(y, k1), h / 2));
    const Eigen::Vector3d k3 = field(m.exp_map(y, to_frame(y, k2), h / 2));
    const Eigen::Vector3d k4 = field(m.exp_map(y, to_frame(y, k3), h));
    return m.canonical(m.exp_map(y, to_frame(y, (k1 + 2 * k2 + 2 * k3 + k4) / 6), h));
  }

  Point advance(const Point& y, double h, int depth) {
    const Point z = rk4(y, h);
    const double inc = P.value(z) - P.value(y);
    if (inc >= -1e-12) {
      min_increment = std::min(min_increment, inc);
      return z;
    }
    if (depth >= 40) throw NumericalError("flow step still lowers P after 40 halvings");
    ++halvings;
    return advance(advance(y, h / 2, depth + 1), h / 2, depth + 1);
  }
};

}  // namespace

FlowTrace flow_nodes(const DiffusionPolynomial& P, const NodeSet& start, double eps, double T) {
  if (!(eps > 0) || !std::isfinite(eps)) throw InputError("flow needs eps > 0");
  if (!(T >= 0) || !std::isfinite(T)) throw InputError("flow needs T >= 0");
  const Manifold& m = P.manifold();
  if (!(start.manifold == m)) throw InputError("nodes and polynomial live on different manifolds");
  const std::size_t N = start.size();
  FlowTrace tr;
  tr.initial = start;
  tr.eps = eps;
  tr.T = T;
  if (T > 0 && N > 0) {
    const double target = std::min(T / 32, 0.1 * std::pow(static_cast<double>(N), -1.0 / m.dim()));
    tr.steps = static_cast<int>(std::ceil(T / target - 1e-12));
    tr.step = T / tr.steps;
  }
  const Smoother v(eps);
  std::vector<std::vector<Point>> paths(N);
  std::vector<int> halvings(N, 0);
  std::vector<double> min_inc(N, std::numeric_limits<double>::infinity());
  parallel_for(N, [&](std::size_t j) {
    NodeFlow f{P, m, v};
    Point y = m.canonical(start.points[j]);
    paths[j].reserve(static_cast<std::size_t>(tr.steps) + 1);
    paths[j].push_back(y);
    for (int s = 0; s < tr.steps; ++s) {
      y = f.advance(y, tr.step, 0);
      paths[j].push_back(y);
    }
    halvings[j] = f.halvings;
    min_inc[j] = f.min_increment;
  });
  tr.samples.assign(static_cast<std::size_t>(tr.steps) + 1, std::vector<Point>(N));
  for (int s = 0; s <= tr.steps; ++s) {
    tr.sample_times.push_back(s * tr.step);
    for (std::size_t j = 0; j < N; ++j) tr.samples[static_cast<std::size_t>(s)][j] = paths[j][static_cast<std::size_t>(s)];
  }
  std::vector<Point> last(N);
  double inc = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < N; ++j) {
    last[j] = paths[j].back();
    tr.halvings += halvings[j];
    inc = std::min(inc, min_inc[j]);
    if (T > 0) tr.max_displacement_ratio = std::max(tr.max_displacement_ratio, m.distance(start.points[j], last[j]) / T);
  }
  tr.min_increment = std::isfinite(inc) ? inc : 0.0;
  tr.ascent_ok = tr.min_increment >= -1e-12;
  tr.final = NodeSet{m, std::move(last)};
  return tr;
}

double default_positivity_gate(const Manifold& m) { return m.kind() == ManifoldKind::Sphere2 ? 8.0 : 4.0; }

PositivityReport boundary_positivity_check(const Manifold& m, double L, int N, int trials, std::uint64_t seed,
                                           double eps, double C_hat) {
  if (N < 1) throw InputError("N must be >= 1");
  if (trials < 1) throw InputError("trials must be >= 1");
  if (!(L > 0)) throw InputError("bandwidth L must be > 0");
  const int d = m.dim();
  PositivityReport rep;
  rep.manifold = m.tag();
  rep.L = L;
  rep.N = N;
  rep.eps = eps;
  rep.C_hat = C_hat > 0 ? C_hat : default_positivity_gate(m);
  rep.gate_ok = N >= rep.C_hat * std::pow(L, d);
  const Partition part = equal_area_partition(m, N);
  rep.c2 = part.c2();
  rep.T = 12 * rep.c2 * std::pow(static_cast<double>(N), -1.0 / d);
  const NodeSet centers = pick_nodes(part, NodeRule::Center);
  const auto basis = make_basis(m, L);
  if (basis->size() < 2) throw InputError("Pi_L^0 is trivial at this bandwidth");
  rep.min_functional = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(t));
    DiffusionPolynomial P = DiffusionPolynomial::random(basis, rng, true);
    P = P.scaled(1.0 / gradient_norm_quadrature(P).value);
    PositivityTrial row;
    row.trial = t;
    for (int sign : {1, -1}) {
      const DiffusionPolynomial Q = P.scaled(sign);
      const FlowTrace f = flow_nodes(Q, centers, eps, rep.T);
      double s = 0;
      for (const auto& y : f.final.points) s += Q.value(y);
      s /= N;
      (sign > 0 ? row.functional_plus : row.functional_minus) = s;
      row.ascent_ok = row.ascent_ok && f.ascent_ok;
    }
    rep.min_functional = std::min({rep.min_functional, row.functional_plus, row.functional_minus});
    rep.ascent_ok = rep.ascent_ok && row.ascent_ok;
    rep.trials.push_back(row);
  }
  rep.positive = rep.min_functional > 0;
  return rep;
}

}  // namespace designforge
