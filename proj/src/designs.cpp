#include "designforge/designs.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <numbers>

#include "designforge/errors.hpp"
#include "designforge/flow.hpp"
#include "designforge/parallel.hpp"
#include "designforge/partition.hpp"

namespace designforge {

namespace {

using std::numbers::pi;

bool within_band(long long q, double L) { return static_cast<double>(q) <= L * L * (1.0 + 1e-12); }

int sphere_lmax(double L) {
  int l = 0;
  while (within_band(static_cast<long long>(l + 1) * (l + 2), L)) ++l;
  return l;
}

// Residual vector r (constant entry zeroed) and defect^2 at the given points.
struct Residuals {
  Eigen::VectorXd r;
  double f = 0.0;
};

Residuals residuals(const SpectralBasis& basis, const std::vector<Point>& pts) {
  const auto K = static_cast<Eigen::Index>(basis.size());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(K);
  if (pts.size() >= 64) {
    Eigen::MatrixXd rows(K, static_cast<Eigen::Index>(pts.size()));
    parallel_for(pts.size(), [&](std::size_t j) { rows.col(static_cast<Eigen::Index>(j)) = basis.values(pts[j]); });
    for (Eigen::Index j = 0; j < rows.cols(); ++j) sum += rows.col(j);
  } else {
    for (const auto& x : pts) sum += basis.values(x);
  }
  Residuals out;
  out.r = sum / static_cast<double>(pts.size());
  out.r[0] = 0.0;
  out.f = out.r.squaredNorm();
  return out;
}

// d(defect^2)/d x_i in frame components: (2/N) G_i^T r.
std::vector<Vec> defect_gradient(const SpectralBasis& basis, const std::vector<Point>& pts, const Eigen::VectorXd& r) {
  std::vector<Vec> g(pts.size());
  const double s = 2.0 / static_cast<double>(pts.size());
  auto one = [&](std::size_t i) { g[i] = s * (basis.gradients(pts[i]).transpose() * r); };
  if (pts.size() >= 64) {
    parallel_for(pts.size(), one);
  } else {
    for (std::size_t i = 0; i < pts.size(); ++i) one(i);
  }
  return g;
}

std::vector<Point> retract(const Manifold& m, const std::vector<Point>& pts, const std::vector<Vec>& v, double t) {
  std::vector<Point> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = m.exp_map(pts[i], v[i], t);
  return out;
}

double max_norm(const std::vector<Vec>& v) {
  double s = 0;
  for (const auto& x : v) s = std::max(s, x.norm());
  return s;
}

double dot(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].dot(b[i]);
  return s;
}

std::vector<Point> initial_points(const Manifold& m, int N, const DesignOptions& o) {
  switch (o.init) {
    case DesignInit::PartitionCenters:
      return pick_nodes(equal_area_partition(m, N), NodeRule::Center).points;
    case DesignInit::Random: {
      Rng rng(o.seed);
      std::vector<Point> pts;
      for (int j = 0; j < N; ++j) pts.push_back(m.random_point(rng));
      return pts;
    }
    case DesignInit::Given:
      if (!o.given) throw InputError("init 'given' needs a node set");
      if (!(o.given->manifold == m)) throw InputError("given nodes live on a different manifold");
      if (o.given->size() != static_cast<std::size_t>(N)) throw InputError("given node count differs from N");
      return o.given->points;
  }
  return {};
}

DesignReport make_report(const Manifold& m, double L, std::vector<Point> pts, double tol) {
  return design_defect(make_node_set(m, std::move(pts)), L, tol);
}

// Sum over the tail lambda > R of the torus lattice, by radial integrals.
// estimate: int_R^inf w_d rho^{d-1} f(rho); bound: the unit cube around each
// lattice point lies beyond R - sqrt(d)/2, where f(|n|) <= f(|y| - sqrt(d)/2).
std::pair<double, double> torus_tail(int d, double alpha, double R) {
  const double omega = d == 1 ? 2.0 : (d == 2 ? 2 * pi : 4 * pi);
  const double h = std::sqrt(static_cast<double>(d)) / 2;
  auto f = [&](double rho) { return std::pow(1.0 + rho * rho, -alpha); };
  boost::math::quadrature::exp_sinh<double> integrator;
  auto tail_from = [&](double a, double shift) {
    // rho = a + s
    return integrator.integrate([&](double s) {
      const double rho = a + s;
      return omega * std::pow(rho, d - 1) * f(std::max(0.0, rho - shift));
    });
  };
  const double estimate = tail_from(R, 0.0);
  const double bound = tail_from(std::max(0.0, R - h), h);
  return {estimate, bound};
}

// sum_{l > lmax} (2l+1)(1 + l(l+1))^-alpha: explicit terms, then the closed-form
// majorant 2 (x + 1/2)^{1 - 2 alpha} integrated from the last term.
double sphere_tail(double alpha, int lmax) {
  double s = 0;
  const int end = lmax + 20000;
  for (int l = lmax + 1; l <= end; ++l) s += (2.0 * l + 1) * std::pow(1.0 + static_cast<double>(l) * (l + 1), -alpha);
  s += 2.0 * std::pow(end + 0.5, 2 - 2 * alpha) / (2 * alpha - 2);
  return s;
}

}  // namespace

double projection_kernel(const Manifold& m, double L, const Point& x0, const Point& y0) {
  const Point x = m.canonical(x0), y = m.canonical(y0);
  if (m.kind() == ManifoldKind::Sphere2) {
    const double c = std::clamp(Manifold::to_cartesian(x).dot(Manifold::to_cartesian(y)), -1.0, 1.0);
    const int lmax = sphere_lmax(L);
    double p0 = 1, p1 = c, s = 0;
    for (int l = 1; l <= lmax; ++l) {
      s += (2 * l + 1) * p1;
      const double p2 = ((2 * l + 1) * c * p1 - l * p0) / (l + 1);
      p0 = p1;
      p1 = p2;
    }
    return s;
  }
  const int d = m.dim();
  const int r = static_cast<int>(std::floor(L * (1.0 + 1e-12)));
  double s = 0;
  // Full lattice: each +-n pair contributes 2 cos(n.(x-y)).
  std::array<int, 3> n{0, 0, 0};
  for (int i = 0; i < d; ++i) n[static_cast<std::size_t>(i)] = -r;
  for (;;) {
    long long q = 0;
    double phase = 0;
    for (int i = 0; i < d; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      q += static_cast<long long>(n[ii]) * n[ii];
      phase += n[ii] * (x[i] - y[i]);
    }
    if (q > 0 && within_band(q, L)) s += std::cos(phase);
    int i = 0;
    while (i < d && n[static_cast<std::size_t>(i)] == r) n[static_cast<std::size_t>(i++)] = -r;
    if (i == d) break;
    ++n[static_cast<std::size_t>(i)];
  }
  return s;
}

std::size_t band_dimension(const Manifold& m, double L) { return enumerate_basis(m, L).size() - 1; }

DesignReport design_defect(const NodeSet& nodes, double L, double tolerance) {
  if (!(L >= 0)) throw InputError("bandwidth L must be >= 0");
  if (nodes.size() == 0) throw InputError("node set is empty");
  const auto basis = make_basis(nodes.manifold, L);
  const auto res = residuals(*basis, nodes.points);
  DesignReport rep;
  rep.nodes = nodes;
  rep.L = L;
  rep.tolerance = tolerance;
  rep.defect = std::sqrt(res.f);
  for (const auto& p : basis->pairs()) {
    if (p.lambda_sq == 0) continue;
    rep.labels.push_back(label_to_string(nodes.manifold, p.label));
    rep.residuals.push_back(res.r[static_cast<Eigen::Index>(p.index)]);
  }
  const std::size_t N = nodes.size();
  std::vector<double> rows(N);
  parallel_for(N, [&](std::size_t i) {
    double s = 0;
    for (std::size_t j = 0; j < N; ++j) s += projection_kernel(nodes.manifold, L, nodes.points[i], nodes.points[j]);
    rows[i] = s;
  });
  double g = 0;
  for (double v : rows) g += v;
  g /= static_cast<double>(N) * static_cast<double>(N);
  rep.gram_defect = std::sqrt(std::max(0.0, g));
  rep.certified = rep.defect <= tolerance;
  return rep;
}

DesignInit design_init_from_string(const std::string& name) {
  if (name == "centers" || name == "partition_centers") return DesignInit::PartitionCenters;
  if (name == "random") return DesignInit::Random;
  if (name == "given") return DesignInit::Given;
  throw InputError("unknown init '" + name + "' (centers, random, given)");
}

DesignMethod design_method_from_string(const std::string& name) {
  if (name == "gd" || name == "gradient") return DesignMethod::GradientDescent;
  if (name == "lm") return DesignMethod::LevenbergMarquardt;
  throw InputError("unknown optimizer '" + name + "' (gd, lm)");
}

std::string to_string(DesignInit init) {
  switch (init) {
    case DesignInit::PartitionCenters: return "centers";
    case DesignInit::Random: return "random";
    case DesignInit::Given: return "given";
  }
  return "random";
}

std::string to_string(DesignMethod method) {
  return method == DesignMethod::LevenbergMarquardt ? "lm" : "gd";
}

ConstructionResult construct_design(const Manifold& m, double L, int N, const DesignOptions& o) {
  if (N < 1) throw InputError("N must be >= 1");
  if (!(L >= 0)) throw InputError("bandwidth L must be >= 0");
  if (o.budget < 0) throw InputError("budget must be >= 0");
  const auto basis = make_basis(m, L);
  const int d = m.dim();
  ConstructionResult out;
  const std::size_t dim = basis->size() - 1;
  if (static_cast<std::size_t>(N) * static_cast<std::size_t>(d) < dim)
    out.warnings.push_back("N*d = " + std::to_string(N * d) + " is below dim Pi_L^0 = " + std::to_string(dim) +
                           " (degrees-of-freedom heuristic N >= dim/d)");

  std::vector<Point> X = initial_points(m, N, o);
  for (auto& x : X) {
    m.validate(x);
    x = m.canonical(x);
  }
  Residuals cur = residuals(*basis, X);
  ++out.evaluations;
  out.trace.push_back({0, std::sqrt(cur.f), 0.0});
  std::vector<double> history{std::sqrt(cur.f)};

  auto stalled = [&]() {
    const int w = o.stall_window;
    if (w <= 0 || static_cast<int>(history.size()) <= w) return false;
    return history.back() > 0.999 * history[history.size() - 1 - static_cast<std::size_t>(w)];
  };

  const double move_cap = 0.5;
  double alpha = 0.0;
  double mu = -1.0;
  std::vector<Vec> prev_g, prev_s;
  int it = 0;
  while (std::sqrt(cur.f) > o.tol) {
    if (it >= o.budget) {
      out.budget_exhausted = true;
      break;
    }
    if (stalled()) {
      out.stalled = true;
      break;
    }
    const std::vector<Vec> g = defect_gradient(*basis, X, cur.r);
    const double gmax = max_norm(g);
    if (!(gmax > 0)) {
      out.stalled = true;
      break;
    }
    bool accepted = false;
    double moved = 0.0;
    if (o.method == DesignMethod::GradientDescent) {
      // Barzilai-Borwein trial step, then Armijo backtracking.
      if (prev_g.empty()) {
        alpha = 0.1 * std::pow(static_cast<double>(N), -1.0 / d) / gmax;
      } else {
        std::vector<Vec> y(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) y[i] = g[i] - prev_g[i];
        const double sy = dot(prev_s, y);
        alpha = sy > 0 ? dot(prev_s, prev_s) / sy : 2.0 * alpha;
      }
      alpha = std::min(alpha, move_cap / gmax);
      const double gg = dot(g, g);
      std::vector<Vec> dir(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) dir[i] = -g[i];
      for (int tries = 0; tries < 60; ++tries, alpha *= 0.5) {
        std::vector<Point> trial = retract(m, X, dir, alpha);
        Residuals r = residuals(*basis, trial);
        ++out.evaluations;
        if (r.f <= cur.f - 1e-4 * alpha * gg && r.f < cur.f) {
          X = std::move(trial);
          cur = std::move(r);
          prev_g = g;
          prev_s.resize(dir.size());
          for (std::size_t i = 0; i < dir.size(); ++i) prev_s[i] = alpha * dir[i];
          moved = alpha * gmax;
          accepted = true;
          break;
        }
      }
    } else {
      // Gauss-Newton with Levenberg damping on the residual vector.
      const auto K = static_cast<Eigen::Index>(basis->size());
      Eigen::MatrixXd J(K, static_cast<Eigen::Index>(N) * d);
      for (int i = 0; i < N; ++i) J.middleCols(static_cast<Eigen::Index>(i) * d, d) = basis->gradients(X[static_cast<std::size_t>(i)]) / N;
      J.row(0).setZero();
      const Eigen::MatrixXd A = J.transpose() * J;
      const Eigen::VectorXd b = J.transpose() * cur.r;
      if (mu < 0) mu = 1e-3 * A.diagonal().maxCoeff();
      for (int tries = 0; tries < 40; ++tries, mu *= 4.0) {
        Eigen::MatrixXd M = A;
        M.diagonal().array() += mu;
        const Eigen::VectorXd delta = M.ldlt().solve(-b);
        std::vector<Vec> step(static_cast<std::size_t>(N));
        double smax = 0;
        for (int i = 0; i < N; ++i) {
          step[static_cast<std::size_t>(i)] = delta.segment(static_cast<Eigen::Index>(i) * d, d);
          smax = std::max(smax, step[static_cast<std::size_t>(i)].norm());
        }
        const double scale = smax > move_cap ? move_cap / smax : 1.0;
        std::vector<Point> trial = retract(m, X, step, scale);
        Residuals r = residuals(*basis, trial);
        ++out.evaluations;
        if (r.f < cur.f) {
          X = std::move(trial);
          cur = std::move(r);
          moved = scale * smax;
          mu = std::max(mu / 3.0, 1e-300);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      out.stalled = true;
      break;
    }
    ++it;
    history.push_back(std::sqrt(cur.f));
    out.trace.push_back({it, std::sqrt(cur.f), moved});
  }
  out.iterations = it;

  // Optional flow polish: flow up Q = -sum r_k phi_k, whose gradient is the
  // steepest-descent direction of defect^2; keep a round only if it helps.
  for (int round = 0; round < o.flow_polish && std::sqrt(cur.f) > o.tol; ++round) {
    const DiffusionPolynomial Q(basis, -cur.r / std::max(cur.r.norm(), 1e-300));
    double T = 0.1 * std::pow(static_cast<double>(N), -1.0 / d);
    bool kept = false;
    for (int tries = 0; tries < 12 && !kept; ++tries, T *= 0.5) {
      const auto f = flow_nodes(Q, make_node_set(m, X), 0.1, T);
      Residuals r = residuals(*basis, f.final.points);
      ++out.evaluations;
      if (r.f < cur.f) {
        X = f.final.points;
        cur = std::move(r);
        out.trace.push_back({out.trace.back().iter + 1, std::sqrt(cur.f), T});
        kept = true;
      }
    }
    if (!kept) break;
  }

  out.report = make_report(m, L, X, o.tol);
  out.success = out.report.defect <= o.tol;
  if (out.success) out.budget_exhausted = false;
  return out;
}

ScalingReport scaling_experiment(const Manifold& m, const std::vector<double>& L_grid, double tol, std::uint64_t seed,
                                 int restarts, int budget, int N_max) {
  if (L_grid.empty()) throw InputError("scaling needs at least one L");
  for (std::size_t i = 1; i < L_grid.size(); ++i)
    if (!(L_grid[i] > L_grid[i - 1])) throw InputError("L grid must be ascending");
  if (restarts < 0) throw InputError("restarts must be >= 0");
  ScalingReport rep;
  rep.manifold = m.tag();
  rep.tol = tol;
  rep.restarts = restarts;
  rep.rows.resize(L_grid.size());
  parallel_for(L_grid.size(), [&](std::size_t li) {
    const double L = L_grid[li];
    ScalingRow row;
    row.L = L;
    auto achievable = [&](int N, double& defect) {
      DesignOptions o;
      o.tol = tol;
      o.budget = budget;
      o.init = DesignInit::PartitionCenters;
      defect = std::numeric_limits<double>::infinity();
      for (int r = 0; r <= restarts; ++r) {
        if (r > 0) {
          o.init = DesignInit::Random;
          o.seed = Rng::stream(seed, (static_cast<std::uint64_t>(li) << 40) | (static_cast<std::uint64_t>(N) << 8) |
                                         static_cast<std::uint64_t>(r))
                       .next_u64();
        }
        ++row.attempts;
        const auto res = construct_design(m, L, N, o);
        defect = std::min(defect, res.report.defect);
        if (res.success) return true;
      }
      return false;
    };
    double defect = 0;
    int lo = 0, hi = 1;
    while (hi <= N_max && !achievable(hi, defect)) {
      lo = hi;
      hi *= 2;
    }
    if (hi > N_max) {
      rep.rows[li] = row;
      return;
    }
    double hi_defect = defect;
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      if (achievable(mid, defect)) {
        hi = mid;
        hi_defect = defect;
      } else {
        lo = mid;
      }
    }
    row.N_star = hi;
    row.defect = hi_defect;
    rep.rows[li] = row;
  });
  std::vector<double> xs, ys;
  for (const auto& r : rep.rows)
    if (r.N_star > 0 && r.L > 0) {
      xs.push_back(std::log(r.L));
      ys.push_back(std::log(static_cast<double>(r.N_star)));
    }
  if (xs.size() >= 2) {
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i] / n;
      my += ys[i] / n;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    rep.slope = sxy / sxx;
    rep.intercept = my - rep.slope * mx;
  }
  return rep;
}

WceReport worst_case_error(const NodeSet& nodes, double alpha, double lambda_max) {
  const auto& m = nodes.manifold;
  const int d = m.dim();
  if (!(alpha > d / 2.0)) throw InputError("worst-case error needs alpha > d/2");
  if (!(lambda_max >= 0)) throw InputError("lambda_max must be >= 0");
  if (nodes.size() == 0) throw InputError("node set is empty");
  WceReport rep;
  rep.alpha = alpha;
  rep.lambda_max = lambda_max;
  const auto basis = make_basis(m, lambda_max);
  const auto res = residuals(*basis, nodes.points);
  for (const auto& p : basis->pairs()) {
    if (p.lambda_sq == 0) continue;
    const double r = res.r[static_cast<Eigen::Index>(p.index)];
    rep.band_sq += std::pow(1.0 + static_cast<double>(p.lambda_sq), -alpha) * r * r;
  }
  const double N = static_cast<double>(nodes.size());
  if (m.kind() == ManifoldKind::Sphere2) {
    // sum_m r_lm^2 = (1/N^2) sum_ij (2l+1) P_l <= 2l+1 by the addition theorem.
    const double t = sphere_tail(alpha, sphere_lmax(lambda_max));
    rep.tail_expected = t / N;
    rep.tail_bound = t;
  } else {
    // Per lattice point n: |(1/N) sum e^{i n.x}|^2 <= 1, expectation 1/N.
    const auto [est, bound] = torus_tail(d, alpha, lambda_max);
    rep.tail_expected = est / N;
    rep.tail_bound = bound;
  }
  rep.wce = std::sqrt(rep.band_sq + rep.tail_expected);
  rep.wce_upper = std::sqrt(rep.band_sq + rep.tail_bound);
  return rep;
}

}  // namespace designforge
