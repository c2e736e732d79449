#include "designforge/mz.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "designforge/errors.hpp"
#include "designforge/io.hpp"
#include "designforge/parallel.hpp"
#include "jet.hpp"
#include "legendre.hpp"

namespace designforge {

namespace {

using std::numbers::pi;

double scale_factor(const DiffusionPolynomial& P, std::size_t N) {
  return P.bandwidth() * std::pow(static_cast<double>(N), -1.0 / P.manifold().dim());
}

void check_nodes(const DiffusionPolynomial& P, const NodeSet& nodes) {
  if (!(nodes.manifold == P.manifold())) throw InputError("nodes and polynomial live on different manifolds");
  if (nodes.size() == 0) throw InputError("node set is empty");
}

bool is_constant(const DiffusionPolynomial& P) {
  const auto& c = P.coefficients();
  for (Eigen::Index k = 1; k < c.size(); ++k)
    if (c[k] != 0.0) return false;
  return true;
}

// Panels on [a, b] split at the sign changes of f seen on `cells` uniform
// cells, each integrated by 8-point Gauss-Legendre. Emits (s, weight) pairs.
template <class F, class Emit>
void root_split_line(const F& f, double a, double b, int cells, const Emit& emit) {
  static thread_local std::vector<double> gx, gw;
  if (gx.empty()) gauss_legendre(8, gx, gw);
  const double h = (b - a) / cells;
  double fa = f(a);
  auto panel = [&](double lo, double hi) {
    if (hi <= lo) return;
    for (std::size_t k = 0; k < gx.size(); ++k) emit(0.5 * (lo + hi) + 0.5 * (hi - lo) * gx[k], 0.5 * (hi - lo) * gw[k]);
  };
  for (int i = 0; i < cells; ++i) {
    const double lo = a + h * i, hi = i + 1 == cells ? b : a + h * (i + 1);
    const double fb = f(hi);
    if (fa * fb < 0) {
      boost::uintmax_t iters = 100;
      const auto r = boost::math::tools::toms748_solve(f, lo, hi, fa, fb, boost::math::tools::eps_tolerance<double>(52), iters);
      const double root = 0.5 * (r.first + r.second);
      panel(lo, root);
      panel(root, hi);
    } else {
      panel(lo, hi);
    }
    fa = fb;
  }
}

int line_cells(double L) { return 64 * (static_cast<int>(std::ceil(L)) + 1); }

// Circle: split [0, 2 pi] at the zeros of f, so the rule is exact up to rounding.
template <class F>
AbsQuadrature circle_abs_rule(const F& f, double L) {
  AbsQuadrature q;
  root_split_line(f, 0.0, 2 * pi, line_cells(L), [&](double s, double w) {
    Point x(1);
    x[0] = s;
    q.nodes.push_back(x);
    q.weights.push_back(w / (2 * pi));
  });
  q.resolution = line_cells(L);
  q.converged = true;
  return q;
}

// Dyadic Gauss-Legendre on [lo, hi]: a panel is split until its 8-point value
// and the sum over its halves agree within tol * width / total. Accepted nodes
// carry (s, weight, integrand value). Panels still unresolved at max_depth are
// accepted and their disagreement is added to `forced`; outer levels stop at
// depth 12, where the integrand is itself a noisy adaptive value.
struct LineNode {
  double s, w, f;
};

template <class G>
void adaptive_panel(const G& g, double lo, double hi, double coarse, double per_width, int depth, int max_depth,
                    std::vector<LineNode>& out, double& forced) {
  static thread_local std::vector<double> gx, gw;
  if (gx.empty()) gauss_legendre(8, gx, gw);
  const double mid = 0.5 * (lo + hi);
  LineNode left[8], right[8];
  double l = 0, r = 0;
  for (std::size_t k = 0; k < 8; ++k) {
    const double hl = 0.5 * (mid - lo), hr = 0.5 * (hi - mid);
    left[k] = {0.5 * (lo + mid) + hl * gx[k], hl * gw[k], 0.0};
    left[k].f = g(left[k].s);
    l += left[k].w * left[k].f;
    right[k] = {0.5 * (mid + hi) + hr * gx[k], hr * gw[k], 0.0};
    right[k].f = g(right[k].s);
    r += right[k].w * right[k].f;
  }
  const double diff = std::abs(coarse - l - r);
  if (diff <= per_width * (hi - lo) || depth >= max_depth) {
    if (depth >= max_depth) forced += diff;
    out.insert(out.end(), left, left + 8);
    out.insert(out.end(), right, right + 8);
    return;
  }
  adaptive_panel(g, lo, mid, l, per_width, depth + 1, max_depth, out, forced);
  adaptive_panel(g, mid, hi, r, per_width, depth + 1, max_depth, out, forced);
}

template <class G>
bool adaptive_line(const G& g, const std::vector<double>& breaks, double tol, int max_depth, std::vector<LineNode>& out) {
  static thread_local std::vector<double> gx, gw;
  if (gx.empty()) gauss_legendre(8, gx, gw);
  const double per_width = tol / (breaks.back() - breaks.front());
  double forced = 0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = breaks[i], hi = breaks[i + 1];
    if (!(hi > lo)) continue;
    double c = 0;
    for (std::size_t k = 0; k < 8; ++k) c += 0.5 * (hi - lo) * gw[k] * g(0.5 * (lo + hi) + 0.5 * (hi - lo) * gx[k]);
    adaptive_panel(g, lo, hi, c, per_width, 0, max_depth, out, forced);
  }
  return forced <= 0.5 * tol;
}

// A0 + sum_{k>=1} A_k cos(ks) + B_k sin(ks).
struct TrigPoly {
  std::vector<double> A, B;
  explicit TrigPoly(int deg = 0) : A(static_cast<std::size_t>(deg) + 1, 0.0), B(static_cast<std::size_t>(deg) + 1, 0.0) {}
  // Value and derivative at s.
  std::pair<double, double> eval(double s) const {
    const double c1 = std::cos(s), s1 = std::sin(s);
    double ck = 1, sk = 0, v = A[0], dv = 0;
    for (std::size_t k = 1; k < A.size(); ++k) {
      const double cn = ck * c1 - sk * s1;
      sk = sk * c1 + ck * s1;
      ck = cn;
      v += A[k] * ck + B[k] * sk;
      dv += static_cast<double>(k) * (B[k] * ck - A[k] * sk);
    }
    return {v, dv};
  }
};

// P and its frame gradient restricted to the line through x along coordinate c.
// Both are trigonometric polynomials of degree <= L in the line parameter (on
// the sphere theta runs over [0, 2 pi) via the analytic continuation).
class LineRestriction {
 public:
  LineRestriction(const DiffusionPolynomial& P, const Point& x, int c) : c_(c) {
    const auto& m = P.manifold();
    const auto& pairs = P.basis_ptr()->pairs();
    const auto& coef = P.coefficients();
    int deg = 0;
    for (const auto& p : pairs) deg = std::max(deg, std::abs(p.label.freq[static_cast<std::size_t>(m.kind() == ManifoldKind::Torus ? c : 0)]));
    sphere_ = m.kind() == ManifoldKind::Sphere2;
    value_ = TrigPoly(deg);
    if (!sphere_) {
      const int d = m.dim();
      other_.assign(static_cast<std::size_t>(d), TrigPoly(deg));
      for (const auto& p : pairs) {
        const double cp = coef[static_cast<Eigen::Index>(p.index)];
        if (cp == 0.0) continue;
        if (p.lambda_sq == 0) {
          value_.A[0] += cp;
          continue;
        }
        double phase = 0;
        for (int i = 0; i < d; ++i)
          if (i != c) phase += p.label.freq[static_cast<std::size_t>(i)] * x[i];
        const int q = p.label.freq[static_cast<std::size_t>(c)];
        const bool is_cos = p.label.tag == 'c';
        const double amp = std::sqrt(2.0) * cp;
        add(value_, amp, phase, q, is_cos);
        for (int a = 0; a < d; ++a)
          if (a != c && p.label.freq[static_cast<std::size_t>(a)] != 0)
            add(other_[static_cast<std::size_t>(a)], amp * p.label.freq[static_cast<std::size_t>(a)], phase + pi / 2, q, is_cos);
      }
      for (int a = 0; a < d; ++a)
        if (a != c) active_.push_back(a);
      return;
    }
    // Sphere, line in theta at fixed phi = x[1]: sample P and d/dphi P.
    const double phi = x[1];
    const int M = 2 * deg + 2;
    TrigPoly dphi(deg);
    detail::LegendreTable tab;
    for (int j = 0; j < M; ++j) {
      const double th = 2 * pi * (j + 0.5) / M;
      tab.compute(deg, th, false);
      double f = 0, g = 0;
      for (const auto& p : pairs) {
        const double cp = coef[static_cast<Eigen::Index>(p.index)];
        if (cp == 0.0) continue;
        const int l = p.label.freq[0], mm = p.label.freq[1];
        const double N = tab.n(l, mm);
        if (mm == 0) {
          f += cp * N;
        } else if (p.label.tag == 'c') {
          f += cp * N * std::sqrt(2.0) * std::cos(mm * phi);
          g -= cp * N * std::sqrt(2.0) * mm * std::sin(mm * phi);
        } else {
          f += cp * N * std::sqrt(2.0) * std::sin(mm * phi);
          g += cp * N * std::sqrt(2.0) * mm * std::cos(mm * phi);
        }
      }
      for (int k = 0; k <= deg; ++k) {
        const double w = (k == 0 ? 1.0 : 2.0) / M;
        value_.A[static_cast<std::size_t>(k)] += w * f * std::cos(k * th);
        value_.B[static_cast<std::size_t>(k)] += w * f * std::sin(k * th);
        dphi.A[static_cast<std::size_t>(k)] += w * g * std::cos(k * th);
        dphi.B[static_cast<std::size_t>(k)] += w * g * std::sin(k * th);
      }
    }
    value_.B[0] = dphi.B[0] = 0.0;
    other_.push_back(dphi);
  }

  double value(double s) const { return value_.eval(s).first; }

  double gradient_norm(double s) const {
    const auto [v, dv] = value_.eval(s);
    (void)v;
    if (sphere_) {
      const double g = other_[0].eval(s).first / std::sin(s);
      return std::sqrt(dv * dv + g * g);
    }
    double sq = dv * dv;
    for (int a : active_) {
      const double g = other_[static_cast<std::size_t>(a)].eval(s).first;
      sq += g * g;
    }
    return std::sqrt(sq);
  }

 private:
  // amp * cos(phase + q s) (or sin) into t.
  static void add(TrigPoly& t, double amp, double phase, int q, bool is_cos) {
    const double cp = std::cos(phase), sp = std::sin(phase);
    const auto k = static_cast<std::size_t>(std::abs(q));
    const double sign = q < 0 ? -1.0 : 1.0;
    // cos(phase + qs) = cp cos(qs) - sp sin(qs); sin(phase + qs) = sp cos(qs) + cp sin(qs).
    t.A[k] += amp * (is_cos ? cp : sp);
    if (k > 0) t.B[k] += amp * sign * (is_cos ? -sp : cp);
  }

  int c_;
  bool sphere_ = false;
  TrigPoly value_;
  std::vector<TrigPoly> other_;
  std::vector<int> active_;
};

// |P| or |grad P| on a torus of dimension >= 2 or the sphere, integrated one
// coordinate at a time. The innermost line (the last torus coordinate, theta on
// the sphere) is split at the zeros of P for |P|.
class IteratedRule {
 public:
  IteratedRule(const DiffusionPolynomial& P, bool gradient) : P_(P), gradient_(gradient) {
    const auto& m = P.manifold();
    sphere_ = m.kind() == ManifoldKind::Sphere2;
    d_ = m.dim();
    Lc_ = static_cast<int>(std::ceil(P.bandwidth())) + 1;
    const auto coarse = m.quadrature(4 * Lc_ + 2);
    double scale = 0;
    for (std::size_t i = 0; i < coarse.nodes.size(); ++i) scale += coarse.weights[i] * integrand(coarse.nodes[i]);
    tol_ = 1e-8 * std::max(scale, std::numeric_limits<double>::min());
  }

  AbsQuadrature run() {
    AbsQuadrature q;
    Point x = Point::Zero(d_);
    q.converged = true;
    // Stored nodes would run to tens of millions on Torus(3); keep only the value there.
    q.value = level(0, x, tol_, d_ <= 2 ? &q : nullptr, 1.0);
    q.resolution = Lc_;
    return q;
  }

 private:
  double integrand(const Point& x) const { return gradient_ ? P_.gradient(x).norm() : std::abs(P_.value(x)); }

  int coord(int lvl) const { return sphere_ ? 1 - lvl : lvl; }
  double upper(int lvl) const { return sphere_ && lvl == 1 ? pi : 2 * pi; }
  double density(int lvl, double s) const { return sphere_ && lvl == 1 ? 0.5 * std::sin(s) : 1.0 / (2 * pi); }

  std::vector<double> uniform_breaks(int lvl, int cells) const {
    std::vector<double> b;
    for (int i = 0; i <= cells; ++i) b.push_back(upper(lvl) * i / cells);
    return b;
  }

  // Integral over coordinates lvl.. with the earlier ones fixed in x. When
  // `emit` is set the accepted nodes are appended with weight factor wf.
  double level(int lvl, Point x, double tol, AbsQuadrature* emit, double wf) {
    const int c = coord(lvl);
    std::vector<LineNode> nodes;
    bool ok;
    if (lvl == d_ - 1) {
      const LineRestriction line(P_, x, c);
      std::vector<double> breaks = uniform_breaks(lvl, 2 * Lc_);
      if (!gradient_) {
        // Insert the zeros of P, found as sign changes on a grid 8 times finer than the panels.
        auto f = [&](double s) { return line.value(s); };
        const std::vector<double> grid = uniform_breaks(lvl, 16 * Lc_);
        std::vector<double> with_roots = breaks;
        double fa = f(grid.front());
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
          const double fb = f(grid[i + 1]);
          if (fa * fb < 0) {
            boost::uintmax_t iters = 100;
            const auto r = boost::math::tools::toms748_solve(f, grid[i], grid[i + 1], fa, fb,
                                                             boost::math::tools::eps_tolerance<double>(52), iters);
            with_roots.push_back(0.5 * (r.first + r.second));
          }
          fa = fb;
        }
        std::sort(with_roots.begin(), with_roots.end());
        breaks = std::move(with_roots);
      }
      ok = adaptive_line(
          [&](double s) { return density(lvl, s) * (gradient_ ? line.gradient_norm(s) : std::abs(line.value(s))); },
          breaks, tol, 30, nodes);
      if (emit)
        for (const auto& n : nodes) {
          Point y = x;
          y[c] = n.s;
          emit->nodes.push_back(y);
          emit->weights.push_back(wf * n.w * density(lvl, n.s));
        }
    } else {
      ok = adaptive_line(
          [&](double s) {
            Point y = x;
            y[c] = s;
            return density(lvl, s) * level(lvl + 1, y, 0.1 * tol, nullptr, 1.0);
          },
          uniform_breaks(lvl, 2 * Lc_), tol, 12, nodes);
      if (emit)
        for (const auto& n : nodes) {
          Point y = x;
          y[c] = n.s;
          level(lvl + 1, y, 0.1 * tol, emit, wf * n.w * density(lvl, n.s));
        }
    }
    if (!ok && emit) emit->converged = false;
    double v = 0;
    for (const auto& n : nodes) v += n.w * n.f;
    return v;
  }

  const DiffusionPolynomial& P_;
  bool gradient_;
  bool sphere_ = false;
  int d_ = 1, Lc_ = 1;
  double tol_ = 0;
};

double dot_weights(const AbsQuadrature& q, const std::vector<double>& v) {
  double s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) s += q.weights[i] * v[i];
  return s;
}

// ---- node rules ----

struct NodeContext {
  const Partition* partition;
  std::vector<Point> center, corner;
  std::vector<std::vector<Point>> candidates;  // per region, for the extremal rule
};

Point corner_of(const Partition& p, const Region& r) {
  const auto& m = p.manifold();
  Point x(m.dim());
  if (m.kind() == ManifoldKind::Torus) {
    for (int k = 0; k < m.dim(); ++k) x[k] = r.lo[static_cast<std::size_t>(k)];
    return m.canonical(x);
  }
  x << (r.lo[0] <= 0 ? r.hi[0] : r.lo[0]), r.lo[1];
  return m.canonical(x);
}

std::vector<Point> region_candidates(const Partition& p, const Region& r) {
  const auto& m = p.manifold();
  const int d = m.dim();
  const int k = d == 1 ? 17 : (d == 2 ? 7 : 5);
  std::vector<Point> out;
  int total = 1;
  for (int i = 0; i < d; ++i) total *= k;
  for (int idx = 0; idx < total; ++idx) {
    Point x(d);
    int rem = idx;
    for (int i = 0; i < d; ++i) {
      const double s = static_cast<double>(rem % k) / (k - 1);
      rem /= k;
      const auto ii = static_cast<std::size_t>(i);
      if (m.kind() == ManifoldKind::Sphere2 && i == 0) {
        const double z = std::cos(r.lo[0]) + s * (std::cos(r.hi[0]) - std::cos(r.lo[0]));
        x[0] = std::acos(std::clamp(z, -1.0, 1.0));
      } else {
        x[i] = r.lo[ii] + s * (r.hi[ii] - r.lo[ii]);
      }
    }
    out.push_back(m.canonical(x));
  }
  out.push_back(r.center);
  return out;
}

NodeContext make_context(const Partition& p) {
  NodeContext c{&p, {}, {}, {}};
  for (const auto& r : p.regions()) {
    c.center.push_back(r.center);
    c.corner.push_back(corner_of(p, r));
    c.candidates.push_back(region_candidates(p, r));
  }
  return c;
}

// Worst admissible choice: all maximizers or all minimizers of f per region.
template <class F>
std::vector<Point> extremal_nodes(const NodeContext& c, const F& f, double integral) {
  std::vector<Point> lo, hi;
  double slo = 0, shi = 0;
  for (const auto& cand : c.candidates) {
    std::size_t a = 0, b = 0;
    std::vector<double> v(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) v[i] = f(cand[i]);
    for (std::size_t i = 1; i < cand.size(); ++i) {
      if (v[i] < v[a]) a = i;
      if (v[i] > v[b]) b = i;
    }
    lo.push_back(cand[a]);
    hi.push_back(cand[b]);
    slo += v[a];
    shi += v[b];
  }
  const double n = static_cast<double>(c.candidates.size());
  return std::abs(shi / n - integral) >= std::abs(slo / n - integral) ? hi : lo;
}

struct RatioEval {
  double ratio = 0.0;
  Eigen::VectorXd grad;  // d ratio / d coefficients, constant mode removed
};

enum class Target { Value, Gradient };

double node_function(const DiffusionPolynomial& P, Target t, const Point& x) {
  return t == Target::Value ? std::abs(P.value(x)) : P.gradient(x).norm();
}

std::vector<Point> rule_nodes(const NodeContext& c, MzRule rule, const DiffusionPolynomial& P, Target t,
                              double integral, const std::vector<Point>& random_nodes) {
  switch (rule) {
    case MzRule::Center: return c.center;
    case MzRule::Corner: return c.corner;
    case MzRule::Random: return random_nodes;
    case MzRule::Extremal:
      return extremal_nodes(c, [&](const Point& x) { return node_function(P, t, x); }, integral);
  }
  return c.center;
}

// Ratio and its coefficient gradient with nodes held fixed.
RatioEval ratio_with_gradient(const DiffusionPolynomial& P, Target t, const AbsQuadrature& q,
                              const std::vector<Point>& nodes) {
  const auto& basis = P.basis();
  const Eigen::VectorXd& c = P.coefficients();
  const auto n = c.size();
  Eigen::VectorXd dA = Eigen::VectorXd::Zero(n), dB = Eigen::VectorXd::Zero(n);
  double A = 0, B = 0;
  auto accumulate = [&](const Point& x, double w, double& S, Eigen::VectorXd& dS) {
    if (t == Target::Value) {
      const Eigen::VectorXd phi = basis.values(x);
      const double v = phi.dot(c);
      S += w * std::abs(v);
      if (v != 0) dS += w * (v > 0 ? 1.0 : -1.0) * phi;
    } else {
      const Eigen::MatrixXd g = basis.gradients(x);
      const Eigen::VectorXd gp = g.transpose() * c;
      const double norm = gp.norm();
      S += w * norm;
      if (norm > 0) dS += w * (g * gp) / norm;
    }
  };
  // The ratio uses the adaptive value; its coefficient gradient only steers the
  // ascent, so off the circle a fixed product grid is enough.
  if (P.manifold().dim() == 1) {
    for (std::size_t i = 0; i < q.nodes.size(); ++i) accumulate(q.nodes[i], q.weights[i], A, dA);
  } else {
    const auto grid = P.manifold().quadrature(4 * static_cast<int>(std::ceil(P.bandwidth())) + 6);
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) accumulate(grid.nodes[i], grid.weights[i], A, dA);
  }
  A = q.value;
  const double wn = 1.0 / static_cast<double>(nodes.size());
  for (const auto& x : nodes) accumulate(x, wn, B, dB);
  const double kappa = scale_factor(P, nodes.size());
  RatioEval r;
  r.ratio = std::abs(A - B) / (kappa * A);
  const double s = A >= B ? 1.0 : -1.0;
  r.grad = (s * (dA - dB) * A - std::abs(A - B) * dA) / (kappa * A * A);
  r.grad[0] = 0.0;
  return r;
}

AbsQuadrature quadrature_for(const DiffusionPolynomial& P, Target t) {
  return t == Target::Value ? abs_value_quadrature(P) : gradient_norm_quadrature(P);
}

double ratio_for(const DiffusionPolynomial& P, Target t, const std::vector<Point>& nodes, double A) {
  double B = 0;
  for (const auto& x : nodes) B += node_function(P, t, x);
  B /= static_cast<double>(nodes.size());
  return std::abs(A - B) / (scale_factor(P, nodes.size()) * A);
}

// Gradient ascent on the ratio over the unit sphere of Pi_L^0 coefficients.
double ascend(DiffusionPolynomial P, Target t, const NodeContext& ctx, MzRule rule,
              const std::vector<Point>& random_nodes, int steps) {
  Eigen::VectorXd c = P.coefficients();
  c /= c.norm();
  P = DiffusionPolynomial(P.basis_ptr(), c);
  AbsQuadrature q = quadrature_for(P, t);
  auto nodes = rule_nodes(ctx, rule, P, t, q.value, random_nodes);
  RatioEval cur = ratio_with_gradient(P, t, q, nodes);
  double eta = 0.1;
  for (int s = 0; s < steps; ++s) {
    const double gn = cur.grad.norm();
    if (!(gn > 0)) break;
    bool moved = false;
    for (int tries = 0; tries < 8 && !moved; ++tries, eta *= 0.5) {
      Eigen::VectorXd trial = c + eta * cur.grad / gn;
      trial[0] = 0.0;
      trial /= trial.norm();
      const DiffusionPolynomial Pt(P.basis_ptr(), trial);
      if (t == Target::Gradient && is_constant(Pt)) continue;
      AbsQuadrature qt = quadrature_for(Pt, t);
      auto nt = rule_nodes(ctx, rule, Pt, t, qt.value, random_nodes);
      const double rt = ratio_for(Pt, t, nt, qt.value);
      if (rt > cur.ratio) {
        c = trial;
        P = Pt;
        cur = ratio_with_gradient(P, t, qt, nt);
        cur.ratio = std::max(cur.ratio, rt);
        moved = true;
        eta *= 4.0;  // undo this round's halving and grow
      }
    }
    if (!moved) break;
  }
  return cur.ratio;
}

}  // namespace

Smoother::Smoother(double eps) : eps_(eps) {
  if (!(eps > 0) || !std::isfinite(eps)) throw InputError("smoother needs eps > 0");
  gauss_legendre(40, gx_, gw_);
}

double Smoother::operator()(double u) const {
  const double e = eps_;
  if (u <= 0.25 * e) return 0.5 * e;
  if (u >= 0.75 * e) return u;
  // eps/2 + int_{eps/4}^{u} step((s - eps/4) / (eps/2)) ds. The step rises over
  // [eps/4, 3eps/4] and its integral there is eps/4, so v(u) = u from 3eps/4 on.
  const double x = (u - 0.25 * e) / (0.5 * e);
  double s = 0;
  for (std::size_t i = 0; i < gx_.size(); ++i) s += gw_[i] * detail::smooth_step(0.5 * x * (gx_[i] + 1));
  // The exact value is >= u; clamp the last-bit rounding.
  return std::max(u, 0.5 * e + 0.5 * e * 0.5 * x * s);
}

double Smoother::derivative(double u) const {
  const double e = eps_;
  if (u <= 0.25 * e) return 0.0;
  if (u >= 0.75 * e) return 1.0;
  return detail::smooth_step((u - 0.25 * e) / (0.5 * e));
}

AbsQuadrature abs_value_quadrature(const DiffusionPolynomial& P) {
  const auto& m = P.manifold();
  AbsQuadrature q;
  if (m.kind() == ManifoldKind::Torus && m.dim() == 1) {
    q = circle_abs_rule(
        [&](double t) {
          Point x(1);
          x[0] = t;
          return P.value(x);
        },
        P.bandwidth());
    std::vector<double> v;
    for (const auto& x : q.nodes) v.push_back(std::abs(P.value(x)));
    q.value = dot_weights(q, v);
    return q;
  }
  return IteratedRule(P, false).run();
}

AbsQuadrature gradient_norm_quadrature(const DiffusionPolynomial& P) {
  const auto& m = P.manifold();
  AbsQuadrature q;
  if (m.kind() == ManifoldKind::Torus && m.dim() == 1) {
    q = circle_abs_rule(
        [&](double t) {
          Point x(1);
          x[0] = t;
          return P.gradient(x).components[0];
        },
        P.bandwidth());
    std::vector<double> v;
    for (const auto& x : q.nodes) v.push_back(P.gradient(x).norm());
    q.value = dot_weights(q, v);
    return q;
  }
  return IteratedRule(P, true).run();
}

double mz_value_ratio(const DiffusionPolynomial& P, const NodeSet& nodes) {
  check_nodes(P, nodes);
  if (P.coefficients().isZero(0.0)) throw InputError("MZ ratio needs a nonzero polynomial");
  const auto q = abs_value_quadrature(P);
  return ratio_for(P, Target::Value, nodes.points, q.value);
}

double mz_gradient_ratio(const DiffusionPolynomial& P, const NodeSet& nodes) {
  check_nodes(P, nodes);
  if (is_constant(P)) throw InputError("gradient MZ ratio needs a non-constant polynomial");
  const auto q = gradient_norm_quadrature(P);
  return ratio_for(P, Target::Gradient, nodes.points, q.value);
}

SignedErrors mz_signed_errors(const DiffusionPolynomial& P, const NodeSet& nodes) {
  check_nodes(P, nodes);
  double v = 0;
  Vec g = Vec::Zero(P.manifold().dim());
  for (const auto& x : nodes.points) {
    v += P.value(x);
    g += P.gradient(x).components;
  }
  const double n = static_cast<double>(nodes.size());
  // The integral of P is its constant coefficient.
  return {std::abs(v / n - P.coefficients()[0]), (g / n).norm()};
}

MzRule mz_rule_from_string(const std::string& name) {
  if (name == "center") return MzRule::Center;
  if (name == "random") return MzRule::Random;
  if (name == "corner") return MzRule::Corner;
  if (name == "extremal") return MzRule::Extremal;
  throw InputError("unknown MZ node rule '" + name + "' (center, random, corner, extremal)");
}

std::string to_string(MzRule rule) {
  switch (rule) {
    case MzRule::Center: return "center";
    case MzRule::Random: return "random";
    case MzRule::Corner: return "corner";
    case MzRule::Extremal: return "extremal";
  }
  return "center";
}

double t_field_excess(const DiffusionPolynomial& P, const Smoother& v, const std::vector<Point>& points) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& x : points) {
    const double g = P.gradient(x).norm();
    // T P = <grad P / v(|grad P|), grad P>.
    worst = std::max(worst, g * g / v(g) - g);
  }
  return worst;
}

MzReport mz_survey(const Manifold& m, const std::vector<double>& L_grid, const std::vector<int>& N_grid, int trials,
                   std::uint64_t seed, const std::vector<MzRule>& rules, int ascent_steps) {
  if (trials < 0) throw InputError("trials must be >= 0");
  if (rules.empty()) throw InputError("MZ survey needs at least one node rule");
  const int d = m.dim();
  for (double L : L_grid)
    for (int N : N_grid) {
      if (N < 1 || !(L > 0)) throw InputError("MZ survey needs L > 0 and N >= 1");
      if (L > std::pow(N, 1.0 / d) + 1e-12)
        throw InputError("MZ survey needs L <= N^{1/d} for every grid pair");
    }
  MzReport rep;
  rep.manifold = m.tag();
  rep.trials = trials;
  if (trials == 0) return rep;

  struct Trial {
    std::vector<double> value, grad;  // per rule
  };
  std::size_t cell_index = 0;
  int center_pairs = 0, center_le = 0;
  const auto ci = std::find(rules.begin(), rules.end(), MzRule::Center) - rules.begin();
  const auto ki = std::find(rules.begin(), rules.end(), MzRule::Corner) - rules.begin();
  const bool compare = ci < static_cast<std::ptrdiff_t>(rules.size()) && ki < static_cast<std::ptrdiff_t>(rules.size());
  for (double L : L_grid) {
    const BasisPtr basis = make_basis(m, L);
    if (basis->size() < 2) throw InputError("bandwidth too small: Pi_L^0 is empty");
    for (int N : N_grid) {
      const Partition part = equal_area_partition(m, N);
      const NodeContext ctx = make_context(part);
      std::vector<Trial> out(static_cast<std::size_t>(trials));
      std::vector<DiffusionPolynomial> polys(static_cast<std::size_t>(trials),
                                             DiffusionPolynomial(basis, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()))));
      std::vector<std::vector<Point>> random_nodes(static_cast<std::size_t>(trials));
      parallel_for(static_cast<std::size_t>(trials), [&](std::size_t i) {
        Rng rng = Rng::stream(seed, (cell_index << 32) | i);
        DiffusionPolynomial P = DiffusionPolynomial::random(basis, rng, true);
        random_nodes[i] = pick_nodes(part, NodeRule::Random, rng.next_u64()).points;
        const double A = abs_value_quadrature(P).value;
        const double G = gradient_norm_quadrature(P).value;
        Trial t;
        for (MzRule rule : rules) {
          t.value.push_back(ratio_for(P, Target::Value, rule_nodes(ctx, rule, P, Target::Value, A, random_nodes[i]), A));
          t.grad.push_back(ratio_for(P, Target::Gradient, rule_nodes(ctx, rule, P, Target::Gradient, G, random_nodes[i]), G));
        }
        out[i] = std::move(t);
        polys[i] = std::move(P);
      });
      MzCell cell{L, N, 0.0, 0.0};
      for (std::size_t r = 0; r < rules.size(); ++r) {
        std::size_t bv = 0, bg = 0;
        for (std::size_t i = 0; i < out.size(); ++i) {
          rep.rows.push_back({L, N, to_string(rules[r]), static_cast<int>(i), out[i].value[r], out[i].grad[r]});
          if (out[i].value[r] > out[bv].value[r]) bv = i;
          if (out[i].grad[r] > out[bg].grad[r]) bg = i;
        }
        cell.C_hat = std::max({cell.C_hat, out[bv].value[r],
                               ascend(polys[bv], Target::Value, ctx, rules[r], random_nodes[bv], ascent_steps)});
        cell.C3_hat = std::max({cell.C3_hat, out[bg].grad[r],
                                ascend(polys[bg], Target::Gradient, ctx, rules[r], random_nodes[bg], ascent_steps)});
      }
      if (compare)
        for (const auto& t : out) {
          ++center_pairs;
          if (t.value[static_cast<std::size_t>(ci)] <= t.value[static_cast<std::size_t>(ki)]) ++center_le;
        }
      rep.cells.push_back(cell);
      ++cell_index;
    }
  }
  double cmin = std::numeric_limits<double>::infinity(), c3min = cmin;
  for (const auto& c : rep.cells) {
    rep.C_hat = std::max(rep.C_hat, c.C_hat);
    rep.C3_hat = std::max(rep.C3_hat, c.C3_hat);
    cmin = std::min(cmin, c.C_hat);
    c3min = std::min(c3min, c.C3_hat);
  }
  rep.C_spread = cmin > 0 ? rep.C_hat / cmin : std::numeric_limits<double>::infinity();
  rep.C3_spread = c3min > 0 ? rep.C3_hat / c3min : std::numeric_limits<double>::infinity();
  rep.center_below_corner = center_pairs > 0 ? static_cast<double>(center_le) / center_pairs : 0.0;
  return rep;
}

std::string mz_csv(const MzReport& r) {
  std::ostringstream os;
  os << "L,N,rule,trial,ratio_value,ratio_grad\n";
  for (const auto& row : r.rows)
    os << format_double(row.L) << ',' << row.N << ',' << row.rule << ',' << row.trial << ','
       << format_double(row.ratio_value) << ',' << format_double(row.ratio_grad) << '\n';
  return os.str();
}

}  // namespace designforge
