#include "designforge/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "designforge/errors.hpp"
#include "designforge/io.hpp"
#include "designforge/parallel.hpp"

namespace designforge {

namespace {

using std::numbers::pi;
constexpr double kSlack = 1e-12;

double wrap(double a) {
  a = std::fmod(a, 2 * pi);
  return a < 0 ? a + 2 * pi : a;
}

Point make_point(int d) { return Point::Zero(d); }

// ---- torus ----

void torus_bricks(int N, int k, int d, std::array<double, 3> lo, std::array<double, 3> hi, std::vector<Region>& out) {
  if (k == d) {
    Region r;
    r.lo = lo;
    r.hi = hi;
    out.push_back(r);
    return;
  }
  const auto kk = static_cast<std::size_t>(k);
  const int remaining = d - k;
  const int slabs = remaining == 1 ? N : std::clamp(static_cast<int>(std::lround(std::pow(N, 1.0 / remaining))), 1, N);
  const double a = lo[kk], span = hi[kk] - lo[kk];
  int done = 0;
  double prev = a;
  for (int i = 0; i < slabs; ++i) {
    const int n = N / slabs + (i < N % slabs ? 1 : 0);
    done += n;
    const double next = i + 1 == slabs ? hi[kk] : a + span * done / N;
    auto l = lo, h = hi;
    l[kk] = prev;
    h[kk] = next;
    torus_bricks(n, k + 1, d, l, h, out);
    prev = next;
  }
}

Partition torus_partition(const Manifold& m, int N) {
  const int d = m.dim();
  std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < d; ++k) hi[static_cast<std::size_t>(k)] = 2 * pi;
  std::vector<Region> regions;
  torus_bricks(N, 0, d, lo, hi, regions);
  for (auto& r : regions) {
    r.center = make_point(d);
    double diag2 = 0, wmin = 2 * pi;
    r.measure = 1.0;
    for (int k = 0; k < d; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double w = r.hi[kk] - r.lo[kk];
      r.center[k] = 0.5 * (r.lo[kk] + r.hi[kk]);
      diag2 += 0.25 * w * w;
      wmin = std::min(wmin, w);
      r.measure *= w / (2 * pi);
    }
    r.outer_radius = std::sqrt(diag2);
    r.inner_center = r.center;
    r.inner_radius = 0.5 * wmin;
  }
  return {m, std::move(regions), {}};
}

// ---- sphere ----

double sphere_distance(double t1, double p1, double t2, double p2) {
  const double c = std::cos(t1) * std::cos(t2) + std::sin(t1) * std::sin(t2) * std::cos(p1 - p2);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

// Farthest point of the cell [t0, t1] x [phi - half, phi + half] from (tc, phi).
double cell_outer(double tc, double t0, double t1, double half) {
  const double dphi = std::min(pi, half);
  double r = std::max(sphere_distance(tc, 0, t0, dphi), sphere_distance(tc, 0, t1, dphi));
  if (half > 0.5 * pi) {
    // Edges may bend past the antipode; sample them.
    for (int i = 0; i <= 256; ++i) {
      const double t = t0 + (t1 - t0) * i / 256;
      r = std::max(r, sphere_distance(tc, 0, t, dphi));
    }
  }
  return r;
}

// Radius of a ball about (tc, phi) inside the cell: distance to the latitude
// edges and to the great circles through the meridian edges.
double cell_inner(double tc, double t0, double t1, double half) {
  double r = std::min(tc - t0, t1 - tc);
  if (half < pi - 1e-12) r = std::min(r, std::asin(std::clamp(std::sin(tc) * std::sin(std::min(half, 0.5 * pi)), 0.0, 1.0)));
  return r;
}

template <class F>
double ternary_min(F f, double a, double b) {
  for (int i = 0; i < 200; ++i) {
    const double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
    if (f(m1) < f(m2))
      b = m2;
    else
      a = m1;
  }
  return 0.5 * (a + b);
}

Partition sphere_partition(const Manifold& m, int N) {
  std::vector<Region> regions;
  std::vector<Collar> collars;
  auto point = [](double t, double p) {
    Point x(2);
    x << t, p;
    return x;
  };
  if (N == 1) {
    Region r;
    r.center = point(0, 0);
    r.inner_center = r.center;
    r.measure = 1.0;
    r.outer_radius = r.inner_radius = pi;
    r.lo = {0, 0, 0};
    r.hi = {pi, 2 * pi, 0};
    r.collar = 0;
    regions.push_back(r);
    collars.push_back({0, pi, 1, 0, 0});
    return {m, std::move(regions), std::move(collars)};
  }
  const double cap = std::acos(1.0 - 2.0 / N);
  std::vector<int> counts;
  if (N > 2) {
    const double ideal = std::sqrt(4 * pi / N);
    const int n = std::max(1, static_cast<int>(std::lround((pi - 2 * cap) / ideal)));
    // Ideal cell counts per collar of equal angular height, then largest remainder.
    std::vector<double> want(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double a = cap + (pi - 2 * cap) * i / n, b = cap + (pi - 2 * cap) * (i + 1) / n;
      want[static_cast<std::size_t>(i)] = 0.5 * N * (std::cos(a) - std::cos(b));
    }
    counts.resize(want.size());
    int assigned = 0;
    for (std::size_t i = 0; i < want.size(); ++i) {
      counts[i] = std::max(1, static_cast<int>(std::floor(want[i])));
      assigned += counts[i];
    }
    std::vector<std::size_t> order(want.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return want[a] - counts[a] > want[b] - counts[b];
    });
    for (std::size_t k = 0; assigned < N - 2; k = (k + 1) % order.size()) {
      ++counts[order[k]];
      ++assigned;
    }
    for (std::size_t k = order.size(); assigned > N - 2 && k-- > 0;) {
      if (counts[order[k]] > 1) {
        --counts[order[k]];
        --assigned;
      }
    }
  }

  auto add_cap = [&](bool north) {
    Region r;
    const double tc = north ? 0.0 : pi;
    r.center = point(tc, 0);
    r.inner_center = r.center;
    r.measure = 1.0 / N;
    r.outer_radius = r.inner_radius = cap;
    r.lo = {north ? 0.0 : pi - cap, 0, 0};
    r.hi = {north ? cap : pi, 2 * pi, 0};
    r.collar = static_cast<int>(collars.size());
    collars.push_back({r.lo[0], r.hi[0], 1, 0.0, regions.size()});
    regions.push_back(r);
  };

  add_cap(true);
  int before = 1;
  double t0 = cap;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const int mi = counts[i];
    const int after = before + mi;
    const double t1 = i + 1 == counts.size() ? pi - cap : std::acos(std::clamp(1.0 - 2.0 * after / N, -1.0, 1.0));
    const double width = 2 * pi / mi;
    const double offset = (i % 2 == 1 && mi > 1) ? 0.5 * width : 0.0;
    const double half = 0.5 * width;
    const double tc = ternary_min([&](double t) { return cell_outer(t, t0, t1, half); }, t0, t1);
    const double ti = ternary_min([&](double t) { return -cell_inner(t, t0, t1, half); }, t0, t1);
    const double zone = 0.5 * (std::cos(t0) - std::cos(t1));
    collars.push_back({t0, t1, mi, offset, regions.size()});
    for (int j = 0; j < mi; ++j) {
      Region r;
      const double p0 = wrap(offset + j * width);
      const double pm = wrap(p0 + half);
      r.center = point(tc, pm);
      r.inner_center = point(ti, pm);
      r.outer_radius = cell_outer(tc, t0, t1, half);
      r.inner_radius = cell_inner(ti, t0, t1, half);
      r.measure = zone / mi;
      r.lo = {t0, p0, 0};
      r.hi = {t1, p0 + width, 0};
      r.collar = static_cast<int>(collars.size()) - 1;
      regions.push_back(r);
    }
    before = after;
    t0 = t1;
  }
  add_cap(false);
  return {m, std::move(regions), std::move(collars)};
}

std::size_t locate_sphere(const Partition& p, const Point& x) {
  const double t = x[0], ph = x[1];
  const auto& cs = p.collars();
  std::size_t c = 0;
  while (c + 1 < cs.size() && t > cs[c].theta_hi) ++c;
  const auto& col = cs[c];
  if (col.cells == 1) return col.first_region;
  const double width = 2 * pi / col.cells;
  const double rel = wrap(ph - col.phi_offset);
  auto j = static_cast<std::size_t>(std::min<double>(std::floor(rel / width), col.cells - 1));
  // On a meridian edge both neighbours contain x; keep the lower index.
  if (rel == static_cast<double>(j) * width) j = j == 0 ? 0 : j - 1;
  if (rel == 0.0) j = 0;
  return col.first_region + j;
}

}  // namespace

Partition::Partition(Manifold m, std::vector<Region> regions, std::vector<Collar> collars)
    : m_(m), regions_(std::move(regions)), collars_(std::move(collars)) {}

double Partition::c1() const {
  double c = std::numeric_limits<double>::infinity();
  for (const auto& r : regions_) c = std::min(c, r.inner_radius);
  return c * std::pow(static_cast<double>(size()), 1.0 / m_.dim());
}

double Partition::c2() const {
  double c = 0;
  for (const auto& r : regions_) c = std::max(c, r.outer_radius);
  return c * std::pow(static_cast<double>(size()), 1.0 / m_.dim());
}

bool Partition::contains(std::size_t j, const Point& xin) const {
  const Point x = m_.canonical(xin);
  const auto& r = regions_.at(j);
  if (m_.kind() == ManifoldKind::Torus) {
    for (int k = 0; k < m_.dim(); ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double v = x[k];
      bool in = v >= r.lo[kk] - kSlack && v <= r.hi[kk] + kSlack;
      // Coordinates near 2 pi and near 0 are the same place.
      if (!in && r.lo[kk] <= kSlack) in = v >= 2 * pi - kSlack;
      if (!in && r.hi[kk] >= 2 * pi - kSlack) in = v <= kSlack;
      if (!in) return false;
    }
    return true;
  }
  if (x[0] < r.lo[0] - kSlack || x[0] > r.hi[0] + kSlack) return false;
  const double width = r.hi[1] - r.lo[1];
  if (width >= 2 * pi - kSlack) return true;
  if (x[0] < kSlack || x[0] > pi - kSlack) return false;
  const double rel = wrap(x[1] - r.lo[1]);
  return rel <= width + kSlack || rel >= 2 * pi - kSlack;
}

Point Partition::sample(std::size_t j, Rng& rng) const {
  const auto& r = regions_.at(j);
  Point x(m_.dim());
  if (m_.kind() == ManifoldKind::Torus) {
    for (int k = 0; k < m_.dim(); ++k) x[k] = rng.uniform(r.lo[static_cast<std::size_t>(k)], r.hi[static_cast<std::size_t>(k)]);
    return m_.canonical(x);
  }
  const double z = rng.uniform(std::cos(r.hi[0]), std::cos(r.lo[0]));
  x << std::acos(std::clamp(z, -1.0, 1.0)), rng.uniform(r.lo[1], r.hi[1]);
  return m_.canonical(x);
}

Partition equal_area_partition(const Manifold& m, int N) {
  if (N < 1) throw InputError("partition needs N >= 1");
  return m.kind() == ManifoldKind::Torus ? torus_partition(m, N) : sphere_partition(m, N);
}

std::size_t locate(const Partition& p, const Point& xin) {
  const auto& m = p.manifold();
  m.validate(xin);
  const Point x = m.canonical(xin);
  if (m.kind() == ManifoldKind::Sphere2) return locate_sphere(p, x);
  const auto& rs = p.regions();
  for (std::size_t j = 0; j < rs.size(); ++j) {
    bool in = true;
    for (int k = 0; k < m.dim() && in; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      in = x[k] >= rs[j].lo[kk] && x[k] <= rs[j].hi[kk];
    }
    if (in) return j;
  }
  throw NumericalError("point not covered by the partition");
}

CertificationReport certify(const Partition& p, int samples_per_region, std::uint64_t seed) {
  if (samples_per_region < 1) throw InputError("certification needs at least one sample per region");
  const auto& m = p.manifold();
  const std::size_t N = p.size();
  const int d = m.dim();
  std::vector<CertificationRow> rows(N);
  std::vector<std::vector<Violation>> found(N);
  parallel_for(N, [&](std::size_t j) {
    const auto& r = p.regions()[j];
    Rng rng = Rng::stream(seed, j);
    CertificationRow row;
    row.region = j;
    row.measure = r.measure;
    row.inner_radius = r.inner_radius;
    row.outer_radius = r.outer_radius;
    const double tol = r.outer_radius * (1 + 1e-12) + 1e-13;
    auto check_outer = [&](const Point& y) {
      const double dist = m.distance(r.center, y);
      row.max_sampled_distance = std::max(row.max_sampled_distance, dist);
      if (dist > tol) found[j].push_back({j, "outer", y, dist, r.outer_radius});
    };
    for (int s = 0; s < samples_per_region; ++s) check_outer(p.sample(j, rng));
    // Boundary: corners and edge points of the coordinate cell.
    const int edge = 16;
    const int corners = 1 << d;
    for (int c = 0; c < corners; ++c)
      for (int k = 0; k < d; ++k)
        for (int e = 0; e <= edge; ++e) {
          Point y(d);
          for (int i = 0; i < d; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            y[i] = (c >> i) & 1 ? r.hi[ii] : r.lo[ii];
          }
          const auto kk = static_cast<std::size_t>(k);
          y[k] = r.lo[kk] + (r.hi[kk] - r.lo[kk]) * e / edge;
          check_outer(m.canonical(y));
        }
    // Inner ball: interior and rim samples must stay in the cell.
    for (int s = 0; s < samples_per_region; ++s) {
      Vec v(d);
      for (int k = 0; k < d; ++k) v[k] = rng.normal();
      const double rho = s % 4 == 0 ? r.inner_radius : r.inner_radius * std::pow(rng.uniform(), 1.0 / d);
      const Point y = m.exp_map(r.inner_center, v / v.norm(), rho);
      if (!p.contains(j, y)) found[j].push_back({j, "inner", y, m.distance(r.inner_center, y), r.inner_radius});
    }
    if (r.inner_radius > r.outer_radius) found[j].push_back({j, "inner", r.inner_center, r.inner_radius, r.outer_radius});
    row.ok = found[j].empty();
    rows[j] = row;
  });
  CertificationReport rep;
  rep.rows = std::move(rows);
  for (auto& f : found)
    for (auto& v : f) rep.violations.push_back(std::move(v));
  for (const auto& r : p.regions()) rep.measure_error = std::max(rep.measure_error, std::abs(r.measure - 1.0 / N));
  rep.c1_hat = p.c1();
  rep.c2_hat = p.c2();
  rep.passed = rep.violations.empty() && rep.measure_error <= 1e-10;
  return rep;
}

NodeRule node_rule_from_string(const std::string& name) {
  if (name == "center") return NodeRule::Center;
  if (name == "random") return NodeRule::Random;
  if (name == "inner_center") return NodeRule::InnerCenter;
  throw InputError("unknown node rule '" + name + "' (center, random, inner_center)");
}

NodeSet pick_nodes(const Partition& p, NodeRule rule, std::uint64_t seed) {
  std::vector<Point> pts;
  pts.reserve(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const auto& r = p.regions()[j];
    switch (rule) {
      case NodeRule::Center: pts.push_back(r.center); break;
      case NodeRule::InnerCenter: pts.push_back(r.inner_center); break;
      case NodeRule::Random: {
        Rng rng = Rng::stream(seed, j);
        pts.push_back(p.sample(j, rng));
        break;
      }
    }
  }
  return make_node_set(p.manifold(), std::move(pts));
}

double augmented_outer_constant(const Partition& p, const std::vector<Point>& extras) {
  if (extras.size() != p.size()) throw InputError("need one extra point per region");
  double c = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const auto& r = p.regions()[j];
    c = std::max({c, r.outer_radius, p.manifold().distance(r.center, extras[j])});
  }
  return c * std::pow(static_cast<double>(p.size()), 1.0 / p.manifold().dim());
}

nlohmann::json partition_to_json(const Partition& p) {
  nlohmann::json j;
  j["manifold"] = p.manifold().tag();
  j["N"] = p.size();
  j["c1"] = p.c1();
  j["c2"] = p.c2();
  const auto d = static_cast<std::size_t>(p.manifold().dim());
  auto& regions = j["regions"] = nlohmann::json::array();
  for (const auto& r : p.regions()) {
    nlohmann::json e;
    e["center"] = point_to_json(r.center);
    e["measure"] = r.measure;
    e["outer_radius"] = r.outer_radius;
    e["inner_center"] = point_to_json(r.inner_center);
    e["inner_radius"] = r.inner_radius;
    e["lo"] = std::vector<double>(r.lo.begin(), r.lo.begin() + static_cast<std::ptrdiff_t>(d));
    e["hi"] = std::vector<double>(r.hi.begin(), r.hi.begin() + static_cast<std::ptrdiff_t>(d));
    if (r.collar >= 0) e["collar"] = r.collar;
    regions.push_back(std::move(e));
  }
  auto& collars = j["collars"] = nlohmann::json::array();
  for (const auto& c : p.collars())
    collars.push_back({{"theta_lo", c.theta_lo},
                       {"theta_hi", c.theta_hi},
                       {"cells", c.cells},
                       {"phi_offset", c.phi_offset},
                       {"first_region", c.first_region}});
  return j;
}

std::string certification_csv(const CertificationReport& r) {
  std::ostringstream os;
  os << "region,measure,inner_radius,outer_radius,max_sampled_distance,ok\n";
  for (const auto& row : r.rows)
    os << row.region << ',' << format_double(row.measure) << ',' << format_double(row.inner_radius) << ','
       << format_double(row.outer_radius) << ',' << format_double(row.max_sampled_distance) << ','
       << (row.ok ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace designforge
