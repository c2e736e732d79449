#include "designforge/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "designforge/errors.hpp"
#include "designforge/heat.hpp"

namespace designforge {

namespace {

void check_fields(const std::vector<int>& f, int d) {
  if (f.size() > 2) throw InputError("at most two frame fields per side");
  for (int a : f)
    if (a < 0 || a >= d) throw InputError("frame field index out of range");
}

Point along_first_field(const Manifold& m, const Point& x, double r) {
  Vec e = Vec::Zero(m.dim());
  e[0] = 1.0;
  return m.exp_map(x, e, r);
}

// Least-squares slope of ys against xs.
double slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Hhat_Y(xi) = Hhat(xi) V(xi / Y); the inverse transform is tabulated at
// composite Gauss-Legendre nodes on [0, Y supp V].
class TruncatedImpl final : public CutoffFunction::Impl {
 public:
  TruncatedImpl(CutoffFunction H, CutoffFunction V, double Y) : H_(std::move(H)), V_(std::move(V)), Y_(Y) {
    std::vector<double> gx, gw;
    gauss_legendre(24, gx, gw);
    const double top = Y_ * V_.support();
    const int panels = std::max(1, static_cast<int>(std::ceil(top / 0.5)));
    for (int p = 0; p < panels; ++p) {
      const double a = top * p / panels, b = top * (p + 1) / panels;
      for (std::size_t i = 0; i < gx.size(); ++i) {
        const double xi = 0.5 * (a + b) + 0.5 * (b - a) * gx[i];
        const double w = 0.5 * (b - a) * gw[i] * transform(xi) / std::numbers::pi;
        if (w != 0.0) {
          xi_.push_back(xi);
          w_.push_back(w);
        }
      }
    }
    // H_Y is band-limited, so it has no compact support; scan for where it
    // drops below 1e-17 of its peak.
    double peak = 0;
    const int n = 600;
    std::vector<double> vals(n + 1);
    const double umax = H_.support() + 20.0;
    for (int i = 0; i <= n; ++i) {
      vals[static_cast<std::size_t>(i)] = std::abs(derivative(umax * i / n, 0));
      peak = std::max(peak, vals[static_cast<std::size_t>(i)]);
    }
    max_abs_ = peak;
    support_ = umax;
    for (int i = n; i >= 0; --i)
      if (vals[static_cast<std::size_t>(i)] > 1e-17 * peak) {
        support_ = std::min(umax, umax * (i + 1) / n);
        break;
      }
  }

  CutoffKind kind() const override { return CutoffKind::FourierTruncated; }
  std::string name() const override { return "truncated_" + H_.name(); }
  int smoothness() const override { return H_.smoothness(); }
  double support() const override { return support_; }
  double derivative(double u, int order) const override {
    double s = 0;
    const double shift = 0.5 * std::numbers::pi * order;
    for (std::size_t i = 0; i < xi_.size(); ++i) s += w_[i] * std::pow(xi_[i], order) * std::cos(u * xi_[i] + shift);
    return s;
  }
  double max_abs() const override { return max_abs_; }
  double fourier_transform(double xi) const override { return transform(std::abs(xi)); }

 private:
  double transform(double xi) const {
    const double v = V_(xi / Y_);
    return v == 0.0 ? 0.0 : H_.fourier_transform(xi) * v;
  }

  CutoffFunction H_, V_;
  double Y_;
  std::vector<double> xi_, w_;
  double support_ = 0.0, max_abs_ = 0.0;
};

}  // namespace

double KernelSpec::K() const {
  return manifold.dim() + static_cast<double>(left_fields.size() + right_fields.size()) - 2.0 * inverse_laplacian_power;
}

LocalizedKernel::LocalizedKernel(KernelSpec spec) : spec_(std::move(spec)) {
  if (!(spec_.L > 0) || !std::isfinite(spec_.L)) throw InputError("bandwidth L must be positive");
  if (spec_.inverse_laplacian_power < 0) throw InputError("inverse Laplacian power must be >= 0");
  check_fields(spec_.left_fields, spec_.manifold.dim());
  check_fields(spec_.right_fields, spec_.manifold.dim());
  basis_ = make_basis(spec_.manifold, spec_.cutoff.support() * spec_.L);
  const auto& pairs = basis_->pairs();
  mult_.resize(static_cast<Eigen::Index>(pairs.size()));
  const int p = spec_.inverse_laplacian_power;
  const double order = static_cast<double>(spec_.left_fields.size() + spec_.right_fields.size());
  const double shell = spec_.manifold.kind() == ManifoldKind::Sphere2 ? 1.0 : 0.0;
  double total = 0;
  for (const auto& e : pairs) {
    double v = 0;
    if (e.lambda_sq > 0 || (p == 0 && !spec_.drop_constant)) {
      v = spec_.cutoff(e.lambda / spec_.L);
      if (p > 0) v /= std::pow(e.lambda * e.lambda, p);
    }
    mult_[static_cast<Eigen::Index>(e.index)] = v;
    total += std::abs(v) * 2.0 * std::pow(1.0 + e.lambda, order + shell);
  }
  noise_ = 1e3 * std::numeric_limits<double>::epsilon() * total;
}

double LocalizedKernel::operator()(const Point& x, const Point& y) const {
  spec_.manifold.validate(x);
  spec_.manifold.validate(y);
  const Eigen::VectorXd a = basis_->derivatives(x, spec_.left_fields);
  const Eigen::VectorXd b = basis_->derivatives(y, spec_.right_fields);
  return (mult_.array() * a.array() * b.array()).sum();
}

Vec LocalizedKernel::gradient_y(const Point& x, const Point& y) const {
  if (spec_.right_fields.size() > 1) throw InputError("gradient_y needs at most one right field");
  spec_.manifold.validate(x);
  spec_.manifold.validate(y);
  const Eigen::VectorXd a = basis_->derivatives(x, spec_.left_fields);
  const int d = spec_.manifold.dim();
  Vec g(d);
  for (int k = 0; k < d; ++k) {
    std::vector<int> f = spec_.right_fields;
    f.push_back(k);
    const Eigen::VectorXd b = basis_->derivatives(y, f);
    g[k] = (mult_.array() * a.array() * b.array()).sum();
  }
  return g;
}

double localized_kernel(const KernelSpec& spec, const Point& x, const Point& y) { return LocalizedKernel(spec)(x, y); }

std::vector<double> decay_distance_grid(const Manifold& m, double L, int count) {
  if (count < 2) throw InputError("decay grid needs at least 2 points");
  if (!(L > 0)) throw InputError("bandwidth L must be positive");
  const double lo = 2.0 / L;
  const double hi = std::min(50.0 / L, m.injectivity_radius());
  std::vector<double> r;
  if (hi <= lo) return r;
  for (int i = 0; i < count; ++i) r.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
  return r;
}

DecayReport decay_profile(const KernelSpec& spec, const Point& x, const std::vector<double>& distances) {
  const LocalizedKernel k(spec);
  DecayReport rep;
  rep.S = spec.cutoff.smoothness();
  rep.K = spec.K();
  std::vector<double> ds = distances;
  std::sort(ds.begin(), ds.end());
  const double L = spec.L;
  for (double r : ds) {
    if (r < 0 || r > spec.manifold.injectivity_radius() + 1e-12) throw InputError("decay distance out of range");
    const double v = k(x, along_first_field(spec.manifold, x, r));
    rep.rows.push_back({L, r, v, 0.0, 0.0});
    rep.C9_hat = std::max(rep.C9_hat, std::abs(v) * std::pow(1 + L * r, rep.S) / std::pow(L, rep.K));
  }
  for (auto& row : rep.rows) {
    row.bound = rep.C9_hat * std::pow(L, rep.K) * std::pow(1 + L * row.dist, -rep.S);
    row.ratio = row.bound > 0 ? std::abs(row.value) / row.bound : 0.0;
  }
  // Fit the running maximum from the right so zeros of the oscillating kernel
  // do not pull the slope.
  std::vector<double> lx, ly;
  double env = 0;
  for (auto it = rep.rows.rbegin(); it != rep.rows.rend(); ++it) {
    env = std::max(env, std::abs(it->value));
    if (env > 10 * k.noise_floor() && it->dist > 0) {
      lx.push_back(std::log(L * it->dist));
      ly.push_back(std::log(env));
    }
  }
  rep.points_fitted = lx.size();
  rep.degenerate = lx.size() < 3;
  if (!rep.degenerate) rep.exponent = -slope(lx, ly);
  return rep;
}

CauchySchwarzCheck diagonal_cauchy_schwarz(const KernelSpec& spec, const Point& x, std::vector<double> t_grid) {
  const LocalizedKernel k(spec);
  CauchySchwarzCheck c;
  c.value = std::abs(k(x, x));
  const double aL = spec.cutoff.support() * spec.L;
  if (aL > 0) t_grid.push_back(1.0 / (aL * aL));
  const int d = spec.manifold.dim();
  for (double t : t_grid) {
    const double A1 = d + 2.0 * static_cast<double>(spec.left_fields.size());
    const double A2 = d + 2.0 * static_cast<double>(spec.right_fields.size());
    c.kappa1 = std::max(c.kappa1, std::pow(t, 0.5 * A1) *
                                      heat_sum(spec.manifold, t, x, x, spec.left_fields, spec.left_fields).value);
    c.kappa2 = std::max(c.kappa2, std::pow(t, 0.5 * A2) *
                                      heat_sum(spec.manifold, t, x, x, spec.right_fields, spec.right_fields).value);
  }
  c.rhs = std::numbers::e * std::sqrt(c.kappa1 * c.kappa2) * spec.cutoff.max_abs() * std::pow(aL, spec.K());
  return c;
}

CutoffFunction truncate_HY(const CutoffFunction& H, const CutoffFunction& V, double Y) {
  if (!(Y > 0) || !std::isfinite(Y)) throw InputError("truncation level Y must be positive");
  return CutoffFunction::from_impl(std::make_shared<TruncatedImpl>(H, V, Y));
}

std::vector<TruncationRow> truncation_table(const KernelSpec& spec, const CutoffFunction& V,
                                            const std::vector<double>& Ys, const Point& x,
                                            const std::vector<double>& distances) {
  const LocalizedKernel full(spec);
  std::vector<double> base;
  std::vector<Point> ys;
  for (double r : distances) {
    ys.push_back(along_first_field(spec.manifold, x, r));
    base.push_back(full(x, ys.back()));
  }
  const double S = spec.cutoff.smoothness();
  std::vector<TruncationRow> rows;
  for (double Y : Ys) {
    KernelSpec s = spec;
    s.cutoff = truncate_HY(spec.cutoff, V, Y);
    const LocalizedKernel trunc(s);
    TruncationRow row;
    row.Y = Y;
    for (std::size_t i = 0; i < ys.size(); ++i) row.sup_diff = std::max(row.sup_diff, std::abs(base[i] - trunc(x, ys[i])));
    row.c_hat = row.sup_diff * std::pow(Y, S) / std::pow(spec.L, spec.K());
    rows.push_back(row);
  }
  return rows;
}

KernelSpec w_kernel_spec(const Manifold& m, double L) {
  KernelSpec s;
  s.manifold = m;
  s.cutoff = CutoffFunction::make(CutoffKind::Plateau, m.dim() + 2);
  s.L = L;
  s.inverse_laplacian_power = 1;
  s.drop_constant = true;
  return s;
}

DyadicRow dyadic_check(int d, int S, double L, double r) {
  DyadicRow row{L, r, 0.0, 0.0, false};
  for (int j = 0; j < 200; ++j) {
    const double mu = std::ldexp(2.0 * L, -j);
    const double term = std::pow(mu, d + 1) * std::pow(1 + mu * r, -S);
    row.lhs += term;
    if (term < 1e-18 * row.lhs) break;
  }
  row.rhs = std::pow(2.0, d + 3) * std::pow(L, d + 1) * std::pow(1 + L * r, -(d + 1));
  row.holds = row.lhs <= row.rhs;
  return row;
}

GradientKernelReport gradient_kernel_bound(const Manifold& m, const std::vector<double>& L_grid, const Point& x,
                                           const std::vector<double>& scaled_distances, int dyadic_S) {
  if (L_grid.empty()) throw InputError("gradient kernel check needs at least one L");
  const int d = m.dim();
  GradientKernelReport rep;
  std::vector<double> diag;
  for (double L : L_grid) {
    KernelSpec s = w_kernel_spec(m, L);
    s.left_fields = {0, 0};
    const LocalizedKernel k(s);
    double kappa = 0;
    diag.push_back(k.gradient_y(x, x).norm());
    for (double sd : scaled_distances) {
      const double r = sd / L;
      if (r > m.injectivity_radius()) continue;
      GradientKernelRow row{L, r, 0.0, 0.0, 0.0};
      row.actual = k.gradient_y(x, along_first_field(m, x, r)).norm();
      row.model = std::pow(L, d + 1) * std::pow(1 + L * r, -(d + 1));
      row.ratio = row.actual / row.model;
      kappa = std::max(kappa, row.ratio);
      rep.rows.push_back(row);
    }
    rep.kappa_per_L.push_back(kappa);
    for (double sd : scaled_distances) rep.dyadic.push_back(dyadic_check(d, dyadic_S, L, sd / L));
  }
  const auto [lo, hi] = std::minmax_element(rep.kappa_per_L.begin(), rep.kappa_per_L.end());
  rep.kappa_hat = *hi;
  rep.kappa_spread = *lo > 0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  rep.dominated = std::all_of(rep.rows.begin(), rep.rows.end(), [&](const GradientKernelRow& r) {
    return r.actual <= rep.kappa_hat * r.model * (1 + 1e-12);
  });
  rep.diagonal_ok = true;
  for (std::size_t i = 0; i < L_grid.size(); ++i)
    rep.diagonal_ok = rep.diagonal_ok && diag[i] <= std::pow(2.0, d + 2) * std::pow(L_grid[i], d + 1) * rep.kappa_hat;
  rep.dyadic_ok = std::all_of(rep.dyadic.begin(), rep.dyadic.end(), [](const DyadicRow& r) { return r.holds; });
  return rep;
}

}  // namespace designforge
