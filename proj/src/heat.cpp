#include "designforge/heat.hpp"

#include <cmath>
#include <limits>

#include "designforge/errors.hpp"
#include "designforge/spectral.hpp"

namespace designforge {

namespace {

const double kLogTail = std::log(1e16);

double truncation_lambda(double t) { return std::sqrt(kLogTail / t); }

// Basis reaching past the truncation point so the discarded shell can be measured.
class HeatEvaluator {
 public:
  HeatEvaluator(const Manifold& m, double t)
      : t_(t), lambda_max_(truncation_lambda(t)), basis_(m, 1.25 * lambda_max_) {}

  HeatSum operator()(const Point& x, const Point& y, std::span<const int> lf, std::span<const int> rf) const {
    const Eigen::VectorXd a = basis_.derivatives(x, lf);
    const Eigen::VectorXd b = basis_.derivatives(y, rf);
    HeatSum h;
    h.lambda_max = lambda_max_;
    for (const auto& p : basis_.pairs()) {
      const auto k = static_cast<Eigen::Index>(p.index);
      const double w = std::exp(-static_cast<double>(p.lambda_sq) * t_) * a[k] * b[k];
      if (p.lambda <= lambda_max_) {
        h.value += w;
        ++h.terms;
      } else {
        h.truncation_estimate += std::abs(w);
      }
    }
    return h;
  }

 private:
  double t_;
  double lambda_max_;
  SpectralBasis basis_;
};

void check_time(double t) {
  if (!(t > 0) || !std::isfinite(t)) throw InputError("heat time t must be positive");
}

std::vector<int> first_field(int count) {
  if (count < 0 || count > 2) throw InputError("derivative counts must be 0, 1 or 2");
  return std::vector<int>(static_cast<std::size_t>(count), 0);
}

}  // namespace

HeatSum heat_sum(const Manifold& m, double t, const Point& x, const Point& y,
                 std::span<const int> left_fields, std::span<const int> right_fields) {
  check_time(t);
  if (left_fields.size() + right_fields.size() > 3) throw InputError("at most three derivatives in total");
  return HeatEvaluator(m, t)(x, y, left_fields, right_fields);
}

namespace {

struct HeatSample {
  double t, d2, h;
};

GreinerFit fit_samples(const Manifold& m, int left_count, int right_count, const std::vector<HeatSample>& all) {
  GreinerFit fit;
  fit.left_count = left_count;
  fit.right_count = right_count;
  fit.nominal_exponent = -(m.dim() + left_count + right_count) / 2.0;
  std::vector<const HeatSample*> used;
  for (const auto& s : all)
    if (std::abs(s.h) >= 1e-12) used.push_back(&s);
  fit.points_used = used.size();
  fit.points_dropped = all.size() - used.size();
  bool any_offdiag = false;
  for (const auto* s : used) any_offdiag = any_offdiag || s->d2 > 0;
  const int cols = any_offdiag ? 3 : 2;
  if (used.size() < static_cast<std::size_t>(cols)) return fit;
  Eigen::MatrixXd A(static_cast<Eigen::Index>(used.size()), cols);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(used.size()));
  for (std::size_t i = 0; i < used.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    A(r, 0) = 1.0;
    A(r, 1) = std::log(used[i]->t);
    if (cols == 3) A(r, 2) = -used[i]->d2 / used[i]->t;
    rhs[r] = std::log(std::abs(used[i]->h));
  }
  const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(rhs);
  fit.t_exponent = coef[1];
  fit.c8_hat = cols == 3 ? coef[2] : 0.0;
  fit.residual_rms = std::sqrt((A * coef - rhs).squaredNorm() / static_cast<double>(used.size()));
  double c7 = 0;
  for (const auto& s : all) {
    const double needed =
        std::abs(s.h) * std::pow(s.t, -fit.nominal_exponent) * std::exp(fit.c8_hat * s.d2 / s.t);
    c7 = std::max(c7, needed);
  }
  fit.c7_hat = c7;
  fit.bound_holds = std::isfinite(c7) && fit.c8_hat >= 0;
  return fit;
}

void check_counts(int left_count, int right_count) {
  if (left_count + right_count > 3) throw InputError("at most three derivatives in total");
}

}  // namespace

GreinerFit greiner_fit(const Manifold& m, int left_count, int right_count, const std::vector<double>& t_grid,
                       const std::vector<PointPair>& pairs) {
  if (t_grid.empty() || pairs.empty()) throw InputError("greiner_fit needs nonempty grids");
  const auto lf = first_field(left_count);
  const auto rf = first_field(right_count);
  check_counts(left_count, right_count);
  std::vector<HeatSample> all;
  for (double t : t_grid) {
    check_time(t);
    const HeatEvaluator eval(m, t);
    for (const auto& pr : pairs) {
      const double dist = m.distance(pr.x, pr.y);
      all.push_back({t, dist * dist, eval(pr.x, pr.y, lf, rf).value});
    }
  }
  return fit_samples(m, left_count, right_count, all);
}

GreinerFit greiner_fit_parabolic(const Manifold& m, int left_count, int right_count,
                                 const std::vector<double>& t_grid, const Point& x,
                                 const std::vector<double>& s_grid) {
  if (t_grid.empty() || s_grid.empty()) throw InputError("greiner_fit needs nonempty grids");
  const auto lf = first_field(left_count);
  const auto rf = first_field(right_count);
  check_counts(left_count, right_count);
  Vec e0 = Vec::Zero(m.dim());
  e0[0] = 1.0;
  std::vector<HeatSample> all;
  for (double t : t_grid) {
    check_time(t);
    const HeatEvaluator eval(m, t);
    for (double s : s_grid) {
      const Point y = m.exp_map(x, e0, s * std::sqrt(t));
      const double dist = m.distance(x, y);
      all.push_back({t, dist * dist, eval(x, y, lf, rf).value});
    }
  }
  return fit_samples(m, left_count, right_count, all);
}

PowerLawFit diagonal_power_law(const Manifold& m, int left_count, int right_count,
                               const std::vector<double>& t_grid, const Point& x) {
  if (t_grid.size() < 2) throw InputError("power-law fit needs at least two times");
  const auto lf = first_field(left_count);
  const auto rf = first_field(right_count);
  PowerLawFit out;
  out.nominal = -(m.dim() + left_count + right_count) / 2.0;
  Vec e0 = Vec::Zero(m.dim());
  e0[0] = 1.0;
  for (double t : t_grid) {
    check_time(t);
    const HeatEvaluator eval(m, t);
    double env = 0;
    for (int i = 0; i <= 30; ++i) {
      const Point y = m.exp_map(x, e0, 0.1 * i * std::sqrt(t));
      env = std::max(env, std::abs(eval(x, y, lf, rf).value));
    }
    out.samples.emplace_back(t, env);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(out.samples.size());
  for (const auto& [t, e] : out.samples) {
    const double lx = std::log(t), ly = std::log(e);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  out.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  out.prefactor = std::exp((sy - out.exponent * sx) / n);
  return out;
}

}  // namespace designforge
