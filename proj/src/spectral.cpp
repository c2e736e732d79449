#include "designforge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "designforge/errors.hpp"
#include "legendre.hpp"

namespace designforge {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kPoleGuard = 1e-8;

bool within_band(long long q, double L) { return static_cast<double>(q) <= L * L * (1.0 + 1e-12); }

bool half_lattice(const std::array<int, 3>& n, int d) {
  for (int i = 0; i < d; ++i) {
    if (n[i] > 0) return true;
    if (n[i] < 0) return false;
  }
  return false;
}

int sphere_lmax(double L) {
  int l = 0;
  while (within_band(static_cast<long long>(l + 1) * (l + 2), L)) ++l;
  return l;
}

}  // namespace

std::string label_to_string(const Manifold& m, const EigenLabel& label) {
  std::ostringstream os;
  if (m.kind() == ManifoldKind::Sphere2) {
    os << "l" << label.freq[0] << "m" << label.freq[1] << label.tag;
    return os.str();
  }
  os << "(";
  for (int i = 0; i < m.dim(); ++i) os << (i ? "," : "") << label.freq[i];
  os << ")" << label.tag;
  return os.str();
}

std::vector<EigenPair> enumerate_basis(const Manifold& m, double L) {
  if (!(L >= 0)) throw InputError("bandwidth L must be >= 0");
  std::vector<EigenPair> out;
  if (m.kind() == ManifoldKind::Sphere2) {
    const int lmax = sphere_lmax(L);
    for (int l = 0; l <= lmax; ++l)
      for (int mm = 0; mm <= l; ++mm) {
        EigenPair p;
        p.lambda_sq = static_cast<long long>(l) * (l + 1);
        p.lambda = std::sqrt(static_cast<double>(p.lambda_sq));
        p.label.freq = {l, mm, 0};
        p.label.tag = 'c';
        out.push_back(p);
        if (mm > 0) {
          p.label.tag = 's';
          out.push_back(p);
        }
      }
  } else {
    const int d = m.dim();
    const int r = static_cast<int>(std::floor(L * (1.0 + 1e-12)));
    std::array<int, 3> n{0, 0, 0};
    // odometer over [-r, r]^d
    std::array<int, 3> lo{0, 0, 0};
    for (int i = 0; i < d; ++i) n[i] = lo[i] = -r;
    for (;;) {
      long long q = 0;
      for (int i = 0; i < d; ++i) q += static_cast<long long>(n[i]) * n[i];
      const bool zero = q == 0;
      if (within_band(q, L) && (zero || half_lattice(n, d))) {
        EigenPair p;
        p.lambda_sq = q;
        p.lambda = std::sqrt(static_cast<double>(q));
        p.label.freq = n;
        p.label.tag = 'c';
        out.push_back(p);
        if (!zero) {
          p.label.tag = 's';
          out.push_back(p);
        }
      }
      int i = d - 1;
      while (i >= 0 && n[i] == r) {
        n[i] = lo[i];
        --i;
      }
      if (i < 0) break;
      ++n[i];
    }
  }
  std::sort(out.begin(), out.end(), [](const EigenPair& a, const EigenPair& b) {
    if (a.lambda_sq != b.lambda_sq) return a.lambda_sq < b.lambda_sq;
    return a.label < b.label;
  });
  for (std::size_t k = 0; k < out.size(); ++k) out[k].index = k;
  return out;
}

SpectralBasis::SpectralBasis(const Manifold& m, double L) : m_(m), L_(L), pairs_(enumerate_basis(m, L)) {
  if (m.kind() == ManifoldKind::Sphere2) lmax_ = sphere_lmax(L);
}

std::size_t SpectralBasis::index_of(const EigenLabel& label) const {
  for (const auto& p : pairs_)
    if (p.label == label) return p.index;
  throw InputError("label " + label_to_string(m_, label) + " is not in the basis");
}

void SpectralBasis::evaluate(const Point& x0, int order, BasisJet& out) const {
  m_.validate(x0);
  const Point x = m_.canonical(x0);
  const int d = m_.dim();
  const auto K = static_cast<Eigen::Index>(pairs_.size());
  out.value.resize(K);
  if (order >= 1) out.grad.resize(K, d);
  if (order >= 2) out.hess.resize(K, d * d);

  if (m_.kind() == ManifoldKind::Torus) {
    for (const auto& p : pairs_) {
      const auto k = static_cast<Eigen::Index>(p.index);
      if (p.lambda_sq == 0) {
        out.value[k] = 1.0;
        if (order >= 1) out.grad.row(k).setZero();
        if (order >= 2) out.hess.row(k).setZero();
        continue;
      }
      double phase = 0;
      for (int i = 0; i < d; ++i) phase += p.label.freq[i] * x[i];
      const double c = kSqrt2 * std::cos(phase), s = kSqrt2 * std::sin(phase);
      const bool is_cos = p.label.tag == 'c';
      out.value[k] = is_cos ? c : s;
      if (order >= 1)
        for (int a = 0; a < d; ++a) out.grad(k, a) = p.label.freq[a] * (is_cos ? -s : c);
      if (order >= 2)
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            out.hess(k, a * d + b) = -p.label.freq[a] * p.label.freq[b] * (is_cos ? c : s);
    }
    return;
  }

  const double theta = x[0], phi = x[1];
  const double st = std::sin(theta), ct = std::cos(theta);
  if (order >= 2 && std::abs(st) < kPoleGuard)
    throw NumericalError("second-order frame derivatives are undefined at the poles");
  detail::LegendreTable tab;
  tab.compute(lmax_, theta, order >= 1);
  std::vector<double> cm(lmax_ + 1), sm(lmax_ + 1);
  for (int mm = 0; mm <= lmax_; ++mm) {
    cm[mm] = std::cos(mm * phi);
    sm[mm] = std::sin(mm * phi);
  }
  for (const auto& p : pairs_) {
    const auto k = static_cast<Eigen::Index>(p.index);
    const int l = p.label.freq[0], mm = p.label.freq[1];
    const bool is_cos = p.label.tag == 'c';
    double T = 1.0, dT = 0.0;
    if (mm > 0) {
      T = kSqrt2 * (is_cos ? cm[mm] : sm[mm]);
      dT = kSqrt2 * mm * (is_cos ? -sm[mm] : cm[mm]);
    }
    const double N = tab.n(l, mm);
    out.value[k] = N * T;
    if (order < 1) continue;
    const double dN = tab.dtheta(l, mm);
    const double M = mm > 0 ? tab.over_sin(l, mm) : 0.0;
    out.grad(k, 0) = dN * T;
    out.grad(k, 1) = M * dT;
    if (order < 2) continue;
    const double lam2 = static_cast<double>(p.lambda_sq);
    const double ddN = -(ct / st) * dN - (lam2 - mm * mm / (st * st)) * N;
    out.hess(k, 0) = ddN * T;                               // e_th e_th
    out.hess(k, 1) = (dN / st - N * ct / (st * st)) * dT;   // e_th e_ph
    out.hess(k, 2) = (dN / st) * dT;                        // e_ph e_th
    out.hess(k, 3) = -(mm * mm) * (N / (st * st)) * T;      // e_ph e_ph
  }
}

Eigen::VectorXd SpectralBasis::values(const Point& x) const {
  BasisJet j;
  evaluate(x, 0, j);
  return j.value;
}

Eigen::MatrixXd SpectralBasis::gradients(const Point& x) const {
  BasisJet j;
  evaluate(x, 1, j);
  return j.grad;
}

Eigen::VectorXd SpectralBasis::derivatives(const Point& x, std::span<const int> fields) const {
  const int d = m_.dim();
  for (int f : fields)
    if (f < 0 || f >= d) throw InputError("frame field index out of range");
  if (fields.size() > 2) throw InputError("at most two frame derivatives are supported");
  BasisJet j;
  evaluate(x, static_cast<int>(fields.size()), j);
  if (fields.empty()) return j.value;
  if (fields.size() == 1) return j.grad.col(fields[0]);
  return j.hess.col(fields[0] * d + fields[1]);
}

DiffusionPolynomial::DiffusionPolynomial(BasisPtr basis, Eigen::VectorXd coefficients)
    : basis_(std::move(basis)), c_(std::move(coefficients)) {
  if (!basis_) throw InputError("polynomial needs a basis");
  if (static_cast<std::size_t>(c_.size()) != basis_->size())
    throw InputError("coefficient count does not match the basis size");
}

DiffusionPolynomial DiffusionPolynomial::random(BasisPtr basis, Rng& rng, bool zero_mean) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(basis->size()));
  for (Eigen::Index k = 0; k < c.size(); ++k) c[k] = rng.normal();
  if (zero_mean && c.size() > 0) c[0] = 0.0;
  return DiffusionPolynomial(std::move(basis), std::move(c));
}

double DiffusionPolynomial::value(const Point& x) const { return basis_->values(x).dot(c_); }

TangentVector DiffusionPolynomial::gradient(const Point& x) const {
  TangentVector v;
  v.base = x;
  v.components = basis_->gradients(x).transpose() * c_;
  return v;
}

bool DiffusionPolynomial::in_zero_mean_space() const { return c_.size() == 0 || c_[0] == 0.0; }

}  // namespace designforge
