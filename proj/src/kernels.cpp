#include "vortexlab/kernels.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>

#include "vortexlab/errors.hpp"

namespace vortex::kernels {

void KernelSpec::validate() const {
  if (mode_cutoff < 1) throw ConfigError("kernel mode cutoff must be >= 1");
  if (epsilon && !(*epsilon > 0.0 && *epsilon < 1.0)) throw ConfigError("regularization radius must lie in (0, 1)");
}

bool KernelSpec::resolution_warning() const { return epsilon && *epsilon < kTwoPi / mode_cutoff; }

double ModeTable::green_at_origin() const {
  double g = 0.0;
  for (double w : inv_norm2) g += 2.0 * w;
  return g;
}

const ModeTable& mode_table(int cutoff) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<ModeTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[cutoff];
  if (!slot) {
    auto table = std::make_unique<ModeTable>();
    table->cutoff = cutoff;
    const int m2sq_max = cutoff * cutoff;
    for (int m2 = 0; m2 <= cutoff; ++m2) {
      for (int m1 = -cutoff; m1 <= cutoff; ++m1) {
        if (m2 == 0 && m1 <= 0) continue;
        const int norm2 = m1 * m1 + m2 * m2;
        if (norm2 > m2sq_max) continue;
        table->m1.push_back(m1);
        table->m2.push_back(m2);
        table->inv_norm2.push_back(1.0 / norm2);
      }
    }
    slot = std::move(table);
  }
  return *slot;
}

double GreenJet::third_contract(const Vec2& a, const Vec2& b, const Vec2& c) const {
  // Symmetric tensor with T111, T112, T122, T222.
  double s = 0.0;
  const double t[2][2][2] = {{{third[0], third[1]}, {third[1], third[2]}}, {{third[1], third[2]}, {third[2], third[3]}}};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) s += t[i][j][k] * a[i] * b[j] * c[k];
  return s;
}

GreenJet green_jet(const Vec2& x, int cutoff, int order) {
  const ModeTable& table = mode_table(cutoff);
  // e^{i m1 x1} for m1 in [-M, M] and e^{i m2 x2} for m2 in [0, M].
  std::vector<std::complex<double>> e1(static_cast<std::size_t>(2 * cutoff + 1));
  std::vector<std::complex<double>> e2(static_cast<std::size_t>(cutoff + 1));
  for (int m = -cutoff; m <= cutoff; ++m) e1[m + cutoff] = {std::cos(m * x.x()), std::sin(m * x.x())};
  for (int m = 0; m <= cutoff; ++m) e2[m] = {std::cos(m * x.y()), std::sin(m * x.y())};

  double g = 0.0, g1 = 0.0, g2 = 0.0, h11 = 0.0, h12 = 0.0, h22 = 0.0;
  double t111 = 0.0, t112 = 0.0, t122 = 0.0, t222 = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const std::complex<double> phase = e1[table.m1[k] + cutoff] * e2[table.m2[k]];
    const double w = 2.0 * table.inv_norm2[k];
    const double c = phase.real() * w;
    const double s = phase.imag() * w;
    const double a = table.m1[k];
    const double b = table.m2[k];
    g += c;
    if (order >= 1) {
      g1 -= a * s;
      g2 -= b * s;
    }
    if (order >= 2) {
      h11 -= a * a * c;
      h12 -= a * b * c;
      h22 -= b * b * c;
    }
    if (order >= 3) {
      t111 += a * a * a * s;
      t112 += a * a * b * s;
      t122 += a * b * b * s;
      t222 += b * b * b * s;
    }
  }
  GreenJet jet;
  jet.value = g;
  jet.grad = {g1, g2};
  jet.hess << h11, h12, h12, h22;
  jet.third = {t111, t112, t122, t222};
  return jet;
}

namespace {

Vec2 perp(const Vec2& grad) { return {grad.y(), -grad.x()}; }

void check_not_singular(const Vec2& x, const KernelSpec& spec) {
  if (!spec.epsilon && wrap(x).squaredNorm() == 0.0) {
    throw SingularityError("kernel evaluated at the singular point x = 0 without regularization");
  }
}

struct CapValue {
  double value;
  Vec2 grad;
};

// Polynomial cap at a point strictly inside the ball of radius eps (torus metric).
CapValue cap(const Vec2& x, int cutoff, double eps) {
  const ModeTable& table = mode_table(cutoff);
  const double a = table.green_at_origin();
  const double r = x.norm();
  if (r == 0.0) return {a, Vec2::Zero()};

  const Vec2 er = x / r;
  const Vec2 et(-er.y(), er.x());
  const GreenJet jet = green_jet(eps * er, cutoff, 3);

  const double g0 = jet.value;
  const double g1 = jet.grad.dot(er);
  const double g2 = er.dot(jet.hess * er);
  const double dg0 = eps * jet.grad.dot(et);
  const double dg1 = eps * et.dot(jet.hess * er) + jet.grad.dot(et);
  const double dg2 = eps * jet.third_contract(et, er, er) + 2.0 * er.dot(jet.hess * et);

  const double a0 = g0 - a;
  const double a1 = 0.5 * eps * g1;
  const double a2 = 0.25 * (eps * eps * g2 - 2.0 * a1);
  const double dd = 0.5 * a2 - (a1 - a0);
  const double cc = a1 - a0 - 2.0 * dd;
  const double bb = a0 - cc - dd;

  const double da0 = dg0;
  const double da1 = 0.5 * eps * dg1;
  const double da2 = 0.25 * (eps * eps * dg2 - 2.0 * da1);
  const double ddd = 0.5 * da2 - (da1 - da0);
  const double dcc = da1 - da0 - 2.0 * ddd;
  const double dbb = da0 - dcc - ddd;

  const double u = (r * r) / (eps * eps);
  const double value = a + u * (bb + u * (cc + u * dd));
  const double dr = (2.0 * r / (eps * eps)) * (bb + u * (2.0 * cc + 3.0 * u * dd));
  const double dtheta_over_r = (r / (eps * eps)) * (dbb + u * (dcc + u * ddd));
  return {value, dr * er + dtheta_over_r * et};
}

}  // namespace

double green(const Vec2& x, const KernelSpec& spec) {
  check_not_singular(x, spec);
  return green_jet(x, spec.mode_cutoff, 0).value;
}

Vec2 biot_savart(const Vec2& x, const KernelSpec& spec) {
  check_not_singular(x, spec);
  return perp(green_jet(x, spec.mode_cutoff, 1).grad);
}

namespace {

double require_epsilon(const KernelSpec& spec) {
  if (!spec.epsilon) throw ConfigError("regularized kernel requires an epsilon");
  if (!(*spec.epsilon > 0.0 && *spec.epsilon < 1.0)) throw ConfigError("regularization radius must lie in (0, 1)");
  return *spec.epsilon;
}

}  // namespace

double green_regularized(const Vec2& x, const KernelSpec& spec) {
  const double eps = require_epsilon(spec);
  const Vec2 d = wrap(x);
  if (d.norm() > eps) return green_jet(d, spec.mode_cutoff, 0).value;
  return cap(d, spec.mode_cutoff, eps).value;
}

Vec2 grad_green_regularized(const Vec2& x, const KernelSpec& spec) {
  const double eps = require_epsilon(spec);
  const Vec2 d = wrap(x);
  if (d.norm() > eps) return green_jet(d, spec.mode_cutoff, 1).grad;
  return cap(d, spec.mode_cutoff, eps).grad;
}

Vec2 biot_savart_regularized(const Vec2& x, const KernelSpec& spec) { return perp(grad_green_regularized(x, spec)); }

Vec2 biot_savart_cap_correction(const Vec2& x, const KernelSpec& spec) {
  const double eps = require_epsilon(spec);
  const Vec2 d = wrap(x);
  if (d.norm() > eps) return Vec2::Zero();
  return perp(cap(d, spec.mode_cutoff, eps).grad - green_jet(d, spec.mode_cutoff, 1).grad);
}

double green_cap_correction(const Vec2& x, const KernelSpec& spec) {
  const double eps = require_epsilon(spec);
  const Vec2 d = wrap(x);
  if (d.norm() > eps) return 0.0;
  return cap(d, spec.mode_cutoff, eps).value - green_jet(d, spec.mode_cutoff, 0).value;
}

}  // namespace vortex::kernels
