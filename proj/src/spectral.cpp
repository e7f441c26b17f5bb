#include "vortexlab/spectral.hpp"

#include <cmath>
#include <fstream>
#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "vortexlab/binary_io.hpp"
#include "vortexlab/errors.hpp"

namespace vortex::spectral {

void require_power_of_two(int n) {
  if (n < 2 || (n & (n - 1)) != 0) throw ConfigError("grid size must be a power of two, got " + std::to_string(n));
}

SpectralField::SpectralField(int n, double time, bool real)
    : n_(n), time_(time), real_(real), coeffs_(Eigen::ArrayXXcd::Zero(n, n)) {
  require_power_of_two(n);
}

namespace {

void require_same_grid(const SpectralField& a, const SpectralField& b) {
  if (a.n() != b.n()) throw ConfigError("fields live on different grids");
}

void require_real(const SpectralField& f, const char* op) {
  if (!f.is_real()) throw ValidationError(std::string(op) + " requires a real-valued field");
}

}  // namespace

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  require_same_grid(*this, other);
  coeffs_ += other.coeffs_;
  real_ = real_ && other.real_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  require_same_grid(*this, other);
  coeffs_ -= other.coeffs_;
  real_ = real_ && other.real_;
  return *this;
}

SpectralField& SpectralField::operator*=(double scale) {
  coeffs_ *= scale;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

double SpectralField::hermitian_defect() const {
  double worst = 0.0;
  for (int k1 = 0; k1 < n_; ++k1) {
    for (int k2 = 0; k2 < n_; ++k2) {
      if (k1 == n_ / 2 || k2 == n_ / 2) continue;
      const Complex partner = coeffs_((n_ - k1) % n_, (n_ - k2) % n_);
      worst = std::max(worst, std::abs(coeffs_(k1, k2) - std::conj(partner)));
    }
  }
  return worst;
}

void fft2(Eigen::ArrayXXcd& data, bool inverse) {
  // Plans are keyed by shape and direction and shared by all threads; only plan
  // creation needs the lock. ESTIMATE plans do not time candidates, so the chosen
  // algorithm (and therefore every bit of the output) is the same on every run.
  static std::mutex lock;
  static std::map<std::tuple<Eigen::Index, Eigen::Index, bool>, fftw_plan> plans;
  const auto n = data.rows();
  const auto m = data.cols();
  fftw_plan plan = nullptr;
  {
    std::lock_guard<std::mutex> guard(lock);
    auto& slot = plans[{n, m, inverse}];
    if (slot == nullptr) {
      // Column-major n x m is row-major m x n; the 2-D transform does not care.
      auto* p = reinterpret_cast<fftw_complex*>(data.data());
      slot = fftw_plan_dft_2d(static_cast<int>(m), static_cast<int>(n), p, p,
                              inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
      if (slot == nullptr) throw NumericalError("fftw could not plan a transform");
    }
    plan = slot;
  }
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

namespace {

// Grid points start at -pi, so e^{-i m x_j} = (-1)^m e^{-2 pi i m j / n}.
void apply_checkerboard(Eigen::ArrayXXcd& a) {
  const auto n = a.rows();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = (j % 2 == 0) ? 1 : 0; i < n; i += 2) a(i, j) = -a(i, j);
  }
}

}  // namespace

SpectralField to_spectral(const Eigen::ArrayXXd& values, double time) {
  const auto n = static_cast<int>(values.rows());
  require_power_of_two(n);
  if (values.cols() != n) throw ConfigError("physical field must be square");
  SpectralField f(n, time, true);
  f.coeffs() = values.cast<Complex>();
  fft2(f.coeffs(), false);
  apply_checkerboard(f.coeffs());
  f.coeffs() /= static_cast<double>(n) * n;
  return f;
}

Eigen::ArrayXXd to_physical(const SpectralField& field) {
  require_real(field, "to_physical");
  Eigen::ArrayXXcd a = field.coeffs();
  apply_checkerboard(a);
  fft2(a, true);
  return a.real();
}

std::pair<Eigen::ArrayXXd, Eigen::ArrayXXd> to_physical(const SpectralField& a, const SpectralField& b) {
  require_real(a, "to_physical");
  require_real(b, "to_physical");
  require_same_grid(a, b);
  Eigen::ArrayXXcd packed(a.n(), a.n());
  packed.real() = a.coeffs().real() - b.coeffs().imag();
  packed.imag() = a.coeffs().imag() + b.coeffs().real();
  apply_checkerboard(packed);
  fft2(packed, true);
  return {packed.real(), packed.imag()};
}

double sobolev_norm(const SpectralField& f, const SobolevOrder& order) {
  require_real(f, "sobolev_norm");
  const int n = f.n();
  if (order.cutoff && *order.cutoff > n / 2) throw ConfigError("Sobolev cutoff exceeds the grid's Nyquist mode");
  const int cut = order.cutoff.value_or(n);
  double sum = 0.0;
  for (int k2 = 0; k2 < n; ++k2) {
    const int m2 = mode_of(k2, n);
    if (std::abs(m2) > cut) continue;
    for (int k1 = 0; k1 < n; ++k1) {
      const int m1 = mode_of(k1, n);
      if (std::abs(m1) > cut) continue;
      const double weight = std::pow(1.0 + m1 * m1 + m2 * m2, order.s);
      sum += weight * std::norm(f.coeffs()(k1, k2));
    }
  }
  return std::sqrt(sum);
}

Eigen::ArrayXd sobolev_norms_integer(const SpectralField& f, int kmax) {
  const int n = f.n();
  Eigen::ArrayXd sums = Eigen::ArrayXd::Zero(kmax + 1);
  for (int k2 = 0; k2 < n; ++k2) {
    const int m2 = mode_of(k2, n);
    for (int k1 = 0; k1 < n; ++k1) {
      const int m1 = mode_of(k1, n);
      const double w = 1.0 + m1 * m1 + m2 * m2;
      double term = std::norm(f.coeffs()(k1, k2));
      for (int k = 0; k <= kmax; ++k) {
        sums[k] += term;
        term *= w;
      }
    }
  }
  return sums.sqrt();
}

double l2_quadrature(const Eigen::ArrayXXd& values) { return std::sqrt(values.square().mean()); }

bool in_dealiased_band(int m1, int m2, int n) {
  const int keep = n / 3;
  return std::abs(m1) <= keep && std::abs(m2) <= keep;
}

void dealias(SpectralField& f) {
  const int n = f.n();
  for (int k2 = 0; k2 < n; ++k2) {
    for (int k1 = 0; k1 < n; ++k1) {
      if (!in_dealiased_band(mode_of(k1, n), mode_of(k2, n), n)) f.coeffs()(k1, k2) = 0.0;
    }
  }
}

SpectralField partial(const SpectralField& f, int axis) {
  require_real(f, "partial");
  const int n = f.n();
  SpectralField out(n, f.time(), true);
  for (int k2 = 0; k2 < n; ++k2) {
    for (int k1 = 0; k1 < n; ++k1) {
      if (k1 == n / 2 || k2 == n / 2) continue;
      const int m = axis == 0 ? mode_of(k1, n) : mode_of(k2, n);
      out.coeffs()(k1, k2) = times_i(m, f.coeffs()(k1, k2));
    }
  }
  return out;
}

VectorField gradient(const SpectralField& f) { return {partial(f, 0), partial(f, 1)}; }

SpectralField laplacian(const SpectralField& f) {
  require_real(f, "laplacian");
  const int n = f.n();
  SpectralField out(n, f.time(), true);
  for (int k2 = 0; k2 < n; ++k2) {
    const int m2 = mode_of(k2, n);
    for (int k1 = 0; k1 < n; ++k1) {
      const int m1 = mode_of(k1, n);
      out.coeffs()(k1, k2) = -static_cast<double>(m1 * m1 + m2 * m2) * f.coeffs()(k1, k2);
    }
  }
  return out;
}

double spectral_divergence_max(const VectorField& u) {
  const int n = u.x.n();
  double worst = 0.0;
  for (int k2 = 0; k2 < n; ++k2) {
    for (int k1 = 0; k1 < n; ++k1) {
      if (k1 == n / 2 || k2 == n / 2) continue;
      const Complex div = times_i(mode_of(k1, n), u.x.coeffs()(k1, k2)) + times_i(mode_of(k2, n), u.y.coeffs()(k1, k2));
      worst = std::max(worst, std::abs(div));
    }
  }
  return worst;
}

VectorField biot_savart_convolve(const SpectralField& v) {
  require_real(v, "biot_savart_convolve");
  const int n = v.n();
  VectorField u{SpectralField(n, v.time(), true), SpectralField(n, v.time(), true)};
  for (int k2 = 0; k2 < n; ++k2) {
    for (int k1 = 0; k1 < n; ++k1) {
      if (k1 == n / 2 || k2 == n / 2) continue;
      const int m1 = mode_of(k1, n);
      const int m2 = mode_of(k2, n);
      if (m1 == 0 && m2 == 0) continue;
      const double inv = 1.0 / (m1 * m1 + m2 * m2);
      const Complex c = v.coeffs()(k1, k2);
      u.x.coeffs()(k1, k2) = times_i(m2 * inv, c);
      u.y.coeffs()(k1, k2) = times_i(-m1 * inv, c);
    }
  }
  return u;
}

SpectralField advect_term(const SpectralField& v, const VectorField& u) {
  require_real(v, "advect_term");
  if (u.x.n() != v.n() || u.y.n() != v.n()) throw ConfigError("advect_term: grid mismatch");
  SpectralField ux = u.x, uy = u.y;
  VectorField g = gradient(v);
  dealias(ux);
  dealias(uy);
  dealias(g.x);
  dealias(g.y);
  auto [vel1, vel2] = to_physical(ux, uy);
  auto [d1, d2] = to_physical(g.x, g.y);
  SpectralField out = to_spectral(vel1 * d1 + vel2 * d2, v.time());
  dealias(out);
  return out;
}

void save_snapshot(const Snapshot& snapshot, const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + file);
  io::write_u64(out, static_cast<std::uint64_t>(snapshot.n));
  io::write_f64(out, snapshot.time);
  io::write_u64(out, snapshot.real ? 1U : 0U);
  // Row-major: transpose the column-major Eigen storage.
  const Eigen::ArrayXXd rm = snapshot.values.transpose();
  io::write_f64s(out, std::span<const double>(rm.data(), static_cast<std::size_t>(rm.size())));
}

void save_snapshot(const SpectralField& field, const std::string& file) {
  save_snapshot(Snapshot{field.n(), field.time(), field.is_real(), to_physical(field)}, file);
}

Snapshot load_snapshot(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + file);
  Snapshot s;
  s.n = static_cast<int>(io::read_u64(in));
  require_power_of_two(s.n);
  s.time = io::read_f64(in);
  s.real = io::read_u64(in) != 0;
  Eigen::ArrayXXd rm(s.n, s.n);
  io::read_f64s(in, std::span<double>(rm.data(), static_cast<std::size_t>(rm.size())));
  s.values = rm.transpose();
  return s;
}

}  // namespace vortex::spectral
