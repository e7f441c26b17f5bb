#pragma once

// Periodic fields on the uniform n x n grid x_i = -pi + 2 pi i / n.
//
// Coefficients follow the series convention f(x) = sum_m c(m) e^{i m.x}, so a
// constant field c has c(0) = c and 2 cos x1 has c(+-1, 0) = 1. Norms are taken
// against the normalized measure dx / (2 pi)^2: ||f||_{L2}^2 = sum |c(m)|^2.
// Storage index k in [0, n) holds mode m = k for k < n/2 and m = k - n otherwise.

#include <Eigen/Core>
#include <complex>
#include <optional>
#include <string>

#include "vortexlab/torus.hpp"

namespace vortex::spectral {

using Complex = std::complex<double>;

/// Mode number stored at index k of an n-point axis.
inline int mode_of(int k, int n) { return k < n / 2 ? k : k - n; }

/// i a c without the NaN-handling path of the generic complex product.
inline std::complex<double> times_i(double a, std::complex<double> c) { return {-a * c.imag(), a * c.real()}; }
inline int index_of(int m, int n) { return m >= 0 ? m : m + n; }
inline double grid_coordinate(int i, int n) { return -kPi + kTwoPi * i / n; }

void require_power_of_two(int n);

class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(int n, double time = 0.0, bool real = true);

  int n() const { return n_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }
  /// Whether the field is known to be real-valued (Hermitian coefficients).
  bool is_real() const { return real_; }
  void set_real(bool real) { real_ = real; }

  Eigen::ArrayXXcd& coeffs() { return coeffs_; }
  const Eigen::ArrayXXcd& coeffs() const { return coeffs_; }

  Complex mode(int m1, int m2) const { return coeffs_(index_of(m1, n_), index_of(m2, n_)); }
  Complex& mode(int m1, int m2) { return coeffs_(index_of(m1, n_), index_of(m2, n_)); }

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double scale);

  /// max |c(m) - conj(c(-m))| over non-Nyquist modes.
  double hermitian_defect() const;

 private:
  int n_ = 0;
  double time_ = 0.0;
  bool real_ = true;
  Eigen::ArrayXXcd coeffs_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

struct VectorField {
  SpectralField x;
  SpectralField y;
};

/// Physical values, (i, j) <-> (x1_i, x2_j).
SpectralField to_spectral(const Eigen::ArrayXXd& values, double time = 0.0);
Eigen::ArrayXXd to_physical(const SpectralField& field);
/// Two real fields through one complex transform.
std::pair<Eigen::ArrayXXd, Eigen::ArrayXXd> to_physical(const SpectralField& a, const SpectralField& b);

/// In-place unnormalized 2-D DFT (forward: e^{-i}, inverse: e^{+i}).
void fft2(Eigen::ArrayXXcd& data, bool inverse);

struct SobolevOrder {
  double s = 0.0;
  /// Retain modes with max(|m1|, |m2|) <= cutoff; all grid modes when empty.
  std::optional<int> cutoff;
};

double sobolev_norm(const SpectralField& f, const SobolevOrder& order);
/// ||f||_{H^k} for k = 0..kmax in one pass.
Eigen::ArrayXd sobolev_norms_integer(const SpectralField& f, int kmax);

/// Grid quadrature of the normalized L2 norm: sqrt(mean of f^2).
double l2_quadrature(const Eigen::ArrayXXd& values);

/// Keep modes with |m1|, |m2| <= floor(n / 3); zero the rest.
void dealias(SpectralField& f);
bool in_dealiased_band(int m1, int m2, int n);

SpectralField partial(const SpectralField& f, int axis);
VectorField gradient(const SpectralField& f);
SpectralField laplacian(const SpectralField& f);
double spectral_divergence_max(const VectorField& u);

/// Multiplier i m^perp / |m|^2 on every m != 0, m^perp = (m2, -m1).
VectorField biot_savart_convolve(const SpectralField& v);

/// Dealiased pseudospectral u . grad v.
SpectralField advect_term(const SpectralField& v, const VectorField& u);

/// Snapshot file: u64 n, f64 t, u64 real-flag, then n*n physical values with
/// index i * n + j (i along x1), all little-endian.
struct Snapshot {
  int n = 0;
  double time = 0.0;
  bool real = true;
  Eigen::ArrayXXd values;
};

void save_snapshot(const SpectralField& field, const std::string& file);
void save_snapshot(const Snapshot& snapshot, const std::string& file);
Snapshot load_snapshot(const std::string& file);

}  // namespace vortex::spectral
