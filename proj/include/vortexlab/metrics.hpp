#pragma once

// Comparison functionals between particle ensembles and fields.
//
// Fourier data of measures use the integral convention mu(m) = int e^{-i m.x} dmu.
// A SpectralField stores series coefficients c(m), so its integral-convention
// coefficients are (2 pi)^2 c(m). ModeArray carries the convention explicitly and
// refuses to mix the two.

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vortexlab/spectral.hpp"

namespace vortex::metrics {

enum class FourierConvention { Integral, Series };

/// Square array of modes |m1|, |m2| <= cutoff, indexed (m1 + cutoff, m2 + cutoff).
struct ModeArray {
  int cutoff = 0;
  FourierConvention convention = FourierConvention::Integral;
  Eigen::MatrixXcd values;

  std::complex<double> at(int m1, int m2) const { return values(m1 + cutoff, m2 + cutoff); }
};

/// mu(m) = (1/N) sum_j xi_j e^{-i m.X_j}.
ModeArray empirical_fourier(const Eigen::Matrix2Xd& positions, const Eigen::VectorXd& intensities, int cutoff);
/// Integral-convention modes of a field, (2 pi)^2 c(m).
ModeArray field_modes(const spectral::SpectralField& v, int cutoff);

/// sqrt(sum_{|m| <= M} (1 + |m|^2)^{-s} |a(m) - b(m)|^2) over the Euclidean disk.
double h_minus_s_distance(const ModeArray& a, const ModeArray& b, double s, int cutoff);
double h_minus_s_distance(const ModeArray& mu, const spectral::SpectralField& v, double s, int cutoff);

/// Cell values of a density on the torus grid (or any toy grid of cells).
struct GriddedDensity {
  Eigen::ArrayXXd values;
  double cell_area = 1.0;

  double integral() const { return values.sum() * cell_area; }
};

GriddedDensity torus_density(Eigen::ArrayXXd values);

/// Periodic Gaussian KDE of the position marginal, weights xi_i / sum xi, bandwidth h,
/// evaluated at the n x n grid points and renormalized to integrate to 1.
GriddedDensity kde_density(const Eigen::Matrix2Xd& positions, const Eigen::VectorXd& weights, double bandwidth,
                           int n);
/// Wrapped Gaussian of standard deviation h at the n grid points of one axis, centred at c.
Eigen::VectorXd wrapped_gaussian(double centre, double bandwidth, int n);

/// sum p log(p / q) * area, +infinity where p > 0 = q.
double relative_entropy(const GriddedDensity& p, const GriddedDensity& q);
/// sum |grad p|^2 / p * area with central differences; cells below 1e-14 contribute 0.
double fisher_information(const GriddedDensity& p);
/// 1/2 sum |p - q| * area.
double tv_distance(const GriddedDensity& p, const GriddedDensity& q);

struct CkpCheck {
  double tv = 0.0;
  double relative_entropy = 0.0;
  bool ok = true;
};

/// Computes both sides of tv <= sqrt(2 H) and records the pair in the process-wide ledger.
CkpCheck ckp_check(const GriddedDensity& p, const GriddedDensity& q);

struct CkpLedger {
  std::uint64_t pairs = 0;
  std::uint64_t violations = 0;
};
CkpLedger ckp_ledger();

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};
/// Sample mean and standard error (sample standard deviation / sqrt(R)); 0 for R = 1.
MeanStderr mean_stderr(std::span<const double> values);

struct MetricPoint {
  double t = 0.0;
  double h_minus_s = 0.0;
  double tv = 0.0;
  double relative_entropy = 0.0;
  double fisher = 0.0;
  bool ckp_ok = true;
};

struct ReplicaMetrics {
  std::uint64_t path_fingerprint = 0;
  std::vector<MetricPoint> points;
};

struct MetricReport {
  double t = 0.0;
  int n = 0;
  int replicas = 0;
  MeanStderr h_minus_s;
  /// Replica mean of the squared distance, the quantity the rate fit uses.
  MeanStderr h_minus_s_squared;
  MeanStderr tv;
  MeanStderr relative_entropy;
  MeanStderr fisher;
  bool ckp_ok = true;
};

/// Per-time mean and standard error across replicas sharing one common path.
std::vector<MetricReport> conditional_average(const std::vector<ReplicaMetrics>& replicas, int n);

void write_reports_csv(const std::vector<MetricReport>& reports, const std::string& file);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares of log(error) on log(N).
RateFit rate_fit(const std::vector<std::pair<double, double>>& points);

}  // namespace vortex::metrics
